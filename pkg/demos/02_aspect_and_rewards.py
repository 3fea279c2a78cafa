"""
Dynamic aspect measurement and reward shaping
=============================================

Measures the true content aspect ratio of three slide decks by loading
them at a tiny viewport, reading the content extent, and screenshotting
at the measured size -- so a deck can't fake 16:9 with min-height or
overflow:hidden tricks.  Then maps metrics onto [0, 1] rewards.
"""

import math

from slidescore.gateway import RenderGateway
from slidescore.rewards import ShapingConfig, aspect_reward, smoothstep_reward

DECKS = {
    "proper 16:9": '<body style="margin:0"><div style="width:1280px;'
                   'height:720px;background:#fafafa"><p>hello</p></div></body>',
    "square": '<body style="margin:0"><div style="width:1280px;'
              'height:1280px;background:#eee"><p>square</p></div></body>',
    "min-height hack": '<body style="margin:0"><div style="min-height:720px">'
                       '<div style="height:200px;background:#ddd">thin</div>'
                       '</div></body>',
}

gateway = RenderGateway(pool_size=1)
print(f"{'deck':<18}{'measured ratio':>15}{'aspect reward':>15}")
for name, html in DECKS.items():
    m = gateway.measure_aspect_ratio(html)
    print(f"{name:<18}{m.ratio:>15.3f}{aspect_reward(m.ratio):>15.4f}")
gateway.close()

# The aspect reward is a nominal-the-best curve: quadratic in log space
# around 16:9, with an extra penalty once a deck is more than ~4% too tall
# (negative log-deviation), because overlong decks hide content below the
# fold.  Note the asymmetry between +10% and -10%.
target = 16 / 9
print("\nlog-dev   reward")
for dev in (-0.2, -0.1, -0.04, 0.0, 0.04, 0.1, 0.2):
    print(f"{dev:>+7.2f}  {aspect_reward(target * math.exp(dev)):.4f}")

# Monotone higher-is-worse metrics (whitespace ratio, collision score,
# imbalance distance) pass through a clipped smoothstep band instead:
# reward 1 below the band, 0 above it, a smooth cubic ramp in between.
cfg = ShapingConfig()
band = cfg.whitespace_band
print(f"\nwhitespace band [{band.lower}, {band.upper}]")
for x in (0.5, 0.8, 0.85, 0.9, 0.95, 0.995, 1.0):
    print(f"  ratio {x:5.3f} -> reward {smoothstep_reward(x, band.lower, band.upper):.4f}")
