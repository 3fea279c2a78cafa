"""
End-to-end scoring: render -> metrics -> reward vector
======================================================

Runs the whole stack on a good slide and a broken one, producing the
4-component reward vector a training loop would consume, plus the
red-mask whitespace overlay for visual debugging.  The same pipeline is
reachable over HTTP (POST /v1/score) and the `slidescore` CLI.
"""

import json
import pathlib

from slidescore.gateway import RenderGateway
from slidescore.scoring import score_html

GOOD = """
<body style="margin:0">
  <div style="width:1280px;height:720px;background:#fafafa">
    <div style="position:absolute;left:140px;top:230px;width:400px;height:260px;
                background:#dce6f1">Revenue grew across every region this
                quarter while operating costs stayed flat, leaving a wider
                margin than forecast going into the next period.</div>
    <div style="position:absolute;left:740px;top:230px;width:400px;height:260px;
                background:#f1e6dc">Headcount was unchanged year over year
                and attrition remained below the industry baseline across
                all three business units.</div>
  </div>
</body>
"""

BROKEN = """
<body style="margin:0">
  <div style="width:1280px;height:1400px;background:#ffffff">
    <div style="position:absolute;left:30px;top:40px;width:200px;height:80px;
                background:#dce6f1">lonely box</div>
  </div>
</body>
"""

gateway = RenderGateway(pool_size=1)

for name, html in (("good slide", GOOD), ("broken slide", BROKEN)):
    result = score_html(gateway, html, return_overlay=True)
    report = result.metric_report
    rewards = dict(zip(("aspect", "whitespace", "collision", "imbalance"),
                       result.reward_vector.components))
    print(f"\n== {name} ==")
    print(f"  aspect ratio      {report.aspect_ratio:.3f}")
    print(f"  whitespace ratio  {report.whitespace_ratio:.3f}")
    print(f"  collision score   {report.collision_score:.3f}")
    print(f"  imbalance d       {report.imbalance_d:.3f}")
    for k, v in rewards.items():
        print(f"  reward/{k:<10} {v:.4f}")
    out = pathlib.Path(f"overlay_{name.split()[0]}.png")
    out.write_bytes(result.overlay_png)
    print(f"  whitespace overlay written to {out}")

# Render failures (hangs, crashes, empty pages) never raise: they come
# back as a zero, invalid reward vector, so a training loop can treat
# "produced nothing renderable" as the worst possible outcome.
result = score_html(gateway, '<div data-render-hang>x</div>', timeout_ms=300)
print(f"\nhanging slide -> render_error={result.metric_report.render_error}, "
      f"rewards={result.reward_vector.components}, "
      f"valid={result.reward_vector.valid}")

gateway.close()

# The same record shape travels over the wire.  Start the service with
#   python -m slidescore.service        (or configure SLIDESCORE_ADDR)
# and POST the JSON body below to /v1/score:
print("\nexample request body:")
print(json.dumps({"html": "<i>...</i>", "pipeline": "full",
                  "return_overlay": False, "request_id": "demo-1"}, indent=2))
