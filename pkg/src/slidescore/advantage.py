"""Group-relative advantage computation and the reward-collapse simulator.

Two normalization schemes over a G x K reward matrix per prompt:

* sum-then-normalize ("grpo"): R_j = sum_k r_j^(k), A_j = (R_j - mean) / std
* reward-decoupled ("gdpo"): per-component z-scores summed over k, then a
  batch-wise z-normalization over all rollouts in the batch

plus the exact decomposition A_j = sum_k w_k z_j^(k) with w_k = sigma_k /
sigma_R, and Monte Carlo measurement of corr(A, z^(m)) as one component's
scale dominates.  All stds use the population (1/G) convention.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

DEFAULT_EPSILON = 1e-6


class DegenerateGroupError(ValueError):
    pass


class ShapeMismatchError(ValueError):
    pass


@dataclass
class RolloutGroup:
    rewards: np.ndarray  # (G, K)
    group_id: str = ""

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        if self.rewards.ndim != 2:
            raise ShapeMismatchError("rewards must be a G x K matrix")
        g, k = self.rewards.shape
        if g < 2 or k < 1:
            raise ShapeMismatchError(f"need G >= 2 and K >= 1, got {self.rewards.shape}")
        if not np.all(np.isfinite(self.rewards)):
            raise ValueError("rewards must be finite")


@dataclass
class GroupAdvantages:
    advantages: np.ndarray  # (G,)
    zero_variance: bool


def grpo_advantage(group: RolloutGroup, epsilon: float = DEFAULT_EPSILON) -> GroupAdvantages:
    """Sum components per rollout, then z-normalize within the group."""
    totals = group.rewards.sum(axis=1)
    std = totals.std()  # population (1/G)
    adv = (totals - totals.mean()) / (std + epsilon)
    return GroupAdvantages(advantages=adv, zero_variance=bool(std == 0.0))


@dataclass
class BatchAdvantages:
    advantages: list[np.ndarray]  # per group, shape (G_i,)
    discard_flags: list[bool]  # True where the group had zero total-reward variance
    component_z: list[np.ndarray]  # per group, shape (G_i, K)


def gdpo_advantage(groups: list[RolloutGroup],
                   epsilon: float = DEFAULT_EPSILON) -> BatchAdvantages:
    """Reward-decoupled advantages with batch-wise renormalization.

    Groups whose summed reward has zero variance are flagged for discard
    and excluded from the batch statistics; their advantages are zero.
    """
    if not groups:
        raise ValueError("batch must contain at least one group")
    k = groups[0].rewards.shape[1]
    if any(g.rewards.shape[1] != k for g in groups):
        raise ShapeMismatchError("all groups must share the same component count K")

    component_z = []
    summed = []
    discard = []
    for g in groups:
        r = g.rewards
        z = (r - r.mean(axis=0)) / (r.std(axis=0) + epsilon)
        component_z.append(z)
        summed.append(z.sum(axis=1))
        discard.append(bool(r.sum(axis=1).std() == 0.0))

    live = np.concatenate([a for a, d in zip(summed, discard) if not d]) \
        if not all(discard) else np.array([])
    if live.size:
        mean, std = live.mean(), live.std()
    else:
        mean, std = 0.0, 0.0
    out = []
    for a, d in zip(summed, discard):
        if d:
            out.append(np.zeros_like(a))
        else:
            out.append((a - mean) / (std + epsilon))
    return BatchAdvantages(advantages=out, discard_flags=discard, component_z=component_z)


@dataclass
class Decomposition:
    w: np.ndarray  # (K,) component weights sigma_k / sigma_R
    z: np.ndarray  # (G, K) per-component z-scores
    live: np.ndarray  # (K,) bool, False for zero-variance components


def decompose_weights(group: RolloutGroup, atol: float = 1e-10) -> Decomposition:
    """Variance-weight decomposition of the sum-then-normalize advantage.

    Verifies the exact identity A_j = sum_k w_k z_j^(k) (restricted to
    components with nonzero spread) before returning.
    """
    r = group.rewards
    sigma_k = r.std(axis=0)
    sigma_r = r.sum(axis=1).std()
    if sigma_r == 0.0:
        raise DegenerateGroupError("total reward has zero variance")
    live = sigma_k > 0.0
    if not live.any():
        raise DegenerateGroupError("all components have zero variance")
    w = np.where(live, sigma_k / sigma_r, 0.0)
    z = np.zeros_like(r)
    z[:, live] = (r[:, live] - r[:, live].mean(axis=0)) / sigma_k[live]
    a = (r.sum(axis=1) - r.sum(axis=1).mean()) / sigma_r  # epsilon-free reference
    err = np.max(np.abs(a - z @ w))
    if err > atol:
        raise AssertionError(f"decomposition identity violated: max error {err:.3e}")
    return Decomposition(w=w, z=z, live=live)


@dataclass
class CollapseSimConfig:
    k: int = 4
    g: int = 8
    sigma_others: float = 1.0
    sigma_dominant_sweep: tuple = (1.0, 2.0, 3.0, 5.0, 10.0)
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.sigma_others <= 0 or any(s <= 0 for s in self.sigma_dominant_sweep):
            raise ValueError("sigmas must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class CollapsePoint:
    sigma_ratio: float
    mean_corr: float
    stderr: float
    trials: int
    scatter: np.ndarray | None = None  # (n, 2) sampled (A, z_dominant) pairs


def _pooled_correlation(a: np.ndarray, z: np.ndarray) -> float:
    a = a.ravel()
    z = z.ravel()
    return float(np.corrcoef(a, z)[0, 1])


def simulate_collapse(config: CollapseSimConfig,
                      scatter_samples: int = 0) -> list[CollapsePoint]:
    """Monte Carlo sweep of the dominant-component correlation.

    Components are drawn as independent zero-mean Gaussians; component 0 is
    the dominant one.  Each sweep point uses its own seeded substream so
    results do not depend on evaluation order.
    """
    points = []
    for idx, sigma_dom in enumerate(config.sigma_dominant_sweep):
        rng = np.random.default_rng([config.seed, idx])
        sigmas = np.full(config.k, config.sigma_others)
        sigmas[0] = sigma_dom
        r = rng.normal(0.0, 1.0, size=(config.trials, config.g, config.k)) * sigmas

        totals = r.sum(axis=2)
        std_r = totals.std(axis=1, keepdims=True)
        adv = (totals - totals.mean(axis=1, keepdims=True)) / (std_r + DEFAULT_EPSILON)

        dom = r[:, :, 0]
        std_dom = dom.std(axis=1, keepdims=True)
        z_dom = (dom - dom.mean(axis=1, keepdims=True)) / (std_dom + DEFAULT_EPSILON)

        # pooled correlation of the group-centered quantities: dividing by
        # the per-group sample std attenuates pooled Pearson by O(1/G), so
        # the population correlation is estimated from centered values with
        # the variance taken over the whole pool instead
        centered_tot = totals - totals.mean(axis=1, keepdims=True)
        centered_dom = dom - dom.mean(axis=1, keepdims=True)
        corr = _pooled_correlation(centered_tot, centered_dom)
        # per-trial correlations give an honest spread estimate
        per_trial = _rowwise_corr(adv, z_dom)
        stderr = float(per_trial.std(ddof=1) / np.sqrt(config.trials))
        scatter = None
        if scatter_samples > 0:
            n = min(scatter_samples, adv.size)
            take = rng.choice(adv.size, size=n, replace=False)
            scatter = np.stack([adv.ravel()[take], z_dom.ravel()[take]], axis=1)
        points.append(CollapsePoint(
            sigma_ratio=sigma_dom / config.sigma_others,
            mean_corr=corr, stderr=stderr, trials=config.trials, scatter=scatter))
    return points


def _rowwise_corr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ac = a - a.mean(axis=1, keepdims=True)
    bc = b - b.mean(axis=1, keepdims=True)
    num = (ac * bc).sum(axis=1)
    den = np.sqrt((ac**2).sum(axis=1) * (bc**2).sum(axis=1))
    with np.errstate(invalid="ignore"):
        out = num / den
    return out[np.isfinite(out)]


def analytic_dominant_correlation(sigma_ratio: float, k: int) -> float:
    """Expected corr(A, z_dominant) for independent equal-variance others."""
    return sigma_ratio / np.sqrt(sigma_ratio**2 + (k - 1))


def write_sweep_csv(points: list[CollapsePoint], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sigma_ratio", "mean_corr", "stderr", "trials"])
        for p in points:
            writer.writerow([p.sigma_ratio, p.mean_corr, p.stderr, p.trials])


def write_scatter_jsonl(points: list[CollapsePoint], path) -> None:
    with open(path, "w") as fh:
        for p in points:
            if p.scatter is None:
                continue
            for a, z in p.scatter:
                fh.write(json.dumps({"sigma_ratio": p.sigma_ratio,
                                     "advantage": float(a),
                                     "z_dominant": float(z)}) + "\n")
