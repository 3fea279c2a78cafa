import numpy as np
import pytest

from slidescore.advantage import (
    CollapseSimConfig,
    DegenerateGroupError,
    RolloutGroup,
    ShapeMismatchError,
    analytic_dominant_correlation,
    decompose_weights,
    gdpo_advantage,
    grpo_advantage,
    simulate_collapse,
    write_scatter_jsonl,
    write_sweep_csv,
)


def group(rows, gid="g"):
    return RolloutGroup(np.array(rows, dtype=float), gid)


class TestGrpoAdvantage:
    def test_identical_rollouts_flagged(self):
        res = grpo_advantage(group([[0.5, 0.5]] * 4))
        assert res.zero_variance
        assert np.allclose(res.advantages, 0.0)

    def test_two_point_zscore(self):
        res = grpo_advantage(group([[0.0], [1.0]]))
        assert not res.zero_variance
        assert np.allclose(res.advantages, [-1.0, 1.0], atol=1e-5)

    def test_matches_scalar_reimplementation(self):
        rng = np.random.default_rng(0)
        r = rng.uniform(0, 1, (4, 2))
        res = grpo_advantage(RolloutGroup(r))
        totals = [sum(row) for row in r.tolist()]
        mean = sum(totals) / 4
        std = (sum((t - mean) ** 2 for t in totals) / 4) ** 0.5
        expected = [(t - mean) / (std + 1e-6) for t in totals]
        assert np.allclose(res.advantages, expected, atol=1e-12)

    def test_constant_shift_of_one_component_invariant(self):
        rng = np.random.default_rng(1)
        r = rng.uniform(0, 1, (8, 4))
        shifted = r.copy()
        shifted[:, 2] += 7.5
        assert np.allclose(grpo_advantage(RolloutGroup(r)).advantages,
                           grpo_advantage(RolloutGroup(shifted)).advantages, atol=1e-10)

    def test_shape_validation(self):
        with pytest.raises(ShapeMismatchError):
            RolloutGroup(np.zeros((1, 4)))


class TestGdpoAdvantage:
    def test_constant_components_zero(self):
        res = gdpo_advantage([group([[0.3, 0.7]] * 4)])
        assert res.discard_flags == [True]
        assert np.allclose(res.advantages[0], 0.0)

    def test_hand_arithmetic_single_group(self):
        res = gdpo_advantage([group([[0.0, 0.0], [1.0, 1.0]])])
        assert np.allclose(res.component_z[0], [[-1, -1], [1, 1]], atol=1e-5)
        assert np.allclose(res.advantages[0], [-1.0, 1.0], atol=1e-5)

    def test_affine_rescale_leaves_component_z_unchanged(self):
        rng = np.random.default_rng(2)
        r = rng.uniform(0, 1, (8, 4))
        groups = [RolloutGroup(r)]
        scaled = r.copy()
        scaled[:, 1] = 3.0 * scaled[:, 1] + 0.25
        res1 = gdpo_advantage(groups)
        res2 = gdpo_advantage([RolloutGroup(scaled)])
        assert np.allclose(res1.component_z[0][:, 1], res2.component_z[0][:, 1], atol=1e-5)

    def test_ordering_invariant_under_component_rescale(self):
        rng = np.random.default_rng(3)
        batch = [RolloutGroup(rng.uniform(0, 1, (8, 4))) for _ in range(5)]
        scaled = [RolloutGroup(np.column_stack(
            [g.rewards[:, 0] * 10.0 + 1.0, g.rewards[:, 1:]])) for g in batch]
        a1 = np.concatenate(gdpo_advantage(batch).advantages)
        a2 = np.concatenate(gdpo_advantage(scaled).advantages)
        assert np.array_equal(np.argsort(a1), np.argsort(a2))

    def test_batch_permutation_invariance(self):
        rng = np.random.default_rng(4)
        batch = [RolloutGroup(rng.uniform(0, 1, (8, 4)), str(i)) for i in range(6)]
        res = gdpo_advantage(batch)
        perm = [3, 0, 5, 1, 4, 2]
        res_p = gdpo_advantage([batch[i] for i in perm])
        for new_pos, old_pos in enumerate(perm):
            assert np.allclose(res_p.advantages[new_pos], res.advantages[old_pos], atol=1e-10)

    def test_mixed_k_rejected(self):
        with pytest.raises(ShapeMismatchError):
            gdpo_advantage([group([[0, 1], [1, 0]]), RolloutGroup(np.zeros((2, 3)))])

    def test_zero_variance_groups_excluded_from_batch_stats(self):
        rng = np.random.default_rng(5)
        live = RolloutGroup(rng.uniform(0, 1, (4, 2)))
        dead = group([[0.5, 0.5]] * 4)
        with_dead = gdpo_advantage([live, dead])
        alone = gdpo_advantage([live])
        assert with_dead.discard_flags == [False, True]
        assert np.allclose(with_dead.advantages[0], alone.advantages[0], atol=1e-12)


class TestDecomposition:
    def test_single_component_identity(self):
        g = group([[0.1], [0.4], [0.9], [0.2]])
        dec = decompose_weights(g)
        assert dec.w == pytest.approx([1.0])
        ref = grpo_advantage(g, epsilon=0.0)
        assert np.allclose(dec.z[:, 0] * dec.w[0], ref.advantages, atol=1e-12)

    def test_orthogonal_equal_sigma_fixture(self):
        # two components with equal spread and exactly zero sample covariance
        r = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        dec = decompose_weights(RolloutGroup(r))
        assert np.allclose(dec.w, [1 / np.sqrt(2)] * 2, atol=1e-12)

    def test_reconstruction_identity_random(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            g = RolloutGroup(rng.normal(0, 1, (8, 4)))
            dec = decompose_weights(g)  # raises if identity fails at 1e-10
            assert np.allclose(dec.z.mean(axis=0), 0.0, atol=1e-12)
            assert np.allclose(dec.z.std(axis=0), 1.0, atol=1e-10)

    def test_covariance_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            r = rng.normal(0, 2, (8, 4))
            sigma_r2 = r.sum(axis=1).var()
            cov = np.cov(r.T, bias=True)
            expected = cov.trace() + 2 * np.triu(cov, 1).sum()
            assert sigma_r2 == pytest.approx(expected, abs=1e-10)

    def test_degenerate_group(self):
        with pytest.raises(DegenerateGroupError):
            decompose_weights(group([[0.5, 0.5]] * 4))


class TestCollapseSimulation:
    def test_symmetric_case_and_monotonicity(self):
        cfg = CollapseSimConfig(sigma_dominant_sweep=(1.0, 3.0, 10.0),
                                trials=20_000, seed=42)
        points = simulate_collapse(cfg)
        assert points[0].mean_corr == pytest.approx(0.5, abs=0.05)
        assert points[1].mean_corr == pytest.approx(3 / np.sqrt(12), abs=0.05)
        assert points[2].mean_corr >= 0.95
        corrs = [p.mean_corr for p in points]
        assert corrs == sorted(corrs)

    def test_analytic_formula(self):
        assert analytic_dominant_correlation(1.0, 4) == pytest.approx(0.5)
        assert analytic_dominant_correlation(3.0, 4) == pytest.approx(0.8660, abs=1e-4)

    def test_seed_reproducibility(self):
        cfg = CollapseSimConfig(sigma_dominant_sweep=(2.0,), trials=2000, seed=9)
        p1 = simulate_collapse(cfg)[0]
        p2 = simulate_collapse(cfg)[0]
        assert p1.mean_corr == p2.mean_corr

    def test_exports(self, tmp_path):
        cfg = CollapseSimConfig(sigma_dominant_sweep=(1.0, 2.0), trials=500, seed=1)
        points = simulate_collapse(cfg, scatter_samples=50)
        csv_path = tmp_path / "sweep.csv"
        jsonl_path = tmp_path / "scatter.jsonl"
        write_sweep_csv(points, csv_path)
        write_scatter_jsonl(points, jsonl_path)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "sigma_ratio,mean_corr,stderr,trials"
        assert len(lines) == 3
        assert len(jsonl_path.read_text().strip().splitlines()) == 100
