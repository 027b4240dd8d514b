import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothbandit.estimation import (
    VARIANCE_FLOOR,
    BatchStats,
    CumulativeEstimate,
    ShrunkEstimate,
    SmoothingScheme,
    accumulate,
    pooled_se2,
    shrink,
    shrink_arrays,
    smooth,
    weights,
)


def batch(arm, update, alloc, rsum, rcount):
    return BatchStats(arm, update, alloc, rsum, rcount)


class TestAccumulate:
    def test_single_batch_reduces_to_batch_mean(self):
        est = accumulate([batch(0, 1, 100, 10, 100)])
        assert est.mean == pytest.approx(0.10)
        assert est.se2 == pytest.approx(0.10 * 0.90 / 100)
        assert est.total_responses == 100
        assert est.total_allocated == 100

    def test_pooled_mean_hand_oracle(self):
        # pooled over two batches: (10+60)/(100+300)
        est = accumulate([batch(2, 1, 100, 10, 100), batch(2, 2, 300, 60, 300)])
        assert est.mean == pytest.approx(70 / 400)
        assert est.se2 == pytest.approx((70 / 400) * (330 / 400) / 400)

    def test_all_counts_zero_flags_no_data(self):
        est = accumulate([batch(1, 1, 50, 0, 0), batch(1, 2, 0, 0, 0)])
        assert not est.has_data
        assert math.isnan(est.mean)
        assert est.total_allocated == 50

    def test_mixed_arm_ids_rejected(self):
        with pytest.raises(ValueError, match="arm_ids"):
            accumulate([batch(0, 1, 10, 1, 5), batch(1, 2, 10, 1, 5)])

    def test_empty_window_rejected(self):
        with pytest.raises(ValueError):
            accumulate([])

    def test_spillover_count_can_exceed_allocated(self):
        est = accumulate([batch(0, 3, 10, 12, 40)])
        assert est.mean == pytest.approx(0.3)

    def test_pooled_mean_equals_brute_force_flat_list(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            n_batches = int(rng.integers(1, 6))
            flat = []
            batches = []
            for u in range(1, n_batches + 1):
                count = int(rng.integers(0, 30))
                outcomes = (rng.random(count) < 0.3).astype(int)
                flat.extend(outcomes.tolist())
                batches.append(batch(0, u, count, int(outcomes.sum()), count))
            est = accumulate(batches)
            if not flat:
                assert not est.has_data
            else:
                assert est.mean == pytest.approx(np.mean(flat))

    def test_degenerate_all_zero_window_keeps_positive_se2(self):
        # all failures: the plug-in variance would be zero and freeze the arm out
        est = accumulate([batch(0, 1, 50, 0, 50)])
        assert est.mean == 0.0
        edge = 0.5 / 51
        assert est.se2 == pytest.approx(edge * (1 - edge) / 50)
        # non-degenerate windows use the plain plug-in variance exactly
        est2 = accumulate([batch(0, 1, 50, 1, 50)])
        assert est2.se2 == 0.02 * 0.98 / 50


class TestPooledSe2:
    def test_matches_plugin_away_from_boundary(self):
        assert pooled_se2(10, 100) == pytest.approx(0.1 * 0.9 / 100)

    def test_decreasing_in_count_for_degenerate_mean(self):
        values = [float(pooled_se2(0, n)) for n in (1, 5, 50, 500)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert all(0 < v <= 0.25 for v in values)


def make_cums(means, se2s):
    return [
        CumulativeEstimate(i, m, v, 1000, 1000)
        for i, (m, v) in enumerate(zip(means, se2s))
    ]


class TestShrink:
    def test_hand_oracle_k4(self):
        means = (0.10, 0.12, 0.14, 0.20)
        shrunk, ctx = shrink(make_cums(means, [4e-4] * 4))
        assert ctx.grand_mean == pytest.approx(0.14)
        assert ctx.dispersion == pytest.approx(0.0056)
        xi = 4e-4 * (4 - 3) / 0.0056
        assert shrunk[0].shrinkage == pytest.approx(xi)
        assert shrunk[0].js_mean == pytest.approx(0.14 + (1 - xi) * (0.10 - 0.14))
        assert shrunk[0].js_mean == pytest.approx(0.102857, abs=1e-6)
        expected_var = (1 - xi) * 4e-4 + xi * 0.0056 / 4 + 2 * xi**2 * 0.0016 / 1
        assert shrunk[0].js_var == pytest.approx(expected_var)

    def test_zero_dispersion_forces_full_shrinkage(self):
        shrunk, ctx = shrink(make_cums([0.1] * 5, [1e-4] * 5))
        assert ctx.dispersion == 0.0
        for s in shrunk:
            assert s.shrinkage == 1.0
            assert s.js_mean == pytest.approx(0.1)

    def test_zero_noise_recovers_mle(self):
        means = [0.05, 0.10, 0.15, 0.25]
        shrunk, _ = shrink(make_cums(means, [0.0] * 4))
        for s, m in zip(shrunk, means):
            assert s.shrinkage == 0.0
            assert s.js_mean == m

    def test_small_k_disables_shrinkage(self):
        shrunk, _ = shrink(make_cums([0.1, 0.3, 0.5], [1e-3] * 3))
        for s, m in zip(shrunk, (0.1, 0.3, 0.5)):
            assert s.shrinkage == 0.0
            assert s.js_mean == m

    def test_no_data_arms_ride_on_grand_mean(self):
        cums = make_cums([0.10, 0.12, 0.14, 0.20], [4e-4] * 4)
        cums.append(CumulativeEstimate(4, float("nan"), float("nan"), 0, 500))
        shrunk, ctx = shrink(cums)
        assert ctx.arm_count == 4  # only arms with data enter the context
        assert shrunk[4].js_mean == pytest.approx(ctx.grand_mean)
        assert shrunk[4].js_var == pytest.approx(max(s.js_var for s in shrunk[:4]))
        assert shrunk[4].shrinkage == 1.0

    def test_all_arms_cold_returns_uninformative_prior(self):
        cums = [CumulativeEstimate(i, float("nan"), float("nan"), 0, 0) for i in range(3)]
        shrunk, ctx = shrink(cums)
        for s in shrunk:
            assert (s.js_mean, s.js_var) == (0.5, 0.25)
        assert ctx.grand_mean == 0.5

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(7)
        means = rng.uniform(0.01, 0.2, 8)
        se2 = rng.uniform(1e-6, 1e-3, 8)
        base, _ = shrink(make_cums(means, se2))
        perm = rng.permutation(8)
        permuted, _ = shrink(make_cums(means[perm], se2[perm]))
        for i, p in enumerate(perm):
            assert permuted[i].js_mean == pytest.approx(base[p].js_mean)
            assert permuted[i].js_var == pytest.approx(base[p].js_var)

    @given(
        means=st.lists(st.floats(0.0, 1.0), min_size=4, max_size=20),
        noise=st.lists(st.floats(0.0, 0.25), min_size=4, max_size=20),
    )
    @settings(max_examples=200, deadline=None)
    def test_contraction_and_positive_part_bounds(self, means, noise):
        k = min(len(means), len(noise))
        means, noise = means[:k], noise[:k]
        js_mean, js_var, xi, ctx = shrink_arrays(
            np.array(means), np.array(noise), np.ones(k, dtype=bool)
        )
        assert np.all((xi >= 0.0) & (xi <= 1.0))
        assert np.all(js_var >= VARIANCE_FLOOR)
        contraction = np.abs(js_mean - ctx.grand_mean) <= np.abs(
            np.array(means) - ctx.grand_mean
        ) + 1e-15
        assert contraction.all()

    def test_mle_limit_as_noise_vanishes(self):
        means = np.array([0.05, 0.10, 0.15, 0.22, 0.30])
        for scale in (1e-4, 1e-6, 1e-8):
            js_mean, _, xi, _ = shrink_arrays(
                means, np.full(5, scale), np.ones(5, dtype=bool)
            )
            assert np.all(np.abs(js_mean - means) <= xi.max() * 0.5)
        assert xi.max() < 1e-5


class TestWeights:
    def test_last_only(self):
        w = weights(SmoothingScheme("last_only"), 5)
        assert w.tolist() == [1.0, 0.0, 0.0, 0.0, 0.0]

    def test_uniform_full_window(self):
        w = weights(SmoothingScheme("uniform", 4), 4)
        assert w.tolist() == [0.25] * 4

    def test_discounted_hand_oracle(self):
        w = weights(SmoothingScheme("discounted", 3), 3)
        # raw (1, 2/3, 1/3) renormalized by 2
        assert w == pytest.approx([0.5, 1 / 3, 1 / 6])

    def test_uniform_renormalizes_over_available(self):
        w = weights(SmoothingScheme("uniform", 10), 3)
        assert w == pytest.approx([1 / 3] * 3)

    def test_zero_available_rejected(self):
        with pytest.raises(ValueError):
            weights(SmoothingScheme("uniform", 4), 0)

    def test_available_beyond_window_rejected(self):
        with pytest.raises(ValueError):
            weights(SmoothingScheme("uniform", 4), 5)

    @given(
        variant=st.sampled_from(["last_only", "uniform", "discounted"]),
        window=st.integers(1, 60),
        data=st.data(),
    )
    @settings(max_examples=200, deadline=None)
    def test_normalization_and_monotonicity(self, variant, window, data):
        m = data.draw(st.integers(1, window))
        w = weights(SmoothingScheme(variant, window), m)
        assert w.shape == (m,)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(w >= 0.0)
        if variant == "discounted":
            assert np.all(np.diff(w) <= 1e-15)


class TestSmooth:
    def se(self, arm, u, mean, var):
        return ShrunkEstimate(arm, u, mean, var, 0.1)

    def test_last_only_is_identity_on_newest(self):
        hist = [self.se(0, 3, 0.3, 2e-4), self.se(0, 2, 0.9, 1e-3)]
        out = smooth(hist, SmoothingScheme("last_only"))
        assert out.mean == 0.3
        assert out.var == 2e-4

    def test_uniform_two_entries(self):
        hist = [self.se(0, 2, 0.2, 1e-4), self.se(0, 1, 0.1, 1e-4)]
        out = smooth(hist, SmoothingScheme("uniform", 2))
        assert out.mean == pytest.approx(0.15)

    def test_discounted_hand_oracle(self):
        hist = [
            self.se(0, 3, 0.3, 1e-4),
            self.se(0, 2, 0.2, 1e-4),
            self.se(0, 1, 0.1, 1e-4),
        ]
        out = smooth(hist, SmoothingScheme("discounted", 3))
        assert out.mean == pytest.approx(0.5 * 0.3 + 0.2 / 3 + 0.1 / 6)
        assert out.mean == pytest.approx(0.23333, abs=1e-5)

    def test_single_window_identity_is_exact(self):
        only = self.se(3, 9, 0.123456789, 7.65432e-5)
        for variant in ("last_only", "uniform", "discounted"):
            out = smooth([only], SmoothingScheme(variant, 1))
            assert out.mean == only.js_mean
            assert out.var == only.js_var

    def test_history_truncated_to_window(self):
        hist = [self.se(0, u, 0.1 * u, 1e-4) for u in (5, 4, 3, 2, 1)]
        bounded = smooth(hist, SmoothingScheme("uniform", 2))
        assert bounded.mean == pytest.approx((0.5 + 0.4) / 2)

    def test_variance_is_weighted_harmonic_mean(self):
        hist = [self.se(0, 2, 0.2, 1e-4), self.se(0, 1, 0.2, 4e-4)]
        out = smooth(hist, SmoothingScheme("uniform", 2))
        assert out.var == pytest.approx(1.0 / (0.5 / 1e-4 + 0.5 / 4e-4))
        # equal variances are a fixed point of the combination
        flat = [self.se(0, 2, 0.2, 1e-4), self.se(0, 1, 0.2, 1e-4)]
        assert smooth(flat, SmoothingScheme("uniform", 2)).var == pytest.approx(1e-4)

    def test_empty_history_rejected(self):
        with pytest.raises(ValueError):
            smooth([], SmoothingScheme("uniform", 3))


class TestValidation:
    def test_batch_stats_binary_invariant(self):
        with pytest.raises(ValueError, match="binary"):
            BatchStats(0, 1, 10, 9, 5)

    def test_batch_stats_negative_counts(self):
        with pytest.raises(ValueError):
            BatchStats(0, 1, -1, 0, 0)

    def test_unknown_scheme_variant(self):
        with pytest.raises(ValueError, match="unknown smoothing variant"):
            SmoothingScheme("exponential")

    def test_bad_window_length(self):
        with pytest.raises(ValueError):
            SmoothingScheme("uniform", 0)
