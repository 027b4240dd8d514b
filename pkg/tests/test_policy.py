import numpy as np
import pytest

from smoothbandit.environment import (
    EmpiricalDelaySource,
    FixedRewardSource,
    ScenarioConfig,
)
from smoothbandit.estimation import BatchStats, ShrunkEstimate, SmoothingScheme
from smoothbandit.harness import run_trial
from smoothbandit.policy import (
    AllocationPlan,
    PolicyVariant,
    PosteriorBelief,
    sample_allocation,
    update_beliefs,
)

# chi2.ppf(0.99, df=3), frozen from scipy
CHI2_99_DF3 = 11.344866730144373


def batch(arm, update, alloc, rsum, rcount):
    return BatchStats(arm, update, alloc, rsum, rcount)


def shrunk(arm, u, mean, var):
    return ShrunkEstimate(arm, u, mean, var, 0.2)


class TestPolicyVariant:
    def test_kind_fixes_scheme(self):
        assert PolicyVariant.make("mle").scheme.variant == "last_only"
        assert PolicyVariant.make("veb").scheme.variant == "last_only"
        assert PolicyVariant.make("useb", 50).scheme.variant == "uniform"
        assert PolicyVariant.make("dseb", 50).scheme.variant == "discounted"

    def test_mismatched_scheme_rejected(self):
        with pytest.raises(ValueError, match="requires"):
            PolicyVariant("useb", SmoothingScheme("discounted", 5))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown variant"):
            PolicyVariant.make("ucb")


class TestUpdateBeliefs:
    def test_mle_single_batch_is_pooled_mean(self):
        history = {0: [batch(0, 1, 100, 10, 100)]}
        shrunk_hist = {0: [shrunk(0, 1, 0.08, 1e-4)]}
        (b,) = update_beliefs(PolicyVariant.make("mle"), history, shrunk_hist)
        assert b.mean == pytest.approx(0.10)
        assert b.var == pytest.approx(0.1 * 0.9 / 100)

    def test_cold_start_is_uninformative(self):
        beliefs = update_beliefs(
            PolicyVariant.make("mle"), {0: [], 1: []}, {0: [], 1: []}
        )
        assert all((b.mean, b.var) == (0.5, 0.25) for b in beliefs)
        beliefs = update_beliefs(
            PolicyVariant.make("useb", 10), {0: [], 1: []}, {0: [], 1: []}
        )
        assert all((b.mean, b.var) == (0.5, 0.25) for b in beliefs)

    def test_useb_window_one_equals_veb(self):
        history = {k: [batch(k, 1, 100, 10 + k, 100)] for k in range(4)}
        shrunk_hist = {k: [shrunk(k, 1, 0.1 + 0.01 * k, 2e-4)] for k in range(4)}
        useb = update_beliefs(PolicyVariant.make("useb", 1), history, shrunk_hist)
        veb = update_beliefs(PolicyVariant.make("veb", 1), history, shrunk_hist)
        assert useb == veb

    def test_dseb_hand_oracle(self):
        history = {0: [batch(0, u, 10, 1, 10) for u in (3, 2, 1)]}
        shrunk_hist = {
            0: [shrunk(0, 3, 0.3, 1e-4), shrunk(0, 2, 0.2, 1e-4), shrunk(0, 1, 0.1, 1e-4)]
        }
        (b,) = update_beliefs(PolicyVariant.make("dseb", 3), history, shrunk_hist)
        assert b.mean == pytest.approx(0.23333, abs=1e-5)

    def test_mle_no_data_arm_falls_back_to_prior(self):
        history = {0: [batch(0, 1, 100, 10, 100)], 1: [batch(1, 1, 100, 0, 0)]}
        shrunk_hist = {0: [shrunk(0, 1, 0.1, 1e-4)], 1: [shrunk(1, 1, 0.1, 1e-4)]}
        beliefs = update_beliefs(PolicyVariant.make("mle"), history, shrunk_hist)
        assert beliefs[0].mean == pytest.approx(0.10)
        assert (beliefs[1].mean, beliefs[1].var) == (0.5, 0.25)

    def test_mismatched_arm_sets_rejected(self):
        with pytest.raises(ValueError, match="different arms"):
            update_beliefs(PolicyVariant.make("mle"), {0: []}, {1: []})


class TestSampleAllocation:
    def beliefs(self, means, var=1e-4):
        return [PosteriorBelief(i, m, var) for i, m in enumerate(means)]

    def test_zero_batch(self):
        plan = sample_allocation(self.beliefs([0.2, 0.4]), 0, np.random.default_rng(0))
        assert plan.counts == (0, 0)
        assert plan.batch_size == 0

    def test_degenerate_variances_force_argmax(self):
        beliefs = [PosteriorBelief(0, 0.9, 1e-12), PosteriorBelief(1, 0.1, 1e-12)]
        plan = sample_allocation(beliefs, 1000, np.random.default_rng(1))
        assert plan.counts == (1000, 0)

    def test_conservation(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            k = int(rng.integers(1, 9))
            means = rng.uniform(0, 0.2, k)
            plan = sample_allocation(self.beliefs(means.tolist()), 777, rng)
            assert sum(plan.counts) == 777
            assert all(c >= 0 for c in plan.counts)

    def test_determinism(self):
        beliefs = self.beliefs([0.1, 0.12, 0.14], var=4e-4)
        a = sample_allocation(beliefs, 500, np.random.default_rng(99), update_index=3)
        b = sample_allocation(beliefs, 500, np.random.default_rng(99), update_index=3)
        assert a == b

    def test_symmetric_beliefs_split_evenly(self):
        # identical beliefs across 4 arms: counts should pass a chi-square
        # goodness-of-fit test against the uniform multinomial at 99%
        beliefs = self.beliefs([0.1] * 4, var=1e-4)
        plan = sample_allocation(beliefs, 10_000, np.random.default_rng(7))
        expected = 10_000 / 4
        stat = sum((c - expected) ** 2 / expected for c in plan.counts)
        assert stat < CHI2_99_DF3

    def test_monotone_preference(self):
        # raising one arm's mean must not decrease its allocation share;
        # checked empirically at 3 sigma over 1e5 units
        rng = np.random.default_rng(11)
        n = 100_000
        low = sample_allocation(self.beliefs([0.10, 0.12, 0.14]), n, rng)
        rng = np.random.default_rng(11)
        high = sample_allocation(self.beliefs([0.13, 0.12, 0.14]), n, rng)
        p_low = low.counts[0] / n
        p_high = high.counts[0] / n
        sigma = np.sqrt(0.5 * (p_low * (1 - p_low) + p_high * (1 - p_high)) * 2 / n)
        assert p_high - p_low > -3 * sigma

    def test_negative_batch_rejected(self):
        with pytest.raises(ValueError):
            sample_allocation(self.beliefs([0.1]), -1, np.random.default_rng(0))


class TestVariantEquivalence:
    def test_all_variants_agree_without_delay_shrinkage_or_window(self, tmp_path):
        # zero delay, window U=1, K=3 (below the James-Stein minimum):
        # every variant reduces to the same cumulative-mean belief wherever
        # every arm has data in the window (starved arms differ by design:
        # mle resets to the uninformative prior, eB pools the grand mean)
        zero_delays = tmp_path / "zero_delays.txt"
        zero_delays.write_text("0\n")
        scenario = ScenarioConfig(
            arm_count=3,
            updates=30,
            batch_size=5000,
            reward_source=FixedRewardSource((0.49, 0.50, 0.51)),
            delay_source=EmpiricalDelaySource(str(zero_delays)),
            window=1,
        )
        runs = {k: run_trial(scenario, k, seed=321) for k in ("mle", "veb", "useb", "dseb")}
        # beliefs can only be compared while no variant has hit a starved
        # window yet; afterwards trajectories legitimately diverge
        horizon = scenario.updates
        for tm in runs.values():
            full = np.all(tm.responses_received > 0, axis=1)
            starved = np.flatnonzero(~full[:-1])  # window at u+1 is batch u
            if starved.size:
                horizon = min(horizon, int(starved[0]) + 1)
        assert horizon >= 10
        reference = runs["mle"]
        for kind, tm in runs.items():
            assert np.array_equal(
                tm.smoothed_mean[:horizon], reference.smoothed_mean[:horizon]
            ), f"{kind} means diverged"
            assert np.array_equal(
                tm.smoothed_var[:horizon], reference.smoothed_var[:horizon]
            ), f"{kind} variances diverged"


class TestAllocationPlan:
    def test_batch_size_property(self):
        assert AllocationPlan(1, (3, 4, 5)).batch_size == 12
