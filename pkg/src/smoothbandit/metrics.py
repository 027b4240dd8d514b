"""Per-trial evaluation quantities and across-trial aggregates.

Everything here is pure aggregation over immutable trial outputs: allocation
stability, regret, reward-estimation error, inter-trial spread, and percentile
bootstrap confidence intervals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrialMetrics:
    """Everything recorded from one (trial, variant) run.

    Per-update arrays have one row per update; per-arm arrays are
    (updates, arms). Pair arrays are indexed like the pair lists, one row per
    unordered arm pair, with log10 Bayes factors per update.
    """

    trial: int
    variant: str
    seed: int
    updates: int
    arm_count: int

    true_rewards_initial: np.ndarray
    true_rewards_final: np.ndarray
    delay_lambdas: np.ndarray | None
    change_update: int | None
    change_permutation: tuple[int, ...] | None
    effect_size_best_next: float
    truth_variance: float

    shares: np.ndarray
    best_share: np.ndarray
    second_third_share: np.ndarray
    regret_per_update: np.ndarray
    mse_per_update: np.ndarray

    allocated: np.ndarray
    responses_received: np.ndarray
    response_sum: np.ndarray
    mle_mean: np.ndarray
    js_mean: np.ndarray
    js_var: np.ndarray
    smoothed_mean: np.ndarray
    smoothed_var: np.ndarray
    xi: np.ndarray

    pair_hi: np.ndarray
    pair_lo: np.ndarray
    pair_truth_delta: np.ndarray
    pair_log10_bf: np.ndarray
    pair_decided_at: np.ndarray

    @property
    def cumulative_regret(self) -> float:
        return float(self.regret_per_update.sum())

    @property
    def final_mse(self) -> float:
        return float(self.mse_per_update[-1])

    @property
    def estimated_reward_variance_final(self) -> float:
        """Across-arm variance of the belief means at the final update."""
        return float(np.var(self.smoothed_mean[-1]))


@dataclass(frozen=True)
class BootstrapCI:
    """Percentile bootstrap interval for a statistic."""

    point: float
    lo: float
    hi: float
    iterations: int


def allocation_change(best_share: np.ndarray) -> np.ndarray:
    """Mean absolute inter-update change of the best-arm share, per update.

    ``best_share`` is (trials, updates); the result has updates-1 entries,
    averaging |share_u - share_{u-1}| across trials.
    """
    best_share = np.atleast_2d(np.asarray(best_share, dtype=float))
    if best_share.shape[1] < 2:
        raise ValueError("need at least two updates to difference")
    return np.abs(np.diff(best_share, axis=1)).mean(axis=0)


def regret(plan, truth: np.ndarray) -> float:
    """Expected per-unit regret of an allocation mix against the true rewards."""
    counts = np.asarray(plan.counts, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if counts.shape != truth.shape:
        raise ValueError("plan and truth cover different arms")
    batch = counts.sum()
    if batch == 0:
        return 0.0
    return float(counts @ (truth.max() - truth) / batch)


def mse(estimates: np.ndarray, truth: np.ndarray) -> float:
    """Mean squared error of per-arm reward estimates."""
    estimates = np.asarray(estimates, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimates.shape != truth.shape:
        raise ValueError("estimates and truth cover different arms")
    return float(np.mean((estimates - truth) ** 2))


def inter_trial_variance(values) -> float:
    """Unbiased sample variance of one statistic across trials."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("need at least two trials")
    return float(np.var(values, ddof=1))


def truth_estimate_correlation(truth_values, estimate_values) -> float | None:
    """Pearson correlation across trials; None when either side is degenerate."""
    x = np.asarray(truth_values, dtype=float)
    y = np.asarray(estimate_values, dtype=float)
    if x.shape != y.shape:
        raise ValueError("series have different lengths")
    if x.size < 3:
        raise ValueError("need at least three trials")
    if np.std(x) == 0.0 or np.std(y) == 0.0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def bootstrap_ci(
    samples,
    iterations: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> BootstrapCI:
    """Percentile bootstrap interval for the mean of ``samples``."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("samples must be non-empty")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, samples.size, size=(iterations, samples.size))
    means = samples[idx].mean(axis=1)
    alpha = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(means, [alpha, 100.0 - alpha])
    return BootstrapCI(float(samples.mean()), float(lo), float(hi), iterations)


def bootstrap_curve(
    curves: np.ndarray,
    iterations: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    chunk: int = 100,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pointwise percentile bootstrap of a (trials, updates) curve's mean.

    Resamples whole trials, so every point of one bootstrap replicate shares
    the same resample. Returns (mean, lo, hi) arrays over updates.
    """
    curves = np.asarray(curves, dtype=float)
    if curves.ndim != 2 or curves.shape[0] == 0:
        raise ValueError("curves must be a non-empty (trials, updates) array")
    n = curves.shape[0]
    rng = np.random.default_rng(seed)
    reps = []
    remaining = iterations
    while remaining > 0:
        m = min(chunk, remaining)
        idx = rng.integers(0, n, size=(m, n))
        reps.append(curves[idx].mean(axis=1))
        remaining -= m
    boot = np.concatenate(reps, axis=0)
    alpha = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(boot, [alpha, 100.0 - alpha], axis=0)
    return curves.mean(axis=0), lo, hi
