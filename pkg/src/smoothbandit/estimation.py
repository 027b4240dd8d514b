"""Cumulative reward statistics, James-Stein shrinkage, and smoothing.

The estimator pipeline runs in three stages, all over the same window of
recent batches:

1. ``accumulate`` pools per-batch response counts into a cumulative mean and
   its squared standard error.
2. ``shrink`` pulls each arm's cumulative mean toward the grand mean across
   arms, with a positive-part clamp on the shrinkage factor.
3. ``smooth`` combines the shrunk estimates from recent updates under a
   weighting scheme (last-only, uniform, or linearly discounted).

Object-level functions operate on the dataclasses below; the ``*_arrays``
variants are the vectorized cores used by the simulation hot loop. Both paths
share the same arithmetic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

# Posterior variances are floored here so Thompson sampling never collapses
# onto a zero-variance point estimate.
VARIANCE_FLOOR = 1e-12

# Uninformative belief used before any response has been observed.
COLD_MEAN = 0.5
COLD_VAR = 0.25

SCHEME_VARIANTS = ("last_only", "uniform", "discounted")


@dataclass(frozen=True)
class BatchStats:
    """Per-arm allocation and response tallies for one update.

    ``response_count`` may exceed ``allocated``: responses to units allocated
    in earlier updates can arrive in this one.
    """

    arm_id: int
    update_index: int
    allocated: int
    response_sum: int
    response_count: int

    def __post_init__(self) -> None:
        if self.update_index < 1:
            raise ValueError(f"update_index must be >= 1, got {self.update_index}")
        if min(self.allocated, self.response_sum, self.response_count) < 0:
            raise ValueError("counts must be non-negative")
        if self.response_sum > self.response_count:
            raise ValueError(
                f"response_sum {self.response_sum} exceeds response_count "
                f"{self.response_count}; responses are binary"
            )


@dataclass(frozen=True)
class CumulativeEstimate:
    """Pooled response mean and squared standard error over a window.

    ``mean`` and ``se2`` are NaN when no responses fell in the window; check
    ``has_data`` before using them.
    """

    arm_id: int
    mean: float
    se2: float
    total_responses: int
    total_allocated: int

    @property
    def has_data(self) -> bool:
        return self.total_responses > 0


@dataclass(frozen=True)
class ShrunkEstimate:
    """Positive-part James-Stein estimate for one arm at one update."""

    arm_id: int
    update_index: int
    js_mean: float
    js_var: float
    shrinkage: float


@dataclass(frozen=True)
class ShrinkageContext:
    """Cross-arm quantities behind a shrink call: grand mean, dispersion, and
    the number of arms that entered them."""

    grand_mean: float
    dispersion: float
    arm_count: int


@dataclass(frozen=True)
class SmoothingScheme:
    """Weighting rule for combining recent shrunk estimates.

    ``window_length`` of None means the window grows with the run (stationary
    mode); an integer bounds it to a sliding window (piece-wise stationary
    mode).
    """

    variant: str
    window_length: int | None = None

    def __post_init__(self) -> None:
        if self.variant not in SCHEME_VARIANTS:
            raise ValueError(
                f"unknown smoothing variant {self.variant!r}; "
                f"expected one of {SCHEME_VARIANTS}"
            )
        if self.window_length is not None and self.window_length < 1:
            raise ValueError(f"window_length must be >= 1, got {self.window_length}")


@dataclass(frozen=True)
class SmoothedEstimate:
    """Window-combined mean and variance for one arm."""

    arm_id: int
    mean: float
    var: float


def pooled_se2(response_sum, response_count):
    """Squared standard error of a pooled Bernoulli mean, lock-in safe.

    Normally ``c (1 - c) / n`` with ``c = sum / n``. When every response in
    the window is identical the plug-in variance degenerates to zero, which
    is an artifact of the sample rather than real certainty and would freeze
    Thompson sampling out of the arm permanently; for that case only, the
    rate inside the variance is pulled half a response off the boundary
    (``0.5 / (n + 1)``). Any window with both outcomes present is untouched.
    """
    response_sum = np.asarray(response_sum, dtype=float)
    n = np.asarray(response_count, dtype=float)
    c = response_sum / n
    edge = 0.5 / (n + 1.0)
    c_var = np.clip(c, edge, 1.0 - edge)
    return c_var * (1.0 - c_var) / n


def accumulate(batches: Sequence[BatchStats]) -> CumulativeEstimate:
    """Pool a window of batches for one arm into a cumulative estimate.

    The mean is the pooled response mean (sum of binary responses over the
    number of responses received) and ``se2`` its squared standard error
    (see ``pooled_se2``). A window with zero responses yields a no-data
    estimate with NaN mean.
    """
    if not batches:
        raise ValueError("window must contain at least one batch")
    arm_ids = {b.arm_id for b in batches}
    if len(arm_ids) != 1:
        raise ValueError(f"batches mix arm_ids {sorted(arm_ids)}")
    arm_id = batches[0].arm_id
    total_sum = sum(b.response_sum for b in batches)
    total_count = sum(b.response_count for b in batches)
    total_alloc = sum(b.allocated for b in batches)
    if total_count == 0:
        return CumulativeEstimate(arm_id, float("nan"), float("nan"), 0, total_alloc)
    mean = total_sum / total_count
    se2 = float(pooled_se2(total_sum, total_count))
    return CumulativeEstimate(arm_id, mean, se2, total_count, total_alloc)


def shrink_arrays(
    means: np.ndarray, se2: np.ndarray, has_data: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, ShrinkageContext]:
    """Vectorized positive-part James-Stein shrinkage across arms.

    Arms without data are excluded from the grand mean and dispersion; they
    receive the grand mean itself with the largest variance seen among arms
    with data, so they stay sampleable. Returns (js_mean, js_var, xi, context).
    """
    means = np.asarray(means, dtype=float)
    se2 = np.asarray(se2, dtype=float)
    has_data = np.asarray(has_data, dtype=bool)
    k_total = means.shape[0]
    if k_total < 1:
        raise ValueError("need at least one arm")

    k = int(has_data.sum())
    if k == 0:
        # Nothing observed anywhere: fall back to the uninformative belief.
        js_mean = np.full(k_total, COLD_MEAN)
        js_var = np.full(k_total, COLD_VAR)
        xi = np.ones(k_total)
        return js_mean, js_var, xi, ShrinkageContext(COLD_MEAN, 0.0, k_total)

    m = means[has_data]
    v = se2[has_data]
    grand_mean = float(m.mean())
    dispersion = float(((m - grand_mean) ** 2).sum())

    if k <= 3:
        # The positive-part estimator needs at least 4 means; degrade to MLE.
        log.info("James-Stein shrinkage disabled: only %d arm(s) with data", k)
        xi_d = np.zeros(k)
    elif dispersion == 0.0:
        # All means equal: the min(.., 1) clamp saturates unless an arm is
        # already noise-free, in which case the MLE is exact.
        xi_d = np.where(v == 0.0, 0.0, 1.0)
    else:
        xi_d = np.minimum(v * (k - 3) / dispersion, 1.0)

    dev = m - grand_mean
    # exact MLE recovery at zero shrinkage, not just up to rounding
    js_mean_d = np.where(xi_d == 0.0, m, grand_mean + (1.0 - xi_d) * dev)
    js_var_d = (1.0 - xi_d) * v
    if k > 3:
        js_var_d = js_var_d + xi_d * dispersion / k + 2.0 * xi_d**2 * dev**2 / (k - 3)
    js_var_d = np.maximum(js_var_d, VARIANCE_FLOOR)

    js_mean = np.full(k_total, grand_mean)
    js_var = np.full(k_total, float(js_var_d.max()))
    xi = np.ones(k_total)
    js_mean[has_data] = js_mean_d
    js_var[has_data] = js_var_d
    xi[has_data] = xi_d
    return js_mean, js_var, xi, ShrinkageContext(grand_mean, dispersion, k)


def shrink(
    cumulatives: Sequence[CumulativeEstimate], update_index: int = 0
) -> tuple[list[ShrunkEstimate], ShrinkageContext]:
    """Apply positive-part James-Stein shrinkage to one estimate per arm."""
    if not cumulatives:
        raise ValueError("need at least one arm")
    means = np.array([c.mean for c in cumulatives])
    se2 = np.array([c.se2 for c in cumulatives])
    has_data = np.array([c.has_data for c in cumulatives])
    js_mean, js_var, xi, ctx = shrink_arrays(means, se2, has_data)
    shrunk = [
        ShrunkEstimate(
            c.arm_id, update_index, float(js_mean[i]), float(js_var[i]), float(xi[i])
        )
        for i, c in enumerate(cumulatives)
    ]
    return shrunk, ctx


def weights(scheme: SmoothingScheme, available: int) -> np.ndarray:
    """Normalized smoothing weights over ``available`` past updates.

    Index 0 is the most recent update. Raw weights are renormalized to sum to
    one over the updates actually available, which matters early in a run when
    fewer than ``window_length`` updates exist.
    """
    if available < 1:
        raise ValueError(f"available must be >= 1, got {available}")
    u_bound = scheme.window_length if scheme.window_length is not None else available
    if available > u_bound:
        raise ValueError(
            f"{available} updates offered to a window bounded at {u_bound}"
        )
    if scheme.variant == "last_only":
        w = np.zeros(available)
        w[0] = 1.0
        return w
    if scheme.variant == "uniform":
        return np.full(available, 1.0 / available)
    # discounted: raw weight 1 - (u - 1)/U for u = 1..available, renormalized
    u = np.arange(1, available + 1, dtype=float)
    raw = 1.0 - (u - 1.0) / u_bound
    return raw / raw.sum()


def smooth_arrays(
    js_means: np.ndarray, js_vars: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Weighted combination of shrunk estimates; rows ordered newest first.

    The mean is the plain weighted sum. The variance pools precisions,
    ``1 / sum(w / v)``, so certainty accumulates across the window the way it
    does when independent estimates are averaged; a weighted sum of the
    variances themselves would keep the posterior as wide as the noisy early
    estimates for the rest of a run and the sampler would never converge.
    Both forms reduce to the single estimate when the window has length one.
    """
    mean = w @ js_means
    var = 1.0 / (w @ (1.0 / js_vars))
    return mean, np.maximum(var, VARIANCE_FLOOR)


def smooth(history: Sequence[ShrunkEstimate], scheme: SmoothingScheme) -> SmoothedEstimate:
    """Combine one arm's recent shrunk estimates, most recent first.

    Histories longer than the scheme's window are truncated to the window. A
    single-entry window reproduces the input estimate exactly.
    """
    if not history:
        raise ValueError("history must be non-empty")
    if scheme.window_length is not None:
        history = history[: scheme.window_length]
    if len(history) == 1:
        only = history[0]
        return SmoothedEstimate(only.arm_id, only.js_mean, max(only.js_var, VARIANCE_FLOOR))
    w = weights(scheme, len(history))
    means = np.array([h.js_mean for h in history])
    variances = np.array([h.js_var for h in history])
    mean, var = smooth_arrays(means, variances, w)
    return SmoothedEstimate(history[0].arm_id, float(mean), float(var))
