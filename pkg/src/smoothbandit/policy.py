"""Posterior belief construction per estimator variant and Thompson sampling.

Four estimator variants feed the sampler:

* ``mle``   cumulative window mean and standard error, no shrinkage.
* ``veb``   most recent James-Stein estimate (no smoothing).
* ``useb``  uniform smoothing over recent James-Stein estimates.
* ``dseb``  linearly discounted smoothing over recent James-Stein estimates.

Beliefs are Gaussian (mean, variance) pairs. Allocation draws one posterior
sample per arm for every unit in the batch and assigns the unit to the argmax
arm, ties going to the lowest arm id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .estimation import (
    COLD_MEAN,
    COLD_VAR,
    VARIANCE_FLOOR,
    BatchStats,
    ShrunkEstimate,
    SmoothingScheme,
    accumulate,
    smooth,
)

VARIANT_KINDS = ("mle", "veb", "useb", "dseb")

_SCHEME_BY_KIND = {
    "mle": "last_only",
    "veb": "last_only",
    "useb": "uniform",
    "dseb": "discounted",
}


@dataclass(frozen=True)
class PolicyVariant:
    """Estimator variant plus the smoothing scheme it implies."""

    kind: str
    scheme: SmoothingScheme

    def __post_init__(self) -> None:
        if self.kind not in VARIANT_KINDS:
            raise ValueError(f"unknown variant {self.kind!r}; expected one of {VARIANT_KINDS}")
        expected = _SCHEME_BY_KIND[self.kind]
        if self.scheme.variant != expected:
            raise ValueError(f"variant {self.kind} requires a {expected} scheme")

    @classmethod
    def make(cls, kind: str, window: int | None = None) -> "PolicyVariant":
        """Build a variant with its canonical scheme and the given window bound."""
        if kind not in VARIANT_KINDS:
            raise ValueError(f"unknown variant {kind!r}; expected one of {VARIANT_KINDS}")
        return cls(kind, SmoothingScheme(_SCHEME_BY_KIND[kind], window))


@dataclass(frozen=True)
class PosteriorBelief:
    arm_id: int
    mean: float
    var: float


@dataclass(frozen=True)
class AllocationPlan:
    """Unit counts per arm for one update."""

    update_index: int
    counts: tuple[int, ...]

    @property
    def batch_size(self) -> int:
        return sum(self.counts)


def update_beliefs(
    variant: PolicyVariant,
    batch_history: Mapping[int, Sequence[BatchStats]],
    shrunk_history: Mapping[int, Sequence[ShrunkEstimate]],
) -> list[PosteriorBelief]:
    """Compute per-arm posterior beliefs from the active window.

    ``batch_history`` maps arm id to that arm's BatchStats over the window and
    drives the mle variant; ``shrunk_history`` maps arm id to its shrunk
    estimates (most recent first) and drives the eB variants. Arms with no
    responses under mle fall back to the uninformative (0.5, 0.25) belief.
    """
    arm_ids = sorted(batch_history)
    if sorted(shrunk_history) != arm_ids:
        raise ValueError("batch_history and shrunk_history cover different arms")

    beliefs = []
    for arm_id in arm_ids:
        if variant.kind == "mle":
            window = batch_history[arm_id]
            cum = accumulate(window) if window else None
            if cum is None or not cum.has_data:
                beliefs.append(PosteriorBelief(arm_id, COLD_MEAN, COLD_VAR))
            else:
                beliefs.append(
                    PosteriorBelief(arm_id, cum.mean, max(cum.se2, VARIANCE_FLOOR))
                )
            continue
        history = shrunk_history[arm_id]
        if not history:
            beliefs.append(PosteriorBelief(arm_id, COLD_MEAN, COLD_VAR))
            continue
        est = smooth(history, variant.scheme)
        beliefs.append(PosteriorBelief(arm_id, est.mean, est.var))
    return beliefs


def sample_allocation_counts(
    means: np.ndarray,
    variances: np.ndarray,
    batch_size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Thompson-sample a batch: one Gaussian draw per arm per unit, argmax wins.

    Vectorized core; returns an int count per arm summing to ``batch_size``.
    """
    k = means.shape[0]
    if batch_size == 0:
        return np.zeros(k, dtype=np.int64)
    if k == 1:
        return np.array([batch_size], dtype=np.int64)
    draws = rng.standard_normal((batch_size, k)) * np.sqrt(variances) + means
    winners = np.argmax(draws, axis=1)  # argmax takes the lowest index on ties
    return np.bincount(winners, minlength=k).astype(np.int64)


def sample_allocation(
    beliefs: Sequence[PosteriorBelief],
    batch_size: int,
    rng: np.random.Generator,
    update_index: int = 0,
) -> AllocationPlan:
    """Allocate ``batch_size`` units across arms by per-unit Thompson sampling."""
    if batch_size < 0:
        raise ValueError(f"batch_size must be >= 0, got {batch_size}")
    means = np.array([b.mean for b in beliefs])
    variances = np.array([b.var for b in beliefs])
    counts = sample_allocation_counts(means, variances, batch_size, rng)
    return AllocationPlan(update_index, tuple(int(c) for c in counts))
