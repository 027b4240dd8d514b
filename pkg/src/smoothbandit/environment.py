"""Delayed-feedback bandit world.

Arms carry hidden Bernoulli reward probabilities. Every allocated unit yields
exactly one response, which is held in a delivery buffer for a stochastic
number of updates (per-arm Poisson delay, or draws from an empirical delay
sample) and then surfaces, anonymously aggregated, in some later batch.

Rewards can be permuted once mid-run (piece-wise stationary scenario). In
realistic mode, rewards and delays are resampled from user-supplied one-column
sample files instead of the synthetic Beta/Poisson sources.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .errors import ConfigurationError
from .estimation import BatchStats


@dataclass(frozen=True)
class BetaRewardSource:
    """True rewards drawn i.i.d. from Beta(alpha, beta)."""

    alpha: float = 3.0
    beta: float = 80.0


@dataclass(frozen=True)
class FixedRewardSource:
    """Explicit per-arm reward probabilities, mainly for tests and demos."""

    values: tuple[float, ...]


@dataclass(frozen=True)
class EmpiricalRewardSource:
    """True rewards resampled from a one-column sample file."""

    path: str


@dataclass(frozen=True)
class PoissonUniformDelaySource:
    """Per-arm integer Poisson rate drawn uniformly from {lam_min..lam_max}."""

    lam_min: int = 1
    lam_max: int = 5


@dataclass(frozen=True)
class PoissonFixedDelaySource:
    """Every arm shares one fixed Poisson delay rate."""

    lam: float


@dataclass(frozen=True)
class EmpiricalDelaySource:
    """Per-response delays resampled from a one-column sample file."""

    path: str


RewardSource = Union[BetaRewardSource, FixedRewardSource, EmpiricalRewardSource]
DelaySource = Union[PoissonUniformDelaySource, PoissonFixedDelaySource, EmpiricalDelaySource]


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that defines one simulated learning problem.

    ``window`` is the smoothing/estimation window bound in updates; None means
    the window grows with the run (stationary mode). ``update_interval`` is
    the abstract duration of one update and is fixed at 1.
    """

    arm_count: int = 15
    updates: int = 300
    batch_size: int = 1000
    reward_source: RewardSource = BetaRewardSource()
    delay_source: DelaySource = PoissonUniformDelaySource()
    change_point: int | None = None
    window: int | None = None
    mde: float = 0.01
    update_interval: int = 1

    def __post_init__(self) -> None:
        if self.arm_count < 1:
            raise ConfigurationError(f"arm_count must be >= 1, got {self.arm_count}")
        if self.updates < 1:
            raise ConfigurationError(f"updates must be >= 1, got {self.updates}")
        if self.batch_size < 0:
            raise ConfigurationError(f"batch_size must be >= 0, got {self.batch_size}")
        if self.mde <= 0:
            raise ConfigurationError(f"mde must be > 0, got {self.mde}")
        if self.window is not None and self.window < 1:
            raise ConfigurationError(f"window must be >= 1, got {self.window}")
        if self.update_interval != 1:
            raise ConfigurationError("update_interval is fixed at 1 update")
        if self.change_point is not None and not 2 <= self.change_point <= self.updates:
            raise ConfigurationError(
                f"change_point must lie in [2, updates]; got {self.change_point}"
            )
        if isinstance(self.reward_source, FixedRewardSource):
            values = self.reward_source.values
            if len(values) != self.arm_count:
                raise ConfigurationError(
                    f"fixed rewards list has {len(values)} entries for "
                    f"{self.arm_count} arms"
                )
            if any(not 0.0 <= v <= 1.0 for v in values):
                raise ConfigurationError("fixed rewards must lie in [0, 1]")
        if isinstance(self.delay_source, PoissonFixedDelaySource) and self.delay_source.lam <= 0:
            raise ConfigurationError("poisson_fixed delay rate must be > 0")
        if isinstance(self.delay_source, PoissonUniformDelaySource):
            ds = self.delay_source
            if ds.lam_min < 1 or ds.lam_max < ds.lam_min:
                raise ConfigurationError(
                    f"poisson_uniform range must satisfy 1 <= lam_min <= lam_max; "
                    f"got [{ds.lam_min}, {ds.lam_max}]"
                )


@dataclass(frozen=True)
class ArmSpec:
    """One arm's hidden reward probability and delay rate.

    ``delay_lambda`` is None when delays come from an empirical sample rather
    than a per-arm Poisson law.
    """

    arm_id: int
    true_reward: float
    delay_lambda: float | None

    def __post_init__(self) -> None:
        if not 0.0 <= self.true_reward <= 1.0:
            raise ValueError(f"true_reward must lie in [0, 1], got {self.true_reward}")
        if self.delay_lambda is not None and self.delay_lambda <= 0:
            raise ValueError(f"delay_lambda must be > 0, got {self.delay_lambda}")


@dataclass(frozen=True)
class ResponseRecord:
    """A single unit's buffered response."""

    arm_id: int
    allocated_at: int
    deliver_at: int
    outcome: int

    def __post_init__(self) -> None:
        if self.deliver_at < self.allocated_at:
            raise ValueError("deliver_at precedes allocated_at")
        if self.outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {self.outcome}")


class EmpiricalSampler:
    """Uniform-with-replacement sampler over the values of a sample file."""

    def __init__(self, values: np.ndarray):
        if values.size == 0:
            raise ConfigurationError("empirical sample is empty")
        self.values = values

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.values[rng.integers(0, self.values.size, size=size)]


def load_empirical(path: str | Path, role: str) -> EmpiricalSampler:
    """Load a one-column numeric sample file for ``role`` "reward" or "delay".

    Lines starting with ``#`` are comments; one optional non-numeric header
    line is tolerated. Rewards must lie in [0, 1], delays must be >= 0; a
    violation reports the file and 1-based row number.
    """
    if role not in ("reward", "delay"):
        raise ValueError(f"unknown role {role!r}")
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read sample file {path}: {exc}") from exc
    values = []
    header_seen = False
    for row, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            value = float(text)
        except ValueError:
            if not values and not header_seen:
                header_seen = True
                continue
            raise ConfigurationError(f"{path}: row {row}: not a number: {text!r}") from None
        if role == "reward" and not 0.0 <= value <= 1.0:
            raise ConfigurationError(
                f"{path}: row {row}: reward {value} outside [0, 1]"
            )
        if role == "delay" and value < 0:
            raise ConfigurationError(f"{path}: row {row}: negative delay {value}")
        values.append(value)
    if not values:
        raise ConfigurationError(f"{path}: no numeric values found")
    return EmpiricalSampler(np.asarray(values, dtype=float))


@dataclass
class World:
    """Mutable simulation state for one trial.

    ``buffer`` maps a delivery update to a (K, 2) array of pending response
    counts and response sums per arm. ``pending_permutation`` is drawn at
    initialization so that trials paired by seed see the same reward shuffle
    regardless of the policy driving them.
    """

    arms: list[ArmSpec]
    config: ScenarioConfig
    rng: np.random.Generator
    current_update: int = 1
    buffer: dict[int, np.ndarray] = field(default_factory=dict)
    allocations: dict[int, np.ndarray] = field(default_factory=dict)
    delay_sampler: EmpiricalSampler | None = None
    pending_permutation: tuple[int, ...] | None = None
    applied_permutation: tuple[int, ...] | None = None

    @property
    def arm_count(self) -> int:
        return len(self.arms)

    def true_rewards(self) -> np.ndarray:
        """Current reward probabilities, reflecting any applied change point."""
        return np.array([arm.true_reward for arm in self.arms])

    def deposit(self, records: Iterable[ResponseRecord]) -> None:
        """Insert individual response records into the delivery buffer."""
        for rec in records:
            slot = self.buffer.setdefault(rec.deliver_at, np.zeros((self.arm_count, 2), dtype=np.int64))
            slot[rec.arm_id, 0] += 1
            slot[rec.arm_id, 1] += rec.outcome

    def pending_responses(self) -> int:
        return int(sum(slot[:, 0].sum() for slot in self.buffer.values()))


def init_world(config: ScenarioConfig, seed) -> World:
    """Create a world: draw arm rewards and delays, empty buffer, seeded rng."""
    rng = np.random.default_rng(seed)
    k = config.arm_count

    src = config.reward_source
    if isinstance(src, BetaRewardSource):
        rewards = rng.beta(src.alpha, src.beta, size=k)
    elif isinstance(src, FixedRewardSource):
        rewards = np.asarray(src.values, dtype=float)
    elif isinstance(src, EmpiricalRewardSource):
        rewards = load_empirical(src.path, "reward").draw(rng, k)
    else:
        raise ConfigurationError(f"unknown reward source {src!r}")

    delay_sampler = None
    ds = config.delay_source
    if isinstance(ds, PoissonUniformDelaySource):
        lambdas = rng.integers(ds.lam_min, ds.lam_max + 1, size=k).astype(float)
    elif isinstance(ds, PoissonFixedDelaySource):
        lambdas = np.full(k, float(ds.lam))
    elif isinstance(ds, EmpiricalDelaySource):
        delay_sampler = load_empirical(ds.path, "delay")
        lambdas = None
    else:
        raise ConfigurationError(f"unknown delay source {ds!r}")

    arms = [
        ArmSpec(i, float(rewards[i]), None if lambdas is None else float(lambdas[i]))
        for i in range(k)
    ]
    pending = None
    if config.change_point is not None:
        pending = tuple(int(i) for i in rng.permutation(k))
    return World(
        arms=arms,
        config=config,
        rng=rng,
        delay_sampler=delay_sampler,
        pending_permutation=pending,
    )


def generate_responses(world: World, plan) -> int:
    """Simulate outcomes and delays for a batch; buffer one record per unit.

    Returns the number of responses buffered (always the batch size).
    """
    if plan.update_index != world.current_update:
        raise ValueError(
            f"plan is for update {plan.update_index} but world is at "
            f"{world.current_update}"
        )
    counts = np.asarray(plan.counts, dtype=np.int64)
    if counts.shape[0] != world.arm_count:
        raise ValueError("plan covers a different number of arms")
    world.allocations[world.current_update] = counts.copy()

    rng = world.rng
    total = 0
    for arm in world.arms:
        n = int(counts[arm.arm_id])
        if n == 0:
            continue
        outcomes = (rng.random(n) < arm.true_reward).astype(np.int64)
        if world.delay_sampler is not None:
            delays = np.rint(world.delay_sampler.draw(rng, n)).astype(np.int64)
        else:
            delays = rng.poisson(arm.delay_lambda, size=n)
        deliver = world.current_update + delays
        uniq, inverse = np.unique(deliver, return_inverse=True)
        per_slot_count = np.bincount(inverse)
        per_slot_sum = np.bincount(inverse, weights=outcomes).astype(np.int64)
        for t, cnt, s in zip(uniq, per_slot_count, per_slot_sum):
            slot = world.buffer.setdefault(
                int(t), np.zeros((world.arm_count, 2), dtype=np.int64)
            )
            slot[arm.arm_id, 0] += int(cnt)
            slot[arm.arm_id, 1] += int(s)
        total += n
    return total


def collect_due(world: World) -> list[BatchStats]:
    """Drain all responses due by the current update and advance the clock.

    Returns one BatchStats per arm for the update that just closed; arms with
    nothing delivered get zero counts.
    """
    u = world.current_update
    delivered = np.zeros((world.arm_count, 2), dtype=np.int64)
    for t in sorted(k for k in world.buffer if k <= u):
        delivered += world.buffer.pop(t)
    allocated = world.allocations.pop(u, np.zeros(world.arm_count, dtype=np.int64))
    world.current_update = u + 1
    return [
        BatchStats(
            arm_id=arm,
            update_index=u,
            allocated=int(allocated[arm]),
            response_sum=int(delivered[arm, 1]),
            response_count=int(delivered[arm, 0]),
        )
        for arm in range(world.arm_count)
    ]


def apply_change_point(world: World) -> tuple[int, ...]:
    """Permute arm rewards with the permutation drawn at initialization.

    Delay rates stay attached to their arms. Returns the permutation, where
    entry ``i`` names the arm whose old reward arm ``i`` now carries.
    """
    if world.pending_permutation is None:
        raise ValueError("no change point pending for this world")
    if world.config.change_point != world.current_update:
        raise ValueError(
            f"change point is due at update {world.config.change_point}, "
            f"world is at {world.current_update}"
        )
    perm = world.pending_permutation
    old = [arm.true_reward for arm in world.arms]
    world.arms = [
        ArmSpec(arm.arm_id, old[perm[arm.arm_id]], arm.delay_lambda)
        for arm in world.arms
    ]
    world.pending_permutation = None
    world.applied_permutation = perm
    return perm
