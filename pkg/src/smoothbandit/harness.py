"""Experiment execution: seeded trials, persistence, and aggregation.

A trial is one simulated learning run of a (scenario, variant, seed) triple;
an experiment runs ``trials`` seeds across several estimator variants with
paired seeds, so every variant faces the same true rewards and delays in
trial t. Trials are the unit of parallelism. Results stream to a per-update
CSV and a per-pair CSV, aggregates land in a summary JSON, and a manifest
records everything needed to reproduce any trial bit-for-bit.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
import yaml

from . import __version__
from .environment import (
    BetaRewardSource,
    EmpiricalDelaySource,
    EmpiricalRewardSource,
    FixedRewardSource,
    PoissonFixedDelaySource,
    PoissonUniformDelaySource,
    ScenarioConfig,
    apply_change_point,
    collect_due,
    generate_responses,
    init_world,
)
from .errors import ConfigurationError
from .estimation import (
    COLD_MEAN,
    COLD_VAR,
    VARIANCE_FLOOR,
    pooled_se2,
    shrink_arrays,
    smooth_arrays,
    weights,
)
from .inference import DecisionRule, decide_matrix, log10_bayes_factors, score_rate_arrays
from .metrics import TrialMetrics, allocation_change, bootstrap_curve
from .metrics import inter_trial_variance as _inter_trial_variance
from .metrics import mse as _mse
from .metrics import regret as _regret
from .metrics import truth_estimate_correlation
from .policy import AllocationPlan, PolicyVariant, sample_allocation_counts

log = logging.getLogger(__name__)

UPDATE_CSV_COLUMNS = (
    "trial", "variant", "update", "arm", "true_reward", "lambda",
    "allocated", "responses_received", "response_sum",
    "mle_mean", "js_mean", "js_var", "smoothed_mean", "smoothed_var", "xi",
    "best_arm_share", "regret_per_update", "mse",
)
PAIR_CSV_COLUMNS = ("trial", "variant", "update", "arm_hi", "arm_lo", "log10_bf", "decided")

UPDATES_CSV = "updates.csv"
PAIRS_CSV = "pairs.csv"
SUMMARY_JSON = "summary.json"
MANIFEST_JSON = "manifest.json"


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = ScenarioConfig()
    variants: tuple[str, ...] = ("mle", "veb", "useb", "dseb")
    trials: int = 500
    base_seed: int = 0
    parallelism: int = 1
    output_dir: str = "out"
    write_update_csv: bool = True
    write_pair_csv: bool = True

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if not self.variants:
            raise ConfigurationError("variants must be non-empty")
        from .policy import VARIANT_KINDS

        for v in self.variants:
            if v not in VARIANT_KINDS:
                raise ConfigurationError(
                    f"unknown variant {v!r}; expected a subset of {VARIANT_KINDS}"
                )
        if len(set(self.variants)) != len(self.variants):
            raise ConfigurationError("variants list contains duplicates")
        if self.parallelism < 1:
            raise ConfigurationError(f"parallelism must be >= 1, got {self.parallelism}")


@dataclass
class RunManifest:
    """Reproducibility record: config echo, versions, seeds, outputs."""

    config: dict
    package_version: str
    numpy_version: str
    python_version: str
    trial_seeds: list[int]
    started_at: str
    finished_at: str
    outputs: dict[str, str]

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def trial_seed(base_seed: int, trial: int) -> int:
    """Stable derived seed for one trial, identical across variants and runs."""
    digest = hashlib.sha256(f"{base_seed}:{trial}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "little")


def run_trial(scenario: ScenarioConfig, variant, seed: int, trial: int = 0) -> TrialMetrics:
    """Execute one learning run and record every evaluation quantity.

    Per update: build beliefs from the active window, Thompson-sample a batch,
    generate delayed responses, permute rewards at the change point if due,
    collect everything delivered, and record metrics and Bayes-factor traces.
    """
    pv = variant if isinstance(variant, PolicyVariant) else PolicyVariant.make(variant, scenario.window)
    world = init_world(scenario, seed)
    k = scenario.arm_count
    n_updates = scenario.updates
    batch_size = scenario.batch_size
    bound = scenario.window
    rule = DecisionRule()

    truth_initial = world.true_rewards()
    order0 = np.argsort(-truth_initial, kind="stable")
    pair_idx = np.array(list(itertools.combinations(range(k), 2)), dtype=np.int64).reshape(-1, 2)
    raw_a, raw_b = pair_idx[:, 0], pair_idx[:, 1]
    a_better = truth_initial[raw_a] >= truth_initial[raw_b]
    pair_hi = np.where(a_better, raw_a, raw_b)
    pair_lo = np.where(a_better, raw_b, raw_a)
    pair_truth_delta = np.abs(truth_initial[raw_a] - truth_initial[raw_b])
    n_pairs = pair_hi.shape[0]

    # prefix sums of delivered responses, for O(K) window statistics
    cum_count = np.zeros((n_updates + 1, k), dtype=np.int64)
    cum_sum = np.zeros((n_updates + 1, k), dtype=np.int64)
    js_mean_hist = np.empty((n_updates, k))
    js_var_hist = np.empty((n_updates, k))
    hist_len = 0

    rec = {
        name: np.empty((n_updates, k))
        for name in ("mle_mean", "js_mean", "js_var", "smoothed_mean", "smoothed_var", "xi")
    }
    alloc_rec = np.zeros((n_updates, k), dtype=np.int64)
    recv_rec = np.zeros((n_updates, k), dtype=np.int64)
    rsum_rec = np.zeros((n_updates, k), dtype=np.int64)
    shares = np.zeros((n_updates, k))
    best_share = np.zeros(n_updates)
    second_third = np.zeros(n_updates)
    regret_series = np.zeros(n_updates)
    mse_series = np.zeros(n_updates)
    pair_bf = np.zeros((n_pairs, n_updates))

    for u in range(1, n_updates + 1):
        # 1. beliefs from the active window (data delivered through u-1)
        if u == 1:
            belief_mean = np.full(k, COLD_MEAN)
            belief_var = np.full(k, COLD_VAR)
            rec["mle_mean"][0] = np.nan
            rec["js_mean"][0] = COLD_MEAN
            rec["js_var"][0] = COLD_VAR
            rec["xi"][0] = 1.0
        else:
            m = u - 1 if bound is None else min(u - 1, bound)
            win_count = cum_count[u - 1] - cum_count[u - 1 - m]
            win_sum = cum_sum[u - 1] - cum_sum[u - 1 - m]
            has_data = win_count > 0
            with np.errstate(invalid="ignore", divide="ignore"):
                means = np.where(has_data, win_sum / win_count, np.nan)
                se2 = np.where(has_data, pooled_se2(win_sum, win_count), np.nan)
            js_mean, js_var, xi, _ = shrink_arrays(means, se2, has_data)
            js_mean_hist[hist_len] = js_mean
            js_var_hist[hist_len] = js_var
            hist_len += 1

            if pv.kind == "mle":
                belief_mean = np.where(has_data, means, COLD_MEAN)
                belief_var = np.where(has_data, np.maximum(se2, VARIANCE_FLOOR), COLD_VAR)
            elif pv.kind == "veb":
                belief_mean, belief_var = js_mean, js_var
            else:
                mh = hist_len if bound is None else min(hist_len, bound)
                w_rev = weights(pv.scheme, mh)[::-1]
                block = slice(hist_len - mh, hist_len)
                belief_mean, belief_var = smooth_arrays(
                    js_mean_hist[block], js_var_hist[block], w_rev
                )
            rec["mle_mean"][u - 1] = means
            rec["js_mean"][u - 1] = js_mean
            rec["js_var"][u - 1] = js_var
            rec["xi"][u - 1] = xi
        rec["smoothed_mean"][u - 1] = belief_mean
        rec["smoothed_var"][u - 1] = belief_var

        # 2. allocate the batch
        counts = sample_allocation_counts(belief_mean, belief_var, batch_size, world.rng)
        plan = AllocationPlan(u, tuple(int(c) for c in counts))
        alloc_rec[u - 1] = counts

        # 3. generate delayed responses
        generate_responses(world, plan)

        # 4. reward change point
        if scenario.change_point == u:
            apply_change_point(world)

        # 5. collect everything due this update
        delivered = collect_due(world)
        recv = np.array([b.response_count for b in delivered], dtype=np.int64)
        rsum = np.array([b.response_sum for b in delivered], dtype=np.int64)
        cum_count[u] = cum_count[u - 1] + recv
        cum_sum[u] = cum_sum[u - 1] + rsum
        recv_rec[u - 1] = recv
        rsum_rec[u - 1] = rsum

        # 6. metrics and evidence against the rewards currently in force
        truth = world.true_rewards()
        if batch_size > 0:
            shares[u - 1] = counts / batch_size
        order = np.argsort(-truth, kind="stable")
        best_share[u - 1] = shares[u - 1, order[0]]
        second_third[u - 1] = shares[u - 1, order[1:3]].sum() if k >= 2 else 0.0
        regret_series[u - 1] = _regret(plan, truth)
        mse_series[u - 1] = _mse(belief_mean, truth)
        if n_pairs:
            d = np.abs(belief_mean[pair_hi] - belief_mean[pair_lo])
            var_d = belief_var[pair_hi] + belief_var[pair_lo]
            pair_bf[:, u - 1] = log10_bayes_factors(d, var_d, scenario.mde)

    decided_at = decide_matrix(pair_bf, rule) if n_pairs else np.empty(0, dtype=np.int64)
    truth_final = world.true_rewards()
    lambdas = None
    if all(arm.delay_lambda is not None for arm in world.arms):
        lambdas = np.array([arm.delay_lambda for arm in world.arms])

    return TrialMetrics(
        trial=trial,
        variant=pv.kind,
        seed=seed,
        updates=n_updates,
        arm_count=k,
        true_rewards_initial=truth_initial,
        true_rewards_final=truth_final,
        delay_lambdas=lambdas,
        change_update=scenario.change_point,
        change_permutation=world.applied_permutation,
        effect_size_best_next=float(
            truth_initial[order0[0]] - truth_initial[order0[1]]
        )
        if k >= 2
        else 0.0,
        truth_variance=float(np.var(truth_initial)),
        shares=shares,
        best_share=best_share,
        second_third_share=second_third,
        regret_per_update=regret_series,
        mse_per_update=mse_series,
        allocated=alloc_rec,
        responses_received=recv_rec,
        response_sum=rsum_rec,
        mle_mean=rec["mle_mean"],
        js_mean=rec["js_mean"],
        js_var=rec["js_var"],
        smoothed_mean=rec["smoothed_mean"],
        smoothed_var=rec["smoothed_var"],
        xi=rec["xi"],
        pair_hi=pair_hi,
        pair_lo=pair_lo,
        pair_truth_delta=pair_truth_delta,
        pair_log10_bf=pair_bf,
        pair_decided_at=decided_at,
    )


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def update_rows(tm: TrialMetrics) -> Iterable[str]:
    """CSV lines (no header) for one trial in the per-update schema."""
    change = tm.change_update
    for u in range(1, tm.updates + 1):
        truth = (
            tm.true_rewards_final
            if change is not None and u >= change
            else tm.true_rewards_initial
        )
        u_i = u - 1
        prefix = f"{tm.trial},{tm.variant},{u}"
        suffix = (
            f"{_fmt(tm.best_share[u_i])},{_fmt(tm.regret_per_update[u_i])},"
            f"{_fmt(tm.mse_per_update[u_i])}"
        )
        for arm in range(tm.arm_count):
            lam = tm.delay_lambdas[arm] if tm.delay_lambdas is not None else float("nan")
            yield (
                f"{prefix},{arm},{_fmt(truth[arm])},{_fmt(lam)},"
                f"{tm.allocated[u_i, arm]},{tm.responses_received[u_i, arm]},"
                f"{tm.response_sum[u_i, arm]},"
                f"{_fmt(tm.mle_mean[u_i, arm])},{_fmt(tm.js_mean[u_i, arm])},"
                f"{_fmt(tm.js_var[u_i, arm])},{_fmt(tm.smoothed_mean[u_i, arm])},"
                f"{_fmt(tm.smoothed_var[u_i, arm])},{_fmt(tm.xi[u_i, arm])},"
                f"{suffix}"
            )


def pair_rows(tm: TrialMetrics) -> Iterable[str]:
    """CSV lines (no header) for one trial in the per-pair schema."""
    for p in range(tm.pair_hi.shape[0]):
        decided_at = int(tm.pair_decided_at[p])
        head = f"{tm.trial},{tm.variant},"
        tail = f",{tm.pair_hi[p]},{tm.pair_lo[p]},"
        for u in range(1, tm.updates + 1):
            decided = 1 if 0 < decided_at <= u else 0
            yield f"{head}{u}{tail}{_fmt(tm.pair_log10_bf[p, u - 1])},{decided}"


def _run_task(args) -> TrialMetrics:
    scenario, kind, trial, seed = args
    return run_trial(scenario, kind, seed, trial=trial)


def _task_results(config: ExperimentConfig, tasks: list) -> Iterable[TrialMetrics]:
    if config.parallelism == 1:
        for task in tasks:
            yield _run_task(task)
        return
    workers = config.parallelism
    chunk = max(1, len(tasks) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_run_task, tasks, chunksize=chunk)


class _VariantAggregate:
    """Across-trial accumulators for one variant."""

    def __init__(self) -> None:
        self.best_share: list[np.ndarray] = []
        self.second_third: list[np.ndarray] = []
        self.regret: list[np.ndarray] = []
        self.mse: list[np.ndarray] = []
        self.decided: list[np.ndarray] = []
        self.truth_delta: list[np.ndarray] = []
        self.truth_variance: list[float] = []
        self.estimate_variance: list[float] = []

    def add(self, tm: TrialMetrics) -> None:
        self.best_share.append(tm.best_share)
        self.second_third.append(tm.second_third_share)
        self.regret.append(tm.regret_per_update)
        self.mse.append(tm.mse_per_update)
        self.decided.append(tm.pair_decided_at > 0)
        self.truth_delta.append(tm.pair_truth_delta)
        self.truth_variance.append(tm.truth_variance)
        self.estimate_variance.append(tm.estimated_reward_variance_final)

    def summarize(self, mde: float, ci_seed: int) -> dict:
        best = np.vstack(self.best_share)
        mse_mat = np.vstack(self.mse)
        regret_mat = np.vstack(self.regret)
        second_third = np.vstack(self.second_third)
        n_trials, n_updates = best.shape

        out: dict = {
            "median_best_share": np.median(best, axis=0).tolist(),
            "mean_best_share": best.mean(axis=0).tolist(),
            "mean_second_third_share": second_third.mean(axis=0).tolist(),
            "mean_mse": mse_mat.mean(axis=0).tolist(),
            "mean_regret_per_update": regret_mat.mean(axis=0).tolist(),
            "cumulative_regret_curve": regret_mat.cumsum(axis=1).mean(axis=0).tolist(),
            "mean_cumulative_regret": float(regret_mat.sum(axis=1).mean()),
        }
        if n_updates >= 2:
            deltas = np.abs(np.diff(best, axis=1))
            mean_curve, lo, hi = bootstrap_curve(deltas, seed=ci_seed)
            out["allocation_change"] = {
                "mean": mean_curve.tolist(),
                "ci_lo": lo.tolist(),
                "ci_hi": hi.tolist(),
            }
            out["allocation_change_peak"] = float(mean_curve.max())
        if n_trials >= 2:
            out["final_mse_intertrial_variance"] = _inter_trial_variance(mse_mat[:, -1])
        decided = np.concatenate(self.decided) if self.decided else np.empty(0, bool)
        truth_delta = np.concatenate(self.truth_delta) if self.truth_delta else np.empty(0)
        tpr, fpr = (None, None)
        if decided.size:
            tpr, fpr = score_rate_arrays(decided, truth_delta, mde)
        out["tpr"] = tpr
        out["fpr"] = fpr
        out["decided_fraction"] = float(decided.mean()) if decided.size else None
        if n_trials >= 3:
            out["truth_estimate_correlation"] = truth_estimate_correlation(
                self.truth_variance, self.estimate_variance
            )
        return out


def run_experiment(config: ExperimentConfig) -> tuple[RunManifest, dict]:
    """Run trials x variants with paired seeds; persist CSVs, summary, manifest.

    Returns the manifest and the summary dict. Output content is a pure
    function of the config: the task list is processed in a fixed order no
    matter how many workers execute it.
    """
    out_dir = Path(config.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out_dir} is not writable: {exc}") from exc

    started_at = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    seeds = [trial_seed(config.base_seed, t) for t in range(config.trials)]
    tasks = [
        (config.scenario, kind, t, seeds[t])
        for t in range(config.trials)
        for kind in config.variants
    ]
    log.info(
        "running %d trials x %d variants (%d tasks) with parallelism %d",
        config.trials, len(config.variants), len(tasks), config.parallelism,
    )

    aggregates = {kind: _VariantAggregate() for kind in config.variants}
    outputs: dict[str, str] = {}
    update_file = pair_file = None
    if config.write_update_csv:
        update_file = (out_dir / UPDATES_CSV).open("w", newline="")
        update_file.write(",".join(UPDATE_CSV_COLUMNS) + "\n")
        outputs["updates_csv"] = UPDATES_CSV
    if config.write_pair_csv:
        pair_file = (out_dir / PAIRS_CSV).open("w", newline="")
        pair_file.write(",".join(PAIR_CSV_COLUMNS) + "\n")
        outputs["pairs_csv"] = PAIRS_CSV

    try:
        for tm in _task_results(config, tasks):
            aggregates[tm.variant].add(tm)
            if update_file is not None:
                update_file.write("\n".join(update_rows(tm)) + "\n")
            if pair_file is not None and tm.pair_hi.size:
                pair_file.write("\n".join(pair_rows(tm)) + "\n")
    finally:
        if update_file is not None:
            update_file.close()
        if pair_file is not None:
            pair_file.close()

    mde = config.scenario.mde
    all_deltas = np.concatenate(
        [np.concatenate(agg.truth_delta) for agg in aggregates.values()]
    )
    summary = {
        "config": config_to_dict(config),
        "n_trials": config.trials,
        "updates": config.scenario.updates,
        "mde": mde,
        "true_effect_fraction_ge_mde": float((all_deltas >= mde).mean()),
        "per_variant": {
            kind: aggregates[kind].summarize(mde, ci_seed=trial_seed(config.base_seed, -1))
            for kind in config.variants
        },
    }
    summary_path = out_dir / SUMMARY_JSON
    summary_path.write_text(json.dumps(summary, indent=2))
    outputs["summary_json"] = SUMMARY_JSON

    manifest = RunManifest(
        config=config_to_dict(config),
        package_version=__version__,
        numpy_version=np.__version__,
        python_version=platform.python_version(),
        trial_seeds=seeds,
        started_at=started_at,
        finished_at=time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        outputs=outputs,
    )
    (out_dir / MANIFEST_JSON).write_text(manifest.to_json())
    return manifest, summary


def replay_trial(manifest: RunManifest, trial: int, out_dir: str | Path) -> list[Path]:
    """Re-run one trial from a manifest and write its CSV rows.

    The emitted rows are byte-identical to the original experiment's rows for
    that trial.
    """
    config = config_from_dict(manifest.config)
    if not 0 <= trial < config.trials:
        raise ConfigurationError(
            f"trial {trial} out of range; manifest covers 0..{config.trials - 1}"
        )
    seed = manifest.trial_seeds[trial]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    update_path = out / f"updates_trial{trial}.csv"
    pair_path = out / f"pairs_trial{trial}.csv"
    with update_path.open("w", newline="") as uf, pair_path.open("w", newline="") as pf:
        uf.write(",".join(UPDATE_CSV_COLUMNS) + "\n")
        pf.write(",".join(PAIR_CSV_COLUMNS) + "\n")
        for kind in config.variants:
            tm = run_trial(config.scenario, kind, seed, trial=trial)
            uf.write("\n".join(update_rows(tm)) + "\n")
            if tm.pair_hi.size:
                pf.write("\n".join(pair_rows(tm)) + "\n")
    return [update_path, pair_path]


# ---------------------------------------------------------------------------
# configuration (de)serialization


def _reward_source_to_dict(src) -> dict:
    if isinstance(src, BetaRewardSource):
        return {"kind": "beta", "alpha": src.alpha, "beta": src.beta}
    if isinstance(src, FixedRewardSource):
        return {"kind": "fixed", "values": list(src.values)}
    if isinstance(src, EmpiricalRewardSource):
        return {"kind": "empirical", "path": src.path}
    raise ConfigurationError(f"unknown reward source {src!r}")


def _delay_source_to_dict(src) -> dict:
    if isinstance(src, PoissonUniformDelaySource):
        return {"kind": "poisson_uniform", "lam_min": src.lam_min, "lam_max": src.lam_max}
    if isinstance(src, PoissonFixedDelaySource):
        return {"kind": "poisson_fixed", "lam": src.lam}
    if isinstance(src, EmpiricalDelaySource):
        return {"kind": "empirical", "path": src.path}
    raise ConfigurationError(f"unknown delay source {src!r}")


def _check_keys(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigurationError(f"unknown {where} keys: {sorted(unknown)}")


def _reward_source_from_dict(obj) -> object:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigurationError(f"reward_source must be a mapping with a 'kind': {obj!r}")
    kind = obj["kind"]
    if kind == "beta":
        _check_keys(obj, {"kind", "alpha", "beta"}, "reward_source")
        return BetaRewardSource(float(obj.get("alpha", 3.0)), float(obj.get("beta", 80.0)))
    if kind == "fixed":
        _check_keys(obj, {"kind", "values"}, "reward_source")
        return FixedRewardSource(tuple(float(v) for v in obj["values"]))
    if kind == "empirical":
        _check_keys(obj, {"kind", "path"}, "reward_source")
        return EmpiricalRewardSource(str(obj["path"]))
    raise ConfigurationError(f"unknown reward_source kind {kind!r}")


def _delay_source_from_dict(obj) -> object:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigurationError(f"delay_source must be a mapping with a 'kind': {obj!r}")
    kind = obj["kind"]
    if kind == "poisson_uniform":
        _check_keys(obj, {"kind", "lam_min", "lam_max"}, "delay_source")
        return PoissonUniformDelaySource(int(obj.get("lam_min", 1)), int(obj.get("lam_max", 5)))
    if kind == "poisson_fixed":
        _check_keys(obj, {"kind", "lam"}, "delay_source")
        return PoissonFixedDelaySource(float(obj["lam"]))
    if kind == "empirical":
        _check_keys(obj, {"kind", "path"}, "delay_source")
        return EmpiricalDelaySource(str(obj["path"]))
    raise ConfigurationError(f"unknown delay_source kind {kind!r}")


def scenario_to_dict(scenario: ScenarioConfig) -> dict:
    return {
        "arm_count": scenario.arm_count,
        "updates": scenario.updates,
        "batch_size": scenario.batch_size,
        "reward_source": _reward_source_to_dict(scenario.reward_source),
        "delay_source": _delay_source_to_dict(scenario.delay_source),
        "change_point": scenario.change_point,
        "window": scenario.window,
        "mde": scenario.mde,
        "update_interval": scenario.update_interval,
    }


def scenario_from_dict(obj: dict) -> ScenarioConfig:
    _check_keys(
        obj,
        {
            "arm_count", "updates", "batch_size", "reward_source", "delay_source",
            "change_point", "window", "mde", "update_interval",
        },
        "scenario",
    )
    kwargs: dict = {}
    for key in ("arm_count", "updates", "batch_size", "change_point", "window", "update_interval"):
        if key in obj and obj[key] is not None:
            kwargs[key] = int(obj[key])
        elif key in obj:
            kwargs[key] = None
    if "mde" in obj:
        kwargs["mde"] = float(obj["mde"])
    if "reward_source" in obj:
        kwargs["reward_source"] = _reward_source_from_dict(obj["reward_source"])
    if "delay_source" in obj:
        kwargs["delay_source"] = _delay_source_from_dict(obj["delay_source"])
    return ScenarioConfig(**kwargs)


def config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "scenario": scenario_to_dict(config.scenario),
        "variants": list(config.variants),
        "trials": config.trials,
        "base_seed": config.base_seed,
        "parallelism": config.parallelism,
        "output": str(config.output_dir),
        "write_update_csv": config.write_update_csv,
        "write_pair_csv": config.write_pair_csv,
    }


def config_from_dict(obj: dict) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigurationError(f"experiment config must be a mapping, got {type(obj).__name__}")
    _check_keys(
        obj,
        {
            "scenario", "variants", "trials", "base_seed", "parallelism", "output",
            "write_update_csv", "write_pair_csv",
        },
        "experiment",
    )
    kwargs: dict = {}
    if "scenario" in obj:
        kwargs["scenario"] = scenario_from_dict(obj["scenario"] or {})
    if "variants" in obj:
        kwargs["variants"] = tuple(str(v) for v in obj["variants"])
    for key, cast in (("trials", int), ("base_seed", int), ("parallelism", int)):
        if key in obj:
            kwargs[key] = cast(obj[key])
    if "output" in obj:
        kwargs["output_dir"] = str(obj["output"])
    for key in ("write_update_csv", "write_pair_csv"):
        if key in obj:
            kwargs[key] = bool(obj[key])
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a YAML experiment config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        obj = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config file {path} is not valid YAML: {exc}") from exc
    if obj is None:
        obj = {}
    return config_from_dict(obj)
