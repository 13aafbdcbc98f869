"""Experiment orchestration: per-seed trials, reports and the lower-bound value checks.

Trials are independent and run in a process pool when more than one worker is
configured. Every output file is written by the parent after the results are
sorted by seed, so the contents do not depend on the worker count.
"""

from __future__ import annotations

import asyncio
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd
import structlog

from persuasionlab.environment import Environment
from persuasionlab.errors import TrialAbortedError
from persuasionlab.exactnum import ZERO, format_rational
from persuasionlab.generators import gen_hardness1, gen_hardness2_known, gen_hardness3, gen_random_instance
from persuasionlab.geometry import enumerate_vertices
from persuasionlab.learner import run_regret
from persuasionlab.models import ExperimentConfig, ExperimentMode, InstanceKind, TrialStatus, TrialSummary
from persuasionlab.oracle import ActionOracle
from persuasionlab.pac import PacConfig, compute_threshold, run_pac, run_pac_known_prior
from persuasionlab.persuasion import (
    Instance,
    best_response_region,
    chosen_action,
    compute_opt,
    load_instance,
    sender_expected_utility,
    true_hyperplanes,
)
from persuasionlab.regions import SearchSpace, find_polytopes

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from persuasionlab.learner import RegretTrace
    from persuasionlab.models import InstanceSource

GEOMETRY_ZETA = Fraction(1, 50)
LEARNER_STREAM = 1
Z_95 = 1.959963984540054

logger = structlog.get_logger()


def load_instance_from(source: InstanceSource, seed: int) -> Instance:
    """Materialize the instance a run is configured with; random instances default to the trial seed."""
    match source.kind:
        case InstanceKind.FILE:
            assert source.path is not None
            return load_instance(source.path)
        case InstanceKind.RANDOM:
            assert source.d is not None and source.n is not None
            return gen_random_instance(source.d, source.n, source.bit_cap, seed if source.seed is None else source.seed)
        case InstanceKind.HARDNESS1:
            assert source.d is not None and source.p is not None
            return gen_hardness1(source.d, source.p)
        case InstanceKind.HARDNESS3:
            assert source.epsilon is not None
            return gen_hardness3(source.which, source.epsilon)
        case InstanceKind.HARDNESS2_KNOWN:
            assert source.gamma is not None
            return gen_hardness2_known(source.gamma, source.which)
    raise ValueError(f"unknown instance kind {source.kind}")


@dataclass
class TrialResult:
    """Everything one trial hands back to the parent process."""

    summary: TrialSummary
    trace: RegretTrace | None = None
    environment: Environment | None = None


def _learner_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, LEARNER_STREAM])


def _regret_trial(config: ExperimentConfig, instance: Instance, seed: int) -> TrialResult:
    assert config.rounds is not None
    env = Environment(instance, seed, config.oracle_mode, horizon=config.rounds)
    opt, _ = compute_opt(instance)
    trace = run_regret(
        env,
        config.rounds,
        config.learner,
        _learner_rng(seed),
        partial(sender_expected_utility, instance),
        opt,
    )
    regret = trace.regret
    summary = TrialSummary(
        seed=seed,
        mode=config.mode,
        status=TrialStatus.ABORTED if trace.abort_reason else TrialStatus.COMPLETED,
        abort_reason=trace.abort_reason,
        rounds_used=trace.rounds,
        epsilon=trace.epsilon,
        opt=opt,
        achieved=trace.rounds * opt - regret,
        regret=regret,
        regret_float=float(regret),
        error=trace.abort_detail,
    )
    return TrialResult(summary=summary, trace=trace, environment=env)


def _pac_trial(config: ExperimentConfig, instance: Instance, seed: int) -> TrialResult:
    assert config.gamma is not None and config.eta is not None
    env = Environment(instance, seed, config.oracle_mode)
    cfg = PacConfig(config.gamma, config.eta)
    if config.mode is ExperimentMode.PAC_KNOWN:
        outcome = run_pac_known_prior(env, instance.prior, cfg, config.learner, _learner_rng(seed))
    else:
        outcome = run_pac(env, cfg, config.learner, _learner_rng(seed))
    opt, _ = compute_opt(instance)
    achieved = gap = None
    success = False
    if outcome.scheme is not None:
        achieved = sender_expected_utility(instance, outcome.scheme)
        gap = opt - achieved
        success = achieved >= opt - cfg.gamma
    summary = TrialSummary(
        seed=seed,
        mode=config.mode,
        status=TrialStatus.ABORTED if outcome.aborted else TrialStatus.COMPLETED,
        abort_reason=outcome.abort_reason,
        rounds_used=outcome.rounds_used,
        epsilon=outcome.epsilon,
        opt=opt,
        achieved=achieved,
        gamma=cfg.gamma,
        eta=cfg.eta,
        gap=gap,
        success=success,
        error=outcome.abort_detail,
    )
    return TrialResult(summary=summary, environment=env)


def _geometry_trial(config: ExperimentConfig, instance: Instance, seed: int) -> TrialResult:
    d, n = instance.d, instance.n
    learner = config.learner
    epsilon = learner.epsilon or compute_threshold(Fraction(1, 6 * d))
    zeta = config.eta or GEOMETRY_ZETA
    env = Environment(instance, seed, config.oracle_mode)
    space = SearchSpace.from_prior(instance.prior, epsilon)
    budget = learner.oracle_budget or learner.profile.oracle_budget(epsilon, zeta, d, n)
    summary = TrialSummary(seed=seed, mode=config.mode, status=TrialStatus.COMPLETED, epsilon=epsilon)
    try:
        regions = find_polytopes(ActionOracle(env, budget), space, zeta, learner.profile, _learner_rng(seed), n)
    except TrialAbortedError as exc:
        summary.status = TrialStatus.ABORTED
        summary.abort_reason = exc.reason
        summary.error = exc.detail
        summary.rounds_used = env.t - 1
        return TrialResult(summary=summary, environment=env)
    truth = true_hyperplanes(instance)
    learned = regions.hyperplanes
    exact_regions = all(
        enumerate_vertices(regions.regions[a]) == best_response_region(instance, a, space.polytope).vertices
        for a in regions.closed
    )
    summary.rounds_used = env.t - 1
    summary.hyperplanes_learned = len(learned)
    summary.hyperplanes_exact = sum(1 for h in learned if h in truth)
    summary.regions_exact = exact_regions
    summary.success = exact_regions and summary.hyperplanes_exact == len(learned)
    return TrialResult(summary=summary, environment=env)


def run_trial(config: ExperimentConfig, seed: int) -> TrialResult:
    """Run one seeded trial; unexpected errors become a failed result instead of propagating."""
    with structlog.contextvars.bound_contextvars(seed=seed, mode=str(config.mode)):
        return _run_trial(config, seed)


def _run_trial(config: ExperimentConfig, seed: int) -> TrialResult:
    logger.info("trial started")
    try:
        instance = load_instance_from(config.instance, seed)
        match config.mode:
            case ExperimentMode.REGRET:
                result = _regret_trial(config, instance, seed)
            case ExperimentMode.PAC | ExperimentMode.PAC_KNOWN:
                result = _pac_trial(config, instance, seed)
            case ExperimentMode.GEOMETRY_ONLY:
                result = _geometry_trial(config, instance, seed)
    except Exception as exc:
        logger.exception("trial failed")
        return TrialResult(
            summary=TrialSummary(seed=seed, mode=config.mode, status=TrialStatus.FAILED, error=str(exc)),
        )
    logger.info("trial finished", status=result.summary.status, abort_reason=result.summary.abort_reason)
    return result


# --- reports ---


def trace_frame(trace: RegretTrace) -> pd.DataFrame:
    """Per-round regret trace with exact ``p/q`` columns and a float convenience column."""
    cumulative = trace.cumulative_regret()
    return pd.DataFrame(
        {
            "t": [r.t for r in trace.records],
            "phase": [r.phase for r in trace.records],
            "expected_utility": [format_rational(r.expected_utility) for r in trace.records],
            "realized": [format_rational(r.realized) for r in trace.records],
            "cum_regret": [format_rational(c) for c in cumulative],
            "cum_regret_float": [float(c) for c in cumulative],
        },
        columns=["t", "phase", "expected_utility", "realized", "cum_regret", "cum_regret_float"],
    )


def summary_frame(summaries: Sequence[TrialSummary]) -> pd.DataFrame:
    columns = list(TrialSummary.model_fields)
    return pd.DataFrame([s.model_dump(mode="json") for s in summaries], columns=columns)


def mean_ci(values: Sequence[float]) -> tuple[float, float]:
    """Mean and half-width of the normal 95% interval (0 for a single value)."""
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        return math.nan, math.nan
    if data.size == 1:
        return float(data[0]), 0.0
    return float(data.mean()), float(Z_95 * data.std(ddof=1) / math.sqrt(data.size))


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """Wilson score interval for a binomial rate at 95%."""
    if trials == 0:
        return math.nan, math.nan
    p = successes / trials
    z2 = Z_95**2
    center = (p + z2 / (2 * trials)) / (1 + z2 / trials)
    half = Z_95 * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials**2)) / (1 + z2 / trials)
    return center - half, center + half


def summary_text(config: ExperimentConfig, summaries: Sequence[TrialSummary]) -> str:
    """Human-readable aggregate of a run; every number is recomputable from summary.csv."""
    counts = {status: sum(1 for s in summaries if s.status is status) for status in TrialStatus}
    lines = [
        f"mode: {config.mode}",
        f"trials: {len(summaries)} (completed {counts[TrialStatus.COMPLETED]}, "
        f"aborted {counts[TrialStatus.ABORTED]}, failed {counts[TrialStatus.FAILED]})",
    ]
    reasons = sorted({str(s.abort_reason) for s in summaries if s.abort_reason})
    for reason in reasons:
        lines.append(f"abort {reason}: {sum(1 for s in summaries if str(s.abort_reason) == reason)}")

    if config.mode is ExperimentMode.REGRET:
        finished = [s for s in summaries if s.regret is not None and s.rounds_used]
        regrets = [float(s.regret) for s in finished if s.regret is not None]
        mean, half = mean_ci(regrets)
        lines.append(f"R_T mean: {mean:.6g} +- {half:.6g}")
        mean, half = mean_ci([float(s.regret) / math.sqrt(s.rounds_used) for s in finished if s.regret is not None])
        lines.append(f"R_T/sqrt(T) mean: {mean:.6g} +- {half:.6g}")
        mean, half = mean_ci([float(s.regret) / s.rounds_used for s in finished if s.regret is not None])
        lines.append(f"R_T/T mean: {mean:.6g} +- {half:.6g}")
    elif config.mode in (ExperimentMode.PAC, ExperimentMode.PAC_KNOWN):
        wins = sum(1 for s in summaries if s.success)
        low, high = wilson_interval(wins, len(summaries))
        lines.append(f"success rate: {wins}/{len(summaries)} = {wins / len(summaries):.4f} (95% CI {low:.4f}..{high:.4f})")
        mean, half = mean_ci([s.rounds_used for s in summaries if s.status is TrialStatus.COMPLETED])
        lines.append(f"rounds used mean: {mean:.6g} +- {half:.6g}")
    else:
        exact = sum(1 for s in summaries if s.success)
        lines.append(f"exact recovery: {exact}/{len(summaries)}")
        mean, half = mean_ci([s.rounds_used for s in summaries])
        lines.append(f"rounds used mean: {mean:.6g} +- {half:.6g}")
    return "\n".join(lines) + "\n"


@dataclass
class ExperimentReport:
    """Results sorted by seed and the files written for them."""

    results: list[TrialResult]
    files: list[Path] = field(default_factory=list)

    @property
    def summaries(self) -> list[TrialSummary]:
        return [r.summary for r in self.results]

    @property
    def any_aborted(self) -> bool:
        return any(s.status is not TrialStatus.COMPLETED for s in self.summaries)


def write_reports(config: ExperimentConfig, results: Sequence[TrialResult]) -> list[Path]:
    """Write traces, transcripts and summaries under ``config.out``."""
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for result in results:
        seed = result.summary.seed
        if result.trace is not None:
            path = out / f"trace_seed{seed}.csv"
            trace_frame(result.trace).to_csv(path, index=False)
            files.append(path)
        if config.export_transcripts and result.environment is not None:
            path = out / f"transcript_seed{seed}.csv"
            result.environment.export_transcript(path)
            files.append(path)
    summaries = [r.summary for r in results]
    path = out / "summary.csv"
    summary_frame(summaries).to_csv(path, index=False)
    files.append(path)
    path = out / "summary.txt"
    path.write_text(summary_text(config, summaries))
    files.append(path)
    logger.info("reports written", out=str(out), files=len(files))
    return files


async def run_experiment_async(config: ExperimentConfig) -> ExperimentReport:
    """Run every seed, in parallel processes when ``config.workers`` > 1, then write the reports."""
    workers = min(config.workers or 1, len(config.seeds))
    log = logger.bind(mode=config.mode, seeds=len(config.seeds), workers=workers)
    log.info("experiment started")
    if workers > 1:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(
                await asyncio.gather(*(loop.run_in_executor(pool, run_trial, config, seed) for seed in config.seeds))
            )
    else:
        results = [run_trial(config, seed) for seed in config.seeds]
    results.sort(key=lambda r: r.summary.seed)
    files = write_reports(config, results)
    log.info("experiment finished", aborted=sum(1 for r in results if r.summary.status is not TrialStatus.COMPLETED))
    return ExperimentReport(results=results, files=files)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    return asyncio.run(run_experiment_async(config))


# --- lower-bound value checks ---


@dataclass(frozen=True)
class OracleCheck:
    name: str
    ok: bool
    detail: str = ""


def _grid_slices(steps: int) -> list[tuple[Fraction, Fraction]]:
    return [
        (Fraction(i, steps), Fraction(j, steps))
        for i in range(steps + 1)
        for j in range(steps + 1)
        if i or j
    ]


def _hardness3_expected(x: tuple[Fraction, Fraction]) -> int:
    x1, x2 = x
    if x1 == 0:
        return 3
    if x1 == x2:
        return 2
    return 0 if x1 > x2 else 1


def run_oracle_checks(grid: int = 49) -> list[OracleCheck]:
    """Recompute the values the lower-bound constructions are built around."""
    checks = []

    opt, _ = compute_opt(gen_hardness1(2, (1, 0)))
    checks.append(OracleCheck("hardness1 d=2 OPT = 1/2", opt == Fraction(1, 2), f"got {opt}"))
    opts = {compute_opt(gen_hardness1(4, p))[0] for p in ((1, 1, 0, 0), (1, 0, 1, 0), (0, 1, 0, 1))}
    checks.append(OracleCheck("hardness1 d=4 OPT = 1/2", opts == {Fraction(1, 2)}, f"got {sorted(map(str, opts))}"))

    instance = gen_hardness1(2, (1, 0))
    inducing = [
        x
        for k in range(grid + 1)
        if chosen_action(instance, x := (Fraction(k, grid), 1 - Fraction(k, grid))) == instance.d
    ]
    checks.append(
        OracleCheck("hardness1 only the scaled p posterior induces action d", inducing == [(1, 0)], f"got {inducing}")
    )

    gamma = Fraction(1, 16)
    first, second = gen_hardness2_known(gamma, 1), gen_hardness2_known(gamma, 2)
    opt1, opt2 = compute_opt(first)[0], compute_opt(second)[0]
    checks.append(OracleCheck("hardness2 OPT1 = (1 + 4 gamma)/2", opt1 == (1 + 4 * gamma) / 2, f"got {opt1}"))
    checks.append(OracleCheck("hardness2 OPT2 = 1/2", opt2 == Fraction(1, 2), f"got {opt2}"))
    corner = (Fraction(1), ZERO)
    a1, a2 = chosen_action(first, corner), chosen_action(second, corner)
    checks.append(OracleCheck("hardness2 posterior (1, 0) separates", (a1, a2) == (2, 0), f"got {(a1, a2)}"))

    eps = Fraction(1, 8)
    pair = gen_hardness3(1, eps), gen_hardness3(2, eps)
    mismatches = [
        x
        for x in _grid_slices(grid)
        if {chosen_action(inst, x) for inst in pair} != {_hardness3_expected(x)}
    ]
    checks.append(
        OracleCheck("hardness3 feedback grid", not mismatches, f"{len(mismatches)} mismatches, first {mismatches[:1]}")
    )

    for check in checks:
        (logger.info if check.ok else logger.error)("oracle check", name=check.name, ok=check.ok, detail=check.detail)
    return checks
