"""The explore-then-commit no-regret learner.

Phase 1 estimates the prior with uninformative commitments, phase 2 learns the
receiver's best-response regions through the action oracle, and phase 3
re-solves the signaling program against the running prior estimate until the
horizon is reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING

import structlog

from persuasionlab.errors import AbortReason, HorizonReachedError, TrialAbortedError
from persuasionlab.exactnum import ZERO, ceil_sqrt
from persuasionlab.lp import Constraint, LinearProgram, Relation, solve
from persuasionlab.oracle import ActionOracle
from persuasionlab.persuasion import SignalingScheme
from persuasionlab.regions import SearchSpace, find_polytopes
from persuasionlab.signaling import compute_signaling

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    import numpy as np

    from persuasionlab.environment import SenderChannel
    from persuasionlab.geometry import Halfspace
    from persuasionlab.models import LearnerConfig

logger = structlog.get_logger()


def build_search_space(channel: SenderChannel, t1: int, epsilon: Fraction) -> SearchSpace:
    """Commit to the uninformative scheme for ``t1`` rounds and build X_eps from the state counts."""
    d = channel.num_states
    if not ZERO < epsilon < Fraction(1, 6 * d):
        raise ValueError(f"epsilon {epsilon} must lie in (0, 1/{6 * d})")
    if t1 < 1:
        raise ValueError("phase 1 needs at least one round")
    scheme = SignalingScheme.uninformative(d)
    for _ in range(t1):
        channel.commit_and_play(scheme)
    mu_hat = channel.prior_estimate().estimate
    space = SearchSpace.from_estimate(mu_hat, epsilon)
    logger.info(
        "search space built",
        rounds=t1,
        mu_hat=[str(m) for m in mu_hat],
        theta_tilde=list(space.theta_tilde),
    )
    return space


@dataclass(frozen=True)
class SearchSpaceCheck:
    """Clean-event properties of a phase-1 outcome against the true prior."""

    min_inside: Fraction
    max_outside: Fraction | None
    max_estimate_error: Fraction
    inside_ok: bool
    outside_ok: bool
    estimate_ok: bool

    @property
    def holds(self) -> bool:
        return self.inside_ok and self.outside_ok and self.estimate_ok


def _extreme_prior_mass(prior: Sequence[Fraction], halfspace: Halfspace, *, inside: bool) -> Fraction | None:
    d = len(prior)
    sign = -1 if inside else 1
    side = halfspace if inside else halfspace.flipped()
    rows = (
        Constraint(tuple([Fraction(1)] * d), Relation.EQ, Fraction(1)),
        Constraint(side.coeffs, Relation.GE, side.offset),
    )
    solution = solve(LinearProgram(objective=tuple(sign * m for m in prior), rows=rows))
    if solution.value is None:
        return None
    return sign * solution.value


def check_search_space(space: SearchSpace, prior: Sequence[Fraction], *, pac: bool = False) -> SearchSpaceCheck:
    """Exact LP check of the phase-1 clean event.

    Inside X_eps every slice must carry prior mass at least eps; outside it the
    mass is at most 10 eps (6 eps and a per-state estimate error of at most eps
    under the PAC sample size).
    """
    eps = space.epsilon
    min_inside = _extreme_prior_mass(prior, space.halfspace, inside=True)
    max_outside = _extreme_prior_mass(prior, space.halfspace, inside=False)
    error = max(abs(m - p) for m, p in zip(space.mu_hat, prior, strict=True))
    assert min_inside is not None
    outside_bound = 6 * eps if pac else 10 * eps
    return SearchSpaceCheck(
        min_inside=min_inside,
        max_outside=max_outside,
        max_estimate_error=error,
        inside_ok=min_inside >= eps,
        outside_ok=max_outside is None or max_outside <= outside_bound,
        estimate_ok=not pac or error <= eps,
    )


def default_epsilon(b_bound: int, n: int, d: int, horizon: int) -> Fraction:
    """min(ceil(sqrt(B n) d^4) / ceil(sqrt(T)), 1/(6d + 1))."""
    return min(Fraction(ceil_sqrt(b_bound * n * d**8), ceil_sqrt(horizon)), Fraction(1, 6 * d + 1))


def phase1_rounds(epsilon: Fraction, d: int, delta: Fraction) -> int:
    """ceil(12/eps * ln(2d/delta))."""
    return math.ceil(12 / epsilon * math.log(2 * d / delta))


@dataclass(frozen=True)
class RoundRecord:
    t: int
    phase: int
    expected_utility: Fraction
    realized: Fraction


@dataclass(frozen=True)
class RegretTrace:
    """Per-round records of one regret run; regret uses expected, not realized, utility."""

    opt: Fraction
    records: tuple[RoundRecord, ...]
    epsilon: Fraction
    t1: int
    phase_starts: dict[int, int] = field(default_factory=dict)
    abort_reason: AbortReason | None = None
    abort_detail: str = ""

    def cumulative_regret(self) -> list[Fraction]:
        """R_t = t OPT - sum of expected utilities up to round t."""
        regrets = []
        achieved = ZERO
        for r in self.records:
            achieved += r.expected_utility
            regrets.append(r.t * self.opt - achieved)
        return regrets

    @property
    def regret(self) -> Fraction:
        return len(self.records) * self.opt - sum((r.expected_utility for r in self.records), ZERO)

    @property
    def rounds(self) -> int:
        return len(self.records)


def _phase_of(t: int, phase_starts: dict[int, int]) -> int:
    phase = 1
    for p, start in sorted(phase_starts.items()):
        if t >= start:
            phase = p
    return phase


def _trace(
    channel: SenderChannel,
    evaluate: Callable[[SignalingScheme], Fraction],
    opt: Fraction,
    epsilon: Fraction,
    t1: int,
    phase_starts: dict[int, int],
    abort: TrialAbortedError | None,
) -> RegretTrace:
    cache: dict[SignalingScheme, Fraction] = {}
    records = []
    for outcome, scheme in zip(channel.transcript, channel.commitments, strict=True):
        if scheme not in cache:
            cache[scheme] = evaluate(scheme)
        records.append(
            RoundRecord(
                t=outcome.t,
                phase=_phase_of(outcome.t, phase_starts),
                expected_utility=cache[scheme],
                realized=outcome.sender_payoff,
            )
        )
    return RegretTrace(
        opt=opt,
        records=tuple(records),
        epsilon=epsilon,
        t1=t1,
        phase_starts=dict(phase_starts),
        abort_reason=abort.reason if abort else None,
        abort_detail=abort.detail if abort else "",
    )


def run_regret(
    channel: SenderChannel,
    horizon: int,
    config: LearnerConfig,
    rng: np.random.Generator,
    evaluate: Callable[[SignalingScheme], Fraction],
    opt: Fraction,
) -> RegretTrace:
    """Play ``horizon`` rounds with the three-phase learner.

    ``evaluate`` and ``opt`` come from the harness and are only used to build
    the trace after play; the learner itself never sees the instance.
    """
    d, n = channel.num_states, channel.num_actions
    profile = config.profile
    delta = zeta = Fraction(1, horizon)
    epsilon = config.epsilon or default_epsilon(profile.b_bound, n, d, horizon)
    if not epsilon < Fraction(1, 6 * d):
        raise ValueError(f"epsilon {epsilon} must be below 1/{6 * d}")
    t1 = phase1_rounds(epsilon, d, delta)
    log = logger.bind(horizon=horizon, epsilon=str(epsilon), t1=t1)
    phase_starts = {1: 1}
    abort: TrialAbortedError | None = None

    try:
        space = build_search_space(channel, t1, epsilon)
        phase_starts[2] = channel.t
        budget = config.oracle_budget or profile.oracle_budget(epsilon, zeta, d, n)
        oracle = ActionOracle(channel, budget)
        regions = find_polytopes(oracle, space, zeta, profile, rng, n)
        phase_starts[3] = channel.t
        log.info("phase completed", phase=2, rounds=oracle.rounds, queries=oracle.queries)

        scheme: SignalingScheme | None = None
        played = 0
        while channel.t <= horizon:
            if scheme is None or played % config.resolve_stride == 0:
                mu_hat = channel.prior_estimate().estimate
                scheme = compute_signaling(regions, space, mu_hat, channel.sender_utility)
            channel.commit_and_play(scheme)
            played += 1
    except HorizonReachedError:
        log.info("horizon reached", t=channel.t)
    except TrialAbortedError as exc:
        abort = exc
        log.warning("trial aborted", abort_reason=exc.reason, detail=exc.detail, t=channel.t)

    trace = _trace(channel, evaluate, opt, epsilon, t1, phase_starts, abort)
    log.info("regret run finished", rounds=trace.rounds, regret=str(trace.regret))
    return trace
