"""Tests for the explore-then-commit regret learner."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import partial
from unittest.mock import patch

import numpy as np
import pytest

from persuasionlab.environment import Environment, OracleMode
from persuasionlab.errors import AbortReason, TrialAbortedError
from persuasionlab.generators import gen_hardness2_known
from persuasionlab.learner import (
    RegretTrace,
    RoundRecord,
    build_search_space,
    check_search_space,
    default_epsilon,
    phase1_rounds,
    run_regret,
)
from persuasionlab.models import LearnerConfig
from persuasionlab.persuasion import Instance, sender_expected_utility
from persuasionlab.regions import SearchSpace

F = Fraction


@pytest.fixture
def instance() -> Instance:
    """Two states, three actions, OPT 5/8, uninformative value 1/2."""
    return gen_hardness2_known(F(1, 16), 1)


def test_default_epsilon() -> None:
    """The default epsilon should shrink with the horizon and be capped below 1/(6d)."""
    assert default_epsilon(16, 3, 2, 10**6) == F(1, 13)
    assert default_epsilon(16, 3, 2, 10**10) == F(111, 100000)


def test_phase1_rounds() -> None:
    """Phase 1 should last ceil(12/eps ln(2d/delta)) rounds."""
    assert phase1_rounds(F(1, 13), 2, F(1, 1000)) == math.ceil(156 * math.log(4000))


def test_build_search_space(instance: Instance) -> None:
    """Phase 1 should play the uninformative scheme and freeze the estimate."""
    env = Environment(instance, seed=0)
    space = build_search_space(env, 400, F(1, 16))
    assert env.t == 401
    assert space.mu_hat == env.prior_estimate().estimate
    assert space.theta_tilde == (0, 1)
    assert {s.signals for s in env.commitments} == {("s",)}


def test_build_search_space_rejects_large_epsilon(instance: Instance) -> None:
    """Epsilon must stay below 1/(6d)."""
    with pytest.raises(ValueError, match="epsilon"):
        build_search_space(Environment(instance, seed=0), 10, F(1, 12))


def test_check_search_space_holds_for_exact_estimate(instance: Instance) -> None:
    """With the exact prior every clean-event property should hold."""
    check = check_search_space(SearchSpace.from_prior(instance.prior, F(1, 64)), instance.prior, pac=True)
    assert check.holds
    assert check.min_inside == F(1, 4)
    assert check.max_outside is None


def test_check_search_space_detects_bad_estimate(instance: Instance) -> None:
    """A wildly wrong estimate should leave too much prior mass outside the search space."""
    space = SearchSpace.from_estimate((F(9, 10), F(1, 10)), F(1, 16))
    check = check_search_space(space, instance.prior, pac=True)
    assert check.inside_ok
    assert check.max_outside == F(3, 4)
    assert not check.outside_ok
    assert not check.estimate_ok
    assert not check.holds


def test_cumulative_regret() -> None:
    """Regret should accumulate OPT minus expected utility round by round."""
    trace = RegretTrace(
        opt=F(1),
        records=(
            RoundRecord(t=1, phase=1, expected_utility=F(1, 2), realized=F(0)),
            RoundRecord(t=2, phase=1, expected_utility=F(1), realized=F(1)),
            RoundRecord(t=3, phase=3, expected_utility=F(3, 4), realized=F(1)),
        ),
        epsilon=F(1, 16),
        t1=2,
    )
    assert trace.cumulative_regret() == [F(1, 2), F(1, 2), F(3, 4)]
    assert trace.regret == F(3, 4)
    assert trace.rounds == 3


def test_run_regret_commits_to_opt_after_learning(instance: Instance) -> None:
    """With direct queries phase 3 should be optimal, so all regret comes from phase 1."""
    horizon = 2000
    env = Environment(instance, seed=7, oracle_mode=OracleMode.DIRECT, horizon=horizon)
    config = LearnerConfig(epsilon=F(1, 16))
    trace = run_regret(
        env, horizon, config, np.random.default_rng([7, 1]), partial(sender_expected_utility, instance), F(5, 8)
    )
    t1 = phase1_rounds(F(1, 16), 2, F(1, horizon))
    assert trace.abort_reason is None
    assert trace.rounds == horizon
    assert trace.t1 == t1
    assert trace.phase_starts == {1: 1, 2: t1 + 1, 3: t1 + 1}
    assert all(r.expected_utility == F(5, 8) for r in trace.records if r.phase == 3)
    assert trace.regret == t1 * F(1, 8)


def test_run_regret_reports_aborts(instance: Instance) -> None:
    """An abort during region learning should end the run with its reason recorded."""
    horizon = 2000
    env = Environment(instance, seed=7, oracle_mode=OracleMode.DIRECT, horizon=horizon)
    with patch(
        "persuasionlab.learner.find_polytopes",
        side_effect=TrialAbortedError(AbortReason.RANK_DEFICIENT, "no fit"),
    ):
        trace = run_regret(
            env,
            horizon,
            LearnerConfig(epsilon=F(1, 16)),
            np.random.default_rng(0),
            partial(sender_expected_utility, instance),
            F(5, 8),
        )
    assert trace.abort_reason is AbortReason.RANK_DEFICIENT
    assert trace.abort_detail == "no fit"
    assert trace.rounds == trace.t1


def test_run_regret_with_simulated_oracle(instance: Instance) -> None:
    """Played oracle queries should open a real phase 2 and still leave phase 3 optimal."""
    horizon = 8000
    env = Environment(instance, seed=2, horizon=horizon)
    config = LearnerConfig(epsilon=F(1, 16), resolve_stride=100)
    trace = run_regret(
        env, horizon, config, np.random.default_rng([2, 1]), partial(sender_expected_utility, instance), F(5, 8)
    )
    t1 = phase1_rounds(F(1, 16), 2, F(1, horizon))
    assert trace.abort_reason is None
    assert trace.rounds == horizon
    assert trace.phase_starts[2] == t1 + 1
    assert t1 + 1 < trace.phase_starts[3] <= horizon
    phase2 = [r for r in trace.records if r.phase == 2]
    assert len(phase2) == trace.phase_starts[3] - trace.phase_starts[2]
    assert all(r.expected_utility <= F(5, 8) for r in phase2)
    assert all(r.expected_utility == F(5, 8) for r in trace.records if r.phase == 3)
    assert trace.regret >= t1 * F(1, 8)
