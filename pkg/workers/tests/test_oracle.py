"""Tests for the action oracle and the exact boundary search."""

from __future__ import annotations

from fractions import Fraction
from unittest.mock import MagicMock

import pytest

from persuasionlab.constants import ConstantProfile
from persuasionlab.environment import Environment, OracleMode, RoundOutcome
from persuasionlab.errors import AbortReason, TrialAbortedError
from persuasionlab.generators import gen_hardness2_known
from persuasionlab.oracle import ActionOracle, action_oracle, binary_search
from persuasionlab.persuasion import Instance

F = Fraction


@pytest.fixture
def instance() -> Instance:
    """Two states, three actions, prior (1/4, 3/4)."""
    return gen_hardness2_known(F(1, 16), 1)


@pytest.fixture
def direct_env(instance: Instance) -> Environment:
    """An environment that answers oracle queries without playing."""
    return Environment(instance, seed=0, oracle_mode=OracleMode.DIRECT)


def _outcome(t: int, signal: str, action: int) -> RoundOutcome:
    return RoundOutcome(t=t, theta=0, signal=signal, action=action, sender_payoff=F(0))


def test_direct_mode_is_memoized(direct_env: Environment) -> None:
    """Repeated queries for one slice should reach the channel once."""
    oracle = ActionOracle(direct_env, budget=10)
    assert oracle((F(0), F(1))) == 1
    assert oracle((F(0), F(1))) == 1
    assert oracle.queries == 1
    assert oracle.rounds == 0


def test_simulated_mode_waits_for_s1() -> None:
    """A simulated query should play until s1 is sent and report that round's action."""
    channel = MagicMock()
    channel.oracle_mode = OracleMode.SIMULATED
    channel.commit_and_play.side_effect = [_outcome(1, "s2", 0), _outcome(2, "s2", 0), _outcome(3, "s1", 2)]
    oracle = ActionOracle(channel, budget=5)
    assert oracle((F(1, 2), F(1, 2))) == 2
    assert oracle.rounds == 3
    scheme = channel.commit_and_play.call_args.args[0]
    assert scheme.signals == ("s1", "s2")


def test_simulated_mode_against_environment(instance: Instance) -> None:
    """Against a real environment the answer should be the receiver's best response."""
    env = Environment(instance, seed=4)
    assert action_oracle(env, (F(1), F(0)), budget=1000) == 2
    assert env.t > 1


def test_budget_exhaustion_aborts() -> None:
    """A slice that is never sent should abort the trial after the budget."""
    channel = MagicMock()
    channel.oracle_mode = OracleMode.SIMULATED
    channel.commit_and_play.return_value = _outcome(1, "s2", 0)
    oracle = ActionOracle(channel, budget=4)
    with pytest.raises(TrialAbortedError) as exc_info:
        oracle((F(0), F(0)))
    assert exc_info.value.reason is AbortReason.BUDGET_EXHAUSTED
    assert channel.commit_and_play.call_count == 4


def test_budget_must_be_positive(direct_env: Environment) -> None:
    """A zero budget should be refused."""
    with pytest.raises(ValueError, match="budget"):
        ActionOracle(direct_env, budget=0)


def test_binary_search_finds_exact_crossing(direct_env: Environment) -> None:
    """Leaving action 1's region along the simplex edge should stop exactly on x0 = 3 x1."""
    oracle = ActionOracle(direct_env, budget=1)
    crossing = binary_search(oracle, 1, (F(0), F(1)), (F(1), F(0)), ConstantProfile())
    assert crossing == (F(3, 4), F(1, 4))


def test_binary_search_recovers_deep_crossing(direct_env: Environment) -> None:
    """A crossing parameter with a huge continued-fraction term should still be found exactly."""
    oracle = ActionOracle(direct_env, budget=1)
    w = F(1, 1 << 130)
    outside = (1 - w, w)
    assert oracle(outside) == 0
    crossing = binary_search(oracle, 1, (F(1, 2), F(1, 2)), outside, ConstantProfile())
    assert crossing == (F(3, 4), F(1, 4))


def test_binary_search_aborts_when_the_bit_bound_is_too_small() -> None:
    """A boundary finer than the assumed coefficient bits should abort instead of snapping to a guess."""
    boundary = F(1, 3000)
    profile = ConstantProfile(b_bound=1, safety_factor=1)
    with pytest.raises(TrialAbortedError) as exc_info:
        binary_search(lambda x: 1 if x[0] < boundary else 0, 1, (F(0), F(1)), (F(1), F(0)), profile)
    assert exc_info.value.reason is AbortReason.NO_RATIONAL_WITHIN_DEPTH
