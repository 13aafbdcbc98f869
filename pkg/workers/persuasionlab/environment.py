"""The repeated sender-receiver interaction.

An ``Environment`` holds the hidden instance and plays one round per committed
scheme. Learners only ever see it through the ``SenderChannel`` protocol, which
exposes what the sender legitimately knows: the state and action sets, its own
utility, its own commitments and the per-round feedback.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from typing import TYPE_CHECKING, Protocol

import numpy as np
import pandas as pd
import structlog

from persuasionlab.errors import HorizonReachedError, ModeViolationError, NoObservationsError
from persuasionlab.exactnum import ZERO, format_rational
from persuasionlab.persuasion import chosen_action

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from persuasionlab.persuasion import Instance, SignalingScheme

logger = structlog.get_logger()


class OracleMode(StrEnum):
    """How action-oracle queries are answered."""

    SIMULATED = "simulated"
    DIRECT = "direct"


@dataclass(frozen=True)
class RoundOutcome:
    """Feedback of one round: state, sent signal, receiver action and sender payoff."""

    t: int
    theta: int
    signal: str
    action: int
    sender_payoff: Fraction


@dataclass(frozen=True)
class PriorEstimate:
    """State counts N_{t, theta} after t - 1 rounds."""

    counts: tuple[int, ...]
    t: int

    @property
    def estimate(self) -> tuple[Fraction, ...]:
        observed = self.t - 1
        return tuple(Fraction(c, observed) for c in self.counts)


class SenderChannel(Protocol):
    """What a learner may use to interact with the environment."""

    @property
    def t(self) -> int: ...

    @property
    def oracle_mode(self) -> OracleMode: ...

    @property
    def num_states(self) -> int: ...

    @property
    def num_actions(self) -> int: ...

    @property
    def sender_utility(self) -> tuple[tuple[Fraction, ...], ...]: ...

    @property
    def transcript(self) -> tuple[RoundOutcome, ...]: ...

    @property
    def commitments(self) -> tuple[SignalingScheme, ...]: ...

    def commit_and_play(self, scheme: SignalingScheme) -> RoundOutcome: ...

    def prior_estimate(self) -> PriorEstimate: ...

    def direct_action_query(self, x: Sequence[Fraction]) -> int: ...


class Environment:
    """Simulator of the repeated interaction for one trial.

    Each sampling event consumes exactly one uniform draw from the seeded
    generator (state first, then signal), converted exactly to a rational.
    """

    def __init__(
        self,
        instance: Instance,
        seed: int,
        oracle_mode: OracleMode = OracleMode.SIMULATED,
        horizon: int | None = None,
    ) -> None:
        self._instance = instance
        self._rng = np.random.default_rng(seed)
        self._oracle_mode = oracle_mode
        self._horizon = horizon
        self._t = 1
        self._counts = [0] * instance.d
        self._transcript: list[RoundOutcome] = []
        self._commitments: list[SignalingScheme] = []

    @property
    def t(self) -> int:
        return self._t

    @property
    def oracle_mode(self) -> OracleMode:
        return self._oracle_mode

    @property
    def num_states(self) -> int:
        return self._instance.d

    @property
    def num_actions(self) -> int:
        return self._instance.n

    @property
    def sender_utility(self) -> tuple[tuple[Fraction, ...], ...]:
        return self._instance.sender_utility

    @property
    def transcript(self) -> tuple[RoundOutcome, ...]:
        return tuple(self._transcript)

    @property
    def commitments(self) -> tuple[SignalingScheme, ...]:
        return tuple(self._commitments)

    def _draw(self, weights: Sequence[Fraction]) -> int:
        u = Fraction(float(self._rng.random()))
        cumulative = ZERO
        last = 0
        for i, w in enumerate(weights):
            if not w:
                continue
            cumulative += w
            last = i
            if u < cumulative:
                return i
        return last

    def commit_and_play(self, scheme: SignalingScheme) -> RoundOutcome:
        """Play one round under ``scheme`` and record the feedback."""
        if self._horizon is not None and self._t > self._horizon:
            raise HorizonReachedError(f"horizon {self._horizon} reached")
        if scheme.num_states != self._instance.d:
            raise ValueError(f"scheme covers {scheme.num_states} states, instance has {self._instance.d}")
        theta = self._draw(self._instance.prior)
        k = self._draw(scheme.table[theta])
        action = chosen_action(self._instance, scheme.column(k))
        outcome = RoundOutcome(
            t=self._t,
            theta=theta,
            signal=scheme.signals[k],
            action=action,
            sender_payoff=self._instance.sender_utility[theta][action],
        )
        self._counts[theta] += 1
        self._transcript.append(outcome)
        self._commitments.append(scheme)
        self._t += 1
        return outcome

    def prior_estimate(self) -> PriorEstimate:
        """Empirical state frequencies over the rounds played so far."""
        if self._t == 1:
            raise NoObservationsError("no round has been played yet")
        return PriorEstimate(counts=tuple(self._counts), t=self._t)

    def direct_action_query(self, x: Sequence[Fraction]) -> int:
        """Receiver action for slice ``x`` without playing a round (direct mode only)."""
        if self._oracle_mode is not OracleMode.DIRECT:
            raise ModeViolationError("direct action queries need direct oracle mode")
        return chosen_action(self._instance, x)

    def export_transcript(self, path: Path) -> None:
        """Write the transcript as CSV with rationals rendered as ``p/q``."""
        frame = pd.DataFrame(
            [
                {
                    "t": r.t,
                    "theta": r.theta,
                    "signal": r.signal,
                    "action": r.action,
                    "u_s": format_rational(r.sender_payoff),
                }
                for r in self._transcript
            ],
            columns=["t", "theta", "signal", "action", "u_s"],
        )
        frame.to_csv(path, index=False)
        logger.info("transcript exported", path=str(path), rounds=len(self._transcript))
