"""Action oracle and exact boundary search along segments."""

from __future__ import annotations

from fractions import Fraction
from typing import TYPE_CHECKING

import structlog

from persuasionlab.environment import OracleMode
from persuasionlab.errors import AbortReason, NoRationalWithinDepthError, TrialAbortedError
from persuasionlab.exactnum import ONE, ZERO, simplest_between, stern_brocot_depth, stern_brocot_search
from persuasionlab.persuasion import SignalingScheme

if TYPE_CHECKING:
    from collections.abc import Sequence

    from persuasionlab.constants import ConstantProfile
    from persuasionlab.environment import SenderChannel
    from persuasionlab.geometry import Point

logger = structlog.get_logger()


class ActionOracle:
    """Tells which action a normalized slice induces.

    In simulated mode a query commits to the two-signal scheme that sends s1
    with probability x_theta and repeats until s1 is sent; the receiver's
    action in that round is the answer. Answers are memoized per slice.
    """

    def __init__(self, channel: SenderChannel, budget: int) -> None:
        if budget < 1:
            raise ValueError("oracle budget must be at least 1")
        self._channel = channel
        self._budget = budget
        self._answers: dict[Point, int] = {}
        self.queries = 0
        self.rounds = 0

    def __call__(self, x: Sequence[Fraction]) -> int:
        key = tuple(x)
        cached = self._answers.get(key)
        if cached is not None:
            return cached
        self.queries += 1
        if self._channel.oracle_mode is OracleMode.DIRECT:
            answer = self._channel.direct_action_query(key)
        else:
            answer = self._play_until_sent(key)
        self._answers[key] = answer
        return answer

    def _play_until_sent(self, x: Point) -> int:
        scheme = SignalingScheme.two_signal(x)
        for _ in range(self._budget):
            outcome = self._channel.commit_and_play(scheme)
            self.rounds += 1
            if outcome.signal == "s1":
                return outcome.action
        logger.warning("oracle budget exhausted", budget=self._budget, slice=[str(c) for c in x])
        raise TrialAbortedError(AbortReason.BUDGET_EXHAUSTED, f"s1 never sent in {self._budget} rounds")


def action_oracle(channel: SenderChannel, x: Sequence[Fraction], budget: int) -> int:
    """One unmemoized oracle query."""
    return ActionOracle(channel, budget)(x)


def _simplest_in_closed(lo: Fraction, hi: Fraction) -> Fraction:
    """Minimum-denominator rational of [lo, hi]."""
    best = simplest_between(lo, hi)
    for end in (lo, hi):
        if end.denominator < best.denominator:
            best = end
    return best


def _reconstruct(lo: Fraction, hi: Fraction, limit: int, *, by_depth: bool) -> Fraction:
    """The crossing inside the final bisection interval.

    ``by_depth`` bounds the Stern-Brocot depth of the answer; otherwise ``limit``
    bounds the bit length of its denominator.
    """
    if by_depth:
        try:
            found = stern_brocot_search(lo, hi, limit)
        except NoRationalWithinDepthError:
            found = None
        candidates = [end for end in (lo, hi) if stern_brocot_depth(end) <= limit]
        if found is not None:
            candidates.append(found)
        if candidates:
            return min(candidates, key=lambda q: q.denominator)
        bound = f"depth <= {limit}"
    else:
        simplest = _simplest_in_closed(lo, hi)
        if simplest.denominator <= 1 << limit:
            return simplest
        bound = f"a denominator of at most 2**{limit}"
    raise TrialAbortedError(
        AbortReason.NO_RATIONAL_WITHIN_DEPTH,
        f"no rational with {bound} in [{lo}, {hi}]; the bit bound is probably too small",
    )


def binary_search(
    oracle: ActionOracle,
    action: int,
    inside: Sequence[Fraction],
    outside: Sequence[Fraction],
    profile: ConstantProfile,
) -> Point:
    """Exact point where the segment from ``inside`` to ``outside`` leaves the region of ``action``.

    ``inside`` must induce ``action`` and ``outside`` must not.
    """
    d = len(inside)
    threshold = Fraction(1, 1 << profile.search_exponent(d, inside, outside))
    lo, hi = ZERO, ONE

    def at(lam: Fraction) -> Point:
        return tuple(a + lam * (b - a) for a, b in zip(inside, outside, strict=True))

    while hi - lo >= threshold:
        mid = (lo + hi) / 2
        if oracle(at(mid)) == action:
            lo = mid
        else:
            hi = mid
    if profile.is_theoretical:
        crossing = _reconstruct(lo, hi, profile.search_depth(d, inside, outside), by_depth=True)
    else:
        crossing = _reconstruct(lo, hi, profile.crossing_bits(inside, outside), by_depth=False)
    return at(crossing)
