"""Instance generators: seeded random instances and the lower-bound families."""

from __future__ import annotations

from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np
import structlog

from persuasionlab.errors import GenerationExhaustedError
from persuasionlab.exactnum import ONE, ZERO
from persuasionlab.persuasion import Instance

if TYPE_CHECKING:
    from collections.abc import Sequence

MAX_ATTEMPTS = 100

logger = structlog.get_logger()


def _random_rational(rng: np.random.Generator, max_den: int) -> Fraction:
    den = int(rng.integers(1, max_den, endpoint=True))
    return Fraction(int(rng.integers(0, den, endpoint=True)), den)


def _random_prior(rng: np.random.Generator, d: int, max_total: int) -> tuple[Fraction, ...]:
    total = int(rng.integers(d, max_total, endpoint=True))
    cuts = sorted(int(c) + 1 for c in rng.choice(total - 1, size=d - 1, replace=False))
    parts = [b - a for a, b in zip([0, *cuts], [*cuts, total], strict=True)]
    return tuple(Fraction(p, total) for p in parts)


def gen_random_instance(d: int, n: int, bit_cap: int, seed: int) -> Instance:
    """A reproducible random instance with small rationals.

    Denominators of utilities and of the prior stay below 2^(bit_cap // 2), so every
    entry fits in ``bit_cap`` bits per part and every product mu_theta u_theta(a)
    in about 2 bit_cap bits. Instances with duplicate receiver columns are redrawn.
    """
    if d < 2 or n < 2 or bit_cap < 2:
        raise ValueError("need d >= 2, n >= 2 and bit_cap >= 2")
    max_den = (1 << (bit_cap // 2)) - 1
    if max_den < d:
        raise ValueError(f"bit_cap {bit_cap} is too small for an interior prior over {d} states")
    rng = np.random.default_rng(seed)
    for attempt in range(1, MAX_ATTEMPTS + 1):
        prior = _random_prior(rng, d, max_den)
        receiver = [[_random_rational(rng, max_den) for _ in range(n)] for _ in range(d)]
        sender = [[_random_rational(rng, max_den) for _ in range(n)] for _ in range(d)]
        columns = {tuple(row[a] for row in receiver) for a in range(n)}
        if len(columns) < n:
            continue
        logger.debug("random instance generated", d=d, n=n, seed=seed, attempts=attempt)
        return Instance(
            d=d,
            n=n,
            prior=prior,
            receiver_utility=tuple(map(tuple, receiver)),
            sender_utility=tuple(map(tuple, sender)),
        )
    raise GenerationExhaustedError(f"no instance without duplicate actions after {MAX_ATTEMPTS} draws (seed {seed})")


def gen_hardness1(d: int, p: Sequence[int]) -> Instance:
    """Uniform prior, d even, n = d + 2; only the posterior proportional to p induces action d.

    Actions 0..d-1 pay 1 in their own state, action d pays (2/d) p_i in state i,
    action d+1 pays 2/d everywhere. The sender only values action d.
    """
    if d < 2 or d % 2:
        raise ValueError(f"d = {d} must be even and at least 2")
    p = tuple(int(b) for b in p)
    if len(p) != d or any(b not in (0, 1) for b in p) or sum(p) != d // 2:
        raise ValueError(f"p must be a 0/1 vector of length {d} with {d // 2} ones")
    n = d + 2
    scale = Fraction(2, d)
    receiver = tuple(
        tuple([*(ONE if j == i else ZERO for j in range(d)), scale * p[i], scale]) for i in range(d)
    )
    sender = tuple(tuple(ONE if a == d else ZERO for a in range(n)) for _ in range(d))
    return Instance(
        d=d,
        n=n,
        prior=tuple(Fraction(1, d) for _ in range(d)),
        receiver_utility=receiver,
        sender_utility=sender,
        allow_equivalent_actions=True,
    )


def gen_hardness3(which: int, epsilon: Fraction) -> Instance:
    """One of two d = 2, n = 4 instances with priors 1/2 +- eps that give identical feedback.

    Actions 0, 1 and 3 have the same weighted utilities mu_theta u_theta(a) in both;
    action 2 is played only on the diagonal, so no slice tells the two apart.
    """
    eps = Fraction(epsilon)
    if not 0 < eps < Fraction(1, 4):
        raise ValueError(f"epsilon {eps} must lie in (0, 1/4)")
    if which not in (1, 2):
        raise ValueError(f"which = {which} must be 1 or 2")
    half = Fraction(1, 2)
    s = eps if which == 1 else -eps
    prior = (half + s, half - s)
    tenth3 = Fraction(3, 10)
    # columns per action: (state 0, state 1)
    columns = [
        (1 / (2 + 4 * s), 1 / (10 - 20 * s)),
        (1 / (10 + 20 * s), 1 / (2 - 4 * s)),
        (tenth3, tenth3),
        (ZERO, 1 / (2 - 4 * s)),
    ]
    receiver = tuple(tuple(col[theta] for col in columns) for theta in range(2))
    sender = ((ZERO, ZERO, ONE, ZERO), (ZERO, ZERO, ZERO, ONE))
    return Instance(d=2, n=4, prior=prior, receiver_utility=receiver, sender_utility=sender)


def gen_hardness2_known(gamma: Fraction, which: int) -> Instance:
    """One of two d = 2, n = 3 instances sharing the prior (4 gamma, 1 - 4 gamma).

    They differ only in the receiver's utility for action 2 in state 0, which
    moves OPT from (1 + 4 gamma)/2 down to 1/2.
    """
    gamma = Fraction(gamma)
    if not 0 < gamma <= Fraction(1, 5):
        raise ValueError(f"gamma {gamma} must lie in (0, 1/5]")
    if which not in (1, 2):
        raise ValueError(f"which = {which} must be 1 or 2")
    half = Fraction(1, 2)
    top = ONE if which == 1 else half
    receiver = ((ONE, half, top), (half, ONE, ZERO))
    sender = ((ZERO, half, ONE), (ZERO, half, ONE))
    return Instance(d=2, n=3, prior=(4 * gamma, 1 - 4 * gamma), receiver_utility=receiver, sender_utility=sender)
