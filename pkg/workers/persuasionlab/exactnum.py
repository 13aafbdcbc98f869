"""Exact rational arithmetic helpers: bit complexity, Stern-Brocot search, text codec.

Every numeric quantity in the lab is a ``fractions.Fraction``. Fractions are
always stored reduced with a positive denominator, so they double as the
``Rational`` type of the model.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import TYPE_CHECKING, Annotated

from pydantic import PlainSerializer, PlainValidator

from persuasionlab.errors import NoRationalWithinDepthError

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def bitlen(k: int) -> int:
    """Bits needed for |k|; zero takes one bit."""
    return max(1, abs(k).bit_length())


def bit_complexity(q: Fraction) -> int:
    """Bits of the reduced numerator plus bits of the denominator. Sign is free."""
    return bitlen(q.numerator) + bitlen(q.denominator)


def vector_bit_complexity(v: Sequence[Fraction]) -> int:
    """Largest bit complexity among the entries of ``v``."""
    if not v:
        raise ValueError("bit complexity of an empty vector is undefined")
    return max(bit_complexity(q) for q in v)


def common_denominator(v: Iterable[Fraction]) -> int:
    """Least common multiple of the denominators of ``v``."""
    return math.lcm(*(q.denominator for q in v))


def denominator_bits(v: Sequence[Fraction]) -> int:
    """Bit length of the common denominator of ``v``."""
    return bitlen(common_denominator(v))


def ceil_sqrt(m: int) -> int:
    """Smallest integer r with r * r >= m."""
    if m <= 0:
        return 0
    r = math.isqrt(m)
    return r if r * r == m else r + 1


def ceil_log2(m: int) -> int:
    """Smallest k with 2**k >= m, for m >= 1."""
    return (m - 1).bit_length()


def dyadic_floor(r: Fraction) -> Fraction:
    """Largest power of two 2**-k (k >= 0) not exceeding ``r``."""
    if r <= 0:
        raise ValueError("dyadic floor needs a positive argument")
    k = max(0, r.denominator.bit_length() - r.numerator.bit_length())
    while Fraction(1, 1 << k) > r:
        k += 1
    return Fraction(1, 1 << k)


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    """Exact inner product."""
    return sum((x * y for x, y in zip(a, b, strict=True)), ZERO)


# --- Stern-Brocot tree on [0, 1] ---


def _continued_fraction(q: Fraction) -> list[int]:
    terms = []
    num, den = q.numerator, q.denominator
    while den:
        whole, rest = divmod(num, den)
        terms.append(whole)
        num, den = den, rest
    return terms


def stern_brocot_depth(q: Fraction) -> int:
    """Depth of ``q`` in the Stern-Brocot subtree spanned by 0/1 and 1/1.

    The boundary fractions 0/1 and 1/1 have depth 0 and 1/2 has depth 1.
    """
    if not ZERO <= q <= ONE:
        raise ValueError(f"{q} is outside [0, 1]")
    if q.denominator == 1:
        return 0
    return sum(_continued_fraction(q)) - 1


def simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """The rational of minimum denominator in the open interval (lo, hi), with no depth limit.

    Runs in a number of steps linear in the bit length of the endpoints,
    however deep the answer sits in the tree.
    """
    lo, hi = Fraction(lo), Fraction(hi)
    if not lo < hi:
        raise ValueError(f"empty interval ({lo}, {hi})")
    if lo < 0 or hi > 1:
        raise ValueError(f"interval ({lo}, {hi}) leaves [0, 1]")

    terms: list[int] = []
    low: Fraction = lo
    high: Fraction | None = hi
    while True:
        whole = math.floor(low)
        if high is None or whole + 1 < high:
            terms.append(whole + 1)
            break
        terms.append(whole)
        fractional = low - whole
        low, high = 1 / (high - whole), (None if fractional == 0 else 1 / fractional)

    found = Fraction(terms[-1])
    for term in reversed(terms[:-1]):
        found = term + 1 / found
    return found


def stern_brocot_search(lo: Fraction, hi: Fraction, depth: int) -> Fraction:
    """Return the rational of minimum denominator in the open interval (lo, hi).

    This is the first node reached by mediant descent from (0/1, 1/1) that
    falls inside the interval. The descent follows continued-fraction terms
    rather than single mediant steps.
    """
    found = simplest_between(lo, hi)
    if stern_brocot_depth(found) > depth:
        raise NoRationalWithinDepthError(f"simplest rational in ({lo}, {hi}) is {found}, deeper than {depth}")
    return found


# --- text codec ---


def parse_rational(value: object) -> Fraction:
    """Parse ``"p/q"``, an integer, or a decimal string into an exact rational.

    Floats are refused: they rarely denote the rational the author meant.
    """
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, Fraction | int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"invalid rational {value!r}") from exc
    raise ValueError(f"expected a rational written as 'p/q', got {type(value).__name__}")


def format_rational(q: Fraction) -> str:
    """Render ``q`` as ``"p/q"``; integers drop the ``/1``."""
    return str(q)


RationalStr = Annotated[
    Fraction,
    PlainValidator(parse_rational),
    PlainSerializer(format_rational, return_type=str),
]
