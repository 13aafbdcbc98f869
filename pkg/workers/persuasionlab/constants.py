"""Constant profiles for the geometric learning procedures.

The theoretical profile evaluates the worst-case formulas for sampling radii,
pull-in weights, offsets and search resolutions verbatim. They are exact but
astronomically small, so they are only usable for d = 2 and tiny bit budgets.

The practical profile derives the same quantities from the bit lengths of the
points actually in play. Each practical constant is the smallest power of two
that keeps the separating-hyperplane argument valid for hyperplanes whose
coefficients fit in ``coefficient_bits(d)`` bits.
"""

from __future__ import annotations

import math
from enum import StrEnum
from fractions import Fraction
from typing import TYPE_CHECKING

from pydantic import BaseModel, ConfigDict, Field

from persuasionlab.exactnum import ceil_log2, ceil_sqrt, denominator_bits, vector_bit_complexity

if TYPE_CHECKING:
    from collections.abc import Sequence


class ProfileMode(StrEnum):
    """Which family of constants the learner uses."""

    THEORETICAL = "theoretical"
    PRACTICAL = "practical"


class ConstantProfile(BaseModel):
    """Numeric constants used by sampling, oracle queries and binary search.

    ``b_bound`` is the learner's assumed upper bound on the bit complexity of
    the products mu_theta * u_theta(a).
    """

    model_config = ConfigDict(frozen=True)

    mode: ProfileMode = ProfileMode.PRACTICAL
    b_bound: int = Field(default=16, ge=1)
    safety_factor: int = Field(default=2, ge=1)
    assert_vertex_bits: bool = False

    @property
    def is_theoretical(self) -> bool:
        return self.mode is ProfileMode.THEORETICAL

    def coefficient_bits(self, d: int) -> int:
        """Bits of the integer-scaled coefficients of any separating hyperplane."""
        return (d + 1) * self.b_bound + 1

    def sample_radius(self, d: int, search_bits: int) -> Fraction:
        """Theoretical sampling radius rho = (d^3 2^(9 d^3 L + 4 d L))^-1 with L = B + B_eps + B_mu."""
        total = self.b_bound + search_bits
        return Fraction(1, d**3 * (1 << (9 * d**3 * total + 4 * d * total)))

    def grid_size(self, d: int, delta: Fraction) -> int:
        """M = ceil(sqrt(d) / delta), computed exactly."""
        if delta <= 0:
            raise ValueError("delta must be positive")
        # sqrt(d) / delta = sqrt(d q^2 / p^2) with delta = p / q
        p, q = delta.numerator, delta.denominator
        m = ceil_sqrt(-(-d * q * q // (p * p)))
        while m * m * p * p < d * q * q:
            m += 1
        return max(1, m)

    def pull_in_weight(
        self,
        d: int,
        interior: Sequence[Fraction],
        vertex: Sequence[Fraction],
        search_bits: int,
    ) -> Fraction:
        """Weight lambda of the interior point in lambda * x_int + (1 - lambda) * v."""
        if self.is_theoretical:
            total = self.b_bound + search_bits
            return Fraction(d, 1 << (d * (vector_bit_complexity(interior) + 4 * total) + 1))
        exponent = self.safety_factor * (denominator_bits(vertex) + self.coefficient_bits(d) + search_bits)
        return Fraction(1, 1 << (exponent + ceil_log2(4 * d)))

    def offset_scale(self, d: int, boundary_point: Sequence[Fraction], search_bits: int) -> Fraction:
        """Scale alpha of the offsets x_o +- alpha (x - x_o) around a boundary point."""
        if self.is_theoretical:
            bits = vector_bit_complexity(boundary_point) + self.b_bound + search_bits
            return Fraction(1, d * (1 << (4 * d * bits)))
        exponent = self.safety_factor * (
            denominator_bits(boundary_point) + self.coefficient_bits(d) + search_bits
        )
        return Fraction(1, 1 << (exponent + ceil_log2(4 * d)))

    def crossing_bits(self, first: Sequence[Fraction], second: Sequence[Fraction]) -> int:
        """k such that the crossing lambda on the segment has a denominator of at most 2**k.

        lambda* = -c.a / c.(b - a) for an integer normal c, so its denominator divides
        c.(b - a) scaled by the two common denominators.
        """
        d = len(first)
        return denominator_bits(first) + denominator_bits(second) + self.coefficient_bits(d) + ceil_log2(2 * d) + 1

    def search_exponent(self, d: int, first: Sequence[Fraction], second: Sequence[Fraction]) -> int:
        """Bisection stops once the lambda interval is narrower than 2**-exponent."""
        if self.is_theoretical:
            b_x = max(vector_bit_complexity(first), vector_bit_complexity(second))
            return 6 * d * (5 * b_x + 8 * self.b_bound)
        # below 2**-2k at most one rational of denominator <= 2**k fits
        return 2 * self.crossing_bits(first, second) + self.safety_factor

    def search_depth(self, d: int, first: Sequence[Fraction], second: Sequence[Fraction]) -> int:
        """Stern-Brocot depth allowed when the theoretical profile reconstructs the crossing."""
        b_x = max(vector_bit_complexity(first), vector_bit_complexity(second))
        return 3 * d * (5 * b_x + 8 * self.b_bound)

    def oracle_budget(self, epsilon: Fraction, zeta: Fraction, d: int, n: int) -> int:
        """Rounds allowed for one action-oracle call before it gives up.

        Sized so that all calls of one run succeed with probability 1 - zeta / 2
        when every queried slice is induced with probability at least epsilon.
        """
        calls = 2 * n * n * math.comb(d + n, d)
        return self.safety_factor * math.ceil(math.log(calls / zeta) / epsilon)

    def vertex_bit_bound(self, d: int, search_bits: int) -> int:
        """Upper bound 9 d^2 (B + B_eps + B_mu) on vertex bit complexity."""
        return 9 * d * d * (self.b_bound + search_bits)
