"""Exact base-b fixed-point values: scaled integers with checked range.

A format has ``int_digits`` digits left of the point and ``frac_digits``
right of it, so the grid step is base**-frac_digits and the representable
band is +/-(base**int_digits - base**-frac_digits).  Mantissas are plain
Python integers: overflow is a checked condition against the format, never
a silent wraparound.  Rounding to the grid is to nearest with ties away
from zero, which keeps the per-hop quantization error at half a grid step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property


class FixedPointOverflowError(OverflowError):
    """Value falls outside the representable band of the format."""


def round_half_away(x: float) -> int:
    """Nearest integer to a float, ties away from zero.

    abs(x) - floor(abs(x)) is exact in IEEE double, so the comparison with
    0.5 never misrounds near-tie inputs the way floor(x + 0.5) does.
    """
    a = abs(x)
    f = math.floor(a)
    r = f + 1 if a - f >= 0.5 else f
    return -r if x < 0 else r


def _round_half_away_exact(fr: Fraction) -> int:
    num, den = fr.numerator, fr.denominator
    sign = -1 if num < 0 else 1
    q, rem = divmod(abs(num), den)
    if 2 * rem >= den:
        q += 1
    return sign * q


@dataclass(frozen=True)
class FixedPointFormat:
    base: int
    int_digits: int
    frac_digits: int

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")
        if self.int_digits < 0 or self.frac_digits < 0:
            raise ValueError("digit counts must be non-negative")

    @cached_property
    def scale(self) -> int:
        """Integer grid denominator base**frac_digits."""
        return self.base ** self.frac_digits

    @cached_property
    def mantissa_limit(self) -> int:
        return self.base ** (self.int_digits + self.frac_digits) - 1

    @property
    def granularity(self) -> Fraction:
        return Fraction(1, self.scale)

    @property
    def max_value(self) -> Fraction:
        return Fraction(self.mantissa_limit, self.scale)


@dataclass(frozen=True, order=True)
class FixedPointValue:
    """A number mantissa * base**-frac_digits; comparisons are exact."""

    fmt: FixedPointFormat
    mantissa: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.mantissa, self.fmt.scale)

    def __float__(self) -> float:
        return self.mantissa / self.fmt.scale

    def __post_init__(self):
        if abs(self.mantissa) > self.fmt.mantissa_limit:
            raise FixedPointOverflowError(
                f"mantissa {self.mantissa} outside +/-{self.fmt.mantissa_limit}")


def quantize(x, fmt: FixedPointFormat) -> FixedPointValue:
    """Nearest grid multiple of x (int, float or Fraction), ties away.

    The scaling is done in exact rational arithmetic, so the result is the
    true nearest multiple of the grid step and the error is at most half a
    step for every representable input.
    """
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError("cannot quantize a non-finite value")
    mant = _round_half_away_exact(Fraction(x) * fmt.scale)
    if abs(mant) > fmt.mantissa_limit:
        raise FixedPointOverflowError(
            f"{x} quantizes outside the representable range of "
            f"(base={fmt.base}, P={fmt.int_digits}, p={fmt.frac_digits})")
    return FixedPointValue(fmt, mant)


def linear_combine(coeffs, vals, fmt: FixedPointFormat) -> FixedPointValue:
    """Quantized sum(coeff_i * val_i): the node-internal combination.

    Evaluated left to right in double precision directly on mantissas
    (the grid factor cancels), then rounded once to the grid.  For
    mantissas below 2**53 the only inexactness is the double rounding of
    each product and partial sum.
    """
    if len(coeffs) != len(vals):
        raise ValueError("coeffs and vals must have equal length")
    acc = 0.0
    for c, v in zip(coeffs, vals):
        if v.fmt != fmt:
            raise ValueError("operands must share the target format")
        acc += float(c) * float(v.mantissa)
    mant = round_half_away(acc)
    if abs(mant) > fmt.mantissa_limit:
        raise FixedPointOverflowError(
            f"combination mantissa {mant} outside +/-{fmt.mantissa_limit}")
    return FixedPointValue(fmt, mant)


def round_to_int(v) -> int:
    """Nearest integer (ties away from zero) of a fixed-point value or real."""
    if isinstance(v, FixedPointValue):
        return _round_half_away_exact(v.value)
    if isinstance(v, Fraction):
        return _round_half_away_exact(v)
    return round_half_away(float(v))
