"""Certified orbit computation on symbolic codings.

A point is carried as the first ``L`` digits of its coding.  ``T^n x`` is then
the shift by ``n`` digits, and its enclosure is the cylinder spanned by the
remaining digits.  Every distance ``d(T^n x, x)`` therefore comes with a
rigorous error, and comparisons against a threshold are three-valued.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Callable

import mpmath

from .errors import BranchStraddle, InsufficientDigits, PrecisionExhausted

DEFAULT_PRECISION_CAP = 4096
GUARD_TOLERANCE = 1e-6


def as_fraction(x) -> Fraction:
    """Exact rational value of ``x`` (floats and mpf values convert exactly)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, float, str)):
        return Fraction(x)
    if isinstance(x, mpmath.mpf):
        man, exp = x.man_exp
        return Fraction(int(man) << exp) if exp >= 0 else Fraction(int(man), 1 << -exp)
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return Fraction(int(x.numerator), int(x.denominator))
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def round_down(x: Fraction, bits: int) -> Fraction:
    return Fraction((x.numerator << bits) // x.denominator, 1 << bits)


def round_up(x: Fraction, bits: int) -> Fraction:
    return Fraction(-((-x.numerator << bits) // x.denominator), 1 << bits)


@dataclass(frozen=True)
class EnclosedPoint:
    """A real number known to lie in ``[center - radius, center + radius]``.

    ``refine``, when present, recomputes the same point at a requested number
    of bits; digit extraction uses it to resolve straddled digits.
    """

    center: Fraction
    radius: Fraction = Fraction(0)
    precision: int | None = None
    refine: Callable[[int], "EnclosedPoint"] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "center", as_fraction(self.center))
        object.__setattr__(self, "radius", as_fraction(self.radius))
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        if self.radius >= 1:
            raise ValueError("radius must be < 1")

    @classmethod
    def exact(cls, x) -> "EnclosedPoint":
        return cls(as_fraction(x))

    @classmethod
    def from_interval(cls, lo, hi, precision=None, refine=None) -> "EnclosedPoint":
        lo, hi = as_fraction(lo), as_fraction(hi)
        if hi < lo:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        return cls((lo + hi) / 2, (hi - lo) / 2, precision, refine)

    @classmethod
    def from_mpmath(cls, fn: Callable[[], mpmath.mpf], prec: int = 256) -> "EnclosedPoint":
        """Enclose ``fn()`` evaluated by mpmath, assuming it is accurate to 16 guard bits."""
        with mpmath.workprec(prec + 16):
            value = fn()
        center = round_down(as_fraction(value), prec)
        return cls(center, Fraction(1, 1 << (prec - 1)), prec, lambda p: cls.from_mpmath(fn, p))

    @property
    def lo(self) -> Fraction:
        return self.center - self.radius

    @property
    def hi(self) -> Fraction:
        return self.center + self.radius

    def at(self, bits: int) -> "EnclosedPoint":
        if self.refine is None or (self.precision is not None and self.precision >= bits):
            return self
        return self.refine(bits)

    def contains(self, x) -> bool:
        x = as_fraction(x)
        return self.lo <= x <= self.hi

    def __float__(self) -> float:
        return float(self.center)


class HitVerdict(Enum):
    MISS = 0
    HIT = 1
    AMBIGUOUS = -1


@dataclass(frozen=True)
class DigitSequence:
    """The first ``len(digits)`` symbolic digits of a point of ``system``."""

    system: object
    digits: tuple
    guard: int | None = None
    prec: int = 256
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))
        if self.validate:
            self.system.check_word(self.digits)

    def __len__(self) -> int:
        return len(self.digits)

    @property
    def guard_digits(self) -> int:
        return self.guard if self.guard is not None else self.system.guard_digits()

    @cached_property
    def cylinders(self) -> list:
        """``cylinders[k]`` encloses ``T^k x``: the cylinder of ``digits[k:]``."""
        out = self.system.cylinder_chain(self.digits, self.prec)
        if out[0] is None:
            k = max(i for i, v in enumerate(out) if v is None)
            raise ValueError(f"inadmissible digits at position {k} for {self.system.name}")
        return out

    @property
    def tail_error(self) -> Fraction:
        lo, hi = self.cylinders[0]
        return hi - lo

    def value(self) -> Fraction:
        """Point coded by ``digits`` followed by the all-zero tail."""
        point = (Fraction(0), Fraction(0))
        for d in reversed(self.digits):
            point = self.system.inverse(d, point[0], point[1], self.prec)
        return point[0]


def extract_digits(system, x: EnclosedPoint, length: int, *, prec: int | None = None,
                   cap: int = DEFAULT_PRECISION_CAP, guard: int | None = None) -> DigitSequence:
    """First ``length`` digits of ``x``, doubling the working precision on straddles."""
    if length < 1:
        raise ValueError("length must be >= 1")
    bits = prec or max(64, x.precision or 0, system.bits_for_digits(length))
    bits = min(bits, cap)
    improvable = x.refine is not None or not system.exact_arithmetic
    while True:
        point = x.at(bits)
        try:
            digits = system.digits_of(point.lo, point.hi, length, bits)
        except BranchStraddle as exc:
            if not improvable or bits >= cap:
                raise PrecisionExhausted(
                    f"could not certify {length} digits of {float(x.center):.17g} "
                    f"on {system.name} at {bits} bits") from exc
            bits = min(2 * bits, cap)
            continue
        return DigitSequence(system, digits, guard=guard, prec=max(bits, 64), validate=False)


def shifted_value(seq: DigitSequence, n: int) -> EnclosedPoint:
    """Enclosure of ``T^n x`` from the digits of ``x``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n + seq.guard_digits > len(seq):
        raise InsufficientDigits(
            f"shift {n} needs {n + seq.guard_digits} digits, sequence has {len(seq)}")
    lo, hi = seq.cylinders[n]
    return EnclosedPoint.from_interval(lo, hi)


def recurrence_distance(seq: DigitSequence, n: int) -> tuple[Fraction, Fraction]:
    """``(|c_n - c_0|, r_n + r_0)`` for the enclosures of ``T^n x`` and ``x``."""
    moved = shifted_value(seq, n)
    start = EnclosedPoint.from_interval(*seq.cylinders[0])
    return abs(moved.center - start.center), moved.radius + start.radius


def classify_hit(distance, error, threshold) -> HitVerdict:
    distance, error, threshold = as_fraction(distance), as_fraction(error), as_fraction(threshold)
    if error < 0:
        raise ValueError("error must be non-negative")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if distance + error < threshold:
        return HitVerdict.HIT
    if distance - error > threshold:
        return HitVerdict.MISS
    return HitVerdict.AMBIGUOUS


def classify_box(x_lo, x_hi, y_lo, y_hi, threshold) -> HitVerdict:
    """Verdict for ``|y - x| < threshold`` with ``x``, ``y`` known only up to boxes.

    Same decision as ``classify_hit`` on centre distance and summed radii:
    the sup of ``|y - x|`` over the box is ``dist + err``, the inf is
    ``dist - err`` whenever that is positive.
    """
    if y_hi - x_lo < threshold and x_hi - y_lo < threshold:
        return HitVerdict.HIT
    if y_lo - x_hi > threshold or x_lo - y_hi > threshold:
        return HitVerdict.MISS
    return HitVerdict.AMBIGUOUS


def default_guard(base: float, tolerance: float = GUARD_TOLERANCE) -> int:
    return math.ceil(math.log(1 / tolerance) / math.log(base) - 1e-12)
