"""Piecewise-expanding interval maps: beta transformations, the Gauss map, and
the tripling map on the middle-third Cantor set.

Exact work is done on closed intervals with rational endpoints.  Every system
exposes the same small interval calculus:

* ``locate(lo, hi)``: the branch (digit) containing an enclosure,
* ``forward(d, lo, hi)``: image of an enclosure under branch ``d``,
* ``inverse(d, lo, hi)``: preimage inside branch ``d`` (``None`` if empty).

For irrational beta the endpoints are rounded outward to a working number of
bits, so every result still contains the true image.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .errors import BranchStraddle, OutsideSupport
from .precision import (DEFAULT_PRECISION_CAP, EnclosedPoint, as_fraction, default_guard,
                        round_down, round_up)

PHI = (1 + 5 ** 0.5) / 2
ZERO, ONE = Fraction(0), Fraction(1)


@dataclass(frozen=True)
class BranchSpec:
    """One branch: an interval domain and a monotone C^1 map onto (part of) [0, 1]."""

    digit: int
    left: float
    right: float
    kind: str  # "affine": x -> slope*x - offset;  "mobius": x -> 1/x - offset
    offset: float
    slope: float = 1.0
    closed: bool = False

    @property
    def formula(self) -> str:
        if self.kind == "affine":
            return f"x -> {self.slope:g}*x - {self.offset:g}"
        return f"x -> 1/x - {self.offset:g}"

    def forward(self, x: float) -> float:
        if self.kind == "affine":
            return self.slope * x - self.offset
        return 1.0 / x - self.offset

    def derivative(self, x: float) -> float:
        if self.kind == "affine":
            return self.slope
        return 1.0 / (x * x)

    def inverse(self, y: float) -> float:
        if self.kind == "affine":
            return (y + self.offset) / self.slope
        return 1.0 / (y + self.offset)

    @property
    def min_derivative(self) -> float:
        if self.kind == "affine":
            return self.slope
        return 1.0 / (self.right * self.right)

    def contains(self, x: float) -> bool:
        if self.closed:
            return self.left <= x <= self.right
        return self.left < x < self.right


@dataclass(frozen=True)
class SystemDescriptor:
    name: str
    ahlfors_dim: float
    support: str  # "interval" or "cantor"

    exact_arithmetic = True
    integer_base = None  # digits form a base-b expansion with free choice at every place
    contraction_base = 2.0  # worst-case shrink factor of a cylinder per extra digit
    bits_per_digit = 1.0

    def guard_digits(self, tolerance: float = 1e-6) -> int:
        return default_guard(self.contraction_base, tolerance)

    def bits_for_digits(self, length: int) -> int:
        bits = 64 + math.ceil(length * self.bits_per_digit)
        return 64 * math.ceil(bits / 64)

    def digits_for_tolerance(self, tolerance: float) -> int:
        if tolerance >= 1:
            return 0
        return math.ceil(math.log(1 / tolerance) / math.log(self.contraction_base) - 1e-12)

    def digits_of(self, lo: Fraction, hi: Fraction, length: int, prec: int) -> tuple:
        digits = []
        for _ in range(length):
            d, lo, hi = self.locate(lo, hi, prec=prec)
            digits.append(d)
            lo, hi = self.forward(d, lo, hi, prec)
        return tuple(digits)

    def cylinder_chain(self, digits, prec: int) -> list:
        """``out[k]`` encloses the cylinder of ``digits[k:]``; ``None`` entries mark inadmissibility."""
        out = [None] * (len(digits) + 1)
        lo, hi = Fraction(0), Fraction(1)
        out[-1] = (lo, hi)
        for k in range(len(digits) - 1, -1, -1):
            step = self.inverse(digits[k], lo, hi, prec)
            if step is None:
                return out
            lo, hi = step
            out[k] = step
        return out

    def map_float(self, x: float) -> float:
        return self.branch(self.digit_float(x)).forward(x)

    def derivative_float(self, x: float) -> float:
        return self.branch(self.digit_float(x)).derivative(x)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class BetaValue:
    """A beta > 1: exact rational, or a named irrational evaluated by mpmath."""

    label: str
    exact: Fraction | None = None

    def __float__(self) -> float:
        if self.exact is not None:
            return float(self.exact)
        with mpmath.workprec(80):
            return float(_IRRATIONALS[self._key][0](*self._args))

    @property
    def _key(self) -> str:
        return "sqrt" if self.label.startswith("sqrt") else self.label

    @property
    def _args(self) -> tuple:
        m = re.fullmatch(r"sqrt\((\d+)\)", self.label)
        return (int(m.group(1)),) if m else ()

    def interval(self, bits: int) -> tuple[Fraction, Fraction]:
        if self.exact is not None:
            return self.exact, self.exact
        return _beta_interval(self.label, bits)


_IRRATIONALS = {
    "phi": (lambda: (1 + mpmath.sqrt(5)) / 2,),
    "sqrt": (lambda k: mpmath.sqrt(k),),
}


@lru_cache(maxsize=256)
def _beta_interval(label: str, bits: int) -> tuple[Fraction, Fraction]:
    value = BetaValue(label)
    with mpmath.workprec(bits + 32):
        v = _IRRATIONALS[value._key][0](*value._args)
    mid = round_down(as_fraction(v), bits)
    ulp = Fraction(1, 1 << bits)
    return mid - ulp, mid + 2 * ulp


def parse_beta(text) -> BetaValue:
    if isinstance(text, BetaValue):
        return text
    if isinstance(text, (int, Fraction)):
        return BetaValue(str(text), Fraction(text))
    s = str(text).strip().lower().replace(" ", "")
    if s in ("phi", "golden"):
        return BetaValue("phi")
    m = re.fullmatch(r"sqrt\(?(\d+)\)?", s)
    if m:
        k = int(m.group(1))
        r = math.isqrt(k)
        if r * r == k:
            return BetaValue(str(r), Fraction(r))
        return BetaValue(f"sqrt({k})")
    try:
        value = Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"cannot parse beta value {text!r}") from None
    return BetaValue(s, value)


class _Rounding:
    """Outward rounding helper; a no-op when arithmetic is exact."""

    def __init__(self, bits):
        self.bits = bits

    def down(self, x):
        return x if self.bits is None else round_down(x, self.bits)

    def up(self, x):
        return x if self.bits is None else round_up(x, self.bits)


@dataclass(frozen=True)
class BetaSystem(SystemDescriptor):
    beta: BetaValue = None
    default_prec: int = 256

    @property
    def exact_arithmetic(self) -> bool:
        return self.beta.exact is not None

    @property
    def beta_float(self) -> float:
        return float(self.beta)

    @property
    def floor_beta(self) -> int:
        if self.beta.exact is not None:
            return math.floor(self.beta.exact)
        lo, hi = self.beta.interval(128)
        return math.floor(lo)

    @property
    def is_integer(self) -> bool:
        return self.beta.exact is not None and self.beta.exact.denominator == 1

    @property
    def integer_base(self):
        return int(self.beta.exact) if self.is_integer else None

    @property
    def n_branches(self) -> int:
        return self.floor_beta if self.is_integer else self.floor_beta + 1

    @property
    def contraction_base(self) -> float:
        return self.beta_float

    @property
    def bits_per_digit(self) -> float:
        return math.log2(self.beta_float)

    @property
    def alphabet(self) -> tuple:
        return tuple(range(self.n_branches))

    def branch(self, digit: int) -> BranchSpec:
        if not 0 <= digit < self.n_branches:
            raise ValueError(f"no branch {digit} for {self.name}")
        b = self.beta_float
        return BranchSpec(digit, digit / b, min((digit + 1) / b, 1.0), "affine", float(digit), b)

    def branches(self, digit_cap=None) -> tuple:
        return tuple(self.branch(i) for i in range(self.n_branches))

    def digit_float(self, x: float) -> int:
        return min(int(math.floor(self.beta_float * x)), self.n_branches - 1)

    def _bounds(self, prec):
        if self.beta.exact is not None:
            return self.beta.exact, self.beta.exact, _Rounding(None)
        bits = prec or self.default_prec
        lo, hi = self.beta.interval(bits)
        return lo, hi, _Rounding(bits)

    def image(self, digit: int, prec=None) -> tuple[Fraction, Fraction]:
        """Closed hull of ``T(X_digit)``."""
        if self.is_integer or digit < self.floor_beta:
            return ZERO, ONE
        bl, bh, _ = self._bounds(prec)
        if self.beta.exact is not None:
            return ZERO, self.beta.exact - self.floor_beta
        return ZERO, min(ONE, bh - self.floor_beta)

    def locate(self, lo, hi, strict=False, prec=None):
        bl, bh, _ = self._bounds(prec)
        if lo < 0 or hi > 1:
            raise OutsideSupport(f"[{float(lo)}, {float(hi)}] leaves [0, 1]")
        d = math.floor(lo * bl)
        if math.floor(hi * bh) != d or d >= self.n_branches:
            raise BranchStraddle(f"[{float(lo)}, {float(hi)}] straddles a branch of {self.name}")
        if strict and (lo * bl <= d or (hi == 1 and self.is_integer)):
            raise BranchStraddle(f"{float(lo)} touches a partition endpoint of {self.name}")
        return d, lo, hi

    def forward(self, digit, lo, hi, prec=None):
        bl, bh, r = self._bounds(prec)
        return max(ZERO, r.down(lo * bl - digit)), min(ONE, r.up(hi * bh - digit))

    def inverse(self, digit, lo, hi, prec=None):
        ilo, ihi = self.image(digit, prec)
        lo, hi = max(lo, ilo), min(hi, ihi)
        if lo > hi:
            return None
        bl, bh, r = self._bounds(prec)
        return r.down((lo + digit) / bh), min(ONE, r.up((hi + digit) / bl))

    # Irrational beta: the same interval steps on integers scaled by 2^bits,
    # which avoids a gcd per operation.

    def _scaled_beta(self, prec):
        bits = prec or self.default_prec
        bl, bh = self.beta.interval(bits)
        one = 1 << bits
        return bits, one, bl.numerator * (one // bl.denominator), -((-bh.numerator * one) // bh.denominator)

    def digits_of(self, lo, hi, length, prec):
        if self.beta.exact is not None:
            return super().digits_of(lo, hi, length, prec)
        bits, one, Bl, Bh = self._scaled_beta(prec)
        Lo = (lo.numerator << bits) // lo.denominator
        Hi = -((-hi.numerator << bits) // hi.denominator)
        if Lo < 0 or Hi > one:
            raise OutsideSupport(f"[{float(lo)}, {float(hi)}] leaves [0, 1]")
        nb, shift = self.n_branches, 2 * bits
        digits = []
        for _ in range(length):
            d = (Lo * Bl) >> shift
            if (Hi * Bh) >> shift != d or d >= nb:
                raise BranchStraddle(f"enclosure straddles a branch of {self.name}")
            digits.append(d)
            Lo = max(0, ((Lo * Bl) >> bits) - d * one)
            Hi = min(one, -((-Hi * Bh) >> bits) - d * one)
        return tuple(digits)

    def cylinder_chain(self, digits, prec):
        if self.beta.exact is not None:
            return super().cylinder_chain(digits, prec)
        bits, one, Bl, Bh = self._scaled_beta(prec)
        floor_beta = self.floor_beta
        top = min(one, Bh - floor_beta * one)
        out = [None] * (len(digits) + 1)
        Lo, Hi = 0, one
        out[-1] = (ZERO, ONE)
        for k in range(len(digits) - 1, -1, -1):
            d = digits[k]
            if d >= floor_beta:
                Hi = min(Hi, top)
            if Lo > Hi:
                return out
            Lo = ((Lo + d * one) << bits) // Bh
            Hi = min(one, -((-(Hi + d * one) << bits) // Bl))
            out[k] = (Fraction(Lo, one), Fraction(Hi, one))
        return out

    def orbit_of_one(self, n_terms: int) -> tuple[tuple, tuple, bool]:
        """Greedy digits of 1, values ``T^k 1`` for ``k = 0..``, and whether the orbit hit 0."""
        return _orbit_of_one(self.beta, n_terms)

    def quasi_greedy(self, length: int) -> tuple:
        """First ``length`` digits of the quasi-greedy expansion of 1."""
        digits, _, terminated = self.orbit_of_one(length)
        if not terminated:
            return digits[:length]
        period = digits[:-1] + (digits[-1] - 1,)
        reps = length // len(period) + 1
        return (period * reps)[:length]

    def is_admissible(self, word) -> bool:
        word = tuple(word)
        if not word:
            return True
        if any(not 0 <= d < self.n_branches for d in word):
            return False
        if self.is_integer:
            return True
        q = self.quasi_greedy(len(word))
        n = len(word)
        return all(word[k:] <= q[: n - k] for k in range(n))

    def check_word(self, word) -> None:
        if not self.is_admissible(word):
            raise ValueError(f"word {tuple(word)} is not admissible for {self.name}")

    def derivative_power(self, word) -> float:
        return self.beta_float ** len(word)


@lru_cache(maxsize=64)
def _orbit_of_one(beta: BetaValue, n_terms: int):
    if beta.exact is not None:
        b = beta.exact
        t, digits, values = ONE, [], [ONE]
        for _ in range(n_terms):
            d = math.floor(b * t)
            t = b * t - d
            digits.append(d)
            values.append(t)
            if t == 0:
                return tuple(digits), tuple(values), True
        return tuple(digits), tuple(values), False

    bits = 128 + math.ceil(n_terms * math.log2(float(beta)) * 1.1)
    while True:
        bl, bh = beta.interval(bits)
        lo = hi = ONE
        digits, values = [], [ONE]
        straddled = False
        for _ in range(n_terms):
            dlo, dhi = math.floor(lo * bl), math.floor(hi * bh)
            if dlo != dhi:
                if bits >= DEFAULT_PRECISION_CAP:
                    # beta * T^k(1) sits on an integer to the cap precision:
                    # take it as exact, so beta is a simple Parry number.
                    digits.append(dhi)
                    values.append(ZERO)
                    return tuple(digits), tuple(values), True
                straddled = True
                break
            lo, hi = round_down(lo * bl - dlo, bits), round_up(hi * bh - dlo, bits)
            digits.append(dlo)
            values.append((lo + hi) / 2)
        if not straddled:
            return tuple(digits), tuple(values), False
        bits = min(2 * bits, DEFAULT_PRECISION_CAP)


@dataclass(frozen=True)
class GaussSystem(SystemDescriptor):
    contraction_base = PHI * PHI
    bits_per_digit = 3.5

    def branch(self, digit: int) -> BranchSpec:
        if digit < 1:
            raise ValueError("Gauss digits are >= 1")
        return BranchSpec(digit, 1.0 / (digit + 1), 1.0 / digit, "mobius", float(digit))

    def branches(self, digit_cap=None) -> tuple:
        if digit_cap is None:
            raise ValueError("the Gauss partition is countable; pass digit_cap")
        return tuple(self.branch(a) for a in range(1, digit_cap + 1))

    def digit_float(self, x: float) -> int:
        return int(math.floor(1.0 / x))

    def image(self, digit, prec=None):
        return ZERO, ONE

    def locate(self, lo, hi, strict=False, prec=None):
        if lo <= 0 or hi > 1:
            raise BranchStraddle(f"[{float(lo)}, {float(hi)}] is not inside a Gauss branch")
        a = math.floor(1 / hi)
        if math.floor(1 / lo) != a:
            raise BranchStraddle(f"[{float(lo)}, {float(hi)}] straddles a Gauss branch")
        if strict and hi * a >= 1:
            raise BranchStraddle(f"{float(hi)} touches the partition endpoint 1/{a}")
        return a, lo, hi

    def forward(self, digit, lo, hi, prec=None):
        return 1 / hi - digit, 1 / lo - digit

    def inverse(self, digit, lo, hi, prec=None):
        lo, hi = max(lo, ZERO), min(hi, ONE)
        if lo > hi:
            return None
        return 1 / (digit + hi), 1 / (digit + lo)

    def digits_of(self, lo, hi, length, prec):
        # Euclid on both endpoints at once, in integers
        if lo <= 0 or hi > 1:
            raise BranchStraddle("enclosure is not inside (0, 1]")
        pl, ql = lo.numerator, lo.denominator
        ph, qh = hi.numerator, hi.denominator
        digits = []
        for _ in range(length):
            if pl == 0 or ph == 0:
                raise BranchStraddle("enclosure reaches 0 (a rational endpoint of the expansion)")
            a = qh // ph
            if ql // pl != a:
                raise BranchStraddle("enclosure straddles a Gauss branch")
            digits.append(a)
            # x -> 1/x - a reverses order: new lo from old hi
            pl, ql, ph, qh = qh - a * ph, ph, ql - a * pl, pl
        return tuple(digits)

    def check_word(self, word) -> None:
        if any(int(d) < 1 for d in word):
            raise ValueError("Gauss digits must be >= 1")

    def is_admissible(self, word) -> bool:
        return all(int(d) >= 1 for d in word)

    def derivative_power(self, word) -> float:
        return float(convergent_denominators(word)[-1] ** 2)


def convergent_denominators(word) -> list[int]:
    """``[q_0, q_1, ..., q_n]`` for the continued fraction ``[0; a_1, ..., a_n]``."""
    q_prev, q = 0, 1
    out = [1]
    for a in word:
        q_prev, q = q, a * q + q_prev
        out.append(q)
    return out


@dataclass(frozen=True)
class CantorSystem(SystemDescriptor):
    contraction_base = 3.0
    bits_per_digit = math.log2(3)
    integer_base = 3
    alphabet = (0, 2)

    def branch(self, digit: int) -> BranchSpec:
        if digit == 0:
            return BranchSpec(0, 0.0, 1 / 3, "affine", 0.0, 3.0, closed=True)
        if digit == 2:
            return BranchSpec(2, 2 / 3, 1.0, "affine", 2.0, 3.0, closed=True)
        raise ValueError("Cantor digits are 0 and 2")

    def branches(self, digit_cap=None) -> tuple:
        return (self.branch(0), self.branch(2))

    def digit_float(self, x: float) -> int:
        return 0 if x <= 0.5 else 2

    def image(self, digit, prec=None):
        return ZERO, ONE

    def locate(self, lo, hi, strict=False, prec=None):
        third, two_thirds = Fraction(1, 3), Fraction(2, 3)
        if lo < 0 or hi > 1:
            raise OutsideSupport(f"[{float(lo)}, {float(hi)}] leaves [0, 1]")
        left = lo <= third
        right = hi >= two_thirds
        if left and right:
            raise BranchStraddle(f"[{float(lo)}, {float(hi)}] meets both Cantor branches")
        if left:
            return 0, lo, min(hi, third)
        if right:
            return 2, max(lo, two_thirds), hi
        raise OutsideSupport(f"[{float(lo)}, {float(hi)}] lies in a removed middle third")

    def forward(self, digit, lo, hi, prec=None):
        return 3 * lo - digit, 3 * hi - digit

    def inverse(self, digit, lo, hi, prec=None):
        lo, hi = max(lo, ZERO), min(hi, ONE)
        if lo > hi:
            return None
        return (lo + digit) / 3, (hi + digit) / 3

    def check_word(self, word) -> None:
        if any(int(d) not in (0, 2) for d in word):
            raise ValueError("Cantor digits must be 0 or 2")

    def is_admissible(self, word) -> bool:
        return all(int(d) in (0, 2) for d in word)

    def derivative_power(self, word) -> float:
        return 3.0 ** len(word)


def build_beta_system(beta) -> BetaSystem:
    value = parse_beta(beta)
    if float(value) <= 1:
        raise ValueError(f"beta must be > 1, got {value.label}")
    return BetaSystem(name=f"beta:{value.label}", ahlfors_dim=1.0, support="interval", beta=value)


def build_gauss_system() -> GaussSystem:
    return GaussSystem(name="gauss", ahlfors_dim=1.0, support="interval")


def build_cantor_system() -> CantorSystem:
    return CantorSystem(name="cantor3", ahlfors_dim=math.log(2) / math.log(3), support="cantor")


def parse_system(spec: str) -> SystemDescriptor:
    """``beta:<value>``, ``gauss`` or ``cantor3``."""
    s = spec.strip().lower()
    if s.startswith("beta:"):
        return build_beta_system(s[5:])
    if s == "gauss":
        return build_gauss_system()
    if s in ("cantor3", "cantor"):
        return build_cantor_system()
    raise ValueError(f"unknown system {spec!r}; expected beta:<value>, gauss or cantor3")


def apply(system: SystemDescriptor, x: EnclosedPoint, prec: int | None = None) -> EnclosedPoint:
    """One step of the map on an enclosure.

    The result encloses the exact image of ``[x.lo, x.hi]``, so its radius is
    at most ``x.radius`` times the branch's derivative bound.
    """
    digit, lo, hi = system.locate(x.lo, x.hi, strict=True, prec=prec)
    lo, hi = system.forward(digit, lo, hi, prec)
    return EnclosedPoint.from_interval(lo, hi)
