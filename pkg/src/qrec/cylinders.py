"""Cylinder enumeration and the checks that live on cylinders: expansion
constants, bounded distortion, conformality, Renyi counts and the ball that
contains ``A_m`` inside one cylinder."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .measures import MeasureSpec, measure_for
from .systems import (BetaSystem, CantorSystem, GaussSystem, SystemDescriptor,
                      convergent_denominators)

DEFAULT_LIMIT = 2_000_000
GAUSS_DEFAULT_CAP = 50
WORK_DPS = 50


@dataclass(frozen=True)
class CylinderRecord:
    word: tuple
    left: Fraction
    right: Fraction
    K: float  # inf over the cylinder of |(T^n)'|
    measure: float

    @property
    def n(self) -> int:
        return len(self.word)

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    @property
    def radius(self) -> float:
        return float(self.length) / 2


class CylinderSet(list):
    """Records of one order ``n`` plus what the enumeration left out.

    ``tail_mass`` is the Lebesgue length not covered by the enumerated words
    (Gauss only), ``tail_iv`` bounds their contribution to the Condition IV sum.
    """

    def __init__(self, records, n, tail_mass=Fraction(0), tail_iv=0.0, digit_cap=None):
        super().__init__(records)
        self.n = n
        self.tail_mass = tail_mass
        self.tail_iv = tail_iv
        self.digit_cap = digit_cap


# ---------------------------------------------------------------- words

def admissible_words(system: SystemDescriptor, n: int, digit_cap: int | None = None):
    """All admissible words of length ``n`` in lexicographic order."""
    if isinstance(system, CantorSystem):
        alphabet = (0, 2)
    elif isinstance(system, GaussSystem):
        alphabet = tuple(range(1, (digit_cap or GAUSS_DEFAULT_CAP) + 1))
    else:
        alphabet = system.alphabet
    if not isinstance(system, BetaSystem) or system.is_integer:
        yield from _product(alphabet, n)
        return
    q = system.quasi_greedy(n)
    # ``ties`` holds the start positions k whose suffix still equals q[:len - k]
    stack = [((), frozenset())]
    while stack:
        word, ties = stack.pop()
        if len(word) == n:
            yield word
            continue
        children = []
        pos = len(word)
        for d in alphabet:
            new_ties = set()
            ok = True
            for k in ties | {pos}:
                ref = q[pos - k]
                if d > ref:
                    ok = False
                    break
                if d == ref:
                    new_ties.add(k)
            if ok:
                children.append((word + (d,), frozenset(new_ties)))
        stack.extend(reversed(children))


def _product(alphabet, n):
    if n == 0:
        yield ()
        return
    for head in _product(alphabet, n - 1):
        for d in alphabet:
            yield head + (d,)


def projected_count(system: SystemDescriptor, n: int, digit_cap: int | None = None) -> float:
    if isinstance(system, CantorSystem):
        return 2.0 ** n
    if isinstance(system, GaussSystem):
        return float(digit_cap or GAUSS_DEFAULT_CAP) ** n
    b = system.beta_float
    return b ** (n + 1) / (b - 1)


def cylinder_interval(system: SystemDescriptor, word, prec: int = 256):
    lo, hi = Fraction(0), Fraction(1)
    for d in reversed(word):
        out = system.inverse(d, lo, hi, prec)
        if out is None:
            return None
        lo, hi = out
    return lo, hi


def expansion_constant(system: SystemDescriptor, word) -> float:
    """``K_J``: the infimum of ``|(T^n)'|`` over the cylinder of ``word``."""
    n = len(word)
    if isinstance(system, GaussSystem):
        return float(convergent_denominators(word)[-1] ** 2)
    if isinstance(system, CantorSystem):
        return 3.0 ** n
    return system.beta_float ** n


def enumerate_cylinders(system: SystemDescriptor, n: int, digit_cap: int | None = None,
                        limit: int = DEFAULT_LIMIT, ms: MeasureSpec | None = None) -> CylinderSet:
    """All order-``n`` cylinders (Gauss: digits up to ``digit_cap``)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(system, GaussSystem) and digit_cap is None:
        digit_cap = GAUSS_DEFAULT_CAP
    projected = projected_count(system, n, digit_cap)
    if projected > limit:
        raise ValueError(f"refusing to enumerate ~{projected:.3g} cylinders (limit {limit})")
    ms = ms or measure_for(system)
    records = []
    covered = Fraction(0)
    for word in admissible_words(system, n, digit_cap):
        interval = cylinder_interval(system, word)
        if interval is None:
            continue
        lo, hi = interval
        covered += hi - lo
        if ms.kind == "cantor":
            mass = 2.0 ** -n  # every order-n Cantor cylinder carries equal mass
        else:
            mass = float(ms.measure(float(lo), float(hi)))
        records.append(CylinderRecord(word, lo, hi, expansion_constant(system, word), mass))
    if isinstance(system, GaussSystem):
        tail = 1 - covered
        # K^-1 = q_n^-2 <= 2 / (q_n (q_n + q_{n-1})) = 2 |J|, so omitted words add at most 2 * tail
        return CylinderSet(records, n, tail, 2 * float(tail), digit_cap)
    return CylinderSet(records, n)


def gauss_digit_cap(n: int, limit: int = DEFAULT_LIMIT, cap: int = GAUSS_DEFAULT_CAP) -> int:
    return max(1, min(cap, int(math.floor(limit ** (1.0 / n) + 1e-9))))


def condition_iv_sum(records, delta: float | None = None) -> float:
    """``sum K_J^-delta`` over the records, plus the enumeration tail bound if any."""
    if delta is None:
        delta = 1.0
    total = math.fsum(r.K ** -delta for r in records)
    return total + float(getattr(records, "tail_iv", 0.0))


def condition_iv_bound(system: SystemDescriptor) -> float:
    if isinstance(system, GaussSystem):
        return 2.0
    if isinstance(system, CantorSystem):
        return 1.0
    b = system.beta_float
    return b / (b - 1)


# ---------------------------------------------------------------- map helpers

def _mp_beta(system):
    if system.beta.exact is not None:
        return mpmath.mpf(system.beta.exact.numerator) / system.beta.exact.denominator
    return _beta_mp_value(system)


def _beta_mp_value(system):
    lo, hi = system.beta.interval(WORK_DPS * 4)
    return (mpmath.mpf(lo.numerator) / lo.denominator + mpmath.mpf(hi.numerator) / hi.denominator) / 2


def _step(system, d, x):
    if isinstance(system, GaussSystem):
        return 1 / x - d
    if isinstance(system, CantorSystem):
        return 3 * x - d
    return _mp_beta(system) * x - d


def _step_inverse(system, d, t):
    if isinstance(system, GaussSystem):
        return 1 / (t + d)
    if isinstance(system, CantorSystem):
        return (t + d) / 3
    return (t + d) / _mp_beta(system)


def _step_derivative(system, x):
    if isinstance(system, GaussSystem):
        return 1 / (x * x)
    if isinstance(system, CantorSystem):
        return mpmath.mpf(3)
    return _mp_beta(system)


def iterate(system, word, x):
    """``T^n x`` along ``word`` (``x`` assumed to lie in its cylinder)."""
    with mpmath.workdps(WORK_DPS):
        x = mpmath.mpf(x) if not isinstance(x, Fraction) else mpmath.mpf(x.numerator) / x.denominator
        for d in word:
            x = _step(system, d, x)
        return x


def derivative_along(system, word, x):
    """``|(T^n)'(x)|`` for ``x`` in the cylinder of ``word``."""
    with mpmath.workdps(WORK_DPS):
        x = mpmath.mpf(x) if not isinstance(x, Fraction) else mpmath.mpf(x.numerator) / x.denominator
        total = mpmath.mpf(1)
        for d in word:
            total *= _step_derivative(system, x)
            x = _step(system, d, x)
        return total


def image_interval(system, record: CylinderRecord):
    lo, hi = record.left, record.right
    for d in record.word:
        lo, hi = system.forward(d, lo, hi)
        if lo > hi:
            lo, hi = hi, lo
    return lo, hi


def _interior_points(system, record, count, rng):
    """Points of the cylinder pulled back from uniform points of its image."""
    tlo, thi = image_interval(system, record)
    ts = float(tlo) + float(thi - tlo) * rng.uniform(1e-9, 1 - 1e-9, size=count)
    out = []
    with mpmath.workdps(WORK_DPS):
        for t in ts:
            x = mpmath.mpf(t)
            for d in reversed(record.word):
                x = _step_inverse(system, d, x)
            out.append(x)
    return out


# ---------------------------------------------------------------- Condition III

def distortion_ratio(system, record: CylinderRecord, probes: int = 64, rng=None):
    """Extremes of ``|(T^n)'(x)| / |(T^n)'(y)|`` over probe pairs in the cylinder."""
    if probes < 2:
        raise ValueError("probes must be >= 2")
    rng = rng if rng is not None else np.random.default_rng(0)
    points = _interior_points(system, record, probes, rng)
    ders = [derivative_along(system, record.word, x) for x in points]
    lo, hi = min(ders), max(ders)
    return float(lo / hi), float(hi / lo)


def distortion_bound(system) -> float:
    return 4.0 if isinstance(system, GaussSystem) else 1.0


# ---------------------------------------------------------------- Condition V and pushforward

@dataclass
class ConformalityReport:
    probes: int
    C_needed: float  # smallest C making both ball inclusions hold on every probe
    pushforward_min: float  # min of mu(T^n U) / (K^delta mu(U))
    pushforward_max: float

    def passes(self, C: float) -> bool:
        return self.C_needed <= C * (1 + 1e-9)


def conformality_check(system, record: CylinderRecord, sub_balls: int = 32, rng=None,
                       ms: MeasureSpec | None = None) -> ConformalityReport:
    """Random balls ``B(x0, r)`` inside the cylinder: compare ``T^n B`` with
    ``B(T^n x0, K r / C)`` (inner) and ``B(T^n x0, C K r)`` (outer)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    ms = ms or measure_for(system)
    K = record.K
    delta = system.ahlfors_dim
    left, right = float(record.left), float(record.right)
    centers = _interior_points(system, record, sub_balls, rng)
    needed, ratios = 1.0, []
    with mpmath.workdps(WORK_DPS):
        for x0 in centers:
            room = min(x0 - left, right - x0)
            r = room * mpmath.mpf(rng.uniform(0.05, 0.95))
            if r <= 0:
                continue
            y0 = iterate(system, record.word, x0)
            a = iterate(system, record.word, x0 - r)
            b = iterate(system, record.word, x0 + r)
            a, b = min(a, b), max(a, b)
            scale = K * r
            # inner: B(y0, K r / C) intersected with [0, 1] must lie inside [a, b]
            for gap, edge_free in ((y0 - a, a > 1e-40), (b - y0, b < 1 - mpmath.mpf(10) ** -40)):
                if edge_free:
                    needed = max(needed, float(scale / gap))
            # outer: [a, b] inside B(y0, C K r)
            needed = max(needed, float(max(y0 - a, b - y0) / scale))
            if isinstance(system, CantorSystem):
                continue  # U need not meet the support; handled below
            mu_u = float(ms.measure(float(x0 - r), float(x0 + r)))
            mu_img = float(ms.measure(float(a), float(b)))
            if mu_u > 0:
                ratios.append(mu_img / (K ** delta * mu_u))
    if isinstance(system, CantorSystem):
        ratios = _cantor_pushforward_ratios(record, sub_balls, rng, ms)
    ratios = ratios or [float("nan")]
    return ConformalityReport(sub_balls, needed, float(min(ratios)), float(max(ratios)))


def _cantor_pushforward_ratios(record, count, rng, ms):
    n = record.n
    out = []
    for _ in range(count):
        # U: a random sub-cylinder of J, so mu(U) > 0
        extra = tuple(2 * int(b) for b in rng.integers(0, 2, size=int(rng.integers(1, 6))))
        lo = sum(Fraction(d, 3 ** (k + 1)) for k, d in enumerate(record.word + extra))
        hi = lo + Fraction(1, 3 ** (n + len(extra)))
        img_lo = sum(Fraction(d, 3 ** (k + 1)) for k, d in enumerate(extra))
        img_hi = img_lo + Fraction(1, 3 ** len(extra))
        mu_u = float(ms.measure(float(lo), float(hi)))
        mu_img = float(ms.measure(float(img_lo), float(img_hi)))
        out.append(mu_img / (record.K ** ms.delta * mu_u))
    return out


def conformality_bound(system) -> float:
    return 4.0 if isinstance(system, GaussSystem) else 1.0


# ---------------------------------------------------------------- counts and radii

@dataclass(frozen=True)
class RenyiVerdict:
    n: int
    count: int
    lower: float
    upper: float

    @property
    def ok(self) -> bool:
        return self.lower <= self.count <= self.upper


def renyi_count_check(system: BetaSystem, n: int) -> RenyiVerdict:
    b = system.beta_float
    count = sum(1 for _ in admissible_words(system, n))
    return RenyiVerdict(n, count, b ** n, b ** (n + 1) / (b - 1))


def lemma_constants(system, records) -> tuple[float, float]:
    """Smallest ``c`` with ``rad(J) <= c / K_J`` and ``mu(J) <= c K_J^-delta`` on the records."""
    delta = system.ahlfors_dim
    c_rad = max(r.radius * r.K for r in records)
    c_mu = max(r.measure * r.K ** delta for r in records)
    return c_rad, c_mu


# ---------------------------------------------------------------- restriction ball

@dataclass(frozen=True)
class RestrictionBall:
    center: float
    radius: float
    constant: float  # radius = constant * psi / K
    hits: int
    contains_all: bool


def orientation_preserving(system, word) -> bool:
    if isinstance(system, GaussSystem):
        return len(word) % 2 == 0
    return True


def restriction_ball(system, record: CylinderRecord, psi: float, grid: int = 20_001):
    """Ball containing every grid point ``x`` of the cylinder with ``|T^m x - x| < psi``.

    ``g(x) = T^m x - x`` is monotone on the cylinder with ``|g'| >= K - 1``
    (``K + 1`` when ``T^m`` reverses orientation), so the hits form an
    interval of length at most ``2 psi / (K -+ 1)``.  Returns ``None`` when
    the grid finds no hit.
    """
    K = record.K
    slack = K - 1 if orientation_preserving(system, record.word) else K + 1
    if slack <= 0:
        raise ValueError("cylinder is not expanding enough for a restriction ball")
    left, right = float(record.left), float(record.right)
    xs = np.linspace(left, right, grid)[1:-1]
    hits = []
    with mpmath.workdps(30):
        for x in xs:
            if abs(iterate(system, record.word, x) - x) < psi:
                hits.append(x)
    if not hits:
        return None
    center = (hits[0] + hits[-1]) / 2
    radius = 2 * psi / slack
    inside = all(abs(h - center) <= radius for h in hits)
    return RestrictionBall(center, radius, radius * K / psi, len(hits), inside)


# ---------------------------------------------------------------- export

CYLINDER_COLUMNS = ("word", "left", "right", "measure", "K_Jn")


def cylinder_rows(records):
    for r in records:
        yield ("".join(str(d) if d < 10 else f"[{d}]" for d in r.word),
               f"{float(r.left):.17g}", f"{float(r.right):.17g}", f"{r.measure:.17g}", f"{r.K:.17g}")


def export_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CYLINDER_COLUMNS)
        writer.writerows(cylinder_rows(records))
