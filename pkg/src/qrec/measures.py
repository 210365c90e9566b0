"""Invariant measures of the built-in systems: CDFs, densities, samplers,
an invariance residual and an Ahlfors-regularity fit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import SamplerStall
from .precision import EnclosedPoint, as_fraction, round_down, round_up
from .systems import BetaSystem, CantorSystem, GaussSystem, SystemDescriptor, parse_beta

LN2 = math.log(2.0)
PARRY_TAIL = 1e-12
CANTOR_FLOAT_DIGITS = 34


# ---------------------------------------------------------------- Gauss

def gauss_cdf(x):
    """``log(1 + x) / log 2``; accepts floats, arrays, Fractions and mpf values."""
    if isinstance(x, np.ndarray):
        if np.any((x < 0) | (x > 1)):
            raise ValueError("gauss_cdf is defined on [0, 1]")
        return np.log1p(x) / LN2
    if not 0 <= x <= 1:
        raise ValueError(f"gauss_cdf is defined on [0, 1], got {x}")
    if isinstance(x, (Fraction, mpmath.mpf)):
        return mpmath.log1p(mpmath.mpf(x) if isinstance(x, mpmath.mpf)
                            else mpmath.mpf(x.numerator) / x.denominator) / mpmath.log(2)
    return math.log1p(x) / LN2


def gauss_density(x):
    return 1.0 / ((1.0 + np.asarray(x, dtype=float)) * LN2)


# ---------------------------------------------------------------- Parry

@dataclass(frozen=True)
class ParryData:
    """Orbit of 1 and normalisation for the Parry density of one beta."""

    beta: float
    orbit: np.ndarray  # T^n 1 for n = 0 .. terms-1 (zeros after termination)
    weights: np.ndarray  # beta^-n
    norm: float  # F = sum_n beta^-n T^n 1  (= integral of the unnormalised density)

    @property
    def sup(self) -> float:
        # the density is largest just above 0, where every nonzero T^n 1 counts
        return float(self.weights[self.orbit > 0].sum()) / self.norm


_PARRY_CACHE: dict = {}


def parry_data(beta) -> ParryData:
    value = parse_beta(beta)
    if value.label in _PARRY_CACHE:
        return _PARRY_CACHE[value.label]
    b = float(value)
    if b <= 1:
        raise ValueError(f"beta must be > 1, got {value.label}")
    terms = 1
    while b ** -terms / (1 - 1 / b) >= PARRY_TAIL:
        terms += 1
    from .systems import build_beta_system

    _, values, _ = build_beta_system(value).orbit_of_one(terms)
    orbit = np.zeros(terms)
    for k, t in enumerate(values[:terms]):
        orbit[k] = float(t)
    weights = b ** -np.arange(terms, dtype=float)
    data = ParryData(b, orbit, weights, float(np.dot(weights, orbit)))
    _PARRY_CACHE[value.label] = data
    return data


def parry_density(beta, x):
    """Invariant density ``F^-1 sum_{n >= 0: x < T^n 1} beta^-n`` (vectorised in ``x``)."""
    data = parry_data(beta)
    xs = np.asarray(x, dtype=float)
    if np.any((xs < 0) | (xs > 1)):
        raise ValueError("parry_density is defined on [0, 1)")
    h = (xs[..., None] < data.orbit).astype(float) @ data.weights / data.norm
    return float(h) if np.ndim(h) == 0 else h


def parry_cdf(beta, x):
    """``F^-1 sum_n beta^-n min(x, T^n 1)``."""
    data = parry_data(beta)
    xs = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    c = np.minimum(xs[..., None], data.orbit) @ data.weights / data.norm
    return float(c) if np.ndim(c) == 0 else c


# ---------------------------------------------------------------- Cantor

def cantor_cdf(x):
    """Cantor function.  Exact (via the eventually periodic ternary expansion)
    for Fractions; 34 ternary digits for floats and arrays.

    The function is only Hoelder continuous of exponent log 2 / log 3, so one
    ulp of input uncertainty already moves the value by about 1e-10; the float
    path is accurate to that level and no better.
    """
    if isinstance(x, np.ndarray):
        return _cantor_cdf_array(x)
    if isinstance(x, (Fraction, int)):
        return _cantor_cdf_exact(Fraction(x))
    return float(_cantor_cdf_array(np.array([float(x)]))[0])


def _cantor_cdf_array(x: np.ndarray) -> np.ndarray:
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    out = np.zeros_like(x)
    alive = x < 1.0
    out[~alive] = 1.0
    scale = 0.5
    for _ in range(CANTOR_FLOAT_DIGITS):
        x3 = 3.0 * x
        d = np.minimum(np.floor(x3), 2.0)
        one = alive & (d == 1)
        out += np.where(alive & (d >= 1), scale, 0.0)
        alive &= ~one
        x = x3 - d
        scale /= 2
    return out


def _cantor_cdf_exact(x: Fraction) -> Fraction:
    if not 0 <= x <= 1:
        raise ValueError("cantor_cdf is defined on [0, 1]")
    if x == 1:
        return Fraction(1)
    p, q = x.numerator, x.denominator
    seen = {}
    bits = []
    while p not in seen:
        seen[p] = len(bits)
        d, p = divmod(3 * p, q)
        if d == 1:
            bits.append(1)
            return sum((Fraction(b, 2 ** (k + 1)) for k, b in enumerate(bits)), Fraction(0))
        bits.append(d // 2)
    start = seen[p]
    head = sum((Fraction(b, 2 ** (k + 1)) for k, b in enumerate(bits[:start])), Fraction(0))
    period = bits[start:]
    cycle = sum((Fraction(b, 2 ** (k + 1)) for k, b in enumerate(period)), Fraction(0))
    return head + cycle / 2 ** start / (1 - Fraction(1, 2 ** len(period)))


# ---------------------------------------------------------------- MeasureSpec

@dataclass(frozen=True)
class MeasureSpec:
    system: SystemDescriptor
    kind: str  # "parry", "gauss" or "cantor"
    eta: tuple | None = None  # analytic (eta_1, eta_2) for mu(B(x, r)) / r^delta on interior balls

    @property
    def delta(self) -> float:
        return self.system.ahlfors_dim

    @property
    def has_cdf(self) -> bool:
        return True

    def cdf(self, x):
        if self.kind == "gauss":
            return gauss_cdf(np.clip(np.asarray(x, dtype=float), 0, 1))
        if self.kind == "cantor":
            return _cantor_cdf_array(np.asarray(x, dtype=float))
        return parry_cdf(self.system.beta, x)

    def cdf_mp(self, x):
        """High-accuracy CDF for exact or mpmath arguments."""
        if self.kind == "gauss":
            x = min(max(as_fraction(x), Fraction(0)), Fraction(1))
            return gauss_cdf(x)
        if self.kind == "cantor":
            x = min(max(as_fraction(x), Fraction(0)), Fraction(1))
            return mpmath.mpf(_cantor_cdf_exact(x).numerator) / _cantor_cdf_exact(x).denominator
        return mpmath.mpf(parry_cdf(self.system.beta, float(x)))

    def measure(self, a, b):
        """Measure of the interval ``[a, b]`` (clipped to ``[0, 1]``)."""
        a = np.clip(np.asarray(a, dtype=float), 0, 1)
        b = np.clip(np.asarray(b, dtype=float), 0, 1)
        return np.maximum(self.cdf(b) - self.cdf(a), 0.0)

    def density(self, x):
        if self.kind == "gauss":
            return gauss_density(x)
        if self.kind == "parry":
            return parry_density(self.system.beta, x)
        raise ValueError("the Cantor measure has no density")


def measure_for(system: SystemDescriptor) -> MeasureSpec:
    if isinstance(system, GaussSystem):
        return MeasureSpec(system, "gauss", (1 / LN2, 2 / LN2))
    if isinstance(system, CantorSystem):
        return MeasureSpec(system, "cantor")
    if isinstance(system, BetaSystem):
        data = parry_data(system.beta)
        low = float(data.weights[0]) / data.norm
        return MeasureSpec(system, "parry", (2 * low, 2 * data.sup))
    raise TypeError(f"no invariant measure known for {system!r}")


# ---------------------------------------------------------------- sampling

def _uniform_enclosure(seed: int, bits: int):
    """Prefix-stable uniform: the first ``bits`` random bits of one stream."""
    words = -(-bits // 64)
    raw = np.random.PCG64(seed).random_raw(words)
    u = 0
    for w in raw:
        u = (u << 64) | int(w)
    lo = Fraction(u, 1 << (64 * words))
    return lo, lo + Fraction(1, 1 << (64 * words))


def _enclosed_uniform(seed: int, bits: int) -> EnclosedPoint:
    lo, hi = _uniform_enclosure(seed, bits)
    return EnclosedPoint.from_interval(lo, hi, 64 * (-(-bits // 64)),
                                       lambda p: _enclosed_uniform(seed, p))


def _enclosed_gauss(seed: int, bits: int) -> EnclosedPoint:
    ulo, uhi = _uniform_enclosure(seed, bits)
    prec = 64 * (-(-bits // 64))
    with mpmath.workprec(prec + 32):
        lo = mpmath.power(2, mpmath.mpf(ulo.numerator) / ulo.denominator) - 1
        hi = mpmath.power(2, mpmath.mpf(uhi.numerator) / uhi.denominator) - 1
    slack = Fraction(1, 1 << prec)
    lo = max(Fraction(0), round_down(as_fraction(lo), prec) - slack)
    hi = min(Fraction(1), round_up(as_fraction(hi), prec) + slack)
    return EnclosedPoint.from_interval(lo, hi, prec, lambda p: _enclosed_gauss(seed, p))


def _enclosed_cantor(seed: int, bits: int) -> EnclosedPoint:
    digits = -(-bits * 100 // 158)  # ternary digits covering ``bits`` binary digits
    raw = np.random.PCG64(seed).random_raw(-(-digits // 64))
    value = 0
    for k in range(digits):
        bit = (int(raw[k // 64]) >> (63 - k % 64)) & 1
        value = 3 * value + 2 * bit
    lo = Fraction(value, 3 ** digits)
    hi = lo + Fraction(1, 3 ** digits)
    return EnclosedPoint.from_interval(lo, hi, bits, lambda p: _enclosed_cantor(seed, p))


def sample(ms: MeasureSpec, rng: np.random.Generator, prec: int = 256,
           max_tries: int = 10_000) -> EnclosedPoint:
    """One certified draw from ``ms`` with a ``refine`` hook for more bits.

    Gauss: ``x = 2^u - 1``; Cantor: i.i.d. fair digits in {0, 2}; Parry:
    rejection against Lebesgue with envelope ``sup h``.
    """
    if ms.kind == "gauss":
        return _enclosed_gauss(int(rng.integers(2 ** 63)), prec)
    if ms.kind == "cantor":
        return _enclosed_cantor(int(rng.integers(2 ** 63)), prec)
    data = parry_data(ms.system.beta)
    envelope = data.sup
    for _ in range(max_tries):
        point = _enclosed_uniform(int(rng.integers(2 ** 63)), prec)
        if rng.random() * envelope < parry_density(ms.system.beta, float(point.center)):
            return point
    raise SamplerStall(f"Parry rejection sampler exceeded {max_tries} tries")


def sample_floats(ms: MeasureSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorised float draws for statistics that do not need certification."""
    if ms.kind == "gauss":
        return np.expm1(rng.random(size) * LN2)
    if ms.kind == "cantor":
        digits = 2 * rng.integers(0, 2, size=(size, CANTOR_FLOAT_DIGITS))
        return digits @ (3.0 ** -np.arange(1, CANTOR_FLOAT_DIGITS + 1))
    data = parry_data(ms.system.beta)
    out = np.empty(0)
    while out.size < size:
        need = int((size - out.size) * data.sup * 1.2) + 16
        u = rng.random(need)
        keep = rng.random(need) * data.sup < parry_density(ms.system.beta, u)
        out = np.concatenate([out, u[keep]])
    return out[:size]


# ---------------------------------------------------------------- invariance

@dataclass
class InvarianceReport:
    cells: np.ndarray  # (n_cells, 2) endpoints
    measure: np.ndarray  # mu(A)
    preimage: np.ndarray  # mu(T^-1 A)
    max_discrepancy: float = field(init=False)

    def __post_init__(self):
        self.max_discrepancy = float(np.max(np.abs(self.preimage - self.measure)))


def preimage_measure(ms: MeasureSpec, a: float, b: float) -> float:
    """``mu(T^-1 [a, b])``, summing the preimage pieces branch by branch."""
    system = ms.system
    if ms.kind == "gauss":
        with mpmath.workdps(30):
            fa, fb = mpmath.mpf(a), mpmath.mpf(b)

            def term(k):
                return mpmath.log((1 + 1 / (k + fa)) / (1 + 1 / (k + fb)))

            total = mpmath.nsum(term, [1, mpmath.inf]) / mpmath.log(2)
        return float(total)
    if ms.kind == "cantor":
        pieces = [((a + d) / 3, (b + d) / 3) for d in (0, 2)]
    else:
        beta = system.beta_float
        pieces = []
        for br in system.branches():
            top = 1.0 if br.digit < system.floor_beta or system.is_integer else beta - system.floor_beta
            lo, hi = a, min(b, top)
            if hi > lo:
                pieces.append(((lo + br.digit) / beta, (hi + br.digit) / beta))
    return float(sum(ms.measure(lo, hi) for lo, hi in pieces))


def verify_invariance(ms: MeasureSpec, n_cells: int = 64) -> InvarianceReport:
    """Compare ``mu(T^-1 A)`` with ``mu(A)`` on the ``n_cells`` cells ``[k/n, (k+1)/n)``."""
    if n_cells < 2:
        raise ValueError("n_cells must be >= 2")
    edges = np.linspace(0.0, 1.0, n_cells + 1)
    cells = np.column_stack([edges[:-1], edges[1:]])
    mu = np.array([float(ms.measure(a, b)) for a, b in cells])
    pre = np.array([preimage_measure(ms, a, b) for a, b in cells])
    return InvarianceReport(cells, mu, pre)


# ---------------------------------------------------------------- Ahlfors fit

@dataclass
class AhlforsFit:
    delta: float
    eta1: float
    eta2: float
    intercept: float
    radii: np.ndarray
    ball_measures: np.ndarray  # (centers, radii)


def ball_measure(ms: MeasureSpec, x, r) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return ms.measure(x - r, x + r)


def estimate_ahlfors(ms: MeasureSpec, radii, centers: int, rng: np.random.Generator,
                     interior: bool = False) -> AhlforsFit:
    """Least-squares fit of ``log mu(B(x, r))`` against ``log r`` over sampled centres.

    ``interior`` keeps only balls inside ``[0, 1]``.
    """
    radii = np.asarray(sorted(set(float(r) for r in radii)))
    if radii.size < 2:
        raise ValueError("degenerate Ahlfors fit: need at least two distinct radii")
    x = sample_floats(ms, rng, centers)
    masses = np.stack([ball_measure(ms, x, r) for r in radii], axis=1)
    logs_r = np.broadcast_to(np.log(radii), masses.shape)
    keep = masses > 0
    if interior:
        keep &= ((x[:, None] - radii[None, :]) >= 0) & ((x[:, None] + radii[None, :]) <= 1)
    slope, intercept = np.polyfit(logs_r[keep], np.log(masses[keep]), 1)
    ratio = masses[keep] / np.power(np.broadcast_to(radii, masses.shape)[keep], ms.delta)
    return AhlforsFit(float(slope), float(ratio.min()), float(ratio.max()), float(intercept),
                      radii, masses)
