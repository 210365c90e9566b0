"""Machine checks of the five structural conditions for one system.

I    Ahlfors regularity: fitted dimension against the declared one.
II   Exponential mixing: correlations of dyadic cells along orbits, with a
     log-linear fit ``r_n ~ C gamma^n``.
III  Bounded distortion: derivative ratios inside cylinders.
IV   ``sum_J K_J^-delta`` bounded uniformly in ``n``.
V    Conformality: images of balls inside cylinders against comparison balls.

A failure inside one check marks that condition FAILED with the error text and
the remaining checks still run.
"""
from __future__ import annotations

import math
import traceback
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cylinders import (condition_iv_bound, condition_iv_sum, conformality_bound,
                        conformality_check, distortion_bound, distortion_ratio,
                        enumerate_cylinders, gauss_digit_cap)
from .measures import MeasureSpec, cantor_cdf, estimate_ahlfors, measure_for, sample_floats
from .systems import BetaSystem, CantorSystem, GaussSystem, SystemDescriptor

MIXING_LEVEL = 6
MIXING_NMAX = 20
NOISE_FACTOR = 10.0
AHLFORS_TOLERANCE = 0.02
TOLERANCE = 1e-9


@dataclass
class ConditionResult:
    name: str
    passed: bool
    statistic: float
    bound: float
    details: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAILED"


@dataclass
class ConditionsReport:
    system: str
    results: list
    gamma: float | None = None
    C: float | None = None

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def result(self, name: str) -> ConditionResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "gamma": self.gamma,
            "C": self.C,
            "conditions": [
                {"condition": r.name, "status": r.status, "statistic": r.statistic,
                 "bound": r.bound, "details": r.details, "error": r.error}
                for r in self.results
            ],
        }


@dataclass(frozen=True)
class ConditionsSettings:
    seed: int = 0
    ahlfors_centers: int = 4000
    mixing_samples: int = 200_000
    mixing_level: int = MIXING_LEVEL
    mixing_nmax: int = MIXING_NMAX
    n_max: int = 10
    distortion_probes: int = 64
    conformality_balls: int = 32
    cylinders_per_order: int = 24
    gauss_cap: int = 50
    limit: int = 200_000


# ---------------------------------------------------------------- helpers

def default_gamma(system: SystemDescriptor) -> float:
    """Analytic guesses used when no mixing fit is available."""
    if isinstance(system, GaussSystem):
        return 1 / ((1 + 5 ** 0.5) / 2) ** 2
    if isinstance(system, CantorSystem):
        return 1 / 3
    return 1 / system.beta_float


def ahlfors_radii(system: SystemDescriptor, smallest=1e-4, largest=0.05) -> list:
    """Radii ``base^-k`` inside ``[smallest, largest]``; base 3 on the Cantor set
    so every radius sits at the same phase of its self-similar structure."""
    base = 3.0 if isinstance(system, CantorSystem) else 2.0
    k0 = math.ceil(math.log(1 / largest, base))
    k1 = math.floor(math.log(1 / smallest, base))
    return [base ** -k for k in range(k0, k1 + 1)]


def _low_bits(rng: np.random.Generator, M: int, width: int) -> list:
    """``M`` uniform random integers in ``[0, 2**width)``.

    They fill every bit below the float draw; a partly zero fill would pin
    late orbit points to the orbit of a short dyadic rational.
    """
    nbytes = (width + 7) // 8
    blob = rng.bytes(M * nbytes)
    mask = (1 << width) - 1
    return [int.from_bytes(blob[i * nbytes:(i + 1) * nbytes], "little") & mask for i in range(M)]


def orbit_samples(system: SystemDescriptor, ms: MeasureSpec, M: int, n_max: int,
                  rng: np.random.Generator) -> np.ndarray:
    """``M x (n_max + 1)`` array of ``T^n x`` for ``x ~ mu``, computed without
    floating-point error growth (digit shifts, or exact rational dynamics)."""
    if isinstance(system, CantorSystem) or (isinstance(system, BetaSystem) and system.is_integer):
        base = 3 if isinstance(system, CantorSystem) else system.integer_base
        tail = math.ceil(60 / math.log2(base))
        if isinstance(system, CantorSystem):
            digits = 2 * rng.integers(0, 2, size=(M, n_max + tail))
        else:
            digits = rng.integers(0, base, size=(M, n_max + tail))
        weights = float(base) ** -np.arange(1, tail + 1)
        return np.stack([digits[:, n:n + tail] @ weights for n in range(n_max + 1)], axis=1)
    if isinstance(system, GaussSystem):
        bits = 64 + 8 * n_max
        x0 = sample_floats(ms, rng, M)
        noise = _low_bits(rng, M, bits - 52)
        out = np.empty((M, n_max + 1))
        for i in range(M):
            # x as an exact rational near the float draw; T is then exact Euclid
            num = (int(x0[i] * 2.0 ** 52) << (bits - 52)) + noise[i]
            p, q = num, 1 << bits
            for n in range(n_max + 1):
                out[i, n] = p / q
                if p == 0:
                    out[i, n + 1:] = 0.0
                    break
                p, q = q % p, p
        return out
    # non-integer beta: fixed-point integer arithmetic with ample guard bits
    bits = 64 + math.ceil(n_max * math.log2(system.beta_float)) + 32
    lo, hi = system.beta.interval(bits)
    one = 1 << bits
    B = ((lo + hi) / 2 * one).__floor__()
    x0 = sample_floats(ms, rng, M)
    noise = _low_bits(rng, M, bits - 52)
    out = np.empty((M, n_max + 1))
    for i in range(M):
        X = (int(x0[i] * 2.0 ** 52) << (bits - 52)) + noise[i]
        for n in range(n_max + 1):
            out[i, n] = X / one
            Y = X * B >> bits
            X = Y - (Y >> bits) * one
    return out


# ---------------------------------------------------------------- Condition II

@dataclass
class MixingFit:
    ns: np.ndarray
    r: np.ndarray  # max |mu(E & T^-n F) - mu(E)mu(F)| / mu(F) over resolved dyadic pairs, nan if none
    gamma: float
    C: float
    fitted_ns: np.ndarray


def _dyadic_measures(ms: MeasureSpec, level: int) -> list:
    out = []
    for ell in range(1, level + 1):
        edges = np.linspace(0.0, 1.0, 2 ** ell + 1)
        out.append(np.asarray(ms.measure(edges[:-1], edges[1:]), dtype=float))
    return out


def mixing_correlations(orbits: np.ndarray, ms: MeasureSpec, level: int = MIXING_LEVEL,
                        noise_factor: float = NOISE_FACTOR):
    """Empirical ``r_n`` for ``n = 1 .. orbits.shape[1] - 1`` over dyadic cells of level ``<= level``."""
    M, width = orbits.shape
    cells = 2 ** level
    bins = np.minimum((orbits * cells).astype(np.int64), cells - 1)
    mus = _dyadic_measures(ms, level)
    r = np.full(width - 1, np.nan)
    for n in range(1, width):
        counts = np.bincount(bins[:, 0] * cells + bins[:, n], minlength=cells * cells)
        joint = counts.reshape(cells, cells) / M
        best = -np.inf
        for le in range(1, level + 1):
            fe = 2 ** (level - le)
            je = joint.reshape(2 ** le, fe, cells).sum(axis=1)
            for lf in range(1, level + 1):
                ff = 2 ** (level - lf)
                jef = je.reshape(2 ** le, 2 ** lf, ff).sum(axis=2)
                mu_e, mu_f = mus[le - 1], mus[lf - 1]
                expected = np.outer(mu_e, mu_f)
                dev = np.abs(jef - expected)
                se = np.sqrt(np.maximum(jef * (1 - jef), expected * (1 - expected)) / M)
                resolved = (dev > noise_factor * se) & (mu_f[None, :] > 0)
                if resolved.any():
                    best = max(best, float(np.max((dev / np.where(mu_f > 0, mu_f, 1.0)[None, :])[resolved])))
        if best > -np.inf:
            r[n - 1] = best
    return r


def fit_mixing(r: np.ndarray, n_min: int = 2) -> MixingFit:
    ns = np.arange(1, r.size + 1)
    keep = (ns >= n_min) & np.isfinite(r) & (r > 0)
    if keep.sum() < 2:
        raise ValueError("fewer than two resolved correlations; mixing rate not identifiable")
    slope, intercept = np.polyfit(ns[keep], np.log(r[keep]), 1)
    gamma = float(math.exp(slope))
    # smallest C with r_n <= C gamma^n on all resolved n
    C = float(np.max(r[keep] / gamma ** ns[keep]))
    return MixingFit(ns, r, gamma, C, ns[keep])


def exact_mixing_residual(system: SystemDescriptor, level_e: int, level_f: int, n: int) -> Fraction:
    """``max |mu(E & T^-n F) - mu(E) mu(F)|`` over base-adic cells, in exact arithmetic.

    Only for integer-base codings (beta in N with Lebesgue measure, or the
    Cantor system with its coin-tossing measure), where the order-``n``
    cylinders map affinely onto ``[0, 1]``.
    """
    if isinstance(system, CantorSystem):
        base, alphabet, cdf = 3, (0, 2), _exact_cantor
    elif isinstance(system, BetaSystem) and system.is_integer:
        base, alphabet, cdf = system.integer_base, tuple(range(system.integer_base)), _exact_uniform
    else:
        raise ValueError("exact mixing residual needs an integer-base system")
    words = [0]
    for _ in range(n):
        words = [w * base + d for w in words for d in alphabet]
    weight = Fraction(1, len(alphabet) ** n)
    worst = Fraction(0)
    for e in range(base ** level_e):
        E = (Fraction(e, base ** level_e), Fraction(e + 1, base ** level_e))
        mu_e = cdf(E[1]) - cdf(E[0])
        for f in range(base ** level_f):
            F = (Fraction(f, base ** level_f), Fraction(f + 1, base ** level_f))
            mu_f = cdf(F[1]) - cdf(F[0])
            joint = Fraction(0)
            for w in words:
                # x = (w + t) / base^n with t ~ mu; x in E and t in F
                lo = max(F[0], E[0] * base ** n - w)
                hi = min(F[1], E[1] * base ** n - w)
                if hi > lo:
                    joint += weight * (cdf(hi) - cdf(lo))
            worst = max(worst, abs(joint - mu_e * mu_f))
    return worst


def _exact_uniform(x: Fraction) -> Fraction:
    return min(max(x, Fraction(0)), Fraction(1))


def _exact_cantor(x: Fraction) -> Fraction:
    return cantor_cdf(min(max(x, Fraction(0)), Fraction(1)))


# ---------------------------------------------------------------- the checks

def _guarded(name, bound, fn):
    try:
        return fn()
    except Exception as exc:  # a failing component must not sink the report
        return ConditionResult(name, False, float("nan"), bound, {"traceback": traceback.format_exc(limit=3)},
                               f"{type(exc).__name__}: {exc}")


def check_ahlfors(system, ms, settings: ConditionsSettings, rng) -> ConditionResult:
    radii = ahlfors_radii(system)
    fit = estimate_ahlfors(ms, radii, settings.ahlfors_centers, rng)
    delta = system.ahlfors_dim
    err = abs(fit.delta - delta)
    return ConditionResult("I", err <= AHLFORS_TOLERANCE, fit.delta, delta,
                           {"delta_declared": delta, "tolerance": AHLFORS_TOLERANCE,
                            "eta1": fit.eta1, "eta2": fit.eta2, "radii": len(radii)})


def check_mixing(system, ms, settings: ConditionsSettings, rng) -> tuple[ConditionResult, MixingFit]:
    orbits = orbit_samples(system, ms, settings.mixing_samples, settings.mixing_nmax, rng)
    r = mixing_correlations(orbits, ms, settings.mixing_level)
    fit = fit_mixing(r)
    details = {"C": fit.C, "fitted_n": [int(n) for n in fit.fitted_ns],
               "r": [None if not np.isfinite(v) else float(v) for v in r]}
    passed = fit.gamma < 1
    if isinstance(system, CantorSystem) or (isinstance(system, BetaSystem) and system.is_integer):
        anchor = max(exact_mixing_residual(system, le, lf, n)
                     for le in (1, 2) for lf in (1, 2) for n in range(le, 4))
        details["exact_residual_n_ge_level"] = str(anchor)
        passed = passed and anchor == 0
    return ConditionResult("II", passed, fit.gamma, 1.0, details), fit


def _sample_records(system, n, settings, rng):
    cap = None
    if isinstance(system, GaussSystem):
        cap = min(settings.gauss_cap, gauss_digit_cap(n, settings.limit))
    records = enumerate_cylinders(system, n, cap, limit=settings.limit)
    if isinstance(system, GaussSystem):
        # always include the all-ones word: its distortion is the largest
        ones = [r for r in records if all(d == 1 for d in r.word)]
    else:
        ones = []
    k = min(len(records), settings.cylinders_per_order)
    picks = list(rng.choice(len(records), size=k, replace=False))
    return ones + [records[int(i)] for i in picks]


def _orders(system, settings):
    if isinstance(system, GaussSystem):
        return range(1, min(settings.n_max, 4) + 1)
    return range(1, min(settings.n_max, 8) + 1)


def check_distortion(system, settings, rng) -> ConditionResult:
    bound = distortion_bound(system)
    worst = 1.0
    for n in _orders(system, settings):
        for rec in _sample_records(system, n, settings, rng):
            lo, hi = distortion_ratio(system, rec, settings.distortion_probes, rng)
            worst = max(worst, hi, 1 / lo)
    return ConditionResult("III", worst <= bound * (1 + TOLERANCE), worst, bound)


def _iv_orders(system, settings):
    if isinstance(system, GaussSystem):
        return range(1, 4)
    n_cap = settings.n_max
    if isinstance(system, BetaSystem):
        b = system.beta_float
        while n_cap > 1 and b ** (n_cap + 1) / (b - 1) > settings.limit:
            n_cap -= 1
    return range(1, n_cap + 1)


def check_iv(system, settings) -> ConditionResult:
    bound = condition_iv_bound(system)
    sums = {}
    for n in _iv_orders(system, settings):
        cap = gauss_digit_cap(n, settings.limit, settings.gauss_cap) if isinstance(system, GaussSystem) else None
        records = enumerate_cylinders(system, n, cap, limit=settings.limit)
        sums[n] = condition_iv_sum(records, system.ahlfors_dim)
    worst = max(sums.values())
    return ConditionResult("IV", worst <= bound * (1 + 1e-12), worst, bound,
                           {"sums": {str(k): v for k, v in sums.items()}})


def check_conformality(system, ms, settings, rng) -> ConditionResult:
    bound = conformality_bound(system)
    worst, push_lo, push_hi = 1.0, math.inf, 0.0
    for n in range(1, 4):
        for rec in _sample_records(system, n, settings, rng):
            rep = conformality_check(system, rec, settings.conformality_balls, rng, ms)
            worst = max(worst, rep.C_needed)
            if np.isfinite(rep.pushforward_min):
                push_lo = min(push_lo, rep.pushforward_min)
                push_hi = max(push_hi, rep.pushforward_max)
    return ConditionResult("V", worst <= bound * (1 + TOLERANCE), worst, bound,
                           {"pushforward_ratio_min": push_lo, "pushforward_ratio_max": push_hi})


def run_conditions(system: SystemDescriptor, settings: ConditionsSettings | None = None) -> ConditionsReport:
    settings = settings or ConditionsSettings()
    ms = measure_for(system)
    rngs = [np.random.default_rng(np.random.SeedSequence(settings.seed, spawn_key=(k,))) for k in range(5)]
    results = [_guarded("I", system.ahlfors_dim, lambda: check_ahlfors(system, ms, settings, rngs[0]))]
    fit_holder = {}

    def mixing():
        res, fit = check_mixing(system, ms, settings, rngs[1])
        fit_holder["fit"] = fit
        return res

    results.append(_guarded("II", 1.0, mixing))
    results.append(_guarded("III", distortion_bound(system), lambda: check_distortion(system, settings, rngs[2])))
    results.append(_guarded("IV", condition_iv_bound(system), lambda: check_iv(system, settings)))
    results.append(_guarded("V", conformality_bound(system),
                            lambda: check_conformality(system, ms, settings, rngs[4])))
    fit = fit_holder.get("fit")
    return ConditionsReport(system.name, results,
                            fit.gamma if fit else None, fit.C if fit else None)
