"""Monte Carlo estimators for the recurrence sets ``A_n = {x : d(T^n x, x) < psi(n)}``.

Every sampled point is classified at every requested ``n`` with certified
three-valued verdicts.  The engine works in chunks of fixed size; chunk ``c``
draws from ``SeedSequence(seed, spawn_key=(c,))``, so results do not depend on
how many worker processes share the chunks.

Two classification paths exist:

* integer bases (``beta`` in N, the Cantor tripling map): the first ``L``
  digits are drawn directly, ``x`` is the integer ``X`` over ``b^L`` and the
  shift is ``X mod b^(L-n)``.  All comparisons are exact integer arithmetic.
* everything else: a certified point is drawn from the invariant measure,
  its digits are extracted with precision doubling, and the verdicts compare
  exact rational cylinder enclosures.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InsufficientDigits, PrecisionExhausted, SamplerStall
from .measures import MeasureSpec, measure_for, sample
from .precision import (DEFAULT_PRECISION_CAP, EnclosedPoint, HitVerdict, as_fraction,
                        classify_box, extract_digits)
from .rates import RateFunction, SeriesVerdict, series_classify
from .systems import GaussSystem, SystemDescriptor, parse_system

HIT, MISS, AMBIGUOUS = 1, 0, -1
DEFAULT_CHUNK = 4096
DEFAULT_AMBIGUITY_CAP = 1e-3


@dataclass(frozen=True)
class EngineConfig:
    workers: int = 1
    chunk_size: int = DEFAULT_CHUNK
    guard: int | None = None
    prec: int | None = None
    precision_cap: int = DEFAULT_PRECISION_CAP
    digits: int | None = None  # override the digit budget L
    max_resample_fraction: float = 0.01
    ambiguity_cap: float = DEFAULT_AMBIGUITY_CAP


@dataclass
class OrbitVerdicts:
    """Verdict codes (``samples x len(ns)``; 1 hit, 0 miss, -1 ambiguous)."""

    ns: np.ndarray
    codes: np.ndarray
    resampled: int
    digits: int
    lower_ratio: np.ndarray | None = None  # certified lower bound of d(T^n x, x) / psi(n)

    @property
    def ambiguous_rate(self) -> float:
        return float(np.mean(self.codes == AMBIGUOUS)) if self.codes.size else 0.0


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    samples: int  # non-ambiguous samples
    hits: int
    ambiguous: int
    seed: int
    resampled: int = 0
    ambiguity_cap: float = DEFAULT_AMBIGUITY_CAP

    @property
    def ambiguous_rate(self) -> float:
        total = self.samples + self.ambiguous
        return self.ambiguous / total if total else 0.0

    @property
    def valid(self) -> bool:
        return self.samples > 0 and self.ambiguous_rate < self.ambiguity_cap

    @classmethod
    def from_counts(cls, hits, samples, ambiguous, seed, resampled=0, cap=DEFAULT_AMBIGUITY_CAP):
        hits, samples, ambiguous = int(hits), int(samples), int(ambiguous)
        p = hits / samples if samples else float("nan")
        se = math.sqrt(p * (1 - p) / samples) if samples else float("nan")
        return cls(p, se, samples, hits, ambiguous, seed, resampled, cap)


# ---------------------------------------------------------------- digit budget

def digit_budget(system: SystemDescriptor, n_max: int, psi_min: float, guard: int | None = None) -> int:
    g = system.guard_digits() if guard is None else guard
    return n_max + g + system.digits_for_tolerance(min(psi_min, 1.0))


def _thresholds(psi: RateFunction, ns) -> list:
    return [min(psi.exact(n), Fraction(2)) for n in ns]


# ---------------------------------------------------------------- chunk workers

@lru_cache(maxsize=16)
def _system(name: str) -> SystemDescriptor:
    return parse_system(name)


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _integer_chunk(base, alphabet_scale, ns, thresholds, count, rng, L, want_ratio):
    """Exact verdicts when the coding is a base-``base`` expansion with free digits.

    ``alphabet_scale`` is 1 for beta in N (digits 0..b-1) and 2 for the Cantor
    system (digits 0, 2 drawn as 0, 1 and doubled).
    """
    span = base if alphabet_scale == 1 else 2
    digits = rng.integers(0, span, size=(count, L), dtype=np.int64) * alphabet_scale
    per_limb = max(1, int(62 / math.log2(base)))
    limbs = []
    for start in range(0, L, per_limb):
        block = digits[:, start:start + per_limb]
        value = np.zeros(count, dtype=np.int64)
        for j in range(block.shape[1]):
            value = value * base + block[:, j]
        limbs.append((value, block.shape[1]))
    B = base ** L
    pows = {n: base ** n for n in ns}
    mods = {n: base ** (L - n) for n in ns}
    codes = np.empty((count, len(ns)), dtype=np.int8)
    ratios = np.empty((count, len(ns))) if want_ratio else None
    for i in range(count):
        X = 0
        for value, width in limbs:
            X = X * base ** width + int(value[i])
        for j, n in enumerate(ns):
            p, q = thresholds[j].numerator, thresholds[j].denominator
            bn = pows[n]
            y_lo = (X % mods[n]) * bn
            y_hi = y_lo + bn
            limit = p * B
            if max(y_hi - X, X + 1 - y_lo) * q < limit:
                codes[i, j] = HIT
            elif (y_lo - X - 1) * q > limit or (X - y_hi) * q > limit:
                codes[i, j] = MISS
            else:
                codes[i, j] = AMBIGUOUS
            if want_ratio:
                gap = max(y_lo - X - 1, X - y_hi, 0)
                ratios[i, j] = gap * q / (p * B)
    return codes, ratios


def _gauss_cylinders(digits):
    """Endpoints of the cylinders of ``digits[k:]`` as integer pairs, for every k.

    Both endpoints are continued-fraction values, so each pair stays coprime
    without gcd reductions.  ``out[k] = ((p0, q0), (p1, q1))`` are the images
    of tails 0 and 1.
    """
    L = len(digits)
    out = [None] * (L + 1)
    a = (0, 1)
    b = (1, 1)
    out[L] = (a, b)
    for k in range(L - 1, -1, -1):
        d = digits[k]
        a = (a[1], d * a[1] + a[0])
        b = (b[1], d * b[1] + b[0])
        out[k] = (a, b)
    return out


def _ordered(pair):
    (p0, q0), (p1, q1) = pair
    if p0 * q1 <= p1 * q0:
        return (p0, q0), (p1, q1)
    return (p1, q1), (p0, q0)


def _gauss_verdicts(digits, ns, thresholds, want_ratio):
    cyl = _gauss_cylinders(digits)
    (xlp, xlq), (xhp, xhq) = _ordered(cyl[0])
    codes, ratios = [], []
    for j, n in enumerate(ns):
        (ylp, ylq), (yhp, yhq) = _ordered(cyl[n])
        p, q = thresholds[j].numerator, thresholds[j].denominator

        def less(num_a, den_a):  # a / den < p / q
            return num_a * q < p * den_a

        def more(num_a, den_a):
            return num_a * q > p * den_a

        # differences as fractions with positive denominators
        d1 = (yhp * xlq - xlp * yhq, yhq * xlq)  # y_hi - x_lo
        d2 = (xhp * ylq - ylp * xhq, xhq * ylq)  # x_hi - y_lo
        d3 = (ylp * xhq - xhp * ylq, ylq * xhq)  # y_lo - x_hi
        d4 = (xlp * yhq - yhp * xlq, xlq * yhq)  # x_lo - y_hi
        if less(*d1) and less(*d2):
            codes.append(HIT)
        elif more(*d3) or more(*d4):
            codes.append(MISS)
        else:
            codes.append(AMBIGUOUS)
        if want_ratio:
            gap = max(Fraction(*d3), Fraction(*d4), Fraction(0))
            ratios.append(float(gap / thresholds[j]))
    return codes, ratios


def _generic_verdicts(seq, ns, thresholds, want_ratio):
    cyl = seq.cylinders
    x_lo, x_hi = cyl[0]
    codes, ratios = [], []
    for j, n in enumerate(ns):
        y_lo, y_hi = cyl[n]
        verdict = classify_box(x_lo, x_hi, y_lo, y_hi, thresholds[j])
        codes.append(verdict.value)
        if want_ratio:
            gap = max(y_lo - x_hi, x_lo - y_hi, Fraction(0))
            ratios.append(float(gap / thresholds[j]))
    return codes, ratios


def _sampled_chunk(system, ns, thresholds, count, rng, L, cfg: EngineConfig, want_ratio):
    ms = measure_for(system)
    prec = cfg.prec or system.bits_for_digits(L)
    codes = np.empty((count, len(ns)), dtype=np.int8)
    ratios = np.empty((count, len(ns))) if want_ratio else None
    resampled = 0
    for i in range(count):
        while True:
            try:
                point = sample(ms, rng, prec)
                digits = extract_digits(system, point, L, cap=cfg.precision_cap)
                break
            except (PrecisionExhausted, SamplerStall):
                resampled += 1
                if resampled > max(10, cfg.max_resample_fraction * count):
                    raise PrecisionExhausted(
                        f"{resampled} draws on {system.name} could not be certified "
                        f"within {cfg.precision_cap} bits")
        if isinstance(system, GaussSystem):
            row, rrow = _gauss_verdicts(digits.digits, ns, thresholds, want_ratio)
        else:
            row, rrow = _generic_verdicts(digits, ns, thresholds, want_ratio)
        codes[i] = row
        if want_ratio:
            ratios[i] = rrow
    return codes, ratios, resampled


def _run_chunk(task):
    name, ns, thresholds, count, seed, chunk, L, cfg, want_ratio = task
    system = _system(name)
    rng = _chunk_rng(seed, chunk)
    base = getattr(system, "integer_base", None)
    if base is not None and cfg.prec is None:
        scale = 2 if base == 3 and system.name.startswith("cantor") else 1
        codes, ratios = _integer_chunk(base, scale, ns, thresholds, count, rng, L, want_ratio)
        return codes, ratios, 0
    return _sampled_chunk(system, ns, thresholds, count, rng, L, cfg, want_ratio)


# ---------------------------------------------------------------- engine

def classify_orbits(system: SystemDescriptor, psi: RateFunction, ns, M: int, seed: int,
                    cfg: EngineConfig | None = None, want_ratio: bool = False) -> OrbitVerdicts:
    """Verdicts for ``M`` points drawn from the invariant measure at every ``n`` in ``ns``."""
    cfg = cfg or EngineConfig()
    ns = [int(n) for n in ns]
    if not ns or min(ns) < 1:
        raise ValueError("ns must be a non-empty list of positive integers")
    if M < 1:
        raise ValueError("M must be >= 1")
    thresholds = _thresholds(psi, ns)
    guard = system.guard_digits() if cfg.guard is None else cfg.guard
    L = cfg.digits or digit_budget(system, max(ns), float(min(thresholds)), guard)
    if max(ns) + guard > L:
        raise InsufficientDigits(f"digit budget {L} < n_max + guard = {max(ns) + guard}")
    sizes = [min(cfg.chunk_size, M - start) for start in range(0, M, cfg.chunk_size)]
    tasks = [(system.name, ns, thresholds, size, seed, c, L, cfg, want_ratio)
             for c, size in enumerate(sizes)]
    if cfg.workers <= 1 or len(tasks) == 1:
        results = [_run_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_chunk, tasks))
    codes = np.concatenate([r[0] for r in results], axis=0)
    ratios = np.concatenate([r[1] for r in results], axis=0) if want_ratio else None
    resampled = sum(r[2] for r in results)
    if resampled > max(10, cfg.max_resample_fraction * M):
        raise PrecisionExhausted(f"{resampled} resamples exceed the cap for M={M}")
    return OrbitVerdicts(np.asarray(ns), codes, resampled, L, ratios)


def verdicts_for_points(system: SystemDescriptor, psi: RateFunction, ns, points,
                        cfg: EngineConfig | None = None, want_ratio: bool = False) -> OrbitVerdicts:
    """Deterministic mode: verdicts for the given points instead of random draws."""
    cfg = cfg or EngineConfig()
    ns = [int(n) for n in ns]
    thresholds = _thresholds(psi, ns)
    guard = system.guard_digits() if cfg.guard is None else cfg.guard
    L = cfg.digits or digit_budget(system, max(ns), float(min(thresholds)), guard)
    codes = np.empty((len(points), len(ns)), dtype=np.int8)
    ratios = np.empty((len(points), len(ns))) if want_ratio else None
    for i, x in enumerate(points):
        if not isinstance(x, EnclosedPoint):
            x = EnclosedPoint.exact(as_fraction(x))
        seq = extract_digits(system, x, L, cap=cfg.precision_cap)
        row, rrow = _generic_verdicts(seq, ns, thresholds, want_ratio)
        codes[i] = row
        if want_ratio:
            ratios[i] = rrow
    return OrbitVerdicts(np.asarray(ns), codes, 0, L, ratios)


# ---------------------------------------------------------------- estimators

def _estimate_column(verdicts: OrbitVerdicts, j: int, seed: int, cfg: EngineConfig) -> Estimate:
    col = verdicts.codes[:, j]
    amb = int(np.sum(col == AMBIGUOUS))
    hits = int(np.sum(col == HIT))
    return Estimate.from_counts(hits, col.size - amb, amb, seed, verdicts.resampled, cfg.ambiguity_cap)


def estimate_many(system, ms, psi: RateFunction, ns, M: int, seed: int,
                  cfg: EngineConfig | None = None, independent: bool = False) -> list[Estimate]:
    """``mu(A_n)`` for each ``n``; one coupled sample set unless ``independent``."""
    cfg = cfg or EngineConfig()
    ns = [int(n) for n in ns]
    if independent:
        out = []
        for n in ns:
            sub_seed = int(np.random.SeedSequence((seed, n)).generate_state(1)[0])
            v = classify_orbits(system, psi, [n], M, sub_seed, cfg)
            out.append(_estimate_column(v, 0, seed, cfg))
        return out
    v = classify_orbits(system, psi, ns, M, seed, cfg)
    return [_estimate_column(v, j, seed, cfg) for j in range(len(ns))]


def estimate_An(system, ms, psi: RateFunction, n: int, M: int, seed: int,
                cfg: EngineConfig | None = None) -> Estimate:
    """Monte Carlo ``mu(A_n)`` with binomial standard error; ambiguous draws excluded."""
    return estimate_many(system, ms, psi, [n], M, seed, cfg)[0]


@dataclass(frozen=True)
class PairEstimate:
    pair: Estimate
    first: Estimate  # mu(A_m) from the same draws
    second: Estimate  # mu(A_n) from the same draws
    m: int
    n: int


def pair_from_codes(codes_m, codes_n, seed, resampled=0, cap=DEFAULT_AMBIGUITY_CAP) -> Estimate:
    amb = (codes_m == AMBIGUOUS) | (codes_n == AMBIGUOUS)
    hits = (codes_m == HIT) & (codes_n == HIT)
    return Estimate.from_counts(hits.sum(), (~amb).sum(), amb.sum(), seed, resampled, cap)


def estimate_pair(system, ms, psi: RateFunction, m: int, n: int, M: int, seed: int,
                  cfg: EngineConfig | None = None) -> PairEstimate:
    """``mu(A_m & A_n)``: both verdicts Hit; ambiguous if either verdict is."""
    if not 1 <= m < n:
        raise ValueError("estimate_pair needs 1 <= m < n")
    cfg = cfg or EngineConfig()
    v = classify_orbits(system, psi, [m, n], M, seed, cfg)
    pair = pair_from_codes(v.codes[:, 0], v.codes[:, 1], seed, v.resampled, cfg.ambiguity_cap)
    return PairEstimate(pair, _estimate_column(v, 0, seed, cfg), _estimate_column(v, 1, seed, cfg), m, n)


def pair_matrix(verdicts: OrbitVerdicts):
    """All pair frequencies from one coupled run: ``(hits, valid)`` matrices over ``ns x ns``."""
    hit = (verdicts.codes == HIT).astype(np.int64)
    ok = (verdicts.codes != AMBIGUOUS).astype(np.int64)
    return hit.T @ hit, ok.T @ ok


@dataclass(frozen=True)
class Ratio:
    value: float
    std_error: float
    infinite: bool = False


def quasi_independence_ratio(est_m: Estimate, est_n: Estimate, est_pair: Estimate) -> Ratio:
    """``mu(A_m & A_n) / (mu(A_m) mu(A_n))`` with a delta-method standard error."""
    if est_m.value == 0 or est_n.value == 0:
        return Ratio(float("inf"), float("inf"), True)
    r = est_pair.value / (est_m.value * est_n.value)
    rel = 0.0
    for e in (est_m, est_n, est_pair):
        if e.value > 0:
            rel += (e.std_error / e.value) ** 2
    return Ratio(r, abs(r) * math.sqrt(rel))


def pair_bound_term(psi: RateFunction, delta: float, gamma: float, m: int, n: int) -> float:
    """``psi^d(m) psi^d(n) + gamma^(n-m) psi^d(n) + gamma^n psi^d(m)``."""
    pm, pn = float(psi(m)) ** delta, float(psi(n)) ** delta
    return pm * pn + gamma ** (n - m) * pn + gamma ** n * pm


@dataclass(frozen=True)
class PairConstant:
    c: float  # smallest c with estimate <= c * term + 3 std errors on every pair
    worst: tuple  # (m, n) attaining it
    pairs: int


def fit_pair_constant(rows, psi: RateFunction, delta: float, gamma: float) -> PairConstant:
    """One global constant for the pair bound over ``rows = [(m, n, Estimate), ...]``."""
    best, worst = 0.0, None
    for m, n, est in rows:
        need = (est.value - 3 * est.std_error) / pair_bound_term(psi, delta, gamma, m, n)
        if worst is None or need > best:
            best, worst = max(best, need), (m, n)
    return PairConstant(best, worst, len(rows))


def an_band(ns, estimates, psi: RateFunction, delta: float) -> tuple[float, float]:
    """Extremes of ``estimate / psi^delta(n)``; bounded away from 0 and infinity
    when the measure of ``A_n`` is comparable to ``psi^delta(n)``."""
    ratios = [e.value / float(psi(n)) ** delta for n, e in zip(ns, estimates)]
    return min(ratios), max(ratios)


def sandwich_holds(n: int, est: Estimate, psi: RateFunction, delta: float, gamma: float,
                   c_low: float, c_high: float, eps: float = 1.0) -> bool:
    """``c_low psi^d - slack <= estimate <= c_high psi^d + slack``,
    ``slack = 3 std errors + gamma^n eps^-d``."""
    p = float(psi(n)) ** delta
    slack = 3 * est.std_error + gamma ** n * eps ** -delta
    return c_low * p - slack <= est.value <= c_high * p + slack


# ---------------------------------------------------------------- Z_N and friends

@dataclass
class ZStats:
    N: int
    z: np.ndarray  # Hit count over n = 1..N per sample
    ambiguous: np.ndarray  # ambiguous count per sample
    seed: int | None = None

    @property
    def mean(self) -> float:
        return float(np.mean(self.z))

    @property
    def second_moment(self) -> float:
        return float(np.mean(self.z.astype(float) ** 2))

    @property
    def ambiguous_rate(self) -> float:
        return float(self.ambiguous.sum()) / (self.z.size * self.N) if self.z.size else 0.0


def z_counter(system, ms, psi: RateFunction, N: int, M: int, seed: int,
              cfg: EngineConfig | None = None, points=None) -> ZStats:
    """``Z_N(x) = #{n <= N : Hit}`` per sample (or per given point)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    ns = range(1, N + 1)
    if points is not None:
        v = verdicts_for_points(system, psi, ns, points, cfg)
    else:
        v = classify_orbits(system, psi, ns, M, seed, cfg)
    return ZStats(N, (v.codes == HIT).sum(axis=1), (v.codes == AMBIGUOUS).sum(axis=1), seed)


@dataclass(frozen=True)
class PZVerdict:
    lam: float
    lhs: float
    rhs: float
    stderr: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs - 3 * self.stderr


def paley_zygmund_check(stats: ZStats, lam: float) -> PZVerdict:
    """``P(Z > lam E Z) >= (1 - lam)^2 (E Z)^2 / E Z^2`` on the empirical law of ``Z_N``."""
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    m1, m2 = stats.mean, stats.second_moment
    if m1 <= 0 or m2 <= 0:
        raise ValueError("Paley-Zygmund check needs positive moments")
    lhs = float(np.mean(stats.z > lam * m1))
    rhs = (1 - lam) ** 2 * m1 * m1 / m2
    return PZVerdict(lam, lhs, rhs, math.sqrt(lhs * (1 - lhs) / stats.z.size))


@dataclass
class LiminfStats:
    N: int
    running_min: np.ndarray  # samples x N
    checkpoints: tuple
    medians: tuple


def liminf_statistic(system, ms, psi: RateFunction, N: int, M: int, seed: int,
                     cfg: EngineConfig | None = None, points=None, checkpoints=None) -> LiminfStats:
    """Running ``min_{n <= k} d(T^n x, x) / psi(n)``, certified from below, with medians."""
    ns = range(1, N + 1)
    if points is not None:
        v = verdicts_for_points(system, psi, ns, points, cfg, want_ratio=True)
    else:
        v = classify_orbits(system, psi, ns, M, seed, cfg, want_ratio=True)
    running = np.minimum.accumulate(v.lower_ratio, axis=1)
    checkpoints = tuple(checkpoints or sorted({max(1, N // 4), max(1, N // 2), N}))
    medians = tuple(float(np.median(running[:, k - 1])) for k in checkpoints)
    return LiminfStats(N, running, checkpoints, medians)


# ---------------------------------------------------------------- dichotomy

INTERPRETATION = (
    "divergent series: window hit fractions should stay bounded away from 0 as the "
    "window slides; convergent series: they should decay like the window sums of mu(A_n)"
)


@dataclass(frozen=True)
class WindowRow:
    start: int
    end: int
    hit_fraction: float
    std_error: float
    series_partial_sum: float  # sum of psi(n)^delta over the window
    an_sum: float  # sum of estimated mu(A_n) over the window
    ambiguous: int
    samples: int


@dataclass
class DichotomyReport:
    rows: list
    verdict: SeriesVerdict
    interpretation: str = INTERPRETATION
    seed: int | None = None
    resampled: int = 0
    ambiguous_rate: float = 0.0


def dyadic_windows(start: int, end: int) -> list[tuple[int, int]]:
    """``[N0, 2 N0], [2 N0, 4 N0], ...`` clipped at ``end``; the window itself if shorter."""
    out = []
    lo = start
    while lo < end:
        hi = min(2 * lo, end)
        out.append((lo, hi))
        lo = hi
    return out or [(start, end)]


def dichotomy_experiment(system, ms, psi: RateFunction, window, M: int, seed: int,
                         cfg: EngineConfig | None = None, split: bool = True) -> DichotomyReport:
    """Window hit fractions against window sums, for one coupled sample set."""
    start, end = int(window[0]), int(window[1])
    if not 1 <= start < end:
        raise ValueError("window must satisfy 1 <= N0 < N1")
    cfg = cfg or EngineConfig()
    ns = list(range(start, end + 1))
    v = classify_orbits(system, psi, ns, M, seed, cfg)
    delta = system.ahlfors_dim
    per_n = [_estimate_column(v, j, seed, cfg).value for j in range(len(ns))]
    windows = dyadic_windows(start, end) if split else [(start, end)]
    if split and len(windows) > 1:
        windows.append((start, end))
    rows = []
    for lo, hi in windows:
        cols = slice(lo - start, hi - start + 1)
        block = v.codes[:, cols]
        hit = (block == HIT).any(axis=1)  # one certified hit decides the window
        amb = (block == AMBIGUOUS).any(axis=1) & ~hit
        est = Estimate.from_counts(hit.sum(), (~amb).sum(), amb.sum(), seed)
        psum = float(np.sum(np.asarray(psi(np.arange(lo, hi + 1)), dtype=float) ** delta))
        rows.append(WindowRow(lo, hi, est.value, est.std_error, psum,
                              float(np.sum(per_n[cols])), int(amb.sum()), est.samples))
    return DichotomyReport(rows, series_classify(psi, delta), seed=seed, resampled=v.resampled,
                           ambiguous_rate=v.ambiguous_rate)
