"""Rate functions psi(n) and the convergence class of sum psi(n)^delta."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

FAMILIES = ("power", "logpower", "constant", "table")


@dataclass(frozen=True)
class RateFunction:
    """``psi(n)`` for ``n >= 1``.

    power:    c * n^-a
    logpower: c / (n^a * log(n + 1)^b)
    constant: c
    table:    values[n - 1]
    """

    family: str
    c: float = 1.0
    a: float = 0.0
    b: float = 0.0
    values: tuple = field(default=())

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown rate family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "table":
            if not self.values:
                raise ValueError("table rate needs at least one value")
            vals = tuple(float(v) for v in self.values)
            if not all(math.isfinite(v) and v > 0 for v in vals):
                raise ValueError("table values must be finite and positive")
            object.__setattr__(self, "values", vals)
        elif not (math.isfinite(self.c) and self.c > 0):
            raise ValueError("rate constant c must be positive")

    def __call__(self, n):
        n_arr = np.asarray(n)
        if np.any(n_arr < 1):
            raise ValueError("psi is defined for n >= 1")
        nf = n_arr.astype(float)
        if self.family == "power":
            out = self.c * nf ** -self.a
        elif self.family == "logpower":
            out = self.c / (nf ** self.a * np.log(nf + 1) ** self.b)
        elif self.family == "constant":
            out = np.full_like(nf, self.c)
        else:
            if np.any(n_arr > len(self.values)):
                raise ValueError(f"table rate only defines psi(1..{len(self.values)})")
            out = np.asarray(self.values)[n_arr.astype(int) - 1]
        return float(out) if np.ndim(out) == 0 else out

    def exact(self, n: int) -> Fraction:
        """``psi(n)`` as the exact rational value of its float."""
        return Fraction(float(self(int(n))))

    def to_string(self) -> str:
        if self.family == "table":
            return "table:" + ";".join(repr(v) for v in self.values)
        if self.family == "constant":
            return f"constant:c={self.c!r}"
        if self.family == "power":
            return f"power:c={self.c!r},a={self.a!r}"
        return f"logpower:c={self.c!r},a={self.a!r},b={self.b!r}"


def parse_rate(text: str) -> RateFunction:
    """Parse ``power:c=0.1,a=1``, ``logpower:c=1,a=1,b=2``, ``constant:c=0.01``,
    ``table:0.1;0.05;0.02`` or ``table:file=path`` (one value per line)."""
    if isinstance(text, RateFunction):
        return text
    family, _, rest = str(text).strip().partition(":")
    family = family.strip().lower().replace("-", "").replace("_", "")
    if family == "table":
        if rest.startswith("file="):
            with open(rest[5:]) as fh:
                vals = [float(line) for line in fh if line.strip() and not line.startswith("#")]
        else:
            vals = [float(v) for v in rest.replace(",", ";").split(";") if v.strip()]
        return RateFunction("table", values=tuple(vals))
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"malformed rate parameter {item!r}")
        params[key.strip()] = float(Fraction(value.strip()))
    unknown = set(params) - {"c", "a", "b"}
    if unknown:
        raise ValueError(f"unknown rate parameters {sorted(unknown)}")
    if family == "logpower":
        params.setdefault("a", 1.0)
        params.setdefault("b", 1.0)
    return RateFunction(family, **params)


class SeriesClass(Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"
    HEURISTIC = "heuristic"


@dataclass(frozen=True)
class SeriesVerdict:
    classification: SeriesClass
    checkpoints: tuple
    partial_sums: tuple
    note: str = ""

    @property
    def divergent(self) -> bool:
        return self.classification is SeriesClass.DIVERGENT


def partial_sums(psi: RateFunction, delta: float, checkpoints) -> tuple:
    top = max(checkpoints)
    terms = np.asarray(psi(np.arange(1, top + 1)), dtype=float) ** delta
    cumulative = np.cumsum(terms)
    return tuple(float(cumulative[k - 1]) for k in checkpoints)


def series_classify(psi: RateFunction, delta: float, checkpoints=(10, 100, 1000, 10000)) -> SeriesVerdict:
    """Convergence of ``sum psi(n)^delta`` by the integral test (analytic families)."""
    if psi.family == "table":
        checkpoints = tuple(k for k in checkpoints if k <= len(psi.values)) or (len(psi.values),)
    sums = partial_sums(psi, delta, checkpoints)
    if psi.family == "constant":
        return SeriesVerdict(SeriesClass.DIVERGENT, checkpoints, sums, "constant terms")
    if psi.family == "table":
        return SeriesVerdict(SeriesClass.HEURISTIC, checkpoints, sums, _trend(sums, checkpoints))
    exponent = psi.a * delta
    if math.isclose(exponent, 1.0, rel_tol=1e-12, abs_tol=1e-12):
        if psi.family == "power":
            return SeriesVerdict(SeriesClass.DIVERGENT, checkpoints, sums, "exponent a*delta = 1")
        log_exp = psi.b * delta
        cls = SeriesClass.DIVERGENT if log_exp <= 1 + 1e-12 else SeriesClass.CONVERGENT
        return SeriesVerdict(cls, checkpoints, sums, f"a*delta = 1, b*delta = {log_exp:g}")
    cls = SeriesClass.DIVERGENT if exponent < 1 else SeriesClass.CONVERGENT
    return SeriesVerdict(cls, checkpoints, sums, f"a*delta = {exponent:g}")


def _trend(sums, checkpoints) -> str:
    if len(sums) < 3:
        return "too few checkpoints for a trend"
    increments = np.diff(sums)
    widths = np.diff(np.log(checkpoints))
    rate = increments / widths
    if rate[-1] >= 0.5 * rate[0] and rate[-1] > 0:
        return "partial sums grow at least logarithmically"
    return "partial-sum increments shrink"
