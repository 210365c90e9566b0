"""Independent reference values for the Monte Carlo estimators.

None of these use the package's sampling or verdict code.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

LN2 = math.log(2.0)


# ---------------------------------------------------------------- doubling map

def doubling_closed_form(psi, n: int) -> Fraction:
    """Lebesgue measure of ``{x : |2^n x mod 1 - x| < psi}`` in closed form.

    On branch ``k`` of ``N = 2^n`` the map is ``N x - k`` with fixed point
    ``k / (N - 1)``, and the hit set is ``|(N - 1) x - k| < psi`` clipped to
    the branch.  Away from both ends of ``[0, 1]`` that is a full interval of
    length ``2 psi / (N - 1)``.  The ``K = min(N, ceil(psi N))`` branches at
    each end are clipped to ``k s`` on one side, ``s = 1 / (N (N - 1))``;
    ``k < psi N`` there, so the clipped widths sum to ``s K (K - 1) / 2``.
    """
    psi = Fraction(psi)
    N = 2 ** n
    if psi >= 1:
        return Fraction(1)
    s = Fraction(1, N * (N - 1))
    w = psi / (N - 1)
    K = min(N, math.ceil(psi * N))
    left = s * K * (K - 1) / 2
    return 2 * (left + (N - K) * w)


def doubling_by_branches(psi, n: int) -> Fraction:
    """The same measure by a loop over all ``2^n`` branches (small ``n``)."""
    psi = Fraction(psi)
    N = 2 ** n
    total = Fraction(0)
    for k in range(N):
        lo = max(Fraction(k, N), (k - psi) / (N - 1))
        hi = min(Fraction(k + 1, N), (k + psi) / (N - 1))
        if hi > lo:
            total += hi - lo
    return total


def doubling_branch_enumeration(psi, n: int) -> Fraction:
    """Same quantity by cylinder enumeration in the ``T^n`` image coordinate."""
    return integer_base_An(2, (0, 1), psi, n, "lebesgue")


def integer_base_An(base: int, alphabet, psi, n: int, law: str) -> Fraction:
    """``mu(A_n)`` for ``x -> base x mod 1`` with i.i.d. uniform digits from ``alphabet``.

    On the order-``n`` cylinder with integer address ``w``, ``x = (w + t) / base^n``
    with ``t = T^n x`` distributed by the same law, so
    ``A_n`` there is ``{t : |t (1 - base^-n) - w base^-n| < psi}``.
    """
    psi = Fraction(psi)
    N = base ** n
    weight = Fraction(1, len(alphabet) ** n)
    cdf = _lebesgue_cdf if law == "lebesgue" else _cantor_cdf
    shrink = 1 - Fraction(1, N)
    total = Fraction(0)
    for w in _addresses(base, alphabet, n):
        lo = (Fraction(w, N) - psi) / shrink
        hi = (Fraction(w, N) + psi) / shrink
        total += weight * (cdf(hi) - cdf(lo))
    return total


def _addresses(base, alphabet, n):
    words = [0]
    for _ in range(n):
        words = [w * base + d for w in words for d in alphabet]
    return words


def _lebesgue_cdf(x: Fraction) -> Fraction:
    return min(max(x, Fraction(0)), Fraction(1))


def _cantor_cdf(x: Fraction) -> Fraction:
    if x <= 0:
        return Fraction(0)
    if x >= 1:
        return Fraction(1)
    p, q = x.numerator, x.denominator
    seen, bits = {}, []
    while p not in seen:
        seen[p] = len(bits)
        d, p = divmod(3 * p, q)
        if d == 1:
            bits.append(1)
            return sum((Fraction(b, 2 ** (k + 1)) for k, b in enumerate(bits)), Fraction(0))
        bits.append(d // 2)
    start = seen[p]
    head = sum((Fraction(b, 2 ** (k + 1)) for k, b in enumerate(bits[:start])), Fraction(0))
    cyc = sum((Fraction(b, 2 ** (k + 1)) for k, b in enumerate(bits[start:])), Fraction(0))
    return head + cyc / 2 ** start / (1 - Fraction(1, 2 ** (len(bits) - start)))


def doubling_pair(psi, m: int, n: int) -> Fraction:
    """Lebesgue measure of ``A_m & A_n`` for the doubling map, ``m < n``.

    On the order-``n`` cylinder ``w``: ``x = (w + t) / 2^n``, ``T^n x = t`` and
    ``T^m x = (w mod 2^(n-m) + t) / 2^(n-m)``; both conditions are intervals in ``t``.
    """
    psi = Fraction(psi)
    N, R = 2 ** n, 2 ** (n - m)
    total = Fraction(0)
    for w in range(N):
        # |t - (w + t)/N| < psi
        lo1 = (Fraction(w, N) - psi) / (1 - Fraction(1, N))
        hi1 = (Fraction(w, N) + psi) / (1 - Fraction(1, N))
        # |(w mod R + t)/R - (w + t)/N| < psi;  coefficient of t: 1/R - 1/N > 0
        a = Fraction(1, R) - Fraction(1, N)
        b = Fraction(w % R, R) - Fraction(w, N)
        lo2, hi2 = (-psi - b) / a, (psi - b) / a
        lo = max(Fraction(0), lo1, lo2)
        hi = min(Fraction(1), hi1, hi2)
        if hi > lo:
            total += hi - lo
    return total / N


# ---------------------------------------------------------------- Gauss map

def gauss_words_measure(psi: float, n: int, cap: int) -> float:
    """``mu(A_n)`` restricted to cylinders whose digits are all ``<= cap``.

    On a cylinder, ``x(t) = (p_n + t p_{n-1}) / (q_n + t q_{n-1})`` with
    ``t = T^n x``; ``f(t) = x(t) - t`` is strictly decreasing, so the hit set is
    the ``t``-interval between ``f^-1(psi)`` and ``f^-1(-psi)``, found by
    a quadratic solve.  Its Gauss measure uses the exact Mobius difference.
    """
    total = 0.0
    digits = np.arange(1, cap + 1, dtype=np.float64)
    for a1 in range(1, cap + 1):
        # (p_{k-1}, q_{k-1}, p_k, q_k) after the first digit
        pm, qm, pk, qk = np.zeros(1), np.ones(1), np.ones(1), np.array([float(a1)])
        for _ in range(n - 1):
            d = np.tile(digits, pk.size)
            pm_new, qm_new = np.repeat(pk, cap), np.repeat(qk, cap)
            pk = d * pm_new + np.repeat(pm, cap)
            qk = d * qm_new + np.repeat(qm, cap)
            pm, qm = pm_new, qm_new
        total += _hit_measure(pk, qk, pm, qm, psi)
    return total


def _hit_measure(p, q, pm, qm, psi):
    def x_of(t):
        return (p + t * pm) / (q + t * qm)

    def f(t):
        return x_of(t) - t

    def inverse(c):
        # p + pm t = (t + c)(q + qm t):  qm t^2 + (q + c qm - pm) t + (c q - p) = 0
        A, B, C = qm, q + c * qm - pm, c * q - p
        root = np.sqrt(np.maximum(B * B - 4 * A * C, 0.0))
        s = -0.5 * (B + np.where(B >= 0, root, -root))
        r1 = np.divide(s, A, out=np.full_like(s, np.inf), where=A != 0)
        r2 = np.divide(C, s, out=np.full_like(s, np.inf), where=s != 0)
        t = np.where((r2 >= -1e-9) & (r2 <= 1 + 1e-9), r2, r1)
        t = np.clip(t, 0.0, 1.0)
        sign = pm * q - p * qm
        for _ in range(2):  # Newton polish; f'(t) = sign / (q + qm t)^2 - 1
            fp = sign / (q + qm * t) ** 2 - 1
            t = np.clip(t - (f(t) - c) / fp, 0.0, 1.0)
        t = np.where(f(np.zeros_like(t)) <= c, 0.0, t)  # f < c on all of [0, 1]
        t = np.where(f(np.ones_like(t)) >= c, 1.0, t)  # f > c on all of [0, 1]
        return t

    t_lo = inverse(psi)  # f decreasing: f(t) < psi for t > t_lo
    t_hi = inverse(-psi)
    width = np.maximum(t_hi - t_lo, 0.0)
    # |x(t) - x(s)| = |t - s| / ((q + t qm)(q + s qm)) since |p qm - q pm| = 1
    dx = width / ((q + t_lo * qm) * (q + t_hi * qm))
    x_min = np.minimum(x_of(t_lo), x_of(t_hi))
    return float(np.sum(np.log1p(dx / (1 + x_min))) / LN2)


def gauss_cylinder_oracle(psi: float, n: int, cap: int = 100):
    """``mu(A_n)`` for the Gauss map, digits up to ``4 cap`` exactly plus an
    extrapolated tail.

    The mass missed by capping digits at ``C`` behaves like ``a / C + b / C^2``;
    the values at ``C, 2C, 4C`` determine both coefficients.  Returns
    ``(value, tail_correction, S_C, S_2C, S_4C)``.
    """
    s1 = gauss_words_measure(psi, n, cap)
    s2 = gauss_words_measure(psi, n, 2 * cap)
    s4 = gauss_words_measure(psi, n, 4 * cap)
    d1, d2 = s2 - s1, s4 - s2
    # T(C) = a/C + b/C^2:  d1 = a/(2C) + 3b/(4C^2),  d2 = a/(4C) + 3b/(16C^2)
    b = (d1 - 2 * d2) * 8 * cap ** 2 / 3
    a = (d1 - 3 * b / (4 * cap ** 2)) * 2 * cap
    tail = a / (4 * cap) + b / (16 * cap ** 2)
    return s4 + tail, tail, s1, s2, s4


def gauss_grid_oracle(psi: Fraction, n: int = 3, grid: int = 10 ** 6, bisect: int = 40) -> float:
    """Grid method: exact-rational evaluation of ``|T^n x - x| < psi`` at ``k / grid``,
    with bisection at every sign change and Gauss-measure integration.

    Pieces of ``A_n`` narrower than the grid step go unseen, so this undercounts.
    """
    psi = Fraction(psi)
    G = lambda x: math.log1p(x) / LN2  # noqa: E731

    def inside(num, den):
        a, b = num, den
        for _ in range(n):
            if a == 0:
                return None
            a, b = b % a, a
        return abs(a * den - num * b) * psi.denominator < psi.numerator * b * den

    vals = [inside(k, grid) for k in range(1, grid)]
    edges = []
    prev = vals[0]
    for i in range(1, len(vals)):
        v = vals[i]
        if v is not None and prev is not None and v != prev:
            a, b = Fraction(i, grid), Fraction(i + 1, grid)
            for _ in range(bisect):
                m = (a + b) / 2
                im = inside(m.numerator, m.denominator)
                if im is None:
                    break
                if im == prev:
                    a = m
                else:
                    b = m
            edges.append(((a + b) / 2, v))
        if v is not None:
            prev = v
    cur, pos, total = vals[0], Fraction(1, grid), 0.0
    for e, v in edges:
        if cur:
            total += G(float(e)) - G(float(pos))
        pos, cur = e, v
    if cur:
        total += G(1.0) - G(float(pos))
    return total


# ---------------------------------------------------------------- Parry density

def golden_density_values():
    """Piecewise values of the golden-mean Parry density, from the transfer
    operator fixed point ``h(x) = (h(x/phi) + h((x+1)/phi) 1[x < 1/phi]) / phi``."""
    phi = (1 + 5 ** 0.5) / 2
    # h = A on [0, 1/phi), B on [1/phi, 1):  A = (A + B)/phi, B = A/phi, normalised
    A = 1.0
    B = A / phi
    norm = A / phi + B * (1 - 1 / phi)
    return A / norm, B / norm


def golden_An(psi: float, n: int) -> float:
    """Parry measure of ``A_n`` for ``x -> phi x mod 1``, by cylinder enumeration.

    Admissible words avoid ``11``.  On the cylinder of word ``w``,
    ``x = sum w_k phi^-(k+1) + phi^-n t`` with ``t = T^n x`` ranging over
    ``[0, 1)`` if ``w`` ends in 0 and ``[0, 1/phi)`` if it ends in 1.
    The hit set ``|x(t) - t| < psi`` is a ``t``-interval.
    """
    phi = (1 + 5 ** 0.5) / 2
    a, b = golden_density_values()

    def cdf(x):
        x = min(max(x, 0.0), 1.0)
        cut = 1 / phi
        return a * min(x, cut) + b * max(x - cut, 0.0)

    words = [()]
    for _ in range(n):
        words = [w + (d,) for w in words for d in (0, 1) if not (d == 1 and w and w[-1] == 1)]
    scale = phi ** -n
    total = 0.0
    for w in words:
        base = sum(d * phi ** -(k + 1) for k, d in enumerate(w))
        t_max = 1 / phi if w[-1] == 1 else 1.0
        # x(t) - t = base - (1 - scale) t, decreasing in t
        lo = max(0.0, (base - psi) / (1 - scale))
        hi = min(t_max, (base + psi) / (1 - scale))
        if hi > lo:
            total += cdf(base + scale * hi) - cdf(base + scale * lo)
    return total
