import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from oracles import doubling_closed_form, doubling_pair, golden_An, integer_base_An
from qrec.errors import InsufficientDigits
from qrec.measures import measure_for
from qrec.precision import EnclosedPoint
from qrec.rates import SeriesClass, parse_rate
from qrec.recurrence import (AMBIGUOUS, HIT, MISS, EngineConfig, Estimate, an_band, classify_orbits,
                             dichotomy_experiment, digit_budget, dyadic_windows, estimate_An, estimate_many,
                             estimate_pair, fit_pair_constant, liminf_statistic, pair_bound_term,
                             paley_zygmund_check, quasi_independence_ratio, sandwich_holds, z_counter)
from qrec.systems import parse_system

BETA2 = parse_system("beta:2")
MS2 = measure_for(BETA2)
CONST = parse_rate("constant:c=0.01")


def within(est, exact, k=3):
    return abs(est.value - float(exact)) <= k * est.std_error


def test_digit_budget():
    assert digit_budget(BETA2, 10, 0.01) == 10 + 20 + math.ceil(math.log2(100))


def test_doubling_estimate_matches_exact():
    for n in (3, 10):
        est = estimate_An(BETA2, MS2, CONST, n, 40000, 5)
        assert est.ambiguous == 0 and within(est, doubling_closed_form(Fraction(1, 100), n))


def test_full_threshold_gives_one():
    est = estimate_An(BETA2, MS2, parse_rate("constant:c=1"), 4, 5000, 1)
    assert est.value == 1.0
    est = estimate_An(parse_system("gauss"), None, parse_rate("constant:c=2"), 2, 300, 1)
    assert est.value == 1.0


def test_cantor_estimate_matches_digit_oracle():
    system = parse_system("cantor3")
    exact = integer_base_An(3, (0, 2), Fraction(1, 50), 2, "cantor")
    assert exact == Fraction(5, 64)
    est = estimate_An(system, measure_for(system), parse_rate("constant:c=0.02"), 2, 100000, 2)
    assert within(est, exact)


def test_golden_estimate_matches_parry_oracle():
    system = parse_system("beta:phi")
    est = estimate_An(system, measure_for(system), CONST, 6, 12000, 9)
    assert est.ambiguous == 0 and within(est, golden_An(0.01, 6))


def test_integer_and_generic_paths_agree_statistically():
    # forcing a working precision routes beta = 2 through the generic sampler
    fast = estimate_An(BETA2, MS2, CONST, 4, 20000, 4)
    slow = estimate_An(BETA2, MS2, CONST, 4, 6000, 4, EngineConfig(prec=128))
    exact = doubling_closed_form(Fraction(1, 100), 4)
    assert within(fast, exact) and within(slow, exact)


def test_independent_sampling_flag():
    a = estimate_many(BETA2, MS2, CONST, [5, 6], 20000, 3, independent=True)
    b = estimate_many(BETA2, MS2, CONST, [5, 6], 20000, 3)
    assert a != b
    for est, n in zip(a, (5, 6)):
        assert within(est, doubling_closed_form(Fraction(1, 100), n))


def test_worker_count_does_not_change_verdicts():
    one = classify_orbits(BETA2, CONST, [3, 9], 10000, 11, EngineConfig(workers=1))
    three = classify_orbits(BETA2, CONST, [3, 9], 10000, 11, EngineConfig(workers=3))
    assert np.array_equal(one.codes, three.codes)


def test_insufficient_budget_rejected():
    with pytest.raises(InsufficientDigits):
        classify_orbits(BETA2, CONST, [30], 10, 1, EngineConfig(digits=31))


def test_ambiguous_draws_excluded_from_both_counts():
    e = Estimate.from_counts(hits=5, samples=95, ambiguous=5, seed=0)
    assert e.value == pytest.approx(5 / 95) and not e.valid
    assert Estimate.from_counts(5, 100, 0, 0).valid


def test_pair_examples():
    with pytest.raises(ValueError):
        estimate_pair(BETA2, MS2, CONST, 5, 5, 10, 0)
    full = estimate_pair(BETA2, MS2, parse_rate("constant:c=1"), 2, 5, 2000, 0)
    assert full.pair.value == 1.0
    est = estimate_pair(BETA2, MS2, CONST, 5, 15, 200000, 8)
    exact = doubling_pair(Fraction(1, 100), 5, 15)
    assert exact == pytest.approx(4e-4, rel=0.03)
    assert within(est.pair, exact)


def test_quasi_independence_ratio_arithmetic():
    p = Estimate.from_counts(30, 100, 0, 0)
    r = quasi_independence_ratio(p, p, p)
    assert r.value == pytest.approx(1 / 0.3)
    zero = Estimate.from_counts(0, 100, 0, 0)
    assert quasi_independence_ratio(zero, p, p).infinite


def test_adjacent_pair_ratio_bounded():
    est = estimate_pair(BETA2, MS2, CONST, 9, 10, 200000, 3)
    ratio = quasi_independence_ratio(est.first, est.second, est.pair)
    assert ratio.value <= 10


def test_pair_bound_constant():
    v = classify_orbits(BETA2, CONST, range(1, 13), 50000, 2)
    rows = []
    for i in range(12):
        for j in range(i + 1, 12):
            hits = (v.codes[:, i] == HIT) & (v.codes[:, j] == HIT)
            rows.append((i + 1, j + 1, Estimate.from_counts(hits.sum(), v.codes.shape[0], 0, 2)))
    fit = fit_pair_constant(rows, CONST, 1.0, 0.5)
    assert 0 < fit.c <= 10 and fit.pairs == 66
    assert pair_bound_term(CONST, 1.0, 0.5, 1, 2) == pytest.approx(1e-4 + 0.5 * 0.01 + 0.25 * 0.01)


@pytest.mark.parametrize("name,a", [("beta:2", 1), ("cantor3", 1.2), ("gauss", 1)])
def test_measure_comparable_to_psi_delta(name, a):
    system = parse_system(name)
    psi = parse_rate(f"power:c=0.2,a={a}")
    ns = list(range(5, 13))
    M = 3000 if name == "gauss" else 40000
    ests = estimate_many(system, measure_for(system), psi, ns, M, 6)
    lo, hi = an_band(ns, ests, psi, system.ahlfors_dim)
    assert 0.2 < lo <= hi < 10
    for n, e in zip(ns, ests):
        assert sandwich_holds(n, e, psi, system.ahlfors_dim, 0.5, 0.2, 10.0)


def test_z_counter_full_threshold():
    z = z_counter(BETA2, MS2, parse_rate("constant:c=1"), 20, 500, 0)
    assert np.all(z.z == 20)
    pz = paley_zygmund_check(z, 0.5)
    assert pz.lhs == 1 and pz.holds


def test_z_counter_periodic_point():
    z = z_counter(BETA2, MS2, parse_rate("constant:c=1e-3"), 30, 0, 0, points=[Fraction(1, 7)])
    assert z.z[0] == 10


def test_z_mean_matches_oracle_sum():
    psi = parse_rate("power:c=0.1,a=1")
    exact = sum(float(doubling_closed_form(Fraction(1, 10 * n), n)) for n in range(1, 101))
    z = z_counter(BETA2, MS2, psi, 100, 10000, 4)
    assert z.mean == pytest.approx(exact, rel=0.05)
    assert paley_zygmund_check(z, 0.5).holds
    assert paley_zygmund_check(z, 0.99).holds


def test_pz_rejects_bad_lambda():
    z = z_counter(BETA2, MS2, parse_rate("constant:c=1"), 5, 10, 0)
    for lam in (0, 1, 1.5):
        with pytest.raises(ValueError):
            paley_zygmund_check(z, lam)


def test_liminf_golden_fixed_point_of_gauss():
    gauss = parse_system("gauss")
    golden = EnclosedPoint.from_mpmath(lambda: (mpmath.sqrt(5) - 1) / 2, 400)
    stats = liminf_statistic(gauss, None, CONST, 8, 0, 0, points=[golden])
    assert stats.running_min[0, 0] == 0


def test_liminf_divergent_decreases():
    psi = parse_rate("power:c=0.1,a=1")
    stats = liminf_statistic(BETA2, MS2, psi, 400, 4000, 1, checkpoints=(100, 200, 400))
    assert stats.medians[0] > stats.medians[1] > stats.medians[2]


def test_liminf_convergent_stabilises():
    psi = parse_rate("power:c=1,a=3")
    stats = liminf_statistic(BETA2, MS2, psi, 400, 4000, 1, checkpoints=(100, 200, 400))
    assert stats.medians[2] > 0
    assert stats.medians[0] == pytest.approx(stats.medians[2], rel=0.02)


def test_dyadic_windows():
    assert dyadic_windows(100, 400) == [(100, 200), (200, 400)]
    assert dyadic_windows(100, 150) == [(100, 150)]


def test_dichotomy_full_threshold():
    rep = dichotomy_experiment(BETA2, MS2, parse_rate("constant:c=1"), (10, 40), 500, 0)
    assert all(r.hit_fraction == 1 for r in rep.rows)
    assert rep.verdict.classification is SeriesClass.DIVERGENT


def test_dichotomy_rows_and_interpretation():
    rep = dichotomy_experiment(BETA2, MS2, parse_rate("power:c=1,a=2"), (50, 200), 2000, 3)
    assert [(r.start, r.end) for r in rep.rows] == [(50, 100), (100, 200), (50, 200)]
    assert rep.verdict.classification is SeriesClass.CONVERGENT
    assert "convergent" in rep.interpretation
    with pytest.raises(ValueError):
        dichotomy_experiment(BETA2, MS2, CONST, (10, 10), 10, 0)


def test_verdict_codes():
    assert (HIT, MISS, AMBIGUOUS) == (1, 0, -1)
