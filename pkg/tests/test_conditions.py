import json
from fractions import Fraction

import numpy as np
import pytest

from qrec import conditions
from qrec.conditions import (ConditionsSettings, ahlfors_radii, exact_mixing_residual, fit_mixing,
                             mixing_correlations, orbit_samples, run_conditions)
from qrec.measures import measure_for
from qrec.systems import parse_system

QUICK = ConditionsSettings(seed=1, ahlfors_centers=2000, mixing_samples=50000, n_max=6,
                           distortion_probes=16, conformality_balls=8, cylinders_per_order=6,
                           gauss_cap=20, limit=20000)


def test_doubling_dyadic_mixing_is_exact():
    system = parse_system("beta:2")
    assert exact_mixing_residual(system, 1, 1, 2) == 0
    assert exact_mixing_residual(system, 2, 2, 2) == 0
    assert exact_mixing_residual(system, 2, 1, 1) > 0


def test_cantor_triadic_mixing_is_exact():
    system = parse_system("cantor3")
    assert exact_mixing_residual(system, 1, 2, 1) == 0
    assert exact_mixing_residual(system, 2, 1, 1) == Fraction(1, 4) - Fraction(1, 8)


def test_exact_residual_needs_integer_base():
    with pytest.raises(ValueError):
        exact_mixing_residual(parse_system("gauss"), 1, 1, 1)


def test_fit_recovers_synthetic_rate():
    ns = np.arange(1, 21)
    r = 3.0 * 0.4 ** ns
    r[12:] = np.nan
    fit = fit_mixing(r)
    assert fit.gamma == pytest.approx(0.4, rel=1e-9) and fit.C == pytest.approx(3.0, rel=1e-6)
    with pytest.raises(ValueError):
        fit_mixing(np.full(20, np.nan))


def test_orbit_samples_follow_the_map():
    rng = np.random.default_rng(0)
    for name in ("beta:2", "beta:phi", "gauss", "cantor3"):
        system = parse_system(name)
        orbits = orbit_samples(system, measure_for(system), 200, 6, rng)
        for n in range(3):
            step = np.array([system.map_float(x) for x in orbits[:, n]])
            assert np.allclose(step, orbits[:, n + 1], atol=1e-9)


def test_doubling_correlations_vanish_beyond_level():
    system = parse_system("beta:2")
    ms = measure_for(system)
    orbits = orbit_samples(system, ms, 100000, 10, np.random.default_rng(3))
    r = mixing_correlations(orbits, ms, level=4)
    assert np.all(np.isfinite(r[:3]))
    assert np.all(np.isnan(r[5:]))  # nothing resolved above the noise floor


def test_low_bits_fill_the_whole_width():
    # every bit below the float draw must be random, or T^n x locks onto the
    # orbit of a short rational once the map has consumed the float's 52 bits
    width = 172
    values = conditions._low_bits(np.random.default_rng(5), 4000, width)
    assert all(0 <= v < 2 ** width for v in values)
    for bit in (0, 60, 100, 171):
        share = sum((v >> bit) & 1 for v in values) / len(values)
        assert abs(share - 0.5) < 0.05


def test_ahlfors_radii_bases():
    assert ahlfors_radii(parse_system("cantor3"))[0] == pytest.approx(3.0 ** -3)
    assert ahlfors_radii(parse_system("beta:2"))[-1] == pytest.approx(2.0 ** -13)


@pytest.mark.parametrize("name", ["beta:2", "beta:phi", "beta:5/2", "cantor3"])
def test_quick_reports_pass(name):
    rep = run_conditions(parse_system(name), QUICK)
    assert [r.name for r in rep.results] == ["I", "II", "III", "IV", "V"]
    assert rep.all_passed, [(r.name, r.status, r.error) for r in rep.results]
    assert 0 < rep.gamma < 1
    json.dumps(rep.to_dict(), default=str)


def test_failure_is_isolated(monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("probe failure")

    monkeypatch.setattr(conditions, "check_distortion", broken)
    rep = run_conditions(parse_system("beta:2"), QUICK)
    res = rep.result("III")
    assert res.status == "FAILED" and "probe failure" in res.error
    assert all(r.passed for r in rep.results if r.name != "III")
