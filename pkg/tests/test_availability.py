import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsacsma.availability import (
    JAMMING_FRACTION,
    AvailabilityFunction,
    FitForm,
    default_availability,
    lens_area,
    match_fit_coeffs,
    phi_fit,
    phi_series,
    select_fit_form,
    series_coefficients,
    solve_density,
)
from rsacsma.montecarlo import mc_retention_probability

# hit-or-miss estimate of the unit-disk lens at separation 1 (10**7 samples)
LENS_ORACLE = 1.227798


def test_lens_area_examples():
    assert lens_area(0.0, 2.0) == pytest.approx(math.pi * 4.0)
    assert lens_area(4.0, 2.0) == 0.0
    assert lens_area(5.0, 2.0) == 0.0
    assert lens_area(1.0, 1.0) == pytest.approx(LENS_ORACLE, rel=1e-3)
    assert lens_area(3.0, 3.0) == pytest.approx(9 * LENS_ORACLE, rel=1e-3)


@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_lens_area_decreasing(a, b):
    if a < b:
        assert lens_area(a, 1.0) >= lens_area(b, 1.0)


def test_series_anchor_values():
    assert phi_series(0.0) == 1.0
    h = 1e-6
    slope = (phi_series(h) - phi_series(0.0)) / h
    assert slope == pytest.approx(-4.0, abs=1e-4)
    _, a1, a2, a3 = series_coefficients()
    assert a1 == pytest.approx(-4.0, abs=1e-12)
    assert a2 == pytest.approx(3.3080, abs=1e-3)
    assert a3 == pytest.approx(1.40688, abs=1e-3)


def test_series_domain():
    with pytest.raises(ValueError):
        phi_series(-0.01)
    with pytest.raises(ValueError):
        phi_series(JAMMING_FRACTION)


@pytest.mark.parametrize("form", list(FitForm))
def test_fit_matches_series_at_low_coverage(form):
    a = AvailabilityFunction.matched(form)
    assert a.fit(0.0) == 1.0
    assert a.fit(JAMMING_FRACTION) == 0.0
    for t in np.linspace(0.0, 0.15, 31):
        assert abs(a.fit(t) - phi_series(t)) < 1e-3


def test_fit_coefficients_default_form():
    b = match_fit_coeffs()
    assert b == pytest.approx((0.8104, 0.42242, 0.066836), abs=1e-3)


def test_fit_domain():
    with pytest.raises(ValueError):
        phi_fit(JAMMING_FRACTION + 1e-6)
    with pytest.raises(ValueError):
        phi_fit(-1e-6)


def test_fit_decreasing_and_bounded():
    t = np.linspace(0.0, JAMMING_FRACTION, 2001)
    v = np.array([phi_fit(x) for x in t])
    assert np.all(np.diff(v) < 0)
    assert v.min() >= 0.0 and v.max() <= 1.0


def test_singular_guard(monkeypatch):
    # both shipped forms give a unit-triangular system; force a zero pivot
    import rsacsma.availability as av
    monkeypatch.setattr(av, "_factor_coeffs", lambda form: np.array([0.0, 1.0, 0.0, 0.0]))
    with pytest.raises(np.linalg.LinAlgError):
        match_fit_coeffs()


@pytest.mark.parametrize("theta", [0.1, 0.2])
def test_series_against_insertion_oracle(theta):
    est = mc_retention_probability(theta, trials=100000, seed=11)
    assert abs(phi_series(theta) - est.mean) < 0.01


@pytest.mark.parametrize("theta", [0.3, 0.45])
def test_fit_against_insertion_oracle(theta):
    est = mc_retention_probability(theta, trials=100000, seed=12)
    assert abs(phi_fit(theta) - est.mean) < 0.02


def test_oracle_zero_coverage():
    assert mc_retention_probability(0.0, trials=1000, seed=0).mean == 1.0


def test_form_selection_prefers_default():
    thetas = [0.05, 0.15, 0.25, 0.35, 0.45, 0.5]
    vals = [mc_retention_probability(t, trials=50000, seed=13).mean for t in thetas]
    form, devs = select_fit_form(thetas, vals)
    assert form is FitForm.CUBIC_OF_ONE_MINUS_X
    assert devs[form] < 0.02


def test_density_zero_rate():
    c = solve_density(0.0, 1.0, np.linspace(0, 1, 11))
    assert np.all(c.rho == 0.0)


def test_density_small_time_linear():
    c = solve_density(2.0, 1.0, [1e-4, 2e-4])
    assert c.rho[0] == pytest.approx(2e-4, rel=1e-3)
    assert c.rho[1] == pytest.approx(4e-4, rel=1e-3)


def test_density_rate_50():
    c = solve_density(50.0, 1.0, [1.0])
    assert 0.52 <= c.theta[0] <= 0.547


def test_density_scales_with_kappa():
    a = solve_density(1e-4, 2e4, np.linspace(0, 1, 21))
    b = solve_density(2.0, 1.0, np.linspace(0, 1, 21))
    np.testing.assert_allclose(a.theta, b.theta, rtol=1e-9, atol=1e-12)


@given(st.floats(0.0, 5000.0))
def test_density_monotone_below_jamming(rate):
    c = solve_density(rate, 1.0, np.linspace(0, 1, 17))
    assert np.all(np.diff(c.theta) >= 0)
    assert c.theta[-1] < JAMMING_FRACTION


def test_density_csv(tmp_path):
    c = solve_density(5.0, 1.0, np.linspace(0, 1, 5))
    p = tmp_path / "d.csv"
    c.to_csv(p, ["note"])
    lines = p.read_text().splitlines()
    assert lines[0] == "# note" and lines[1] == "t,rho_per_m2,theta"
    assert len(lines) == 7


def test_rejects_bad_grid():
    with pytest.raises(ValueError):
        solve_density(1.0, 1.0, [0.5, 0.2])
    with pytest.raises(ValueError):
        solve_density(-1.0, 1.0, [0.5])


def test_default_cached():
    assert default_availability() is default_availability()
