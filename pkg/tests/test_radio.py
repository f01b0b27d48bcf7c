import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsacsma.radio import (
    DeploymentConfig,
    Disk,
    InhibitionGeometry,
    RadioConfig,
    Torus,
    dbm_to_mw,
    derive_inhibition,
    mw_to_dbm,
    path_loss,
)


def test_inhibition_distance_default_parameters(geom):
    assert geom.d_inh == pytest.approx(10 ** (85 / 40), rel=1e-12)
    assert geom.d_inh == pytest.approx(133.35, abs=0.01)
    assert geom.r_inh == geom.d_inh / 2
    assert geom.kappa == pytest.approx(math.pi * geom.r_inh**2)


def test_inhibition_80db_ratio():
    g = derive_inhibition(RadioConfig(20.0, -60.0, 4.0))
    assert g.d_inh == pytest.approx(100.0, rel=1e-12)


@pytest.mark.parametrize("kw", [
    dict(tx_power_dbm=-65.0, sense_threshold_dbm=-65.0),
    dict(tx_power_dbm=-70.0, sense_threshold_dbm=-65.0),
    dict(path_loss_exponent=2.0),
    dict(path_loss_exponent=1.5),
])
def test_radio_rejects_degenerate(kw):
    with pytest.raises(ValueError):
        RadioConfig(**kw)


def test_noise_power():
    r = RadioConfig(bandwidth_hz=10e6, noise_figure_db=7.0)
    assert r.noise_power_dbm == pytest.approx(-174 + 70 + 7)
    assert RadioConfig(noiseless=True).noise_power_mw == 0.0


def test_path_loss_values():
    assert path_loss(1.0, 4.0) == 1.0
    assert path_loss(10.0, 4.0) == pytest.approx(1e-4)
    with pytest.raises(ValueError):
        path_loss(0.0, 4.0)


def test_path_loss_consistent_with_threshold(radio, geom):
    rx = dbm_to_mw(radio.tx_power_dbm) * path_loss(geom.d_inh, radio.path_loss_exponent)
    assert abs(mw_to_dbm(rx) - radio.sense_threshold_dbm) < 0.1


@given(st.floats(-150, 60))
def test_dbm_round_trip(x):
    assert mw_to_dbm(dbm_to_mw(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)


@given(st.floats(0.1, 10.0), st.floats(2.1, 6.0))
def test_scale_consistency(k, alpha):
    base = RadioConfig(20.0, -65.0, alpha)
    boosted = RadioConfig(20.0 + 10 * alpha * math.log10(k), -65.0, alpha)
    assert derive_inhibition(boosted).d_inh == pytest.approx(
        k * derive_inhibition(base).d_inh, rel=1e-9)


@given(st.floats(0.01, 1e4), st.floats(0.01, 1e4), st.floats(2.1, 6.0))
def test_path_loss_decreasing_in_r(r1, r2, alpha):
    if r1 < r2:
        assert path_loss(r1, alpha) > path_loss(r2, alpha)


@given(st.floats(1.01, 1e3), st.floats(2.1, 6.0), st.floats(2.1, 6.0))
def test_path_loss_decreasing_in_alpha(r, a1, a2):
    if a1 < a2:
        assert path_loss(r, a1) > path_loss(r, a2)


def test_geometry_rejects_nonpositive():
    with pytest.raises(ValueError):
        InhibitionGeometry(0.0)


def test_deployment_window_warning(geom):
    with pytest.warns(UserWarning):
        assert not DeploymentConfig(1e-4, Torus(5 * geom.d_inh)).check_window(geom.d_inh)
    assert DeploymentConfig(1e-4, Disk(1500.0)).check_window(geom.d_inh)
    with pytest.raises(ValueError):
        DeploymentConfig(0.0, Torus(100.0))
