import math

import numpy as np
import pytest
from scipy import stats

from rsacsma.availability import phi_fit, phi_series, solve_density
from rsacsma.metrics import map_mhpp2, map_rsa
from rsacsma.montecarlo import (
    McEstimate,
    mc_coverage,
    mc_density,
    mc_map,
    mc_mhpp2_fraction,
    mc_retention_probability,
    rsa_patterns_at_coverage,
)
from rsacsma.radio import DeploymentConfig, Disk, RadioConfig, Torus


def lam_for(x, d):
    return x / (math.pi * d * d)


def test_estimate_needs_two_samples():
    with pytest.raises(ValueError):
        McEstimate.from_samples([1.0], 0)
    e = McEstimate.from_samples([0.0, 1.0, 0.0, 1.0], 3)
    assert e.mean == 0.5 and e.replications == 4 and e.seed == 3


def test_map_empty_parents(radio):
    dep = DeploymentConfig(1e-12, Disk(1500.0), 1)
    e = mc_map(dep, radio, 200)
    assert e.mean == 1.0 and e.ci95_halfwidth == 0.0


def test_map_rejects_few_replications(radio):
    with pytest.raises(ValueError):
        mc_map(DeploymentConfig(1e-4, Disk(1500.0)), radio, 50)


def test_map_deterministic_and_worker_independent(radio):
    dep = DeploymentConfig(1e-4, Disk(1500.0), 42)
    a = mc_map(dep, radio, 400)
    b = mc_map(dep, radio, 400)
    c = mc_map(dep, radio, 400, workers=3)
    assert a == b == c


def test_map_against_analysis(radio, geom):
    lam = lam_for(4.0, geom.d_inh)
    e = mc_map(DeploymentConfig(lam, Disk(1500.0), 7), radio, 10_000, workers=4)
    assert abs(e.mean - map_rsa(lam, geom)) <= 0.02


def test_mhpp2_fraction_matches_closed_form(radio, geom):
    lam = lam_for(2.0, geom.d_inh)
    dep = DeploymentConfig(lam, Torus(20 * geom.d_inh), 8)
    e = mc_mhpp2_fraction(dep, radio, 500, workers=4)
    assert abs(e.mean - map_mhpp2(lam, geom.d_inh)) <= 0.01


def test_density_curve(radio, geom):
    lam = 50.0 / geom.kappa
    t = np.linspace(0.0, 1.0, 11)
    dep = DeploymentConfig(lam, Torus(30 * geom.d_inh), 9)
    mc = mc_density(dep, radio, t, replications=40, workers=4)
    assert mc.theta[0] == 0.0
    assert 0.50 <= mc.theta[-1] <= 0.547
    ode = solve_density(lam, geom.kappa, t)
    assert np.max(np.abs(mc.theta - ode.theta)) <= 0.01
    assert mc.ci95_theta is not None


def test_density_needs_torus(radio):
    with pytest.raises(ValueError):
        mc_density(DeploymentConfig(1e-4, Disk(1500.0)), radio, [1.0])


def test_retention_examples():
    assert mc_retention_probability(0.0, trials=1000).mean == 1.0
    assert abs(mc_retention_probability(0.1, seed=21).mean - phi_series(0.1)) <= 0.01
    assert abs(mc_retention_probability(0.45, seed=22).mean - phi_fit(0.45)) <= 0.02


def test_retention_unreachable():
    with pytest.raises(ValueError):
        mc_retention_probability(0.6)


def test_patterns_hit_target_coverage():
    pats = rsa_patterns_at_coverage(0.25, 3, seed=1, side=20)
    for xy, w in pats:
        assert len(xy) * (math.pi / 4) / w.area == pytest.approx(0.25, abs=1e-2)


def test_coverage_single_ap_noiseless():
    radio = RadioConfig(noiseless=True)
    from rsacsma.radio import derive_inhibition
    d = derive_inhibition(radio).d_inh
    side = 40 * d
    dep = DeploymentConfig(1.0 / side**2, Torus(side), 3)
    res = mc_coverage(dep, radio, [-10.0, 0.0, 30.0], replications=400, min_accepted=20)
    isolated = [s for s in res.samples if s.num_interferers == 0]
    assert isolated and all(math.isinf(s.sinr_linear) or s.sinr_linear > 1e3 for s in isolated)


def test_coverage_mc_properties(radio, geom, tmp_path):
    side = 40 * geom.d_inh
    dep = DeploymentConfig(1e-4, Torus(side), 5)
    betas = [-10.0, -5.0, 0.0, 5.0, 10.0, 20.0]
    res = mc_coverage(dep, radio, betas, replications=3, min_accepted=100)
    p = res.p_cov
    assert np.all(np.diff(p) <= 0)
    r_inh = geom.r_inh
    for s in res.samples:
        assert 0 <= s.serving_distance_m <= r_inh
        assert s.min_interferer_distance_m >= r_inh - 1e-9
    # transmitting APs are those that drew early back-offs
    ks = stats.kstest([s.backoff for s in res.samples], "uniform")
    assert ks.pvalue < 1e-6 and np.mean([s.backoff for s in res.samples]) < 0.5
    again = mc_coverage(dep, radio, betas, replications=3, min_accepted=100, workers=3)
    np.testing.assert_array_equal(again.p_cov, p)
    path = tmp_path / "raw.csv"
    res.dump_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "replication,beta_db,sinr_db,serving_distance_m,num_interferers"
    assert len(lines) == 1 + len(res.samples) * len(betas)


def test_coverage_reject_mode(radio, geom):
    dep = DeploymentConfig(2e-5, Torus(40 * geom.d_inh), 6)
    res = mc_coverage(dep, radio, [0.0, 10.0], replications=300, conditioning="reject",
                      min_accepted=100)
    assert 0.01 < res.acceptance_rate < 1.0
    assert res.p_cov[0] >= res.p_cov[1]


def test_coverage_low_acceptance_errors(radio, geom):
    # about 70 contenders per inhibition disk: the centre AP wins under 1% of the time
    dep = DeploymentConfig(5e-3, Torus(12 * geom.d_inh), 6)
    with pytest.warns(UserWarning), pytest.raises(RuntimeError, match="acceptance"):
        mc_coverage(dep, radio, [0.0], replications=400, conditioning="reject", min_accepted=1)


def test_coverage_bad_conditioning(radio):
    with pytest.raises(ValueError):
        mc_coverage(DeploymentConfig(1e-4, Torus(6000.0)), radio, [0.0], conditioning="x")
