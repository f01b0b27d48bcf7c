"""Self-validation: each acceptance criterion as a function returning a
:class:`CriterionResult`.  ``rsacsma validate`` and the test suite both run
these."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import availability as av
from .metrics import coverage_curve, map_mhpp2, map_rsa
from .montecarlo import (
    mc_coverage,
    mc_density,
    mc_jamming_fraction,
    mc_map,
    mc_mhpp2_fraction,
    mc_retention_probability,
    rsa_patterns_at_coverage,
)
from .pcf import TABLE1, estimate_pcf, fit_exponential, fit_rmse, solve_pcf_numerical, table_rmse
from .pointprocess import mhpp2_thinning, pairwise_min_distance, rsa_thinning, sample_ppp
from .radio import DeploymentConfig, Disk, RadioConfig, Torus, derive_inhibition
from .rng import stream

#: Arrival intensity (per kappa) used for "jammed" patterns.
JAMMING_RATE = 5000.0


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: list = field(default_factory=list)

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}"


def _check(details, label, value, ok):
    details.append(f"{'ok ' if ok else 'BAD'} {label}: {value}")
    return ok


def _radio():
    return RadioConfig(20.0, -65.0, 4.0, 10e6)


def jamming_limit(seed=1, replications=50, rate=JAMMING_RATE):
    est = mc_jamming_fraction(rate, replications, seed)
    det = []
    ok = _check(det, f"theta(1) at lambda*kappa={rate:g}",
                f"{est.mean:.4f} +- {est.ci95_halfwidth:.4f}", abs(est.mean - 0.547) <= 0.007)
    return CriterionResult(1, "jamming limit 0.547 +- 0.007", ok, det)


def density_kinetics(seed=2, replications=200, rates=(1.0, 5.0, 20.0)):
    radio = _radio()
    g = derive_inhibition(radio)
    t = np.linspace(0.0, 1.0, 101)
    det = []
    ok = True
    for rk in rates:
        lam = rk / g.kappa
        dep = DeploymentConfig(lam, Torus(50.0 * g.d_inh), seed)
        sim = mc_density(dep, radio, t, replications)
        ode = av.solve_density(lam, g.kappa, t)
        dev = float(np.max(np.abs(sim.theta - ode.theta)))
        ok &= _check(det, f"max |theta_ode - theta_sim| at lambda*kappa={rk:g}",
                     f"{dev:.4f}", dev <= 0.01)
    return CriterionResult(2, "density ODE vs simulation within 0.01", ok, det)


def retention_oracle(seed=3, trials=100_000):
    det = []
    ok = True
    for th in (0.05, 0.1, 0.15, 0.2):
        est = mc_retention_probability(th, trials, seed)
        dev = abs(av.phi_series(th) - est.mean)
        ok &= _check(det, f"series at theta={th}", f"|dev|={dev:.4f}", dev <= 0.01)
    for th in (0.05, 0.1, 0.2, 0.3, 0.4, 0.45, 0.5):
        est = mc_retention_probability(th, trials, seed)
        dev = abs(av.phi_fit(th) - est.mean)
        ok &= _check(det, f"fit at theta={th}", f"|dev|={dev:.4f}", dev <= 0.02)
    return CriterionResult(3, "retention probability vs insertion oracle", ok, det)


def medium_access(seed=4, replications=10_000, mhpp2_replications=500):
    radio = _radio()
    g = derive_inhibition(radio)
    det = []
    ok = True
    for x in (0.5, 1.0, 2.0, 4.0, 8.0):
        lam = x / (math.pi * g.d_inh**2)
        ana = map_rsa(lam, g)
        mc = mc_map(DeploymentConfig(lam, Disk(1500.0), seed), radio, replications)
        ok &= _check(det, f"map_rsa vs mc_map at lambda*pi*d^2={x:g}",
                     f"{ana:.4f} vs {mc.mean:.4f}", abs(ana - mc.mean) <= 0.02)
        mh = map_mhpp2(lam, g.d_inh)
        ok &= _check(det, f"map_rsa >= map_mhpp2 at {x:g}", f"{ana:.4f} >= {mh:.4f}", ana >= mh)
        sim = mc_mhpp2_fraction(DeploymentConfig(lam, Torus(30.0 * g.d_inh), seed), radio,
                                mhpp2_replications)
        ok &= _check(det, f"map_mhpp2 vs thinning at {x:g}", f"{mh:.4f} vs {sim.mean:.4f}",
                     abs(mh - sim.mean) <= 0.01)
    return CriterionResult(4, "MAP vs simulation; RSA >= MHPP-II", ok, det)


def _table1_row(theta):
    return next(row for row in TABLE1 if abs(row[0] - theta) < 1e-9)


def pcf_fit(seed=5, n_patterns=500, n_jammed=50, bin_width=0.05):
    det = []
    ok = True
    for th in (0.2, 0.3, 0.547):
        if th > 0.5:
            pats = rsa_patterns_at_coverage(th, n_jammed, seed, jamming_rate=JAMMING_RATE)
        else:
            pats = rsa_patterns_at_coverage(th, n_patterns, seed)
        table = estimate_pcf(pats, bin_width, 4.0, coverage=th)
        fit = fit_exponential(table)
        _, c1, c2 = _table1_row(th)
        e1 = fit.c1 / c1 - 1.0
        e2 = fit.c2 / c2 - 1.0
        ok &= _check(det, f"c1 at theta={th}", f"{fit.c1:.3f} vs {c1} ({e1:+.0%})",
                     abs(e1) <= 0.30)
        ok &= _check(det, f"c2 at theta={th}", f"{fit.c2:.3f} vs {c2} ({e2:+.0%})",
                     abs(e2) <= 0.30)
        rmse = fit_rmse(fit, table, 1.0, 3.0)
        ok &= _check(det, f"fit RMSE at theta={th}", f"{rmse:.4f}", rmse <= 0.05)
    return CriterionResult(5, "exponential PCF fits vs published table", ok, det)


def pcf_numerical(seed=6, n_patterns=200, thetas=(0.1, 0.2, 0.25, 0.3, 0.35),
                  n_r=2048, n_rho_steps=400):
    det = []
    ok = True
    for th in thetas:
        num = solve_pcf_numerical(th, 16.0, n_r, n_rho_steps)
        emp = estimate_pcf(rsa_patterns_at_coverage(th, n_patterns, seed), 0.05, 4.0,
                           coverage=th)
        rmse = table_rmse(num, emp, 1.0, 3.0)
        ok &= _check(det, f"numerical vs empirical RMSE at theta={th}", f"{rmse:.4f}",
                     rmse <= 0.1)
    return CriterionResult(6, "numerical PCF vs empirical within RMSE 0.1", ok, det)


def coverage(seed=7, replications=30, densities=(1e-4, 1e-3)):
    radio = _radio()
    g = derive_inhibition(radio)
    betas = np.arange(-10.0, 20.0 + 1e-9, 2.5)
    det = []
    ok = True
    for lam in densities:
        dep = DeploymentConfig(lam, Torus(40.0 * g.d_inh), seed)
        sim = mc_coverage(dep, radio, betas, replications, min_accepted=10_000)
        ana = coverage_curve(betas, radio, dep)
        dev = float(np.max(np.abs(sim.p_cov - ana.p_cov)))
        ok &= _check(det, f"max |analytic - MC| at lambda={lam:g} "
                          f"({len(sim.samples)} samples)", f"{dev:.4f}", dev <= 0.04)
    return CriterionResult(7, "coverage probability vs simulation within 0.04", ok, det)


def properties(seeds=(11, 12, 13, 14, 15)):
    """Hard core, MHPP-II subset of RSA, monotone activity, flat PPP PCF,
    probability ranges and determinism."""
    det = []
    ok = True
    w = Torus(20.0)
    for s in seeds:
        pat = sample_ppp(30.0 / (math.pi / 4.0) / 1.0, w, stream(s, "prop"))
        rsa = rsa_thinning(pat, 1.0)
        mh = mhpp2_thinning(pat, 1.0)
        dmin = min(pairwise_min_distance(pat.xy[rsa.active_indices], w),
                   pairwise_min_distance(pat.xy[mh.active_indices], w))
        ok &= _check(det, f"hard core seed={s}", f"min dist {dmin:.4f}", dmin >= 1.0)
        ok &= _check(det, f"MHPP-II subset of RSA seed={s}", "",
                     set(mh.active_indices) <= set(rsa.active_indices))
        prev = set()
        mono = True
        for t in (0.1, 0.3, 0.5, 0.7, 1.0):
            cur = set(rsa_thinning(pat, 1.0, t).active_indices)
            mono &= prev <= cur
            prev = cur
        ok &= _check(det, f"monotone in t_stop seed={s}", "", mono)
    ppp = [(sample_ppp(2.0, Torus(40.0), stream(21, "ppp", i)).xy, Torus(40.0))
           for i in range(20)]
    tab = estimate_pcf(ppp, 0.1, 4.0)
    dev = float(np.max(np.abs(tab.g_values - 1.0) / tab.stderr))
    ok &= _check(det, "PPP PCF flat", f"max |g-1|/se = {dev:.2f}", dev < 4.0)
    radio = _radio()
    g = derive_inhibition(radio)
    lams = [x / g.kappa for x in (0.1, 0.5, 1.0, 2.0, 5.0)]
    maps = [map_rsa(lam, g) for lam in lams]
    ok &= _check(det, "map_rsa in (0,1] and decreasing", np.round(maps, 4).tolist(),
                 all(0 < m <= 1 for m in maps) and all(b < a for a, b in zip(maps, maps[1:])))
    cc = coverage_curve(np.arange(-10, 21, 5.0), radio, DeploymentConfig(1e-4, Torus(6000.0)))
    p = cc.p_cov
    ok &= _check(det, "coverage in [0,1] and non-increasing", np.round(p, 4).tolist(),
                 bool(np.all((p >= 0) & (p <= 1)) and np.all(np.diff(p) <= 0)))
    dep = DeploymentConfig(2e-5, Disk(1500.0), 99)
    a = mc_map(dep, radio, 200, workers=1)
    b = mc_map(dep, radio, 200, workers=1)
    c = mc_map(dep, radio, 200, workers=2)
    ok &= _check(det, "seed determinism and worker independence", f"{a.mean} {b.mean} {c.mean}",
                 a == b == c)
    return CriterionResult(8, "property suites", ok, det)


CRITERIA = (jamming_limit, density_kinetics, retention_oracle, medium_access, pcf_fit,
            pcf_numerical, coverage, properties)


def run_all(echo=print):
    results = []
    for crit in CRITERIA:
        res = crit()
        echo(res.line())
        for d in res.details:
            echo(f"    {d}")
        results.append(res)
    return results
