"""Medium access probability and SINR coverage of the typical link."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .availability import AvailabilityFunction, default_availability, solve_density
from .pcf import TABLE1, PcfFit, interpolate_fits, pcf_eval, table1_interpolate
from .radio import InhibitionGeometry, RadioConfig, db_to_linear, derive_inhibition

#: Radius (units of d_inh) beyond which the pair correlation is taken as 1.
TAIL_RADIUS = 20.0


def _simpson(y, h):
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def map_rsa(ap_density, geometry: InhibitionGeometry,
            avail: AvailabilityFunction | None = None, n_nodes=401):
    """MAP of the typical AP: the retention probability at its own back-off
    time, averaged over a uniform back-off on (0, 1].

    Composite Simpson on at least ``n_nodes`` nodes; the node count grows with
    ``ap_density * kappa`` so the fast initial decay stays resolved.
    """
    if ap_density < 0:
        raise ValueError("ap_density must be non-negative")
    if ap_density == 0:
        return 1.0
    avail = avail or default_availability()
    rate = ap_density * geometry.kappa
    n = max(n_nodes, 2 * math.ceil(10.0 * rate) + 1)
    if n % 2 == 0:
        n += 1
    t = np.linspace(0.0, 1.0, n)
    curve = solve_density(ap_density, geometry.kappa, t, avail)
    phi = np.array([avail.fit(th) for th in curve.theta])
    return float(_simpson(phi, 1.0 / (n - 1)))


def map_mhpp2(ap_density, d_inh):
    """MAP of the Matérn type-II baseline, ``(1 - exp(-x)) / x`` with
    ``x = pi * ap_density * d_inh**2``."""
    if ap_density < 0:
        raise ValueError("ap_density must be non-negative")
    x = math.pi * ap_density * d_inh * d_inh
    if x == 0:
        return 1.0
    return -math.expm1(-x) / x


def write_map_csv(path, rows, header_lines=(), extra_columns=()):
    """Rows of ``(lambda_a, map_rsa, map_mhpp2, *extra)``."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["lambda_a_per_m2", "map_rsa", "map_mhpp2", *extra_columns])
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# coverage

class CoverageConvergenceError(RuntimeError):
    pass


def _interference_integral(r0, beta, alpha, fit, n_phi, n_r):
    """Interference exponent integral (units of d_inh**2) for serving
    distances ``r0`` (array, units of d_inh).

    User-centred polar coordinates; for each angle the radial integral
    starts where the interferer leaves the AP's contention disk, so the
    hard-core edge of g never falls inside a quadrature cell.  Beyond
    ``TAIL_RADIUS`` g is 1 and the ring integral is done in closed form or
    adaptively.
    """
    xp, wp = np.polynomial.legendre.leggauss(n_phi)
    phi = np.pi * (xp + 1.0)  # [0, 2 pi]
    wphi = np.pi * wp
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    out = np.empty(len(r0))
    for i, s in enumerate(r0):
        lo = s * np.cos(phi) + np.sqrt(1.0 - (s * np.sin(phi)) ** 2)
        # split each ray at lo + 3 to resolve the correlation bump separately
        total = 0.0
        for a, b in ((lo, lo + 3.0), (lo + 3.0, np.full_like(lo, TAIL_RADIUS))):
            half = 0.5 * (b - a)
            r = a[:, None] + half[:, None] * (xr[None, :] + 1.0)
            dist = np.sqrt(r * r + s * s - 2.0 * r * s * np.cos(phi)[:, None])
            g = pcf_eval(fit, np.maximum(dist, 1.0))
            ker = 1.0 / (1.0 + (r / s) ** alpha / beta)
            ray = (g * ker * r) @ wr * half
            total += ray @ wphi
        out[i] = total + _tail(s, beta, alpha)
    return out


def _tail(r0, beta, alpha):
    a = beta * r0**alpha
    if alpha == 4.0:
        sa = math.sqrt(a)
        return 2.0 * math.pi * 0.5 * sa * (0.5 * math.pi - math.atan(TAIL_RADIUS**2 / sa))
    val, _ = quad(lambda r: r / (1.0 + r**alpha / a), TAIL_RADIUS, np.inf,
                  epsabs=0.0, epsrel=1e-8, limit=200)
    return 2.0 * math.pi * val


def _coverage_once(beta, alpha, lam_d2, noise_coef, fit, n_r0, n_phi, n_r):
    x, w = np.polynomial.legendre.leggauss(n_r0)
    r0 = 0.25 * (x + 1.0)  # (0, 1/2]
    w0 = 0.25 * w
    interf = _interference_integral(r0, beta, alpha, fit, n_phi, n_r)
    integrand = np.exp(-beta * noise_coef * r0**alpha) * np.exp(-lam_d2 * interf)
    return float(np.sum(w0 * integrand * 2.0 * r0 / 0.25))


def coverage_probability(beta, radio: RadioConfig, lambda_active, fit: PcfFit,
                         n_r0=64, n_phi=64, n_r=256, tol=1e-4, max_doublings=3):
    """SINR coverage of the typical link for linear threshold ``beta``.

    The active APs seen from the typical transmitter are treated as a
    non-homogeneous PPP of intensity ``lambda_active * g(distance / d_inh)``;
    the result is checked by doubling every quadrature order until two
    successive values differ by less than ``tol``.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if beta == 0:
        return 1.0
    if not lambda_active > 0:
        raise ValueError("lambda_active must be positive")
    alpha = radio.path_loss_exponent
    if alpha <= 2:
        raise ValueError("path-loss exponent must exceed 2")
    geom = derive_inhibition(radio)
    d = geom.d_inh
    lam_d2 = lambda_active * d * d
    # beta * sigma^2 / (P_t l(r0)) with r0 = d * u  ->  beta * noise_coef * u**alpha
    noise_coef = radio.noise_power_mw * d**alpha / radio.tx_power_mw
    prev = _coverage_once(beta, alpha, lam_d2, noise_coef, fit, n_r0, n_phi, n_r)
    for _ in range(max_doublings):
        n_r0, n_phi, n_r = 2 * n_r0, 2 * n_phi, 2 * n_r
        cur = _coverage_once(beta, alpha, lam_d2, noise_coef, fit, n_r0, n_phi, n_r)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise CoverageConvergenceError(
        f"coverage quadrature not converged at beta={beta}: last change {abs(cur - prev):.2e} "
        f"with (n_r0, n_phi, n_r)=({n_r0}, {n_phi}, {n_r})")


@dataclass(frozen=True)
class CoverageCurve:
    beta_grid_db: np.ndarray
    p_cov: np.ndarray
    provenance: dict

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["beta_db", "p_cov"])
            for b, p in zip(self.beta_grid_db, self.p_cov):
                w.writerow([repr(float(b)), repr(float(p))])


def active_density_and_fit(ap_density, radio: RadioConfig, pcf_rows=None,
                           avail: AvailabilityFunction | None = None):
    """Density of active APs at the end of the back-off window and the
    pair-correlation fit at the matching occupied fraction.

    ``pcf_rows`` replaces the published fit table with rows of
    ``(coverage, c1, c2)``, e.g. from :func:`rsacsma.pcf.fit_exponential`.
    """
    geom = derive_inhibition(radio)
    curve = solve_density(ap_density, geom.kappa, [1.0], avail)
    theta1 = float(curve.theta[0])
    fit = table1_interpolate(theta1) if pcf_rows is None else interpolate_fits(pcf_rows, theta1)
    return float(curve.rho[0]), fit, theta1


def coverage_curve(beta_grid_db, radio: RadioConfig, deployment, pcf_rows=None,
                   avail: AvailabilityFunction | None = None) -> CoverageCurve:
    lam, fit, theta1 = active_density_and_fit(deployment.ap_density, radio, pcf_rows, avail)
    p = [coverage_probability(db_to_linear(b), radio, lam, fit) for b in beta_grid_db]
    prov = {
        "lambda_active_per_m2": lam,
        "theta_end": theta1,
        "c1": fit.c1,
        "c2": fit.c2,
        "pcf_source": "table1" if pcf_rows is None else "custom",
        "radio": radio,
    }
    return CoverageCurve(np.asarray(beta_grid_db, dtype=float), np.array(p), prov)
