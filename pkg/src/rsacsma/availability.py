"""Available-surface function and the RSA density kinetics.

Everything here works in the occupied fraction ``theta = kappa * rho``,
where ``kappa`` is the area of a service disk (radius ``d_inh / 2``).  In
those units the available-surface function does not depend on ``d_inh``.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

JAMMING_FRACTION = 0.5474

# kappa / d_inh**2 = pi / 4, the conversion between rho*d_inh**2 and theta.
_KAPPA_UNIT = math.pi / 4.0


class FitForm(enum.Enum):
    CUBIC_OF_ONE_MINUS_X = "cubic_of_one_minus_x"  # P(x) * (1 - x)**3
    ONE_MINUS_X_CUBED = "one_minus_x_cubed"  # P(x) * (1 - x**3)


# Chosen by minimising the max deviation from the insertion-acceptance
# oracle over theta in [0.05, 0.5]; see select_fit_form.
DEFAULT_FIT_FORM = FitForm.CUBIC_OF_ONE_MINUS_X


def lens_area(r, d):
    """Intersection area of two disks of radius ``d`` whose centres are ``r`` apart."""
    if r < 0 or d <= 0:
        raise ValueError("need r >= 0 and d > 0")
    if r >= 2.0 * d:
        return 0.0
    return 2.0 * d * d * math.acos(r / (2.0 * d)) - 0.5 * r * math.sqrt(4.0 * d * d - r * r)


@lru_cache(maxsize=None)
def series_coefficients() -> tuple[float, float, float, float]:
    """Coefficients ``(1, a1, a2, a3)`` of the retention probability in powers of theta.

    With unit exclusion radius, the probability that a disk of radius 1 is
    free of centres is, to third order in the density ``rho``::

        1 - pi rho + rho**2/2 * I2 + rho**3/3 * I3 - S3

    where ``I2 = int_1^2 2 pi r A(r) dr``, ``I3 = int_1^2 2 pi r A(r)**2 dr``,
    ``A`` the lens area and ``S3 = rho**3 pi (sqrt(3) pi - 14/3) / 8``.
    """
    opts = dict(epsabs=0.0, epsrel=1e-10, limit=200)
    i2 = quad(lambda r: 2.0 * math.pi * r * lens_area(r, 1.0), 1.0, 2.0, **opts)[0]
    i3 = quad(lambda r: 2.0 * math.pi * r * lens_area(r, 1.0) ** 2, 1.0, 2.0, **opts)[0]
    s3 = math.pi * (math.sqrt(3.0) * math.pi - 14.0 / 3.0) / 8.0
    k = _KAPPA_UNIT
    return (1.0, -math.pi / k, 0.5 * i2 / k**2, (i3 / 3.0 - s3) / k**3)


def phi_series(theta: float) -> float:
    """Third-order low-density series of the retention probability."""
    if not 0.0 <= theta < JAMMING_FRACTION:
        raise ValueError(f"theta={theta} outside [0, {JAMMING_FRACTION})")
    a0, a1, a2, a3 = series_coefficients()
    return a0 + theta * (a1 + theta * (a2 + theta * a3))


def _factor_coeffs(form: FitForm):
    if form is FitForm.CUBIC_OF_ONE_MINUS_X:
        return np.array([1.0, -3.0, 3.0, -1.0])
    if form is FitForm.ONE_MINUS_X_CUBED:
        return np.array([1.0, 0.0, 0.0, -1.0])
    raise ValueError(f"unknown fit form {form!r}")


def match_fit_coeffs(series=None, form: FitForm = DEFAULT_FIT_FORM,
                     jamming_fraction: float = JAMMING_FRACTION):
    """Solve for ``(b1, b2, b3)`` so the fitted form reproduces the series
    through third order in theta.

    The fitted form is ``(1 + b1 x + b2 x**2 + b3 x**3) * Q(x)`` with
    ``x = theta / jamming_fraction``; equating the x, x**2 and x**3
    coefficients gives a unit lower-triangular system in the b's.
    """
    if series is None:
        series = series_coefficients()
    s = np.array([series[k] * jamming_fraction**k for k in range(4)])
    q = _factor_coeffs(form)
    # coefficient of x**k in P*Q is sum_j b_j q_{k-j} with b_0 = 1
    m = np.zeros((3, 3))
    rhs = np.zeros(3)
    for k in range(1, 4):
        rhs[k - 1] = s[k] - q[k]
        for j in range(1, k + 1):
            m[k - 1, j - 1] = q[k - j]
    if abs(np.linalg.det(m)) < 1e-12:
        raise np.linalg.LinAlgError("singular coefficient-matching system")
    return tuple(float(b) for b in np.linalg.solve(m, rhs))


@dataclass(frozen=True)
class AvailabilityFunction:
    """Retention probability phi(theta): low-density series plus its
    jamming-aware fitted extension."""

    fit_coeffs: tuple
    fit_form: FitForm = DEFAULT_FIT_FORM
    jamming_fraction: float = JAMMING_FRACTION
    series_order: int = 3

    @classmethod
    def matched(cls, form: FitForm = DEFAULT_FIT_FORM,
                jamming_fraction: float = JAMMING_FRACTION):
        return cls(match_fit_coeffs(form=form, jamming_fraction=jamming_fraction),
                   form, jamming_fraction)

    def series(self, theta):
        return phi_series(theta)

    def _poly(self, theta):
        x = theta / self.jamming_fraction
        if x >= 1.0:
            return 0.0
        b1, b2, b3 = self.fit_coeffs
        p = 1.0 + x * (b1 + x * (b2 + x * b3))
        if self.fit_form is FitForm.CUBIC_OF_ONE_MINUS_X:
            return p * (1.0 - x) ** 3
        return p * (1.0 - x**3)

    def fit(self, theta):
        """Fitted retention probability on ``[0, jamming_fraction]``."""
        if theta < 0.0 or theta > self.jamming_fraction:
            raise ValueError(f"theta={theta} outside [0, {self.jamming_fraction}]")
        v = self._poly(theta)
        if -1e-12 < v < 0.0:
            v = 0.0
        return v

    __call__ = fit


@lru_cache(maxsize=None)
def default_availability() -> AvailabilityFunction:
    return AvailabilityFunction.matched()


def phi_fit(theta: float, avail: AvailabilityFunction | None = None) -> float:
    return (avail or default_availability()).fit(theta)


def select_fit_form(oracle_thetas, oracle_values):
    """Pick the fit form closest (in max abs deviation) to measured
    retention probabilities.  Returns ``(form, {form: max_dev})``."""
    devs = {}
    for form in FitForm:
        a = AvailabilityFunction.matched(form)
        devs[form] = max(abs(a.fit(t) - v) for t, v in zip(oracle_thetas, oracle_values))
    return min(devs, key=devs.get), devs


@dataclass(frozen=True)
class DensityCurve:
    time_grid: np.ndarray
    rho: np.ndarray
    theta: np.ndarray
    ci95_theta: np.ndarray | None = None

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["t", "rho_per_m2", "theta"])
            for t, r, th in zip(self.time_grid, self.rho, self.theta):
                w.writerow([repr(float(t)), repr(float(r)), repr(float(th))])


def _rk4_theta(rate, phi, t_grid, n_steps):
    """Integrate d(theta)/dt = rate * phi(theta) from 0 with about
    ``n_steps`` equal steps per unit time; returns theta at ``t_grid`` and
    at t = 1."""
    out = np.empty(len(t_grid))
    theta = 0.0
    t = 0.0
    targets = list(t_grid) + [1.0]
    vals = []
    f = lambda th: rate * phi(th)  # noqa: E731
    for target in targets:
        span = target - t
        k = max(1, math.ceil(span * n_steps - 1e-9)) if span > 0 else 0
        if k:
            h = span / k
            for _ in range(k):
                k1 = f(theta)
                k2 = f(theta + 0.5 * h * k1)
                k3 = f(theta + 0.5 * h * k2)
                k4 = f(theta + h * k3)
                theta += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            t = target
        vals.append(theta)
    out[:] = vals[:-1]
    return out, vals[-1]


def solve_density(arrival_density, kappa, t_grid, avail: AvailabilityFunction | None = None,
                  tol=1e-6, min_steps=64, max_steps=1 << 22) -> DensityCurve:
    """RSA density rho(t) from d(rho)/dt = arrival_density * phi(kappa * rho).

    Classical fourth-order Runge-Kutta; the step count is doubled until
    halving the step changes ``kappa * rho(1)`` by less than ``tol``.
    """
    if arrival_density < 0:
        raise ValueError("arrival_density must be non-negative")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size and (np.any(np.diff(t_grid) < 0) or t_grid[0] < 0 or t_grid[-1] > 1):
        raise ValueError("t_grid must be ascending within [0, 1]")
    avail = avail or default_availability()
    rate = arrival_density * kappa
    if rate == 0.0:
        z = np.zeros_like(t_grid)
        return DensityCurve(t_grid, z, z.copy())
    # the explicit scheme is stable once h * rate * |phi'| is small; start there
    n = max(min_steps, 1 << math.ceil(math.log2(max(1.0, rate))))
    prev, prev_end = _rk4_theta(rate, avail._poly, t_grid, n)
    while True:
        n *= 2
        cur, end = _rk4_theta(rate, avail._poly, t_grid, n)
        if abs(end - prev_end) < tol:
            break
        if n >= max_steps:
            raise RuntimeError(f"density ODE did not converge with {n} steps")
        prev, prev_end = cur, end
    theta = np.minimum(cur, avail.jamming_fraction)
    return DensityCurve(t_grid, theta / kappa, theta)
