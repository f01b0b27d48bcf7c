"""Pair correlation of the RSA process.

Three routes to g(r), all with r measured in units of ``d_inh``:

* :func:`solve_pcf_numerical` marches the first-order kinetic closure for
  the total correlation ``h = g - 1``, the direct correlation ``C`` and the
  cavity function ``Y2`` from zero density up to a target coverage.
* :func:`estimate_pcf` histograms pair distances of simulated patterns.
* :func:`fit_exponential` condenses either table to the two-parameter form
  ``g(r) = 1 + c1 exp(-c2 (r - 1))`` used by the coverage analysis.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .hankel import HankelGrid
from .radio import Torus

log = logging.getLogger(__name__)

#: (coverage, c1, c2) rows of the published fit table.
TABLE1 = (
    (0.1, 0.14, 2.0),
    (0.15, 0.2, 2.8),
    (0.2, 0.28, 2.25),
    (0.25, 0.41, 4.0),
    (0.3, 0.47, 3.4),
    (0.35, 0.66, 3.96),
    (0.4, 0.87, 4.38),
    (0.45, 1.42, 5.92),
    (0.5, 1.83, 6.78),
    (0.547, 2.5, 7.24),
)


class PcfSource(enum.Enum):
    NUMERICAL = "numerical"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class PcfTable:
    r_grid: np.ndarray
    g_values: np.ndarray
    coverage: float
    source: PcfSource
    stderr: np.ndarray | None = None

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["r_over_dinh", "g"])
            for r, g in zip(self.r_grid, self.g_values):
                w.writerow([repr(float(r)), repr(float(g))])

    @classmethod
    def from_csv(cls, path, coverage=float("nan"), source=PcfSource.EMPIRICAL):
        with open(path, newline="") as fh:
            rows = [ln for ln in fh if not ln.startswith("#")]
        data = list(csv.DictReader(rows))
        r = np.array([float(d["r_over_dinh"]) for d in data])
        g = np.array([float(d["g"]) for d in data])
        return cls(r, g, coverage, source)


@dataclass(frozen=True)
class PcfFit:
    c1: float
    c2: float
    coverage: float = float("nan")

    def __post_init__(self):
        if self.c1 < 0 or not self.c2 > 0:
            raise ValueError(f"need c1 >= 0 and c2 > 0, got ({self.c1}, {self.c2})")

    def __call__(self, r):
        return pcf_eval(self, r)


def write_fits_csv(path, fits, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["coverage", "c1", "c2"])
        for f in fits:
            w.writerow([repr(float(f.coverage)), repr(float(f.c1)), repr(float(f.c2))])


def read_fits_csv(path):
    with open(path, newline="") as fh:
        rows = [ln for ln in fh if not ln.startswith("#")]
    return [PcfFit(float(d["c1"]), float(d["c2"]), float(d["coverage"]))
            for d in csv.DictReader(rows)]


# ---------------------------------------------------------------------------
# evaluation and interpolation

def pcf_eval(fit_or_table, r):
    """g at distance ``r`` (units of d_inh); zero inside the hard core.

    Works on scalars and arrays.  Tables are interpolated linearly over
    their ``r >= 1`` nodes (flat extrapolation at both ends of that range).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    if isinstance(fit_or_table, PcfFit):
        with np.errstate(over="ignore"):
            g = 1.0 + fit_or_table.c1 * np.exp(-fit_or_table.c2 * (r - 1.0))
    else:
        t = fit_or_table
        keep = t.r_grid >= 1.0
        g = np.interp(r, t.r_grid[keep], t.g_values[keep])
    g = np.where(r < 1.0, 0.0, g)
    return float(g) if g.ndim == 0 else g


def interpolate_fits(rows, coverage):
    """Linear interpolation of ``(coverage, c1, c2)`` rows."""
    cov = np.array([row[0] for row in rows])
    c1 = np.array([row[1] for row in rows])
    c2 = np.array([row[2] for row in rows])
    return PcfFit(float(np.interp(coverage, cov, c1)), float(np.interp(coverage, cov, c2)),
                  float(coverage))


def table1_interpolate(coverage: float) -> PcfFit:
    """(c1, c2) at occupied fraction ``coverage`` from the published table.

    Below 0.1 the values are extrapolated linearly toward (0, 2) at zero
    coverage, with a warning.  Coverages up to the 0.5474 jamming fraction
    used by the density model are mapped onto the last row.
    """
    if coverage < 0:
        raise ValueError("coverage must be non-negative")
    if coverage > 0.5474 + 1e-12:
        raise ValueError(f"coverage {coverage} beyond the jamming limit")
    if coverage < TABLE1[0][0]:
        warnings.warn(f"coverage {coverage} below 0.1; extrapolating toward (0, 2)",
                      stacklevel=2)
        return interpolate_fits(((0.0, 0.0, 2.0),) + TABLE1[:1], coverage)
    return interpolate_fits(TABLE1, min(coverage, TABLE1[-1][0]))


def nonhom_intensity(rho, fit, r, d_inh):
    """Intensity seen from a typical active AP at distance ``r`` (meters)."""
    if rho < 0:
        raise ValueError("rho must be non-negative")
    return rho * pcf_eval(fit, np.asarray(r, dtype=float) / d_inh)


# ---------------------------------------------------------------------------
# numerical kinetic closure

class PcfDivergence(RuntimeError):
    def __init__(self, msg, rho):
        super().__init__(msg)
        self.rho = rho


@dataclass
class KineticState:
    rho: float
    h_grid: np.ndarray
    c_grid: np.ndarray
    y_grid: np.ndarray


class _Closure:
    """Right-hand side of the density march on a fixed Hankel grid."""

    def __init__(self, grid: HankelGrid):
        self.grid = grid
        core = grid.r < 1.0
        self.core = core
        self.f = np.where(core, -1.0, 0.0)
        # forward transform restricted to the core, and inverse rows on the core
        self._fwd_core = 2.0 * np.pi * grid.dr * grid.kernel[:, core] * grid.r[core]
        self._inv_core = grid.dk / (2.0 * np.pi) * grid.kernel[:, core].T * grid.k

    def cavity(self, rho, h):
        """Solve ``Y2 = 1 + rho (C * h)`` with ``C = f Y2`` for the given h.

        Only Y2 inside the core enters C, so this is a dense linear solve in
        the core unknowns; the convolution is then evaluated everywhere.
        Returns ``(Y2, C, C*h)``.
        """
        g = self.grid
        hk = g.forward(h)
        # (C*h) on core rows as a linear map of Y2 on the core (C = -Y2 there)
        op = -(self._inv_core * hk) @ self._fwd_core
        n_core = op.shape[0]
        y_core = np.linalg.solve(np.eye(n_core) - rho * op, np.ones(n_core))
        c = np.zeros_like(h)
        c[self.core] = -y_core
        conv = g.inverse(g.forward(c) * hk)
        y = 1.0 + rho * conv
        y[self.core] = y_core
        return y, c, conv

    def rate(self, rho, u):
        """d(rho^2 h)/d(rho) outside the core, given ``u = rho^2 h`` there."""
        h = self.f.copy()
        if rho > 0:
            h[~self.core] = u / (rho * rho)
        _, _, conv = self.cavity(rho, h)
        return 2.0 * rho * rho * conv[~self.core]


def solve_pcf_numerical(target_coverage, r_max=16.0, n_r=2048, n_rho_steps=400,
                        return_state=False):
    """g(r) at occupied fraction ``target_coverage`` from the kinetic closure.

    Starts from the zero-density limit ``h = f`` (``-1`` inside the core,
    ``0`` outside) and integrates ``d(rho^2 h)/d(rho) = 2 rho (C + rho C*h)``
    with fixed-step fourth-order Runge-Kutta in rho.  Inside the core h stays
    at ``-1`` identically.  The returned table starts at r = 0 and then
    follows the midpoint grid.
    """
    if not 0.0 < target_coverage <= 0.45:
        raise ValueError("target_coverage must lie in (0, 0.45]")
    if target_coverage > 0.40:
        warnings.warn("the first-order closure degrades above 40% coverage", stacklevel=2)
    grid = HankelGrid(r_max, n_r)
    cl = _Closure(grid)
    out = ~cl.core
    rho_end = target_coverage / (math.pi / 4.0)
    d_rho = rho_end / n_rho_steps
    u = np.zeros(out.sum())
    rho = 0.0
    for step in range(n_rho_steps):
        k1 = cl.rate(rho, u)
        k2 = cl.rate(rho + 0.5 * d_rho, u + 0.5 * d_rho * k1)
        k3 = cl.rate(rho + 0.5 * d_rho, u + 0.5 * d_rho * k2)
        k4 = cl.rate(rho + d_rho, u + d_rho * k3)
        u = u + d_rho * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        rho = (step + 1) * d_rho
        h_out = u / (rho * rho)
        if not np.all(np.isfinite(h_out)) or np.max(np.abs(h_out)) > 10.0 or h_out[0] < -1.0:
            raise PcfDivergence(
                f"kinetic closure diverged at rho={rho:.4g} "
                f"(coverage {rho * math.pi / 4:.4g})", rho)
    h = cl.f.copy()
    h[out] = u / (rho * rho)
    r = np.concatenate(([0.0], grid.r))
    g = np.concatenate(([0.0], h + 1.0))
    table = PcfTable(r, g, float(target_coverage), PcfSource.NUMERICAL)
    if return_state:
        y, c, _ = cl.cavity(rho, h)
        return table, KineticState(rho, h, c, y)
    return table


# ---------------------------------------------------------------------------
# empirical estimation

def _as_xy_torus(item, d_inh):
    """Accept ``(xy, Torus)``, a PointPattern, or ``(PointPattern, outcome)``."""
    from .pointprocess import ContentionOutcome, PointPattern

    if isinstance(item, PointPattern):
        xy, window = item.xy, item.window
    elif isinstance(item, tuple) and isinstance(item[0], PointPattern):
        pat, outcome = item
        if not isinstance(outcome, ContentionOutcome):
            raise TypeError("expected (PointPattern, ContentionOutcome)")
        xy, window = pat.xy[outcome.active_indices], pat.window
    else:
        xy, window = item
    if not isinstance(window, Torus):
        raise ValueError("pair correlation estimation needs a torus window")
    return np.asarray(xy, dtype=float) / d_inh, window.side / d_inh


def estimate_pcf(patterns, bin_width=0.05, r_max=4.0, d_inh=1.0, coverage=float("nan")):
    """Histogram estimate of g(r) from patterns on a torus.

    Each pattern contributes ``counts_k / (N rho_hat A_k)`` where ``counts``
    are ordered pairs in annulus ``k``, ``A_k`` the annulus area and
    ``rho_hat = (N - 1) / |W|``; the per-pattern curves are averaged.  No
    edge correction is needed on a torus as long as ``r_max`` is at most
    half the side.
    """
    nbins = int(round(r_max / bin_width))
    edges = np.arange(nbins + 1) * bin_width
    ring = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
    curves = []
    for item in patterns:
        xy, side = _as_xy_torus(item, d_inh)
        if r_max > side / 2:
            raise ValueError("r_max must not exceed half the torus side")
        n = xy.shape[0]
        if n < 2:
            continue
        counts = _kernels.pair_histogram(
            np.ascontiguousarray(np.mod(xy[:, 0], side)),
            np.ascontiguousarray(np.mod(xy[:, 1], side)),
            float(side), float(edges[-1]), nbins, float(bin_width),
        )
        curves.append(counts / (n * (n - 1) / side**2 * ring))
    if not curves:
        raise ValueError("no pattern with at least two points")
    curves = np.array(curves)
    g = curves.mean(axis=0)
    se = curves.std(axis=0, ddof=1) / np.sqrt(len(curves)) if len(curves) > 1 else None
    centers = 0.5 * (edges[1:] + edges[:-1])
    return PcfTable(centers, g, float(coverage), PcfSource.EMPIRICAL, se)


# ---------------------------------------------------------------------------
# exponential fit

class FitError(RuntimeError):
    def __init__(self, msg, best):
        super().__init__(msg)
        self.best = best


def fit_window(table: PcfTable, r_cut=3.0, auto_cut=False):
    """Nodes of ``table`` used for fitting: ``1 <= r <= r_cut``.

    With ``auto_cut`` the window ends at the first node (past the fifth)
    where ``|g - 1| < 0.01``.
    """
    sel = (table.r_grid >= 1.0) & (table.r_grid <= r_cut)
    r = table.r_grid[sel]
    g = table.g_values[sel]
    if auto_cut:
        small = np.nonzero(np.abs(g - 1.0) < 0.01)[0]
        small = small[small >= 4]
        if small.size:
            r, g = r[: small[0] + 1], g[: small[0] + 1]
    return r, g


def fit_exponential(table: PcfTable, r_cut=3.0, auto_cut=False, tol=1e-9,
                    max_iter=500) -> PcfFit:
    """Least-squares fit of ``1 + c1 exp(-c2 (r - 1))`` by damped Gauss-Newton."""
    r, g = fit_window(table, r_cut, auto_cut)
    if r.size < 5 or np.sum(g > 0.95) < 5:
        raise ValueError("need at least 5 nodes with r >= 1 and g > 0.95 in the fit window")
    x = r - 1.0
    p = np.array([max(g[0] - 1.0, 1e-3), 3.0])

    def sse(q):
        res = g - 1.0 - q[0] * np.exp(-q[1] * x)
        return float(res @ res)

    cur = sse(p)
    mu = 1e-3
    for _ in range(max_iter):
        e = np.exp(-p[1] * x)
        res = g - 1.0 - p[0] * e
        jac = np.column_stack((e, -p[0] * x * e))
        jtj = jac.T @ jac
        grad = jac.T @ res
        while True:
            step = np.linalg.solve(jtj + mu * np.diag(np.diag(jtj) + 1e-12), grad)
            trial = p + step
            if trial[1] <= 0:
                trial[1] = 0.5 * p[1]
            if trial[0] < 0:
                trial[0] = 0.0
            new = sse(trial)
            if new <= cur:
                mu = max(mu / 3.0, 1e-12)
                break
            mu *= 3.0
            if mu > 1e12:
                break
        moved = np.max(np.abs(trial - p))
        if new <= cur:
            p, cur = trial, new
        if moved < tol or mu > 1e12:
            return PcfFit(float(p[0]), float(p[1]), table.coverage)
    raise FitError(f"exponential fit did not converge in {max_iter} iterations",
                   PcfFit(float(p[0]), float(p[1]), table.coverage))


def fit_rmse(fit: PcfFit, table: PcfTable, r_lo=1.0, r_hi=3.0):
    sel = (table.r_grid >= r_lo) & (table.r_grid <= r_hi)
    d = pcf_eval(fit, table.r_grid[sel]) - table.g_values[sel]
    return float(np.sqrt(np.mean(d * d)))


def table_rmse(a: PcfTable, b: PcfTable, r_lo=1.0, r_hi=3.0):
    """RMSE of ``a`` against ``b`` on the nodes of ``b`` within ``[r_lo, r_hi]``."""
    sel = (b.r_grid >= r_lo) & (b.r_grid <= r_hi)
    d = pcf_eval(a, b.r_grid[sel]) - b.g_values[sel]
    return float(np.sqrt(np.mean(d * d)))
