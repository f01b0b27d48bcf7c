"""Parent Poisson deployments and the two contention thinnings.

``rsa_thinning`` is the sequential CSMA rule: APs wake up in order of their
back-off time and transmit iff no already transmitting AP lies within the
contention radius.  ``mhpp2_thinning`` is the one-shot Matérn type-II rule
used as the classical baseline.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .radio import Disk, Torus


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointPattern:
    """Planar points with back-off marks in ``(0, 1]``.

    Torus coordinates live in ``[0, side)``; disk coordinates are centered
    on the origin.
    """

    window: Torus | Disk
    xy: np.ndarray
    backoff: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        backoff = np.asarray(self.backoff, dtype=float).reshape(-1)
        if xy.shape[0] != backoff.shape[0]:
            raise ValueError("xy and backoff lengths differ")
        if backoff.size and (backoff.min() <= 0.0 or backoff.max() > 1.0):
            raise ValueError("back-off times must lie in (0, 1]")
        object.__setattr__(self, "xy", _readonly(xy))
        object.__setattr__(self, "backoff", _readonly(backoff))

    def __len__(self):
        return self.backoff.shape[0]


@dataclass(frozen=True)
class ContentionOutcome:
    """Indices (into the parent pattern) of the transmitting APs, listed in
    order of activation, with their activation times."""

    active_indices: np.ndarray
    activation_times: np.ndarray

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[self.active_indices] = True
        return m

    def __len__(self):
        return self.active_indices.shape[0]


def sample_ppp(density, window, rng, metadata=None) -> PointPattern:
    """Homogeneous Poisson deployment with i.i.d. uniform back-offs."""
    if density < 0:
        raise ValueError("density must be non-negative")
    n = rng.poisson(density * window.area)
    if isinstance(window, Torus):
        xy = rng.random((n, 2)) * window.side
    elif isinstance(window, Disk):
        r = window.radius * np.sqrt(rng.random(n))
        a = 2.0 * np.pi * rng.random(n)
        xy = np.column_stack((r * np.cos(a), r * np.sin(a)))
    else:
        raise TypeError(f"unsupported window {window!r}")
    backoff = 1.0 - rng.random(n)
    meta = {"density": density}
    if metadata:
        meta.update(metadata)
    return PointPattern(window, xy, backoff, meta)


def _box_coords(window, xy):
    """Kernel coordinates: (xs, ys, box, wrap)."""
    if isinstance(window, Torus):
        return xy[:, 0].copy(), xy[:, 1].copy(), float(window.side), True
    r = window.radius
    return xy[:, 0] + r, xy[:, 1] + r, 2.0 * r, False


def activation_order(backoff) -> np.ndarray:
    """Ascending back-off, ties broken by point index."""
    return np.argsort(backoff, kind="stable")


def rsa_thinning(pattern: PointPattern, d_inh: float, t_stop: float = 1.0) -> ContentionOutcome:
    """Sequential (CSMA) thinning of ``pattern`` up to time ``t_stop``.

    A point is admitted iff every previously admitted point is at distance
    ``>= d_inh`` (minimum-image distance on a torus).
    """
    if not 0.0 < t_stop <= 1.0:
        raise ValueError("t_stop must lie in (0, 1]")
    order = activation_order(pattern.backoff)
    order = order[pattern.backoff[order] <= t_stop]
    xs, ys, box, wrap = _box_coords(pattern.window, pattern.xy)
    xs = np.ascontiguousarray(xs[order])
    ys = np.ascontiguousarray(ys[order])
    m = order.shape[0]
    n, cell = _kernels.grid_shape(box, d_inh)
    head = -np.ones(n * n, dtype=np.int64)
    nxt = -np.ones(m, dtype=np.int64)
    ax = np.empty(m)
    ay = np.empty(m)
    src = np.empty(m, dtype=np.int64)
    n_active, _ = _kernels.rsa_insert(
        xs, ys, box, wrap, float(d_inh), n, cell, head, nxt, ax, ay, src, 0, m
    )
    idx = order[src[:n_active]]
    return ContentionOutcome(_readonly(idx), _readonly(pattern.backoff[idx]))


def mhpp2_thinning(pattern: PointPattern, d_inh: float) -> ContentionOutcome:
    """Matérn type-II thinning with the back-offs as marks."""
    order = activation_order(pattern.backoff)
    rank = np.empty(len(pattern), dtype=np.int64)
    rank[order] = np.arange(len(pattern))
    xs, ys, box, wrap = _box_coords(pattern.window, pattern.xy)
    keep = _kernels.mhpp2_keep(
        np.ascontiguousarray(xs), np.ascontiguousarray(ys), rank, box, wrap, float(d_inh)
    )
    idx = order[keep[order]]
    return ContentionOutcome(_readonly(idx), _readonly(pattern.backoff[idx]))


def toroidal_distance(p1, p2, window) -> float:
    """Minimum-image distance on a torus; Euclidean for any other window."""
    dx = abs(p1[0] - p2[0])
    dy = abs(p1[1] - p2[1])
    if isinstance(window, Torus):
        dx = min(dx, window.side - dx)
        dy = min(dy, window.side - dy)
    return math.hypot(dx, dy)


def pairwise_min_distance(xy, window) -> float:
    """Smallest pairwise separation (inf for fewer than two points)."""
    xy = np.asarray(xy, dtype=float)
    if xy.shape[0] < 2:
        return math.inf
    from scipy.spatial import cKDTree

    if isinstance(window, Torus):
        tree = cKDTree(np.mod(xy, window.side), boxsize=window.side)
        pts = np.mod(xy, window.side)
    else:
        tree = cKDTree(xy)
        pts = xy
    dist, _ = tree.query(pts, k=2)
    return float(dist[:, 1].min())


@dataclass
class RsaStreamResult:
    xy: np.ndarray
    arrival_index: np.ndarray
    n_arrivals: int
    side: float


def rsa_stream(side, d, rng, n_arrivals=None, n_target=None, batch=1 << 16,
               max_arrivals=None) -> RsaStreamResult:
    """Grow an RSA pattern on a torus from a stream of uniform arrivals.

    Arrivals are drawn in batches, so runs with millions of attempts never
    materialise the whole parent pattern.  Stops after ``n_arrivals``
    attempts or once ``n_target`` points have been admitted, whichever comes
    first.  Arrival order stands in for back-off order: sorting i.i.d.
    uniform back-offs of a Poisson sample gives an i.i.d. uniform stream of
    positions.
    """
    if n_arrivals is None and n_target is None:
        raise ValueError("give n_arrivals or n_target")
    if max_arrivals is None:
        max_arrivals = n_arrivals if n_arrivals is not None else np.iinfo(np.int64).max
    cap = int(side * side / (math.pi * d * d / 4.0) * 0.91) + 16
    stop = cap if n_target is None else int(n_target)
    n, cell = _kernels.grid_shape(side, d)
    head = -np.ones(n * n, dtype=np.int64)
    nxt = -np.ones(cap, dtype=np.int64)
    ax = np.empty(cap)
    ay = np.empty(cap)
    src = np.empty(cap, dtype=np.int64)
    arrival = np.empty(cap, dtype=np.int64)
    n_active = 0
    used = 0
    while used < max_arrivals and n_active < stop:
        k = int(min(batch, max_arrivals - used))
        pts = rng.random((k, 2)) * side
        before = n_active
        n_active, consumed = _kernels.rsa_insert(
            np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]),
            float(side), True, float(d), n, cell, head, nxt, ax, ay, src,
            n_active, stop,
        )
        arrival[before:n_active] = used + src[before:n_active]
        used += consumed
    xy = np.column_stack((ax[:n_active], ay[:n_active]))
    return RsaStreamResult(xy, arrival[:n_active].copy(), used, float(side))


def write_pattern_csv(path, pattern: PointPattern, outcome: ContentionOutcome | None = None):
    """CSV with header ``x_m,y_m,backoff[,active]``, one row per parent point."""
    active = outcome.mask(len(pattern)) if outcome is not None else None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_m", "y_m", "backoff"] + (["active"] if active is not None else []))
        for i in range(len(pattern)):
            row = [repr(float(pattern.xy[i, 0])), repr(float(pattern.xy[i, 1])),
                   repr(float(pattern.backoff[i]))]
            if active is not None:
                row.append(int(active[i]))
            w.writerow(row)


def read_pattern_csv(path, window):
    """Inverse of :func:`write_pattern_csv`; returns ``(pattern, active_mask_or_None)``."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    xy = np.array([[float(r["x_m"]), float(r["y_m"])] for r in rows]).reshape(-1, 2)
    backoff = np.array([float(r["backoff"]) for r in rows])
    active = None
    if rows and "active" in rows[0]:
        active = np.array([r["active"] == "1" for r in rows])
    return PointPattern(window, xy, backoff), active
