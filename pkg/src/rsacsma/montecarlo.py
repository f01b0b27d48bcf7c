"""Monte Carlo ground truth for the analytical results.

Replication ``i`` of an experiment always draws from
``rng.stream(master_seed, <experiment>, i)``, and results are merged in
replication order, so estimates do not depend on how many worker processes
share the work.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import _kernels
from .availability import JAMMING_FRACTION, DensityCurve
from .pointprocess import (
    PointPattern,
    mhpp2_thinning,
    rsa_stream,
    rsa_thinning,
    sample_ppp,
)
from .radio import DeploymentConfig, Disk, RadioConfig, Torus, derive_inhibition, linear_to_db
from .rng import stream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    ci95_halfwidth: float
    replications: int
    seed: int

    @classmethod
    def from_samples(cls, values, seed):
        v = np.asarray(values, dtype=float)
        if v.size < 2:
            raise ValueError("need at least two replications for a confidence interval")
        return cls(float(v.mean()), float(1.96 * v.std(ddof=1) / math.sqrt(v.size)),
                   int(v.size), int(seed))


@dataclass(frozen=True)
class SinrSample:
    replication: int
    sinr_linear: float
    serving_distance_m: float
    num_interferers: int
    min_interferer_distance_m: float
    backoff: float


def run_replications(func, n, workers=1, chunksize=None):
    """``[func(i) for i in range(n)]``, optionally spread over processes."""
    if workers <= 1 or n < 2:
        return [func(i) for i in range(n)]
    chunksize = chunksize or max(1, n // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, range(n), chunksize=chunksize))


def _with_typical(window, pattern: PointPattern, rng):
    """Prepend a typical AP (window centre) with its own uniform back-off."""
    centre = (0.0, 0.0) if isinstance(window, Disk) else (window.side / 2, window.side / 2)
    xy = np.vstack((np.array([centre]), pattern.xy))
    backoff = np.concatenate(([1.0 - rng.random()], pattern.backoff))
    return PointPattern(window, xy, backoff, pattern.metadata)


# ---------------------------------------------------------------------------
# medium access

def _map_replication(i, density, window, d_inh, seed):
    rng = stream(seed, "mc_map", i)
    parents = sample_ppp(density, window, rng)
    pat = _with_typical(window, parents, rng)
    out = rsa_thinning(pat, d_inh)
    return 1.0 if np.any(out.active_indices == 0) else 0.0


def mc_map(deployment: DeploymentConfig, radio: RadioConfig, replications=10_000, workers=1):
    """Fraction of replications in which the typical AP wins contention."""
    if replications < 100:
        raise ValueError("mc_map needs at least 100 replications")
    d = derive_inhibition(radio).d_inh
    deployment.check_window(d)
    f = partial(_map_replication, density=deployment.ap_density, window=deployment.window,
                d_inh=d, seed=deployment.master_seed)
    return McEstimate.from_samples(run_replications(f, replications, workers),
                                   deployment.master_seed)


def _mhpp2_replication(i, density, window, d_inh, seed):
    rng = stream(seed, "mc_mhpp2", i)
    pat = sample_ppp(density, window, rng)
    n = len(pat)
    return (len(mhpp2_thinning(pat, d_inh)), n)


def mc_mhpp2_fraction(deployment: DeploymentConfig, radio: RadioConfig, replications=500,
                      workers=1):
    """Retained fraction of Matérn type-II thinning, pooled over replications
    (on a torus every parent point is a typical point)."""
    d = derive_inhibition(radio).d_inh
    f = partial(_mhpp2_replication, density=deployment.ap_density, window=deployment.window,
                d_inh=d, seed=deployment.master_seed)
    res = np.array(run_replications(f, replications, workers), dtype=float)
    keep = res[:, 1] > 0
    frac = res[keep, 0] / res[keep, 1]
    return McEstimate.from_samples(frac, deployment.master_seed)


# ---------------------------------------------------------------------------
# density kinetics

def _density_replication(i, density, window, d_inh, t_grid, seed):
    rng = stream(seed, "mc_density", i)
    pat = sample_ppp(density, window, rng)
    out = rsa_thinning(pat, d_inh)
    times = np.sort(out.activation_times)
    return np.searchsorted(times, t_grid, side="right")


def mc_density(deployment: DeploymentConfig, radio: RadioConfig, t_grid, replications=200,
               workers=1) -> DensityCurve:
    """Active-AP density over the back-off window, averaged over replications."""
    if not isinstance(deployment.window, Torus):
        raise ValueError("mc_density needs a torus window")
    geom = derive_inhibition(radio)
    t_grid = np.asarray(t_grid, dtype=float)
    f = partial(_density_replication, density=deployment.ap_density,
                window=deployment.window, d_inh=geom.d_inh, t_grid=t_grid,
                seed=deployment.master_seed)
    counts = np.array(run_replications(f, replications, workers), dtype=float)
    rho = counts / deployment.window.area
    theta = rho * geom.kappa
    ci = 1.96 * theta.std(axis=0, ddof=1) / math.sqrt(replications)
    return DensityCurve(t_grid, rho.mean(axis=0), theta.mean(axis=0), ci)


# ---------------------------------------------------------------------------
# retention probability

def mc_retention_probability(theta, trials=100_000, seed=0, side=60.0, patterns=8,
                             max_attempt_factor=20_000):
    """Probability that a uniformly placed arrival is admitted into an RSA
    pattern at occupied fraction ``theta``.

    Works in units of d_inh on a torus of ``side``.  Each of ``patterns``
    independent RSA patterns is grown arrival by arrival until it holds
    ``round(theta * side**2 / kappa)`` points; then ``trials`` uniform probe
    points are tested against it.
    """
    if not 0.0 <= theta <= 0.5:
        raise ValueError("theta must lie in [0, 0.5]")
    kappa = math.pi / 4.0
    target = round(theta * side * side / kappa)
    vals = []
    for i in range(patterns):
        rng = stream(seed, "mc_retention", i)
        res = rsa_stream(side, 1.0, rng, n_target=target,
                         max_arrivals=max_attempt_factor * max(target, 1))
        if res.xy.shape[0] < target:
            raise RuntimeError(
                f"pattern jammed at {res.xy.shape[0]} points before reaching theta={theta}")
        n, cell = _kernels.grid_shape(side, 1.0)
        head = -np.ones(n * n, dtype=np.int64)
        nxt = -np.ones(max(target, 1), dtype=np.int64)
        ax = np.ascontiguousarray(res.xy[:, 0])
        ay = np.ascontiguousarray(res.xy[:, 1])
        if n >= 3:
            for j in range(target):
                c = int(ax[j] // cell) % n * n + int(ay[j] // cell) % n
                nxt[j] = head[c]
                head[c] = j
        probes = rng.random((trials, 2)) * side
        hits = _kernels.count_empty(
            np.ascontiguousarray(probes[:, 0]), np.ascontiguousarray(probes[:, 1]),
            ax, ay, target, float(side), True, 1.0, n, cell, head, nxt)
        vals.append(hits / trials)
    return McEstimate.from_samples(vals, seed)


def rsa_patterns_at_coverage(theta, n_patterns, seed=0, side=50.0, jamming_rate=None):
    """RSA patterns (units of d_inh) on a torus at occupied fraction ``theta``.

    Below jamming, each pattern is grown until it holds exactly the number of
    points matching ``theta``; the state of an RSA pattern after a given
    number of admissions does not depend on the arrival rate.  With
    ``jamming_rate`` set, patterns are instead the result of a Poisson
    number of arrivals with mean ``jamming_rate * side**2 / kappa``.
    """
    kappa = math.pi / 4.0
    out = []
    for i in range(n_patterns):
        rng = stream(seed, "rsa_patterns", i)
        if jamming_rate is not None:
            res = rsa_stream(side, 1.0, rng, n_arrivals=rng.poisson(jamming_rate * side**2 / kappa))
        else:
            if theta > JAMMING_FRACTION:
                raise ValueError("theta beyond the jamming limit")
            res = rsa_stream(side, 1.0, rng, n_target=round(theta * side**2 / kappa),
                             max_arrivals=10**9)
        out.append((res.xy, Torus(side)))
    return out


def mc_jamming_fraction(rate_kappa, replications=50, seed=0, side=50.0, workers=1):
    """Occupied fraction at t = 1 for arrival rate ``rate_kappa`` (per kappa)."""
    f = partial(_jamming_replication, rate_kappa=rate_kappa, seed=seed, side=side)
    return McEstimate.from_samples(run_replications(f, replications, workers), seed)


def _jamming_replication(i, rate_kappa, seed, side):
    kappa = math.pi / 4.0
    rng = stream(seed, "mc_jamming", i)
    res = rsa_stream(side, 1.0, rng, n_arrivals=rng.poisson(rate_kappa * side**2 / kappa))
    return res.xy.shape[0] * kappa / side**2


# ---------------------------------------------------------------------------
# SINR coverage

def _link_sinr(rng, ap_xy, users_xy, others_xy, side, radio):
    """SINR at ``users_xy`` served by ``ap_xy``; interferers ``others_xy[k]``.

    ``others_xy`` is a list (one array per user).  Returns arrays
    ``(sinr, serving_distance, min_interferer_distance, n_interferers)``;
    an isolated link without noise has infinite SINR.
    """
    alpha = radio.path_loss_exponent
    pt = radio.tx_power_mw
    noise = radio.noise_power_mw
    r0 = np.hypot(*(users_xy - ap_xy).T)
    s = np.empty(len(r0))
    mind = np.empty(len(r0))
    nint = np.empty(len(r0), dtype=int)
    h0 = rng.exponential(size=len(r0))
    for k in range(len(r0)):
        diff = np.abs(others_xy[k] - users_xy[k])
        diff = np.minimum(diff, side - diff)
        dist = np.hypot(diff[:, 0], diff[:, 1])
        fades = rng.exponential(size=dist.shape[0])
        interf = pt * np.sum(fades * dist ** (-alpha))
        denom = interf + noise
        s[k] = pt * h0[k] * r0[k] ** (-alpha) / denom if denom > 0 else math.inf
        mind[k] = dist.min() if dist.size else math.inf
        nint[k] = dist.shape[0]
    return s, r0, mind, nint


def _coverage_replication(i, density, side, radio, d_inh, seed, conditioning):
    rng = stream(seed, "mc_coverage", i)
    window = Torus(side)
    pat = sample_ppp(density, window, rng)
    r_inh = d_inh / 2.0
    if conditioning == "reject":
        pat = _with_typical(window, pat, rng)
        out = rsa_thinning(pat, d_inh)
        if not np.any(out.active_indices == 0):
            return []
        servers = np.array([0])
    else:
        out = rsa_thinning(pat, d_inh)
        servers = out.active_indices
    if servers.size == 0:
        return []
    active = out.active_indices
    act_xy = pat.xy[active]
    serv_xy = pat.xy[servers]
    rad = r_inh * np.sqrt(rng.random(servers.size))
    ang = 2.0 * np.pi * rng.random(servers.size)
    users = serv_xy + np.column_stack((rad * np.cos(ang), rad * np.sin(ang)))
    pos = {int(a): k for k, a in enumerate(active)}
    others = [np.delete(act_xy, pos[int(s)], axis=0) for s in servers]
    # serving link measured directly: the user is within r_inh of its AP
    s_, r0_, mind_, nint_ = _link_sinr(rng, serv_xy, users, others, side, radio)
    return [SinrSample(i, float(a), float(b), int(d), float(c), float(pat.backoff[s]))
            for a, b, c, d, s in zip(s_, r0_, mind_, nint_, servers)]


@dataclass
class CoverageMcResult:
    beta_grid_db: np.ndarray
    estimates: list
    samples: list
    replications: int
    accepted_replications: int

    @property
    def acceptance_rate(self):
        return self.accepted_replications / self.replications

    @property
    def p_cov(self):
        return np.array([e.mean for e in self.estimates])

    def dump_csv(self, path):
        """Raw per-sample dump, one row per (sample, threshold)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replication", "beta_db", "sinr_db", "serving_distance_m",
                        "num_interferers"])
            for smp in self.samples:
                sdb = linear_to_db(smp.sinr_linear) if smp.sinr_linear > 0 else -math.inf
                for b in self.beta_grid_db:
                    w.writerow([smp.replication, repr(float(b)), repr(float(sdb)),
                                repr(smp.serving_distance_m), smp.num_interferers])


def mc_coverage(deployment: DeploymentConfig, radio: RadioConfig, beta_grid_db,
                replications=20, workers=1, conditioning="palm", min_accepted=1000):
    """Empirical SINR coverage of the typical link, conditioned on its AP
    transmitting.

    ``conditioning="palm"`` treats every transmitting AP of a torus
    realization as a typical AP (each with its own user and fades);
    ``"reject"`` places one typical AP at the window centre and discards
    replications in which it loses contention.  Interferers are all other
    APs active at the end of the back-off window.  Per-threshold estimates
    are means of per-replication coverage fractions; in reject mode each
    accepted replication contributes one Bernoulli sample.
    """
    if conditioning not in ("palm", "reject"):
        raise ValueError(f"unknown conditioning {conditioning!r}")
    if not isinstance(deployment.window, Torus):
        raise ValueError("mc_coverage needs a torus window")
    d = derive_inhibition(radio).d_inh
    if deployment.window.side < 40.0 * d:
        warnings.warn("torus side below 40*d_inh; interference truncation is not negligible",
                      stacklevel=2)
    betas = np.asarray(beta_grid_db, dtype=float)
    f = partial(_coverage_replication, density=deployment.ap_density,
                side=deployment.window.side, radio=radio, d_inh=d,
                seed=deployment.master_seed, conditioning=conditioning)
    per_rep = run_replications(f, replications, workers)
    accepted = [r for r in per_rep if r]
    rate = len(accepted) / replications
    if rate < 0.01:
        raise RuntimeError(
            f"acceptance rate {rate:.2%} below 1%; lower ap_density or add replications")
    samples = [s for r in accepted for s in r]
    if len(samples) < max(min_accepted, 2):
        raise RuntimeError(
            f"only {len(samples)} conditioned samples (< {min_accepted}); add replications")
    lin = 10.0 ** (betas / 10.0)
    if conditioning == "palm":
        ests = []
        for b in lin:
            fr = [np.mean([s.sinr_linear >= b for s in r]) for r in accepted]
            ests.append(McEstimate.from_samples(fr, deployment.master_seed))
    else:
        sinr = np.array([s.sinr_linear for s in samples])
        ests = [McEstimate.from_samples((sinr >= b).astype(float), deployment.master_seed)
                for b in lin]
    return CoverageMcResult(betas, ests, samples, replications, len(accepted))
