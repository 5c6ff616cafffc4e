"""Tagged walkers, coalescence tails, and the path-coupling TV bound.

A tagged walker rides on top of a background chain and hops at the rate
increment ``r(k+1) - r(k)`` of its current site's occupancy; adding its
position to the background reproduces the law of the process with one
extra particle.  Two walkers sharing the tag stream coalesce at the
first jointly accepted jump and never separate again, which turns their
coalescence tail into a TV bound between adjacent starts; summing the
tails along a shortest path of adjacent configurations bounds the TV
distance between arbitrary starts with equal particle counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import get_kernels
from .core import OccupancyConfig, make_generator, spawn_seeds
from .rates import RateFunction, rate_table

__all__ = [
    "TaggedPairRun",
    "CoalescenceCurve",
    "PathCouplingBound",
    "delta_rate",
    "delta_table",
    "tagged_pair_simulate",
    "coalescence_tail",
    "shortest_path",
    "path_coupling_bound",
]


def delta_rate(rate: RateFunction, k: int) -> float:
    """Tag jump rate on a site with ``k`` background particles.

    ``r(k+1) - r(k)``; nonnegative because the rates are nondecreasing,
    with ``delta_rate(0) = r(1)`` and 0 beyond the stored head.
    """
    if k < 0:
        raise ValueError("occupancy must be nonnegative")
    return rate.rate(k + 1) - rate.rate(k)


def delta_table(rate: RateFunction, max_count: int) -> np.ndarray:
    """Lookup table of :func:`delta_rate` for occupancies ``0..max_count``."""
    tab = rate_table(rate, max_count + 1)
    return tab[1:] - tab[:-1]


@dataclass
class TaggedPairRun:
    """Positions of two coupled tagged walkers on a time grid."""

    times: np.ndarray
    i_path: np.ndarray
    j_path: np.ndarray
    tau: float | None
    censored: bool
    background_seed: object
    theta_seed: object
    background_configs: np.ndarray | None = None


def tagged_pair_simulate(rate: RateFunction, x: OccupancyConfig, i: int, j: int,
                         horizon: float, seeds, grid=None,
                         record_background: bool = False) -> TaggedPairRun:
    """Couple two tagged walkers over one background realization.

    The background starts from ``x`` and evolves under the first seed; an
    independent unit-rate stream under the second seed proposes the same
    (mark, destination) to both walkers, so they coalesce at the first
    jointly accepted proposal.  ``tau`` is that exact time, or None when
    the run is right-censored at the horizon.
    """
    if not (0 <= i < x.n and 0 <= j < x.n):
        raise ValueError("tag sites must be in range(n)")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if isinstance(seeds, (tuple, list)) and len(seeds) == 2:
        bg_seed, th_seed = seeds
    else:
        bg_seed, th_seed = spawn_seeds(seeds, 2)
    if grid is None:
        grid = [0.0, horizon] if horizon > 0 else [0.0]
    g = np.asarray(grid, dtype=float)
    if np.any(np.diff(g) < 0) or (g.size and (g[0] < 0 or g[-1] > horizon)):
        raise ValueError("grid must be nondecreasing within [0, horizon]")
    rtab = rate_table(rate, x.m)
    dtab = delta_table(rate, x.m)
    i_path, j_path, tau, bg = get_kernels().tagged(
        x.occupancies, i, j, rtab, dtab, horizon, g,
        make_generator(bg_seed), make_generator(th_seed), record_background)
    censored = tau < 0.0
    return TaggedPairRun(
        times=g, i_path=i_path, j_path=j_path,
        tau=None if censored else float(tau), censored=bool(censored),
        background_seed=bg_seed, theta_seed=th_seed,
        background_configs=bg if record_background else None)


def _wilson_interval(successes: int, total: int, zscore: float = 1.96) -> tuple[float, float]:
    if total == 0:
        return 0.0, 1.0
    p = successes / total
    z2 = zscore * zscore
    denom = 1.0 + z2 / total
    center = (p + z2 / (2 * total)) / denom
    half = zscore * math.sqrt(p * (1 - p) / total + z2 / (4 * total * total)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class CoalescenceCurve:
    times: np.ndarray
    survival: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    censored_fraction: float
    replicas: int


def coalescence_tail(rate: RateFunction, x: OccupancyConfig, i: int, j: int,
                     t_grid, replicas: int, seed,
                     horizon: float | None = None) -> CoalescenceCurve:
    """Monte Carlo survival curve of the coalescence time.

    Censored replicas (no coalescence before the horizon) count as
    survivors at every grid time, which keeps the estimate conservative.
    Wilson intervals per grid point.
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    t_grid = np.asarray(t_grid, dtype=float)
    if horizon is None:
        horizon = float(t_grid.max()) if t_grid.size else 0.0
    if t_grid.size and t_grid.max() > horizon:
        raise ValueError("grid must not exceed the horizon")
    taus = np.empty(replicas)
    censored = 0
    for k, s in enumerate(spawn_seeds(seed, replicas)):
        run = tagged_pair_simulate(rate, x, i, j, horizon, s, grid=[0.0])
        if run.censored:
            censored += 1
            taus[k] = np.inf
        else:
            taus[k] = run.tau
    surv = np.empty(t_grid.size)
    lo = np.empty(t_grid.size)
    hi = np.empty(t_grid.size)
    for idx, t in enumerate(t_grid):
        alive = int((taus > t).sum())
        surv[idx] = alive / replicas
        lo[idx], hi[idx] = _wilson_interval(alive, replicas)
    return CoalescenceCurve(times=t_grid, survival=surv, ci_low=lo, ci_high=hi,
                            censored_fraction=censored / replicas, replicas=replicas)


def shortest_path(x: OccupancyConfig, y: OccupancyConfig) -> list[np.ndarray]:
    """Configurations from x to y, each step moving one particle.

    Moves go from the site with the largest excess over y to the site
    with the largest deficit (smallest index on ties), so the path has
    length half the L1 distance and never raises any occupancy above the
    larger of the two endpoints' maxima.
    """
    if x.n != y.n:
        raise ValueError("configurations must share the site count")
    if x.m != y.m:
        raise ValueError("configurations must hold the same particle count")
    w = x.occupancies.astype(np.int64).copy()
    target = y.occupancies
    path = [w.copy()]
    while True:
        diff = w - target
        if not np.any(diff):
            break
        a = int(np.argmax(diff))
        b = int(np.argmin(diff))
        w[a] -= 1
        w[b] += 1
        path.append(w.copy())
    return path


@dataclass
class PathCouplingBound:
    bound: float
    path_length: int
    edge_estimates: np.ndarray
    edge_ci_low: np.ndarray
    edge_ci_high: np.ndarray
    replicas: int

    @property
    def stderr(self) -> float:
        """Normal-theory standard error of the summed bound."""
        p = self.edge_estimates
        return float(np.sqrt((p * (1 - p)).sum() / self.replicas))

    def as_dict(self) -> dict:
        """JSON-shaped report: the bound, path length, per-edge estimates."""
        return {
            "bound": self.bound,
            "path_length": self.path_length,
            "replicas": self.replicas,
            "stderr": self.stderr,
            "edges": [
                {"estimate": float(self.edge_estimates[e]),
                 "ci_low": float(self.edge_ci_low[e]),
                 "ci_high": float(self.edge_ci_high[e])}
                for e in range(self.path_length)
            ],
        }


def path_coupling_bound(rate: RateFunction, x: OccupancyConfig, y: OccupancyConfig,
                        t: float, replicas: int, seed) -> PathCouplingBound:
    """Monte Carlo upper bound on the TV distance between the two laws at t.

    For each adjacent pair along the shortest path, the non-coalescence
    probability of the tagged pair started from the shared background is
    estimated and the estimates are summed (clamped at 1).
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    path = shortest_path(x, y)
    edges = len(path) - 1
    est = np.zeros(edges)
    lo = np.zeros(edges)
    hi = np.zeros(edges)
    edge_seeds = spawn_seeds(seed, edges) if edges else []
    for e in range(edges):
        w_prev, w_next = path[e], path[e + 1]
        moved = np.nonzero(w_prev - w_next)[0]
        a = moved[np.argmax((w_prev - w_next)[moved])]  # site losing the particle
        b = moved[np.argmin((w_prev - w_next)[moved])]
        background = w_prev.copy()
        background[a] -= 1
        bg_cfg = OccupancyConfig(background)
        alive = 0
        for s in spawn_seeds(edge_seeds[e], replicas):
            run = tagged_pair_simulate(rate, bg_cfg, int(a), int(b), t, s, grid=[0.0])
            if run.censored or run.tau > t:
                alive += 1
        est[e] = alive / replicas
        lo[e], hi[e] = _wilson_interval(alive, replicas)
    return PathCouplingBound(bound=min(1.0, float(est.sum())), path_length=edges,
                             edge_estimates=est, edge_ci_low=lo, edge_ci_high=hi,
                             replicas=replicas)
