"""Exact stochastic simulation of the mean-field zero-range process.

Two simulators are provided: the full-intensity ``graphical`` loop, which
realizes the process from a marked Poisson stream and is the basis for
every coupling, and the rejection-free ``fast`` loop, which generates
events only where rates are positive.  They agree in law (a tested fact,
not an assumption) and the fast one is the default for large systems.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rates as _rates
from .backend import get_kernels
from .rates import DiscreteDist, RateFunction, rate_table

__all__ = [
    "OccupancyConfig",
    "Trajectory",
    "PairedTrajectory",
    "ObservableRecord",
    "dirac_config",
    "profile_config",
    "simulate_graphical",
    "simulate_fast",
    "zeta",
    "monotone_pair_simulate",
    "truncate_solid",
    "observables",
    "make_generator",
    "spawn_seeds",
]


@dataclass(frozen=True)
class OccupancyConfig:
    """Occupancies of ``n`` sites; the particle count is conserved."""

    occupancies: np.ndarray

    def __post_init__(self):
        occ = np.asarray(self.occupancies, dtype=np.int64)
        if occ.ndim != 1 or occ.size < 1:
            raise ValueError("need at least one site")
        if np.any(occ < 0):
            raise ValueError("occupancies must be nonnegative")
        occ.setflags(write=False)
        object.__setattr__(self, "occupancies", occ)

    @property
    def n(self) -> int:
        return int(self.occupancies.size)

    @property
    def m(self) -> int:
        return int(self.occupancies.sum())

    def __le__(self, other: "OccupancyConfig") -> bool:
        return self.n == other.n and bool(np.all(self.occupancies <= other.occupancies))


def dirac_config(n: int, m: int) -> OccupancyConfig:
    """All ``m`` particles piled on the first of ``n`` sites."""
    if n < 1:
        raise ValueError("need at least one site")
    if m < 0:
        raise ValueError("particle count must be nonnegative")
    occ = np.zeros(n, dtype=np.int64)
    occ[0] = m
    return OccupancyConfig(occ)


def profile_config(n: int, m: int, u) -> OccupancyConfig:
    """Finite-``n`` realization of a macroscopic profile.

    Site ``k`` receives ``floor(n * u_k)`` particles; the remaining
    ``m - sum_k floor(n * u_k)`` are spread one per site over fresh sites,
    so the liquid part has maximum occupancy 1.
    """
    u = [float(v) for v in u]
    solid = [int(np.floor(n * uk)) for uk in u]
    rest = m - sum(solid)
    if rest < 0:
        raise ValueError(f"profile holds {sum(solid)} particles but m={m}")
    if len(solid) + rest > n:
        raise ValueError(f"cannot spread {rest} leftover particles over {n - len(solid)} free sites")
    occ = np.zeros(n, dtype=np.int64)
    occ[: len(solid)] = solid
    occ[len(solid) : len(solid) + rest] = 1
    return OccupancyConfig(occ)


def make_generator(seed) -> np.random.Generator:
    """PCG64 generator from an int seed or a ``SeedSequence``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(seed, count: int) -> list[np.random.SeedSequence]:
    """Independent child seeds for ``count`` replicas of one experiment."""
    if isinstance(seed, np.random.SeedSequence):
        return seed.spawn(count)
    return np.random.SeedSequence(seed).spawn(count)


def _check_grid(grid, horizon: float) -> np.ndarray:
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if grid is None:
        grid = [0.0, horizon] if horizon > 0 else [0.0]
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("time grid must be a nonempty 1-d array")
    if np.any(np.diff(g) < 0):
        raise ValueError("time grid must be nondecreasing")
    if g[0] < 0 or g[-1] > horizon:
        raise ValueError("time grid must lie within [0, horizon]")
    return g


@dataclass
class Trajectory:
    """Observables of one run, recorded on a fixed time grid."""

    times: np.ndarray
    n: int
    m: int
    seed: object
    max_occupancy: np.ndarray
    zeta: np.ndarray
    solid_mass: np.ndarray
    top: np.ndarray
    events_drawn: int
    events_applied: int
    configs: np.ndarray | None = field(default=None, repr=False)

    @property
    def event_count(self) -> int:
        return self.events_applied

    def rescaled_times(self) -> np.ndarray:
        """Grid times in units of t/n (raw time is what is stored)."""
        return self.times / self.n


def _build_trajectory(rate, snaps, grid, seed, drawn, applied,
                      record_config, solid_sites, top_k) -> Trajectory:
    n = snaps.shape[1]
    m = int(snaps[0].sum()) if snaps.shape[0] else 0
    rtab = rate_table(rate, int(snaps.max(initial=0)))
    sorted_desc = -np.sort(-snaps, axis=1)
    k = min(top_k, n)
    ls = min(solid_sites, n)
    return Trajectory(
        times=np.array(grid, dtype=float),
        n=n,
        m=m,
        seed=seed,
        max_occupancy=snaps.max(axis=1),
        zeta=rtab[snaps].mean(axis=1),
        solid_mass=sorted_desc[:, :ls].sum(axis=1),
        top=sorted_desc[:, :k].copy(),
        events_drawn=int(drawn),
        events_applied=int(applied),
        configs=snaps if record_config else None,
    )


def simulate_graphical(rate: RateFunction, x: OccupancyConfig, horizon: float, seed,
                       grid=None, record_config: bool = False,
                       solid_sites: int = 1, top_k: int = 3) -> Trajectory:
    """Run the full-intensity simulator up to ``horizon``.

    Events arrive at total rate ``n``; each carries a uniform source, a
    uniform destination (self-moves included as no-ops) and a uniform
    mark deciding acceptance against ``r(x_source)``.  Deterministic given
    the seed.
    """
    g = _check_grid(grid, horizon)
    gen = make_generator(seed)
    rtab = rate_table(rate, x.m)
    snaps, drawn, applied = get_kernels().graphical(x.occupancies, rtab, horizon, g, gen)
    return _build_trajectory(rate, snaps, g, seed, drawn, applied,
                             record_config, solid_sites, top_k)


def simulate_fast(rate: RateFunction, x: OccupancyConfig, horizon: float, seed,
                  grid=None, record_config: bool = False,
                  solid_sites: int = 1, top_k: int = 3) -> Trajectory:
    """Run the rejection-free simulator up to ``horizon``.

    Same law as :func:`simulate_graphical` (per-path they differ); if the
    configuration freezes (no occupied site, total rate 0) the remaining
    grid is padded with the frozen state.
    """
    g = _check_grid(grid, horizon)
    gen = make_generator(seed)
    rtab = rate_table(rate, x.m)
    snaps, jumps = get_kernels().fast(x.occupancies, rtab, horizon, g, gen)
    return _build_trajectory(rate, snaps, g, seed, jumps, jumps,
                             record_config, solid_sites, top_k)


@dataclass
class PairedTrajectory:
    lower: Trajectory
    upper: Trajectory
    order_violations: int


def monotone_pair_simulate(rate: RateFunction, x: OccupancyConfig, y: OccupancyConfig,
                           horizon: float, seed, grid=None,
                           record_config: bool = False,
                           solid_sites: int = 1, top_k: int = 3) -> PairedTrajectory:
    """Drive two ordered configurations with one shared event stream.

    Requires ``x <= y`` coordinatewise (particle counts may differ); the
    shared-stream construction preserves the order at every event time,
    which the kernel re-checks after each event.
    """
    if x.n != y.n:
        raise ValueError("configurations must share the site count")
    if not x <= y:
        raise ValueError("need x <= y coordinatewise")
    g = _check_grid(grid, horizon)
    gen = make_generator(seed)
    rtab = rate_table(rate, max(x.m, y.m))
    sx, sy, violations, drawn, jx, jy = get_kernels().pair(
        x.occupancies, y.occupancies, rtab, horizon, g, gen)
    tx = _build_trajectory(rate, sx, g, seed, drawn, jx, record_config, solid_sites, top_k)
    ty = _build_trajectory(rate, sy, g, seed, drawn, jy, record_config, solid_sites, top_k)
    return PairedTrajectory(lower=tx, upper=ty, order_violations=int(violations))


def zeta(rate: RateFunction, x: OccupancyConfig) -> float:
    """Mean jump rate per site, ``(1/n) sum_j r(x_j)``; lies in [0, 1]."""
    rtab = rate_table(rate, int(x.occupancies.max(initial=0)))
    return float(rtab[x.occupancies].mean())


def truncate_solid(x: OccupancyConfig, L: int) -> OccupancyConfig:
    """Zero the first ``L`` coordinates (removing their particles)."""
    if not 0 <= L <= x.n:
        raise ValueError(f"L must lie in [0, {x.n}]")
    occ = x.occupancies.copy()
    occ[:L] = 0
    return OccupancyConfig(occ)


@dataclass
class ObservableRecord:
    max_occupancy: int
    empirical_measure: DiscreteDist
    solid_mass: int
    sorted_top: np.ndarray


def observables(x: OccupancyConfig, n_solid: int = 1, n_top: int = 3) -> ObservableRecord:
    """Summary statistics of a configuration.

    The empirical measure is the distribution of a uniformly chosen
    site's occupancy; ``solid_mass`` sums the ``n_solid`` largest
    occupancies; ``sorted_top`` lists the ``n_top`` largest, descending.
    """
    occ = x.occupancies
    desc = -np.sort(-occ)
    k = min(n_top, x.n)
    ls = min(n_solid, x.n)
    return ObservableRecord(
        max_occupancy=int(desc[0]),
        empirical_measure=_rates.DiscreteDist(np.bincount(occ) / x.n),
        solid_mass=int(desc[:ls].sum()),
        sorted_top=desc[:k].copy(),
    )
