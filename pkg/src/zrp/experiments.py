"""Reproducible experiment runners behind the command-line interface.

Each runner consumes a validated :class:`ExperimentConfig`, simulates or
computes with seeds derived from the mandatory root seed, and writes a
CSV plus a sibling metadata JSON into the output directory.  Outputs are
bit-identical across runs of the same config+seed: replica seeds are
derived by index, results are aggregated by index (worker pools change
nothing), and no clocks or environment state leak into the files.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, io
from .backend import BACKEND
from .core import (OccupancyConfig, dirac_config, profile_config, simulate_fast,
                   spawn_seeds)
from .coupling import coalescence_tail
from .equilibrium import (equilibrium_profile_check, exact_small_chain, exact_tmix,
                          exact_tv_curve, sample_pi_many, statistic_law_exact,
                          tv_lower_bound)
from .hydro import Profile, breakpoints, f_explicit, gamma, mixing_prediction
from .rates import RateFunction, resolve_rate

__all__ = [
    "ExperimentConfig",
    "run_hydro",
    "run_cutoff",
    "run_predict",
    "run_coalescence",
    "run_equilibrium",
    "run_exact",
    "run_experiment",
    "EXPERIMENTS",
]


def _parse_grid(spec) -> np.ndarray:
    if isinstance(spec, dict):
        grid = np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
    else:
        grid = np.asarray([float(v) for v in spec])
    if grid.size == 0:
        raise ValueError("empty time grid")
    if np.any(np.diff(grid) <= 0) and grid.size > 1:
        raise ValueError("time grid must be strictly increasing")
    if grid[0] < 0:
        raise ValueError("time grid must be nonnegative")
    return grid


@dataclass
class ExperimentConfig:
    """Validated run description; ``raw`` keeps the original document."""

    kind: str
    rate: RateFunction
    seed: int
    out_dir: str
    raw: dict = field(repr=False)

    @classmethod
    def from_dict(cls, doc: dict, kind: str | None = None,
                  seed: int | None = None, out_dir: str | None = None) -> "ExperimentConfig":
        doc = dict(doc)
        k = kind or doc.get("experiment")
        if k not in EXPERIMENTS:
            raise ValueError(f"unknown experiment kind {k!r}")
        if kind and "experiment" in doc and doc["experiment"] != kind:
            raise ValueError(f"config says {doc['experiment']!r} but {kind!r} was requested")
        doc["experiment"] = k
        if seed is not None:
            doc["seed"] = seed
        if "seed" not in doc:
            raise ValueError("a seed is mandatory (no wall-clock seeding)")
        if out_dir is not None:
            doc["out"] = out_dir
        doc.setdefault("out", "out")
        n_spec = doc.get("n", [])
        for n in (n_spec if isinstance(n_spec, (list, tuple)) else [n_spec]):
            if int(n) < 1:
                raise ValueError("all n values must be >= 1")
        return cls(kind=k, rate=resolve_rate(doc.get("rate", "rate-one")),
                   seed=int(doc["seed"]), out_dir=str(doc["out"]), raw=doc)

    def path(self, name: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        return os.path.join(self.out_dir, name)

    def meta(self, **extra) -> dict:
        base = {
            "experiment": self.kind,
            "seed": self.seed,
            "package": {"name": "zrp", "version": __version__, "backend": BACKEND},
            "rate": {"head": list(self.rate.head), "time_rescale": self.rate.time_rescale},
            "config": self.raw,
        }
        if isinstance(self.raw.get("rate"), str):
            base["rate"]["preset"] = self.raw["rate"]
        base.update(extra)
        return base


def _particle_count(n: int, raw: dict) -> int:
    if "m" in raw:
        return int(raw["m"])
    if "rho" in raw:
        return int(round(n * float(raw["rho"])))
    raise ValueError("config needs either 'm' or a density 'rho'")


def _density(n: int, raw: dict) -> float:
    return float(raw["rho"]) if "rho" in raw else _particle_count(n, raw) / n


def _pool_map(fn, argument_list, workers: int):
    if workers <= 1 or len(argument_list) <= 1:
        return [fn(a) for a in argument_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, argument_list))


# ---------------------------------------------------------------------------
# hydro: finite-n dissolution trajectories against the limit curve


def _hydro_replica(args):
    rate, n, m, u, grid_raw, L_eff, seed = args
    x = profile_config(n, m, u)
    traj = simulate_fast(rate, x, float(grid_raw[-1]), seed, grid=grid_raw,
                         solid_sites=L_eff, top_k=L_eff)
    return traj.top / n  # (G, L_eff) rescaled sorted occupancies


def run_hydro(cfg: ExperimentConfig) -> dict:
    raw = cfg.raw
    if "profile" not in raw:
        raise ValueError("hydro needs a 'profile' list")
    u = tuple(float(v) for v in raw["profile"])
    grid = _parse_grid(raw["grid"])  # rescaled t/n units
    replicas = int(raw.get("replicas", 1))
    workers = int(raw.get("workers", 1))
    n_values = [int(v) for v in raw["n"]]
    rho = _density(n_values[0], raw) if "rho" not in raw else float(raw["rho"])
    profile = Profile(u=u, rho=rho)
    sol = breakpoints(cfg.rate, profile)
    L_eff = max(len(u), 1)
    f_grid = np.asarray(f_explicit(sol, grid))
    u_pad = np.zeros(L_eff)
    u_pad[: len(u)] = u
    pred = np.maximum(u_pad[None, :] - f_grid[:, None], 0.0)  # (G, L_eff)

    rows = []
    medians = {}
    for n in n_values:
        m = _particle_count(n, raw)
        seeds = spawn_seeds((cfg.seed, n), replicas)
        tasks = [(cfg.rate, n, m, u, grid * n, L_eff, s) for s in seeds]
        tops = _pool_map(_hydro_replica, tasks, workers)
        sup_by_rep = []
        for rep, top in enumerate(tops):
            err = np.abs(top - pred)
            sup_t = err.max(axis=1)
            sup_by_rep.append(float(sup_t.max()))
            for g in range(grid.size):
                rows.append([n, rep, float(grid[g]),
                             *[float(v) for v in top[g]],
                             *[float(v) for v in pred[g]],
                             float(sup_t[g])])
        medians[str(n)] = float(np.median(sup_by_rep))

    header = (["n", "replica", "t_over_n"]
              + [f"site{k + 1}_sim" for k in range(L_eff)]
              + [f"site{k + 1}_pred" for k in range(L_eff)]
              + ["sup_error"])
    csv_path = cfg.path("hydro.csv")
    io.write_csv(csv_path, header, rows)
    io.write_meta(csv_path, cfg.meta(
        columns=header,
        gamma=gamma(cfg.rate, rho),
        prediction=mixing_prediction(cfg.rate, profile),
        rho_seq=sol.rho_seq,
        t_seq=sol.t_seq,
        profile=list(u),
        rho=rho,
        replicas=replicas,
        median_sup_error=medians,
    ))
    return {"csv": csv_path, "meta": io.meta_path(csv_path), "median_sup_error": medians}


# ---------------------------------------------------------------------------
# cutoff: TV lower-bound curves across n


def _cutoff_replica(args):
    rate, occ, grid_raw, statistic, solid_sites, seed = args
    x = OccupancyConfig(occ)
    traj = simulate_fast(rate, x, float(grid_raw[-1]), seed, grid=grid_raw,
                         solid_sites=solid_sites,
                         record_config=(statistic == "empty_sites"))
    if statistic == "max_occupancy":
        return traj.max_occupancy
    if statistic == "empty_sites":
        return (traj.configs == 0).sum(axis=1)
    if statistic == "solid_mass":
        return traj.solid_mass
    raise ValueError(f"unknown statistic {statistic!r}")


def run_cutoff(cfg: ExperimentConfig) -> dict:
    raw = cfg.raw
    grid = _parse_grid(raw["grid"])  # rescaled t/n units
    replicas = int(raw.get("replicas", 200))
    workers = int(raw.get("workers", 1))
    statistic = raw.get("statistic", "max_occupancy")
    solid_sites = int(raw.get("solid_sites", 1))
    reference = raw.get("reference", "exact" if statistic == "max_occupancy" else "sampled")
    if reference == "exact" and statistic != "max_occupancy":
        raise ValueError("the exact reference law is only available for max_occupancy")
    ref_samples = int(raw.get("reference_samples", max(2000, 4 * replicas)))
    exact_cap = int(raw.get("exact_max_states", 0))
    n_values = [int(v) for v in raw["n"]]

    rows = []
    crossings = {}
    for n in n_values:
        m = _particle_count(n, raw)
        start = raw.get("start", "dirac")
        if start == "dirac":
            x0 = dirac_config(n, m)
        else:
            x0 = OccupancyConfig(np.asarray(start, dtype=np.int64))
        if reference == "exact":
            ref = statistic_law_exact(cfg.rate, n, m, statistic=statistic)
        else:
            ref_cfgs = sample_pi_many(cfg.rate, n, m, ref_samples, (cfg.seed, n, 1))
            ref = np.asarray([_statistic_value(statistic, c) for c in ref_cfgs])

        seeds = spawn_seeds((cfg.seed, n), replicas)
        tasks = [(cfg.rate, x0.occupancies, grid * n, statistic, solid_sites, s)
                 for s in seeds]
        stats = np.stack(_pool_map(_cutoff_replica, tasks, workers))  # (R, G)

        tv_exact = None
        if exact_cap and math.comb(m + n - 1, n - 1) <= exact_cap:
            chain = exact_small_chain(cfg.rate, n, m)
            tv_exact = exact_tv_curve(chain, x0, grid * n)

        lbs = np.empty(grid.size)
        for g in range(grid.size):
            bound = tv_lower_bound(stats[:, g], ref, seed=(cfg.seed, n, g))
            lbs[g] = bound.estimate
            rows.append([n, float(grid[g]), bound.estimate, bound.ci_low,
                         bound.ci_high,
                         float(tv_exact[g]) if tv_exact is not None else None])
        crossings[str(n)] = {
            "half": _crossing(grid, lbs, 0.5),
            "high": _crossing(grid, lbs, 0.9),
            "low": _crossing(grid, lbs, 0.1),
        }

    header = ["n", "t_over_n", "tv_lb", "lb_ci_low", "lb_ci_high", "tv_exact"]
    csv_path = cfg.path("cutoff.csv")
    io.write_csv(csv_path, header, rows)
    rho = _density(n_values[0], raw)
    io.write_meta(csv_path, cfg.meta(
        columns=header,
        gamma=gamma(cfg.rate, rho),
        rho=rho,
        statistic=statistic,
        reference=reference,
        replicas=replicas,
        crossings=crossings,
    ))
    return {"csv": csv_path, "meta": io.meta_path(csv_path), "crossings": crossings}


def _statistic_value(statistic: str, cfg: OccupancyConfig) -> int:
    if statistic == "max_occupancy":
        return int(cfg.occupancies.max())
    if statistic == "empty_sites":
        return int((cfg.occupancies == 0).sum())
    raise ValueError(f"unknown statistic {statistic!r}")


def _crossing(grid: np.ndarray, values: np.ndarray, level: float) -> float | None:
    """First grid time at which a (noisily decreasing) curve drops to a level.

    Linear interpolation between the last point above and the first point
    at-or-below the level; None when the curve never reaches it.
    """
    below = np.nonzero(values <= level)[0]
    if below.size == 0:
        return None
    k = int(below[0])
    if k == 0:
        return float(grid[0])
    x0, x1 = grid[k - 1], grid[k]
    y0, y1 = values[k - 1], values[k]
    if y0 == y1:
        return float(x1)
    return float(x0 + (y0 - level) / (y0 - y1) * (x1 - x0))


# ---------------------------------------------------------------------------
# predict / coalescence / equilibrium / exact


def run_predict(cfg: ExperimentConfig) -> dict:
    raw = cfg.raw
    u = tuple(float(v) for v in raw.get("profile", ()))
    rho = float(raw["rho"])
    profile = Profile(u=u, rho=rho)
    sol = breakpoints(cfg.rate, profile)
    report = cfg.meta(
        gamma=gamma(cfg.rate, rho),
        rho=rho,
        profile=list(u),
        rho_seq=sol.rho_seq,
        t_seq=sol.t_seq,
        prediction=mixing_prediction(cfg.rate, profile),
    )
    path = cfg.path("predict.json")
    io.write_json(path, report)
    out = {"json": path, "prediction": report["prediction"]}
    if "grid" in raw:  # dissolution curve on the requested grid
        grid = _parse_grid(raw["grid"])
        fs = np.atleast_1d(np.asarray(f_explicit(sol, grid)))
        csv_path = cfg.path("dissolution.csv")
        io.write_csv(csv_path, ["t", "f"],
                     [[float(t), float(v)] for t, v in zip(grid, fs)])
        io.write_meta(csv_path, report | {"columns": ["t", "f"]})
        out["csv"] = csv_path
    return out


def run_coalescence(cfg: ExperimentConfig) -> dict:
    raw = cfg.raw
    if "occupancies" in raw:
        x = OccupancyConfig(np.asarray(raw["occupancies"], dtype=np.int64))
    else:
        n = int(raw["n"][0] if isinstance(raw.get("n"), list) else raw["n"])
        x = dirac_config(n, _particle_count(n, raw))
    i = int(raw.get("i", 0))
    j = int(raw.get("j", min(1, x.n - 1)))
    grid = _parse_grid(raw["grid"])  # raw time units
    replicas = int(raw.get("replicas", 1000))
    horizon = float(raw.get("horizon", grid[-1]))
    curve = coalescence_tail(cfg.rate, x, i, j, grid, replicas, cfg.seed,
                             horizon=horizon)
    header = ["t", "survival", "ci_low", "ci_high", "censored_fraction"]
    rows = [[float(curve.times[g]), float(curve.survival[g]), float(curve.ci_low[g]),
             float(curve.ci_high[g]), curve.censored_fraction]
            for g in range(grid.size)]
    csv_path = cfg.path("coalescence.csv")
    io.write_csv(csv_path, header, rows)
    io.write_meta(csv_path, cfg.meta(
        columns=header, replicas=replicas, horizon=horizon,
        i=i, j=j, n=x.n, m=x.m,
        censored_fraction=curve.censored_fraction,
    ))
    return {"csv": csv_path, "meta": io.meta_path(csv_path)}


def run_equilibrium(cfg: ExperimentConfig) -> dict:
    raw = cfg.raw
    n = int(raw["n"][0] if isinstance(raw.get("n"), list) else raw["n"])
    m = _particle_count(n, raw)
    samples = int(raw.get("samples", 20))
    result = equilibrium_profile_check(cfg.rate, n, m, samples, cfg.seed)
    header = ["sample", "tv_distance", "max_occupancy"]
    rows = [[k, float(result.distances[k]), int(result.max_occupancies[k])]
            for k in range(samples)]
    csv_path = cfg.path("equilibrium.csv")
    io.write_csv(csv_path, header, rows)
    io.write_meta(csv_path, cfg.meta(
        columns=header, n=n, m=m, samples=samples,
        mean_distance=result.mean_distance,
        ci=[result.ci_low, result.ci_high],
    ))
    return {"csv": csv_path, "meta": io.meta_path(csv_path),
            "mean_distance": result.mean_distance}


def run_exact(cfg: ExperimentConfig) -> dict:
    raw = cfg.raw
    n = int(raw["n"][0] if isinstance(raw.get("n"), list) else raw["n"])
    m = _particle_count(n, raw)
    chain = exact_small_chain(cfg.rate, n, m)
    x0 = (OccupancyConfig(np.asarray(raw["x0"], dtype=np.int64))
          if "x0" in raw else dirac_config(n, m))
    grid = _parse_grid(raw["grid"])  # raw time units
    tv = exact_tv_curve(chain, x0, grid)
    csv_path = cfg.path("exact_tv.csv")
    io.write_csv(csv_path, ["t", "tv"], [[float(t), float(v)] for t, v in zip(grid, tv)])
    tmix = {str(e): exact_tmix(chain, x0, float(e)) for e in raw.get("eps", [])}
    io.write_meta(csv_path, cfg.meta(
        columns=["t", "tv"], n=n, m=m, x0=[int(v) for v in x0.occupancies],
        states=int(chain.states.shape[0]), tmix=tmix,
    ))
    out = {"csv": csv_path, "meta": io.meta_path(csv_path), "tmix": tmix}
    if raw.get("dump_oracle"):
        states_path = cfg.path("oracle_states.csv")
        io.write_csv(states_path, ["state", "pi"],
                     [["|".join(str(int(v)) for v in chain.states[k]), float(chain.pi[k])]
                      for k in range(chain.states.shape[0])])
        coo = chain.generator.tocoo()
        gen_path = cfg.path("oracle_generator.csv")
        io.write_csv(gen_path, ["row", "col", "rate"],
                     [[int(r), int(c), float(v)]
                      for r, c, v in zip(coo.row, coo.col, coo.data)])
        out["oracle_states"] = states_path
        out["oracle_generator"] = gen_path
    return out


EXPERIMENTS = {
    "hydro": run_hydro,
    "cutoff": run_cutoff,
    "predict": run_predict,
    "coalescence": run_coalescence,
    "equilibrium": run_equilibrium,
    "exact": run_exact,
}


def run_experiment(cfg: ExperimentConfig) -> dict:
    return EXPERIMENTS[cfg.kind](cfg)
