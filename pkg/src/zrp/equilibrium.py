"""Stationary law: exact sampling, small-instance oracle, TV estimators.

The stationary distribution of the process is the law of n i.i.d.
grand-canonical occupancies conditioned on their total, which gives both
an exact sampler (rejection on the total, with a sequential conditional
fallback) and, for small state spaces, an exact transition oracle built
from the full generator and evaluated by uniformization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.signal import fftconvolve
from scipy.special import logsumexp
from scipy.stats import poisson

from .core import OccupancyConfig, make_generator, spawn_seeds
from .rates import DiscreteDist, RateFunction, psi_inv, q_bar, q_dist

__all__ = [
    "ExactChain",
    "TVBound",
    "sample_pi",
    "exact_small_chain",
    "exact_tv_curve",
    "exact_tv_between",
    "exact_tmix",
    "tv_lower_bound",
    "equilibrium_profile_check",
    "statistic_law_exact",
]

STATE_SPACE_CAP = 1_000_000
_UNIFORMIZATION_TAIL = 1e-13
# (n-1) * (m+1) table entries beyond this make the sequential sampler's
# memory footprint unreasonable; rejection keeps working regardless.
_SEQUENTIAL_TABLE_CAP = 50_000_000


# ---------------------------------------------------------------------------
# Exact stationary sampling


def _conditional_support(rate: RateFunction, n: int, m: int) -> np.ndarray:
    """Single-site weights used by the conditioned-product samplers.

    Probabilities of the grand-canonical law at the density-matching
    fugacity, cut at min(support, m) and renormalized.  Conditioning on
    the total being m makes the cut exact up to the law restricted to
    {max occupancy <= cut}, a set of stationary probability 1 minus a
    negligible tail (the law's declared truncation, ~1e-14).
    """
    z = psi_inv(rate, m / n)
    q = q_dist(rate, z)
    p = q.probs[: m + 1]
    return p / p.sum()


def sample_pi(rate: RateFunction, n: int, m: int, seed,
              method: str = "auto", batch: int = 64,
              max_batches: int = 2000) -> OccupancyConfig:
    """Draw one configuration exactly from the stationary law.

    Rejection sampling: n i.i.d. grand-canonical coordinates at the
    fugacity whose mean is m/n, accepted iff they sum to m.  When no
    batch accepts (acceptance decays like 1/sqrt(n)), falls back to
    exact sequential conditional sampling from precomputed partial-sum
    tables.  Deterministic given the seed.
    """
    if n < 1:
        raise ValueError("need at least one site")
    if m < 0:
        raise ValueError("particle count must be nonnegative")
    if method not in ("auto", "rejection", "sequential"):
        raise ValueError(f"unknown method {method!r}")
    if m == 0:
        return OccupancyConfig(np.zeros(n, dtype=np.int64))
    gen = make_generator(seed)
    p = _conditional_support(rate, n, m)
    if method in ("auto", "rejection"):
        cdf = np.cumsum(p)
        for _ in range(max_batches):
            u = gen.random((batch, n))
            draws = np.searchsorted(cdf, u, side="right").astype(np.int64)
            np.clip(draws, 0, p.size - 1, out=draws)
            hits = np.nonzero(draws.sum(axis=1) == m)[0]
            if hits.size:
                return OccupancyConfig(draws[hits[0]])
        if method == "rejection":
            raise RuntimeError(
                f"no acceptance in {max_batches} batches of {batch}; "
                "use method='sequential'")
    return _sample_sequential(p, n, m, gen)


def _partial_sum_rows(p: np.ndarray, n: int, m: int) -> np.ndarray:
    """Row j-1 is the pmf of a sum of j coordinates, truncated to [0, m].

    Rows are renormalized after every convolution; only within-row
    ratios are consumed, so the running normalization (a log-domain
    bookkeeping of otherwise underflowing masses) cancels out.
    """
    if (n - 1) * (m + 1) > _SEQUENTIAL_TABLE_CAP:
        raise MemoryError(
            "sequential sampler table would exceed the configured cap; "
            "rejection sampling remains available")
    rows = np.zeros((n - 1, m + 1))
    row = np.zeros(m + 1)
    row[: p.size] = p
    rows[0] = row / row.sum()
    for j in range(1, n - 1):
        row = np.convolve(rows[j - 1], p)[: m + 1]
        rows[j] = row / row.sum()
    return rows


def _sample_sequential(p: np.ndarray, n: int, m: int, gen) -> OccupancyConfig:
    if n == 1:
        return OccupancyConfig(np.array([m], dtype=np.int64))
    rows = _partial_sum_rows(p, n, m)
    occ = np.zeros(n, dtype=np.int64)
    s = m
    for j in range(n - 1):
        remaining = n - 1 - j  # coordinates after this one
        kmax = min(p.size - 1, s)
        weights = p[: kmax + 1] * rows[remaining - 1][s - np.arange(kmax + 1)]
        total = weights.sum()
        if total <= 0.0:  # pragma: no cover - inconsistent tables
            raise RuntimeError("conditional weights vanished")
        c = np.cumsum(weights)
        k = int(np.searchsorted(c, gen.random() * total, side="right"))
        if k > kmax:
            k = kmax
        occ[j] = k
        s -= k
    occ[n - 1] = s
    return OccupancyConfig(occ)


def sample_pi_many(rate: RateFunction, n: int, m: int, count: int, seed,
                   method: str = "auto") -> list[OccupancyConfig]:
    """Independent stationary samples with derived per-replica seeds."""
    return [sample_pi(rate, n, m, s, method=method)
            for s in spawn_seeds(seed, count)]


# ---------------------------------------------------------------------------
# Exact small-instance oracle


def _enumerate_states(n: int, m: int) -> np.ndarray:
    """All occupancy vectors with the given total, in colex order."""
    count = math.comb(m + n - 1, n - 1)
    if count > STATE_SPACE_CAP:
        raise ValueError(f"state space has {count} states, above the cap {STATE_SPACE_CAP}")
    states = np.empty((count, n), dtype=np.int64)
    x = np.zeros(n, dtype=np.int64)
    x[0] = m
    for row in range(count):
        states[row] = x
        if row == count - 1:
            break
        if x[0] > 0:
            x[0] -= 1
            x[1] += 1
        else:
            j = 1
            while x[j] == 0:
                j += 1
            x[0] = x[j] - 1
            x[j + 1] += 1
            x[j] = 0
    return states


@dataclass
class ExactChain:
    """Full generator, state enumeration and stationary vector."""

    rate: RateFunction
    n: int
    m: int
    states: np.ndarray
    index: dict = field(repr=False)
    generator: sp.csr_matrix = field(repr=False)
    pi: np.ndarray
    _powers: list = field(default_factory=list, repr=False)
    _p_unif: sp.csr_matrix | None = field(default=None, repr=False)
    _lam: float = 0.0

    def state_index(self, x) -> int:
        if isinstance(x, OccupancyConfig):
            x = x.occupancies
        key = tuple(int(v) for v in x)
        if key not in self.index:
            raise ValueError(f"configuration {key} is not a state of this chain")
        return self.index[key]


def exact_small_chain(rate: RateFunction, n: int, m: int) -> ExactChain:
    """Assemble the generator and stationary law on the full state space.

    Transition x -> x - d_i + d_j has rate r(x_i)/n for every ordered
    pair i != j (self-moves cancel in the generator).  The stationary
    vector is the normalized product of inverse rate factorials,
    computed in log space.
    """
    states = _enumerate_states(n, m)
    count = states.shape[0]
    index = {tuple(int(v) for v in s): k for k, s in enumerate(states)}

    log_r = np.zeros(m + 1)
    for c in range(1, m + 1):
        log_r[c] = log_r[c - 1] + math.log(rate.rate(c))
    log_pi = -log_r[states].sum(axis=1)
    log_pi -= logsumexp(log_pi)
    pi = np.exp(log_pi)
    pi /= pi.sum()

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for s_idx in range(count):
        x = states[s_idx]
        diag = 0.0
        for i in range(n):
            if x[i] == 0:
                continue
            rr = rate.rate(int(x[i])) / n
            x[i] -= 1
            for j in range(n):
                if j == i:
                    continue
                x[j] += 1
                rows.append(s_idx)
                cols.append(index[tuple(int(v) for v in x)])
                vals.append(rr)
                x[j] -= 1
            x[i] += 1
            diag -= rr * (n - 1)
        rows.append(s_idx)
        cols.append(s_idx)
        vals.append(diag)
    gen = sp.csr_matrix((vals, (rows, cols)), shape=(count, count))
    return ExactChain(rate=rate, n=n, m=m, states=states, index=index,
                      generator=gen, pi=pi)


def _ensure_uniformization(chain: ExactChain) -> None:
    if chain._p_unif is None:
        lam = float(-chain.generator.diagonal().min())
        if lam <= 0.0:
            lam = 1.0  # absorbing chain (m = 0); P is the identity
        count = chain.states.shape[0]
        chain._lam = lam
        chain._p_unif = sp.identity(count, format="csr") + chain.generator.tocsr() / lam


def _law_at(chain: ExactChain, x0_idx: int, t: float) -> np.ndarray:
    """Distribution at time t from a point mass, by uniformization.

    The Poissonized power series is truncated where the exact Poisson
    tail drops below 1e-13, which bounds the TV error of the result by
    the same amount.
    """
    _ensure_uniformization(chain)
    lam_t = chain._lam * t
    if lam_t == 0.0:
        out = np.zeros(chain.states.shape[0])
        out[x0_idx] = 1.0
        return out
    kmax = int(poisson.isf(_UNIFORMIZATION_TAIL, lam_t)) + 1
    powers = chain._powers
    if not powers:
        v = np.zeros(chain.states.shape[0])
        v[x0_idx] = 1.0
        powers.append((x0_idx, [v]))
    cached = dict((idx, vs) for idx, vs in powers)
    if x0_idx not in cached:
        v = np.zeros(chain.states.shape[0])
        v[x0_idx] = 1.0
        powers.append((x0_idx, [v]))
        cached[x0_idx] = powers[-1][1]
    vs = cached[x0_idx]
    while len(vs) <= kmax:
        vs.append(vs[-1] @ chain._p_unif)
    weights = poisson.pmf(np.arange(kmax + 1), lam_t)
    out = np.zeros(chain.states.shape[0])
    for k in range(kmax + 1):
        out += weights[k] * vs[k]
    return out


def exact_tv_curve(chain: ExactChain, x0, t_grid) -> np.ndarray:
    """Exact distance to stationarity along a time grid."""
    idx = chain.state_index(x0)
    t_grid = np.asarray(t_grid, dtype=float)
    return np.array([0.5 * np.abs(_law_at(chain, idx, t) - chain.pi).sum()
                     for t in t_grid])


def exact_tv_between(chain: ExactChain, x0, y0, t: float) -> float:
    """Exact distance between the laws at time t from two starts."""
    ix = chain.state_index(x0)
    iy = chain.state_index(y0)
    return 0.5 * float(np.abs(_law_at(chain, ix, t) - _law_at(chain, iy, t)).sum())


def exact_tmix(chain: ExactChain, x0, eps: float, t_hint: float = 1.0) -> float:
    """First time the exact distance to stationarity drops to eps.

    Doubling bracket followed by bisection to absolute width 1e-9,
    using monotonicity of the distance in t.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    idx = chain.state_index(x0)

    def tv(t: float) -> float:
        return 0.5 * float(np.abs(_law_at(chain, idx, t) - chain.pi).sum())

    if tv(0.0) <= eps:
        return 0.0
    hi = t_hint
    for _ in range(200):
        if tv(hi) <= eps:
            break
        hi *= 2.0
    else:  # pragma: no cover - distance always reaches 0
        raise RuntimeError("mixing level not reached while doubling the horizon")
    lo = 0.0
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if tv(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# Statistic laws and TV estimators


def statistic_law_exact(rate: RateFunction, n: int, m: int,
                        statistic: str = "max_occupancy") -> DiscreteDist:
    """Exact stationary law of a statistic, without enumerating states.

    For the maximum occupancy: P(max <= a | total = m) is the ratio of
    n-fold convolution powers of the single-site weights truncated at a
    versus untruncated, evaluated at m; the powers are computed by
    repeated squaring.
    """
    if statistic != "max_occupancy":
        raise ValueError(f"no exact law implemented for statistic {statistic!r}")
    if m == 0:
        return DiscreteDist.point_mass(0)
    p = _conditional_support(rate, n, m)

    def power_at_m(vec: np.ndarray) -> float:
        acc = None
        base = vec
        k = n
        while k:
            if k & 1:
                acc = base if acc is None else np.clip(fftconvolve(acc, base)[: m + 1], 0.0, None)
            k >>= 1
            if k:
                base = np.clip(fftconvolve(base, base)[: m + 1], 0.0, None)
        return float(acc[m]) if acc.size > m else 0.0

    denom = power_at_m(p)
    if denom <= 0.0:  # pragma: no cover - m always reachable
        raise RuntimeError("total has zero probability under the product law")
    cdf = []
    for a in range(p.size):
        trunc = p[: a + 1]
        cdf.append(min(power_at_m(trunc) / denom, 1.0))
        if cdf[-1] >= 1.0 - 1e-15:
            break
    cdf = np.asarray(cdf)
    pmf = np.diff(cdf, prepend=0.0)
    pmf = np.clip(pmf, 0.0, None)
    total = pmf.sum()
    return DiscreteDist(pmf / total)


@dataclass
class TVBound:
    estimate: float
    ci_low: float
    ci_high: float
    n_samples: int


def tv_lower_bound(samples, reference, seed=0, n_boot: int = 200) -> TVBound:
    """Plug-in distance between a statistic's empirical law and a reference.

    By data processing this lower-bounds the full distance between the
    underlying laws, up to Monte Carlo error: the plug-in estimate is
    biased upward, so the bootstrap CI is reported and one-sided use is
    recommended.  ``reference`` is an exact :class:`DiscreteDist` or a
    second multiset of sampled values.
    """
    samples = np.asarray(samples, dtype=np.int64)
    if samples.size < 100:
        raise ValueError("need at least 100 samples for a TV estimate")
    ref_samples = None
    if not isinstance(reference, DiscreteDist):
        ref_samples = np.asarray(reference, dtype=np.int64)
        if ref_samples.size < 100:
            raise ValueError("need at least 100 reference samples")
        reference = DiscreteDist.from_samples(ref_samples)
    est = DiscreteDist.from_samples(samples).tv(reference)
    gen = make_generator(seed)
    boots = np.empty(n_boot)
    for b in range(n_boot):
        res = samples[gen.integers(0, samples.size, samples.size)]
        ref = reference
        if ref_samples is not None:
            ref = DiscreteDist.from_samples(
                ref_samples[gen.integers(0, ref_samples.size, ref_samples.size)])
        boots[b] = DiscreteDist.from_samples(res).tv(ref)
    lo, hi = np.quantile(boots, [0.025, 0.975])
    return TVBound(estimate=float(est), ci_low=float(lo), ci_high=float(hi),
                   n_samples=int(samples.size))


@dataclass
class ProfileCheck:
    distances: np.ndarray
    max_occupancies: np.ndarray
    mean_distance: float
    ci_low: float
    ci_high: float
    reference: DiscreteDist


def equilibrium_profile_check(rate: RateFunction, n: int, m: int,
                              samples: int, seed) -> ProfileCheck:
    """Distance of stationary empirical occupancy measures to their limit.

    Draws stationary configurations and compares each site-occupancy
    histogram against the mean-m/n grand-canonical law; reports the
    per-sample distances, their mean with a normal CI, and the maximum
    occupancies seen (the stationary maximum grows logarithmically).
    """
    reference = q_bar(rate, m / n)
    dists = np.empty(samples)
    maxs = np.empty(samples, dtype=np.int64)
    for k, s in enumerate(spawn_seeds(seed, samples)):
        cfg = sample_pi(rate, n, m, s)
        emp = DiscreteDist(np.bincount(cfg.occupancies) / n)
        dists[k] = emp.tv(reference)
        maxs[k] = cfg.occupancies.max()
    mean = float(dists.mean())
    half = 1.96 * float(dists.std(ddof=1)) / math.sqrt(samples) if samples > 1 else 0.0
    return ProfileCheck(distances=dists, max_occupancies=maxs,
                        mean_distance=mean, ci_low=mean - half, ci_high=mean + half,
                        reference=reference)
