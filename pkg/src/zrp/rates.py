"""Deterministic functions of a monotone jump-rate table.

A rate function is stored as its head ``r(1..K)`` together with the
convention that ``r(k) = 1`` exactly for every ``k > K`` (eventually-one
representation) and ``r(0) = 0``.  Under that representation the
generating series ``R``, its derivative, the fugacity-to-density map
``psi`` and the grand-canonical occupancy law ``q_dist`` all have exact
closed forms: the geometric tail of the series is summed analytically,
so no series truncation error enters anywhere downstream.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RateFunction",
    "DiscreteDist",
    "normalize",
    "big_r",
    "psi",
    "psi_inv",
    "q_dist",
    "q_bar",
    "preset",
    "load_rate_file",
    "resolve_rate",
    "rate_table",
]

# Tail mass below which the occupancy law is truncated; negligible against
# every statistical tolerance used by the simulation experiments.
Q_TAIL_TOL = 1e-14

_PSI_INV_RTOL = 1e-12
_PSI_INV_MAX_ITER = 200


@dataclass(frozen=True)
class RateFunction:
    """Monotone jump rates ``r(1..K)`` with ``r(k) = 1`` for all ``k > K``.

    ``time_rescale`` records the constant divided out of a raw table to
    bring its supremum to 1, so callers can convert model time back to
    the original units if they need to.
    """

    head: tuple[float, ...]
    time_rescale: float = 1.0

    def __post_init__(self):
        if len(self.head) == 0:
            raise ValueError("rate head must contain at least r(1)")
        prev = 0.0
        for k, v in enumerate(self.head, start=1):
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"r({k}) = {v!r} is not a positive finite rate")
            if v < prev:
                raise ValueError(f"rate table is not nondecreasing at k={k}")
            if v > 1.0:
                raise ValueError(f"r({k}) = {v} exceeds the tail value 1; normalize first")
            prev = v
        if not (self.time_rescale > 0.0 and math.isfinite(self.time_rescale)):
            raise ValueError("time_rescale must be a positive finite scalar")
        object.__setattr__(self, "head", tuple(float(v) for v in self.head))

    @property
    def tail_is_one(self) -> bool:
        return True

    @property
    def k_head(self) -> int:
        """Number of explicitly stored rates."""
        return len(self.head)

    def rate(self, k: int) -> float:
        """Jump rate of a site holding ``k`` particles (``r(0) = 0``)."""
        if k < 0:
            raise ValueError("occupancy must be nonnegative")
        if k == 0:
            return 0.0
        if k <= len(self.head):
            return self.head[k - 1]
        return 1.0

    def factorial_weights(self) -> tuple[float, ...]:
        """Cumulative products ``w_k = r(1) * ... * r(k)``, with ``w_0 = 1``."""
        w = [1.0]
        for v in self.head:
            w.append(w[-1] * v)
        return tuple(w)


def normalize(raw) -> RateFunction:
    """Build a :class:`RateFunction` from a raw positive nondecreasing table.

    Entries above 1 are interpreted as an un-normalized table that has
    reached its plateau, and the whole table is divided by its maximum;
    a table already within (0, 1] is kept as-is, the eventual tail value
    1 supplying the supremum.  The divisor is recorded as ``time_rescale``.
    """
    raw = [float(v) for v in raw]
    if not raw:
        raise ValueError("empty rate table")
    for k, v in enumerate(raw, start=1):
        if not math.isfinite(v) or v <= 0.0:
            raise ValueError(f"rate table entry {k} must be positive and finite, got {v!r}")
        if k > 1 and v < raw[k - 2]:
            raise ValueError(f"rate table is not nondecreasing at entry {k}")
    scale = max(raw[-1], 1.0)
    head = tuple(v / scale for v in raw)
    return RateFunction(head=head, time_rescale=scale)


def preset(name: str) -> RateFunction:
    """Named built-in rate functions: ``rate-one`` and ``threshold-<k0>``."""
    if name == "rate-one":
        return RateFunction(head=(1.0,))
    m = re.fullmatch(r"threshold-(\d+)", name)
    if m:
        k0 = int(m.group(1))
        if k0 < 1:
            raise ValueError("threshold preset needs k0 >= 1")
        return RateFunction(head=tuple(min(1.0, j / k0) for j in range(1, k0 + 1)))
    raise ValueError(f"unknown rate preset {name!r}")


def load_rate_file(path) -> RateFunction:
    """Load ``{"head": [r1, ..., rK]}`` from a JSON text file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "head" not in doc:
        raise ValueError(f"{path}: expected an object with a 'head' array")
    return normalize(doc["head"])


def resolve_rate(spec) -> RateFunction:
    """Turn a CLI/config rate description into a :class:`RateFunction`.

    Accepts a preset name, ``{"head": [...]}``, ``{"file": path}``, or an
    already-built :class:`RateFunction`.
    """
    if isinstance(spec, RateFunction):
        return spec
    if isinstance(spec, str):
        return preset(spec)
    if isinstance(spec, dict):
        if "head" in spec:
            return normalize(spec["head"])
        if "file" in spec:
            return load_rate_file(spec["file"])
    raise ValueError(f"cannot interpret rate description {spec!r}")


def rate_table(rate: RateFunction, max_count: int) -> np.ndarray:
    """Lookup table ``r(0..max_count)`` as a float array (``r(0) = 0``)."""
    if max_count < 0:
        raise ValueError("max_count must be nonnegative")
    tab = np.ones(max_count + 1)
    tab[0] = 0.0
    ncopy = min(len(rate.head), max_count)
    tab[1 : ncopy + 1] = rate.head[:ncopy]
    return tab


# ---------------------------------------------------------------------------
# Generating series and fugacity/density maps


def big_r(rate: RateFunction, z: float) -> tuple[float, float]:
    """Evaluate the occupancy generating series and its derivative at ``z``.

    Returns ``(R(z), R'(z))`` where ``R(z) = sum_k z^k / (r(1)...r(k))``,
    summed in closed form: the head contributes K+1 explicit terms and the
    eventually-one tail is a geometric series.
    """
    z = float(z)
    if not 0.0 <= z < 1.0:
        raise ValueError(f"z must lie in [0, 1), got {z}")
    w = rate.factorial_weights()
    K = len(rate.head)
    value = 1.0
    deriv = 0.0
    zpow = 1.0  # z^(k-1) at the top of iteration k
    for k in range(1, K + 1):
        deriv += k * zpow / w[k]
        zpow *= z
        value += zpow / w[k]
    # zpow == z^K; geometric tail over k > K where the weights stay at w[K]
    om = 1.0 - z
    value += zpow * z / (w[K] * om)
    deriv += ((K + 1) * zpow * om + zpow * z) / (w[K] * om * om)
    return value, deriv


def psi(rate: RateFunction, z: float) -> float:
    """Mean occupancy of the grand-canonical law at fugacity ``z``.

    ``psi(z) = z R'(z) / R(z)``; strictly increasing from 0 and diverging
    as ``z`` approaches 1.
    """
    z = float(z)
    if not 0.0 <= z < 1.0:
        raise ValueError(f"z must lie in [0, 1), got {z}")
    if z == 0.0:
        return 0.0
    value, deriv = big_r(rate, z)
    return z * deriv / value


def psi_inv(rate: RateFunction, s: float) -> float:
    """Fugacity whose mean occupancy is ``s`` (inverse of :func:`psi`).

    Monotone bisection on an interval [0, 1-eta], with eta shrunk until
    the upper endpoint overshoots ``s``.  Bisection is used deliberately:
    the map is extremely steep near z = 1, where a Newton step is unsafe.
    Terminates when ``|psi(z) - s| <= 1e-12 * (1 + s)``.
    """
    s = float(s)
    if not math.isfinite(s) or s < 0.0:
        raise ValueError(f"target density must be finite and >= 0, got {s}")
    if s == 0.0:
        return 0.0
    eta = 0.25
    hi = 1.0 - eta
    while psi(rate, hi) <= s:
        eta *= 0.5
        hi = 1.0 - eta
        if eta < 1e-300:  # pragma: no cover - unreachable for finite s
            raise ValueError("failed to bracket the target density")
    lo = 0.0
    tol = _PSI_INV_RTOL * (1.0 + s)
    mid = 0.5 * (lo + hi)
    for _ in range(_PSI_INV_MAX_ITER):
        mid = 0.5 * (lo + hi)
        fm = psi(rate, mid)
        if abs(fm - s) <= tol:
            return mid
        if fm < s:
            lo = mid
        else:
            hi = mid
    return mid


# ---------------------------------------------------------------------------
# Distributions over nonnegative integers


@dataclass
class DiscreteDist:
    """Probability vector ``p(0..M)`` plus a declared truncated tail mass."""

    probs: np.ndarray
    tail_mass: float = 0.0
    _skip_checks: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self._skip_checks:
            return
        if self.probs.ndim != 1 or self.probs.size == 0:
            raise ValueError("probs must be a nonempty 1-d vector")
        if np.any(self.probs < -1e-15):
            raise ValueError("negative probability entry")
        total = float(self.probs.sum()) + self.tail_mass
        if not (1.0 - 1e-12 <= total <= 1.0 + 1e-12):
            raise ValueError(f"probabilities sum to {total}, not 1")

    @classmethod
    def point_mass(cls, k: int = 0) -> "DiscreteDist":
        p = np.zeros(k + 1)
        p[k] = 1.0
        return cls(p)

    @classmethod
    def from_samples(cls, values) -> "DiscreteDist":
        """Empirical law of a collection of nonnegative integers."""
        values = np.asarray(values, dtype=np.int64)
        if values.size == 0:
            raise ValueError("no samples")
        if values.min() < 0:
            raise ValueError("samples must be nonnegative")
        counts = np.bincount(values)
        return cls(counts / values.size)

    @property
    def support_size(self) -> int:
        return int(self.probs.size)

    def mean(self) -> float:
        """Mean of the stored part (the truncated tail is ignored)."""
        return float(np.arange(self.probs.size) @ self.probs)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def tv(self, other: "DiscreteDist") -> float:
        """Total-variation distance.

        Exact when both tail masses vanish; otherwise the (negligibly
        pessimistic) bound obtained by counting both tails as disjoint.
        """
        n = max(self.probs.size, other.probs.size)
        a = np.zeros(n)
        b = np.zeros(n)
        a[: self.probs.size] = self.probs
        b[: other.probs.size] = other.probs
        return 0.5 * float(np.abs(a - b).sum()) + 0.5 * (self.tail_mass + other.tail_mass)


def q_dist(rate: RateFunction, z: float, tail_tol: float = Q_TAIL_TOL) -> DiscreteDist:
    """Grand-canonical occupancy law at fugacity ``z``.

    ``p(k) = z^k / (R(z) r(1)...r(k))``, truncated once the exact
    geometric remainder drops below ``tail_tol``; the remainder is
    recorded as the distribution's tail mass.  ``z = 0`` gives the point
    mass at 0.  The mean equals ``psi(z)`` up to the truncation.
    """
    z = float(z)
    if not 0.0 <= z < 1.0:
        raise ValueError(f"z must lie in [0, 1), got {z}")
    if z == 0.0:
        return DiscreteDist.point_mass(0)
    value, _ = big_r(rate, z)
    K = len(rate.head)
    probs = [1.0 / value]
    k = 0
    while True:
        k += 1
        probs.append(probs[-1] * z / rate.rate(k))
        if k >= K:
            tail = probs[-1] * z / (1.0 - z)
            if tail < tail_tol:
                break
        if k > 10_000_000:  # pragma: no cover - z would have to be 1-1e-7
            raise RuntimeError("occupancy law support exploded; z too close to 1")
    return DiscreteDist(np.asarray(probs), tail_mass=tail)


def q_bar(rate: RateFunction, s: float, tail_tol: float = Q_TAIL_TOL) -> DiscreteDist:
    """Grand-canonical occupancy law re-parameterized by its mean ``s``."""
    s = float(s)
    if not math.isfinite(s) or s < 0.0:
        raise ValueError(f"mean parameter must be finite and >= 0, got {s}")
    if s == 0.0:
        return DiscreteDist.point_mass(0)
    return q_dist(rate, psi_inv(rate, s), tail_tol=tail_tol)
