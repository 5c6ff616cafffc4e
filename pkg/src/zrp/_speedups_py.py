"""Pure-Python event-loop kernels (reference implementation).

The compiled module ``zrp._speedups`` mirrors these loops operation for
operation.  Both backends draw nothing but uniform doubles from the same
numpy bit generator, in the same order, so a given seed produces
bit-identical trajectories no matter which backend is active.

Stream contracts (order in which uniforms are consumed):

* graphical / pair event: ``dt``, ``i``, ``j``, ``u``  (4 draws per event;
  ``i = j`` no-ops included, matching the full event intensity ``n``).
* fast event: ``dt``, then ``(idx, u)`` pairs until a source is accepted,
  then ``j``  (rejection over the nonempty sites, acceptance ``r(x_i)``).
* tagged background event: ``dt`` when scheduled, then ``i``, ``j``, ``u``
  when it fires.  Tag event (second generator): ``dt`` when scheduled,
  then ``u``, ``k`` when it fires.

Exponential waiting times are ``-log1p(-u) / rate``; uniform indices are
``int(u * n)`` clamped to ``n - 1``.  Snapshots at a grid time carry every
event with an earlier or equal timestamp (right-continuous paths).
"""

from __future__ import annotations

import math

import numpy as np

COMPILED = False


def _exp_step(u: float, total_rate: float) -> float:
    return -math.log1p(-u) / total_rate


def _check_table(tab, occ_total: int, name: str) -> None:
    # occupancies can reach the total particle count
    if len(tab) < occ_total + 1:
        raise ValueError(f"{name} covers occupancies up to {len(tab) - 1}, "
                         f"but the configuration holds {occ_total} particles")


def graphical(occ, rtab, horizon, grid, gen):
    """Thinned full-intensity event loop.

    Poisson stream of total rate ``n`` over (source, destination, mark)
    triples; a drawn event moves one particle from ``i`` to ``j`` iff
    ``r(x_i) >= u``.  Returns (snapshots, events_drawn, jumps) where
    ``jumps`` counts the accepted marks.
    """
    occ = [int(v) for v in occ]
    rtab = [float(v) for v in rtab]
    _check_table(rtab, sum(occ), "rate table")
    n = len(occ)
    G = len(grid)
    snaps = np.empty((G, n), dtype=np.int64)
    rand = gen.random
    t = 0.0
    g = 0
    drawn = 0
    jumps = 0
    nf = float(n)
    while True:
        t_next = t + _exp_step(rand(), nf)
        while g < G and grid[g] < t_next:
            snaps[g, :] = occ
            g += 1
        if t_next > horizon:
            break
        t = t_next
        i = int(rand() * nf)
        if i >= n:
            i = n - 1
        j = int(rand() * nf)
        if j >= n:
            j = n - 1
        u = rand()
        drawn += 1
        if rtab[occ[i]] >= u:
            jumps += 1
            if i != j:
                occ[i] -= 1
                occ[j] += 1
    while g < G:
        snaps[g, :] = occ
        g += 1
    return snaps, drawn, jumps


def fast(occ, rtab, horizon, grid, gen):
    """Rejection-free event loop, equal in law to :func:`graphical`.

    Waiting times are exponential with the total jump rate
    ``Lambda = sum_i r(x_i)`` (maintained incrementally with compensated
    summation); the source is drawn proportionally to its rate by
    rejection over the nonempty sites; the destination is uniform.
    Returns (snapshots, jumps); a frozen state (Lambda = 0) pads the
    remaining grid with the current configuration.
    """
    occ = [int(v) for v in occ]
    rtab = [float(v) for v in rtab]
    _check_table(rtab, sum(occ), "rate table")
    n = len(occ)
    G = len(grid)
    snaps = np.empty((G, n), dtype=np.int64)
    rand = gen.random

    nonempty = [i for i in range(n) if occ[i] > 0]
    pos = [-1] * n
    for idx, site in enumerate(nonempty):
        pos[site] = idx
    cnt = len(nonempty)

    lam = 0.0
    comp = 0.0
    for site in nonempty:
        y = rtab[occ[site]] - comp
        s = lam + y
        comp = (s - lam) - y
        lam = s

    t = 0.0
    g = 0
    jumps = 0
    nf = float(n)
    while True:
        if cnt == 0:
            break
        t_next = t + _exp_step(rand(), lam)
        while g < G and grid[g] < t_next:
            snaps[g, :] = occ
            g += 1
        if t_next > horizon:
            break
        t = t_next
        while True:
            idx = int(rand() * cnt)
            if idx >= cnt:
                idx = cnt - 1
            i = nonempty[idx]
            if rtab[occ[i]] >= rand():
                break
        j = int(rand() * nf)
        if j >= n:
            j = n - 1
        jumps += 1
        if i != j:
            ci = occ[i]
            cj = occ[j]
            occ[i] = ci - 1
            occ[j] = cj + 1
            delta = (rtab[ci - 1] - rtab[ci]) + (rtab[cj + 1] - rtab[cj])
            y = delta - comp
            s = lam + y
            comp = (s - lam) - y
            lam = s
            if ci == 1:
                last = nonempty[cnt - 1]
                swap = pos[i]
                nonempty[swap] = last
                pos[last] = swap
                nonempty.pop()
                pos[i] = -1
                cnt -= 1
            if cj == 0:
                nonempty.append(j)
                pos[j] = cnt
                cnt += 1
    while g < G:
        snaps[g, :] = occ
        g += 1
    return snaps, jumps


def pair(occ_x, occ_y, rtab, horizon, grid, gen):
    """Two configurations driven by one shared full-intensity stream.

    Returns (snaps_x, snaps_y, violations, drawn, jumps_x, jumps_y) where
    ``violations`` counts coordinatewise order failures checked right
    after every drawn event (expected to stay 0 when ``x <= y``).
    """
    ox = [int(v) for v in occ_x]
    oy = [int(v) for v in occ_y]
    rtab = [float(v) for v in rtab]
    _check_table(rtab, max(sum(ox), sum(oy)), "rate table")
    n = len(ox)
    G = len(grid)
    snaps_x = np.empty((G, n), dtype=np.int64)
    snaps_y = np.empty((G, n), dtype=np.int64)
    rand = gen.random
    t = 0.0
    g = 0
    drawn = 0
    jumps_x = 0
    jumps_y = 0
    violations = 0
    nf = float(n)
    while True:
        t_next = t + _exp_step(rand(), nf)
        while g < G and grid[g] < t_next:
            snaps_x[g, :] = ox
            snaps_y[g, :] = oy
            g += 1
        if t_next > horizon:
            break
        t = t_next
        i = int(rand() * nf)
        if i >= n:
            i = n - 1
        j = int(rand() * nf)
        if j >= n:
            j = n - 1
        u = rand()
        drawn += 1
        if rtab[ox[i]] >= u:
            jumps_x += 1
            if i != j:
                ox[i] -= 1
                ox[j] += 1
        if rtab[oy[i]] >= u:
            jumps_y += 1
            if i != j:
                oy[i] -= 1
                oy[j] += 1
        if ox[i] > oy[i] or ox[j] > oy[j]:
            violations += 1
    while g < G:
        snaps_x[g, :] = ox
        snaps_y[g, :] = oy
        g += 1
    return snaps_x, snaps_y, violations, drawn, jumps_x, jumps_y


def tagged(occ, i0, j0, rtab, dtab, horizon, grid, bg_gen, th_gen, record_bg):
    """Background chain plus two tagged walkers sharing one tag stream.

    The background evolves by the full-intensity loop under ``bg_gen``.
    An independent stream of total rate 1 under ``th_gen`` delivers marks
    ``(u, k)`` applied identically to both tags: a tag at site ``l`` moves
    to ``k`` iff ``dtab[occ[l]] >= u``.  Returns (i_grid, j_grid, tau,
    bg_snaps or None); ``tau`` is the exact first time the tags agree
    (-1.0 when they never do before the horizon).
    """
    occ = [int(v) for v in occ]
    rtab = [float(v) for v in rtab]
    dtab = [float(v) for v in dtab]
    _check_table(rtab, sum(occ), "rate table")
    _check_table(dtab, sum(occ), "tag rate table")
    n = len(occ)
    G = len(grid)
    i_grid = np.empty(G, dtype=np.int64)
    j_grid = np.empty(G, dtype=np.int64)
    bg_snaps = np.empty((G, n), dtype=np.int64) if record_bg else None
    bg_rand = bg_gen.random
    th_rand = th_gen.random
    cur_i = int(i0)
    cur_j = int(j0)
    tau = 0.0 if cur_i == cur_j else -1.0
    nf = float(n)
    t_bg = _exp_step(bg_rand(), nf)
    t_th = _exp_step(th_rand(), 1.0)
    g = 0
    while True:
        t_next = t_bg if t_bg <= t_th else t_th
        while g < G and grid[g] < t_next:
            i_grid[g] = cur_i
            j_grid[g] = cur_j
            if record_bg:
                bg_snaps[g, :] = occ
            g += 1
        if t_next > horizon:
            break
        if t_bg <= t_th:
            i = int(bg_rand() * nf)
            if i >= n:
                i = n - 1
            j = int(bg_rand() * nf)
            if j >= n:
                j = n - 1
            u = bg_rand()
            if rtab[occ[i]] >= u and i != j:
                occ[i] -= 1
                occ[j] += 1
            t_bg += _exp_step(bg_rand(), nf)
        else:
            u = th_rand()
            k = int(th_rand() * nf)
            if k >= n:
                k = n - 1
            if dtab[occ[cur_i]] >= u:
                cur_i = k
            if dtab[occ[cur_j]] >= u:
                cur_j = k
            if cur_i == cur_j and tau < 0.0:
                tau = t_th
            t_th += _exp_step(th_rand(), 1.0)
    while g < G:
        i_grid[g] = cur_i
        j_grid[g] = cur_j
        if record_bg:
            bg_snaps[g, :] = occ
        g += 1
    return i_grid, j_grid, tau, bg_snaps


# ---------------------------------------------------------------------------
# Deterministic numeric kernels


def psi_inv_weights(w, s):
    """Bisection inverse of the fugacity-to-density map.

    ``w`` holds the cumulative rate products ``w_0=1, w_1=r(1), ...``;
    the closed-form series under the eventually-one tail is evaluated
    inline.  Same bracketing/termination policy as :func:`zrp.rates.psi_inv`.
    """
    if s <= 0.0:
        return 0.0
    K = len(w) - 1
    eta = 0.25
    hi = 1.0 - eta
    while _psi_weights(w, K, hi) <= s:
        eta *= 0.5
        hi = 1.0 - eta
    lo = 0.0
    tol = 1e-12 * (1.0 + s)
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _psi_weights(w, K, mid)
        if abs(fm - s) <= tol:
            return mid
        if fm < s:
            lo = mid
        else:
            hi = mid
    return mid


def _psi_weights(w, K, z):
    if z == 0.0:
        return 0.0
    value = 1.0
    deriv = 0.0
    zpow = 1.0
    for k in range(1, K + 1):
        deriv += k * zpow / w[k]
        zpow *= z
        value += zpow / w[k]
    om = 1.0 - z
    value += zpow * z / (w[K] * om)
    deriv += ((K + 1) * zpow * om + zpow * z) / (w[K] * om * om)
    return z * deriv / value


def dissolve_rk4(w, u, rho, knots, hmax):
    """Classical fixed-step RK4 for the dissolution equation.

    Integrates ``f' = 1 - psi_inv(rho - sum_k max(u_k - f, 0))`` from
    ``f(knots[0]) = 0`` through every knot, never stepping across one
    (the right-hand side has derivative kinks there), with step <= hmax
    inside each segment.  Returns f at the knots.
    """
    w = [float(v) for v in w]
    u = [float(v) for v in u]
    rho = float(rho)
    nk = len(knots)
    out = np.empty(nk, dtype=float)
    f = 0.0
    out[0] = f
    for seg in range(nk - 1):
        t0 = knots[seg]
        t1 = knots[seg + 1]
        length = t1 - t0
        if length <= 0.0:
            out[seg + 1] = f
            continue
        nsteps = int(math.ceil(length / hmax))
        if nsteps < 1:
            nsteps = 1
        h = length / nsteps
        for _ in range(nsteps):
            k1 = _dissolve_rhs(w, u, rho, f)
            k2 = _dissolve_rhs(w, u, rho, f + 0.5 * h * k1)
            k3 = _dissolve_rhs(w, u, rho, f + 0.5 * h * k2)
            k4 = _dissolve_rhs(w, u, rho, f + h * k3)
            f = f + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[seg + 1] = f
    return out


def _dissolve_rhs(w, u, rho, f):
    solid = 0.0
    for uk in u:
        if uk > f:
            solid += uk - f
    return 1.0 - psi_inv_weights(w, rho - solid)
