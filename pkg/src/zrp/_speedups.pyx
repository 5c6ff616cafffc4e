# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event-loop kernels.

Mirrors ``zrp._speedups_py`` operation for operation: same uniform
consumption order, same arithmetic order, so trajectories are
bit-identical across the two backends for a given seed.  See the pure
module's docstring for the stream contracts.
"""

from libc.math cimport log1p, ceil

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t

import numpy as np

COMPILED = True


cdef bitgen_t *_bitgen(object gen) except NULL:
    capsule = gen.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a numpy Generator backed by a BitGenerator")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _u(bitgen_t *rng) noexcept nogil:
    return rng.next_double(rng.state)



cdef inline void _check_table(Py_ssize_t tab_len, long long occ_total, str name):
    # occupancies can reach the total particle count
    if tab_len < occ_total + 1:
        raise ValueError(f"{name} covers occupancies up to {tab_len - 1}, "
                         f"but the configuration holds {occ_total} particles")


cdef long long _total(long long[::1] occ):
    cdef long long s = 0
    cdef Py_ssize_t k
    for k in range(occ.shape[0]):
        s += occ[k]
    return s


def graphical(occ, rtab, double horizon, grid, gen):
    cdef long long[::1] x = np.array(occ, dtype=np.int64)
    cdef double[::1] r = np.ascontiguousarray(rtab, dtype=np.float64)
    cdef double[::1] gr = np.ascontiguousarray(grid, dtype=np.float64)
    _check_table(r.shape[0], _total(x), "rate table")
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t G = gr.shape[0]
    snaps_arr = np.empty((G, n), dtype=np.int64)
    cdef long long[:, ::1] snaps = snaps_arr
    cdef bitgen_t *rng = _bitgen(gen)
    cdef double t = 0.0, t_next, u, nf = <double> n
    cdef Py_ssize_t g = 0, i, j, k
    cdef long long drawn = 0, jumps = 0
    while True:
        t_next = t + (-log1p(-_u(rng)) / nf)
        while g < G and gr[g] < t_next:
            for k in range(n):
                snaps[g, k] = x[k]
            g += 1
        if t_next > horizon:
            break
        t = t_next
        i = <Py_ssize_t> (_u(rng) * nf)
        if i >= n:
            i = n - 1
        j = <Py_ssize_t> (_u(rng) * nf)
        if j >= n:
            j = n - 1
        u = _u(rng)
        drawn += 1
        if r[x[i]] >= u:
            jumps += 1
            if i != j:
                x[i] -= 1
                x[j] += 1
    while g < G:
        for k in range(n):
            snaps[g, k] = x[k]
        g += 1
    return snaps_arr, drawn, jumps


def fast(occ, rtab, double horizon, grid, gen):
    cdef long long[::1] x = np.array(occ, dtype=np.int64)
    cdef double[::1] r = np.ascontiguousarray(rtab, dtype=np.float64)
    cdef double[::1] gr = np.ascontiguousarray(grid, dtype=np.float64)
    _check_table(r.shape[0], _total(x), "rate table")
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t G = gr.shape[0]
    snaps_arr = np.empty((G, n), dtype=np.int64)
    cdef long long[:, ::1] snaps = snaps_arr
    cdef long long[::1] nonempty = np.empty(n, dtype=np.int64)
    cdef long long[::1] pos = np.full(n, -1, dtype=np.int64)
    cdef bitgen_t *rng = _bitgen(gen)
    cdef Py_ssize_t cnt = 0, g = 0, i, j, k, idx
    cdef long long ci, cj, last, jumps = 0
    cdef double lam = 0.0, comp = 0.0, y, s, delta
    cdef double t = 0.0, t_next, nf = <double> n

    for k in range(n):
        if x[k] > 0:
            nonempty[cnt] = k
            pos[k] = cnt
            cnt += 1
    for idx in range(cnt):
        y = r[x[nonempty[idx]]] - comp
        s = lam + y
        comp = (s - lam) - y
        lam = s

    while True:
        if cnt == 0:
            break
        t_next = t + (-log1p(-_u(rng)) / lam)
        while g < G and gr[g] < t_next:
            for k in range(n):
                snaps[g, k] = x[k]
            g += 1
        if t_next > horizon:
            break
        t = t_next
        while True:
            idx = <Py_ssize_t> (_u(rng) * cnt)
            if idx >= cnt:
                idx = cnt - 1
            i = <Py_ssize_t> nonempty[idx]
            if r[x[i]] >= _u(rng):
                break
        j = <Py_ssize_t> (_u(rng) * nf)
        if j >= n:
            j = n - 1
        jumps += 1
        if i != j:
            ci = x[i]
            cj = x[j]
            x[i] = ci - 1
            x[j] = cj + 1
            delta = (r[ci - 1] - r[ci]) + (r[cj + 1] - r[cj])
            y = delta - comp
            s = lam + y
            comp = (s - lam) - y
            lam = s
            if ci == 1:
                last = nonempty[cnt - 1]
                nonempty[pos[i]] = last
                pos[last] = pos[i]
                pos[i] = -1
                cnt -= 1
            if cj == 0:
                nonempty[cnt] = j
                pos[j] = cnt
                cnt += 1
    while g < G:
        for k in range(n):
            snaps[g, k] = x[k]
        g += 1
    return snaps_arr, jumps


def pair(occ_x, occ_y, rtab, double horizon, grid, gen):
    cdef long long[::1] ox = np.array(occ_x, dtype=np.int64)
    cdef long long[::1] oy = np.array(occ_y, dtype=np.int64)
    cdef double[::1] r = np.ascontiguousarray(rtab, dtype=np.float64)
    cdef double[::1] gr = np.ascontiguousarray(grid, dtype=np.float64)
    _check_table(r.shape[0], max(_total(ox), _total(oy)), "rate table")
    cdef Py_ssize_t n = ox.shape[0]
    cdef Py_ssize_t G = gr.shape[0]
    snaps_x_arr = np.empty((G, n), dtype=np.int64)
    snaps_y_arr = np.empty((G, n), dtype=np.int64)
    cdef long long[:, ::1] sx = snaps_x_arr
    cdef long long[:, ::1] sy = snaps_y_arr
    cdef bitgen_t *rng = _bitgen(gen)
    cdef double t = 0.0, t_next, u, nf = <double> n
    cdef Py_ssize_t g = 0, i, j, k
    cdef long long drawn = 0, jumps_x = 0, jumps_y = 0, violations = 0
    while True:
        t_next = t + (-log1p(-_u(rng)) / nf)
        while g < G and gr[g] < t_next:
            for k in range(n):
                sx[g, k] = ox[k]
                sy[g, k] = oy[k]
            g += 1
        if t_next > horizon:
            break
        t = t_next
        i = <Py_ssize_t> (_u(rng) * nf)
        if i >= n:
            i = n - 1
        j = <Py_ssize_t> (_u(rng) * nf)
        if j >= n:
            j = n - 1
        u = _u(rng)
        drawn += 1
        if r[ox[i]] >= u:
            jumps_x += 1
            if i != j:
                ox[i] -= 1
                ox[j] += 1
        if r[oy[i]] >= u:
            jumps_y += 1
            if i != j:
                oy[i] -= 1
                oy[j] += 1
        if ox[i] > oy[i] or ox[j] > oy[j]:
            violations += 1
    while g < G:
        for k in range(n):
            sx[g, k] = ox[k]
            sy[g, k] = oy[k]
        g += 1
    return snaps_x_arr, snaps_y_arr, violations, drawn, jumps_x, jumps_y


def tagged(occ, i0, j0, rtab, dtab, double horizon, grid, bg_gen, th_gen, record_bg):
    cdef long long[::1] x = np.array(occ, dtype=np.int64)
    cdef double[::1] r = np.ascontiguousarray(rtab, dtype=np.float64)
    cdef double[::1] d = np.ascontiguousarray(dtab, dtype=np.float64)
    cdef double[::1] gr = np.ascontiguousarray(grid, dtype=np.float64)
    _check_table(r.shape[0], _total(x), "rate table")
    _check_table(d.shape[0], _total(x), "tag rate table")
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t G = gr.shape[0]
    i_arr = np.empty(G, dtype=np.int64)
    j_arr = np.empty(G, dtype=np.int64)
    cdef long long[::1] ig = i_arr
    cdef long long[::1] jg = j_arr
    cdef bint rec = bool(record_bg)
    bg_arr = np.empty((G, n), dtype=np.int64) if rec else None
    cdef long long[:, ::1] bs = bg_arr if rec else np.empty((1, 1), dtype=np.int64)
    cdef bitgen_t *bg = _bitgen(bg_gen)
    cdef bitgen_t *th = _bitgen(th_gen)
    cdef Py_ssize_t cur_i = <Py_ssize_t> i0
    cdef Py_ssize_t cur_j = <Py_ssize_t> j0
    cdef double tau = 0.0 if cur_i == cur_j else -1.0
    cdef double nf = <double> n
    cdef double t_bg = -log1p(-_u(bg)) / nf
    cdef double t_th = -log1p(-_u(th))
    cdef double t_next, u
    cdef Py_ssize_t g = 0, i, j, k, kk
    while True:
        t_next = t_bg if t_bg <= t_th else t_th
        while g < G and gr[g] < t_next:
            ig[g] = cur_i
            jg[g] = cur_j
            if rec:
                for kk in range(n):
                    bs[g, kk] = x[kk]
            g += 1
        if t_next > horizon:
            break
        if t_bg <= t_th:
            i = <Py_ssize_t> (_u(bg) * nf)
            if i >= n:
                i = n - 1
            j = <Py_ssize_t> (_u(bg) * nf)
            if j >= n:
                j = n - 1
            u = _u(bg)
            if r[x[i]] >= u and i != j:
                x[i] -= 1
                x[j] += 1
            t_bg += -log1p(-_u(bg)) / nf
        else:
            u = _u(th)
            k = <Py_ssize_t> (_u(th) * nf)
            if k >= n:
                k = n - 1
            if d[x[cur_i]] >= u:
                cur_i = k
            if d[x[cur_j]] >= u:
                cur_j = k
            if cur_i == cur_j and tau < 0.0:
                tau = t_th
            t_th += -log1p(-_u(th))
    while g < G:
        ig[g] = cur_i
        jg[g] = cur_j
        if rec:
            for kk in range(n):
                bs[g, kk] = x[kk]
        g += 1
    return i_arr, j_arr, tau, bg_arr


# ---------------------------------------------------------------------------
# Deterministic numeric kernels


cdef double _psi_weights_c(double[::1] w, Py_ssize_t K, double z) noexcept nogil:
    cdef double value = 1.0, deriv = 0.0, zpow = 1.0, om
    cdef Py_ssize_t k
    if z == 0.0:
        return 0.0
    for k in range(1, K + 1):
        deriv += k * zpow / w[k]
        zpow *= z
        value += zpow / w[k]
    om = 1.0 - z
    value += zpow * z / (w[K] * om)
    deriv += ((K + 1) * zpow * om + zpow * z) / (w[K] * om * om)
    return z * deriv / value


cdef double _psi_inv_c(double[::1] w, Py_ssize_t K, double s) noexcept nogil:
    cdef double eta, hi, lo, tol, mid, fm
    cdef int it
    if s <= 0.0:
        return 0.0
    eta = 0.25
    hi = 1.0 - eta
    while _psi_weights_c(w, K, hi) <= s:
        eta *= 0.5
        hi = 1.0 - eta
    lo = 0.0
    tol = 1e-12 * (1.0 + s)
    mid = 0.5 * (lo + hi)
    for it in range(200):
        mid = 0.5 * (lo + hi)
        fm = _psi_weights_c(w, K, mid)
        if fm - s <= tol and s - fm <= tol:
            return mid
        if fm < s:
            lo = mid
        else:
            hi = mid
    return mid


def psi_inv_weights(w, double s):
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    return _psi_inv_c(wv, wv.shape[0] - 1, s)


cdef double _dissolve_rhs_c(double[::1] w, Py_ssize_t K, double[::1] u,
                            Py_ssize_t L, double rho, double f) noexcept nogil:
    cdef double solid = 0.0
    cdef Py_ssize_t k
    for k in range(L):
        if u[k] > f:
            solid += u[k] - f
    return 1.0 - _psi_inv_c(w, K, rho - solid)


def dissolve_rk4(w, u, double rho, knots, double hmax):
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] kn = np.ascontiguousarray(knots, dtype=np.float64)
    cdef Py_ssize_t K = wv.shape[0] - 1
    cdef Py_ssize_t L = uv.shape[0]
    cdef Py_ssize_t nk = kn.shape[0]
    out_arr = np.empty(nk, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double f = 0.0, t0, t1, length, h, k1, k2, k3, k4
    cdef Py_ssize_t seg, step, nsteps
    out[0] = f
    for seg in range(nk - 1):
        t0 = kn[seg]
        t1 = kn[seg + 1]
        length = t1 - t0
        if length <= 0.0:
            out[seg + 1] = f
            continue
        nsteps = <Py_ssize_t> ceil(length / hmax)
        if nsteps < 1:
            nsteps = 1
        h = length / nsteps
        for step in range(nsteps):
            k1 = _dissolve_rhs_c(wv, K, uv, L, rho, f)
            k2 = _dissolve_rhs_c(wv, K, uv, L, rho, f + 0.5 * h * k1)
            k3 = _dissolve_rhs_c(wv, K, uv, L, rho, f + 0.5 * h * k2)
            k4 = _dissolve_rhs_c(wv, K, uv, L, rho, f + h * k3)
            f = f + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[seg + 1] = f
    return out_arr
