# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: barrier-crossing scan, PHY pair kernel, refresh merge, MSRV.

Bit-compatible with ``pykernels`` (same floating-point operations in the same
order); see that module for the documented semantics.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

NAME = "cython"


def barrier_scan(double[::1] m, double mesh, double[::1] var_step,
                 double[::1] dn, double[::1] up,
                 double[::1] u_dn, double[::1] u_up):
    cdef Py_ssize_t n = var_step.shape[0]
    cdef Py_ssize_t cap = dn.shape[0]
    times_arr = np.empty(cap)
    values_arr = np.empty(cap)
    sides_arr = np.empty(cap, dtype=np.int8)
    cdef double[::1] times = times_arr
    cdef double[::1] values = values_arr
    cdef signed char[::1] sides = sides_arr

    cdef Py_ssize_t d = 0, j = 0
    cdef double sref = m[0]
    cdef double f = 0.0, ycur = 0.0
    cdef double yb, lo, hi, lam, lam_dn, lam_up, sv, p_dn, p_up
    cdef int side, crossed, ev_dn, ev_up
    cdef int capped = 0

    while j < n:
        if d >= cap:
            capped = 1
            break
        yb = m[j + 1] - sref
        lo = -dn[d]
        hi = up[d]
        crossed = 0
        side = 0
        lam = 0.0
        if yb <= lo or yb >= hi:
            lam_dn = 2.0
            lam_up = 2.0
            if yb <= lo:
                lam_dn = (ycur - lo) / (ycur - yb)
            if yb >= hi:
                lam_up = (hi - ycur) / (yb - ycur)
            if lam_dn <= lam_up:
                side = -1
                lam = lam_dn
            else:
                side = 1
                lam = lam_up
            crossed = 1
        elif f == 0.0:
            sv = var_step[j]
            if sv > 0.0:
                p_dn = exp(-2.0 * (ycur - lo) * (yb - lo) / sv)
                p_up = exp(-2.0 * (hi - ycur) * (hi - yb) / sv)
            else:
                p_dn = 0.0
                p_up = 0.0
            ev_dn = u_dn[j] < p_dn
            ev_up = u_up[j] < p_up
            if ev_dn and ev_up:
                side = -1 if p_dn >= p_up else 1
                crossed = 1
            elif ev_dn:
                side = -1
                crossed = 1
            elif ev_up:
                side = 1
                crossed = 1
            if crossed:
                if side == -1:
                    lam = (ycur - lo) / ((ycur - lo) + (yb - lo))
                else:
                    lam = (hi - ycur) / ((hi - ycur) + (hi - yb))
        if crossed:
            f = f + (1.0 - f) * lam
            if f >= 1.0:
                f = 1.0
            times[d] = (j + f) * mesh
            sides[d] = side
            if side == 1:
                sref = sref + hi
            else:
                sref = sref + lo
            values[d] = sref
            ycur = 0.0
            d += 1
            if f == 1.0:
                j += 1
                f = 0.0
                if j <= n:
                    ycur = m[j] - sref
        else:
            j += 1
            f = 0.0
            ycur = yb
    return times_arr[:d], values_arr[:d], sides_arr[:d], bool(capped)


def phy_pair_sum(double[::1] s, double[::1] t, double[::1] xbar,
                 double[::1] ybar, Py_ssize_t kn, double tmax):
    cdef Py_ssize_t ns = s.shape[0]
    cdef Py_ssize_t nt = t.shape[0]
    cdef Py_ssize_t imax = ns - 1 - kn
    cdef Py_ssize_t jmax = nt - 1 - kn
    cdef double acc = 0.0
    cdef Py_ssize_t i, j, jlo = 0
    cdef double xi
    for i in range(imax + 1):
        if s[i + kn] > tmax:
            break
        while jlo <= jmax and t[jlo + kn] <= s[i]:
            jlo += 1
        xi = xbar[i]
        j = jlo
        while j <= jmax and t[j] < s[i + kn] and t[j + kn] <= tmax:
            acc += xi * ybar[j]
            j += 1
    return acc


def phy_pairs(double[::1] s, double[::1] t, double[::1] xbar,
              double[::1] ybar, Py_ssize_t kn, double tmax):
    cdef Py_ssize_t ns = s.shape[0]
    cdef Py_ssize_t nt = t.shape[0]
    cdef Py_ssize_t imax = ns - 1 - kn
    cdef Py_ssize_t jmax = nt - 1 - kn
    cdef Py_ssize_t i, j, jlo, count

    # first pass: count admissible pairs
    count = 0
    jlo = 0
    for i in range(imax + 1):
        if s[i + kn] > tmax:
            break
        while jlo <= jmax and t[jlo + kn] <= s[i]:
            jlo += 1
        j = jlo
        while j <= jmax and t[j] < s[i + kn] and t[j + kn] <= tmax:
            count += 1
            j += 1

    prods_arr = np.empty(count)
    entries_arr = np.empty(count)
    cdef double[::1] prods = prods_arr
    cdef double[::1] entries = entries_arr
    cdef double xi, si_end, tj_end
    cdef Py_ssize_t p = 0
    jlo = 0
    for i in range(imax + 1):
        si_end = s[i + kn]
        if si_end > tmax:
            break
        while jlo <= jmax and t[jlo + kn] <= s[i]:
            jlo += 1
        xi = xbar[i]
        j = jlo
        while j <= jmax and t[j] < si_end and t[j + kn] <= tmax:
            tj_end = t[j + kn]
            prods[p] = xi * ybar[j]
            entries[p] = si_end if si_end >= tj_end else tj_end
            p += 1
            j += 1
    return prods_arr, entries_arr


def refresh_merge(double[::1] s, double[::1] t):
    cdef Py_ssize_t ns = s.shape[0]
    cdef Py_ssize_t nt = t.shape[0]
    cdef Py_ssize_t cap = ns + nt
    r_arr = np.empty(cap)
    sh_arr = np.empty(cap)
    th_arr = np.empty(cap)
    si_arr = np.empty(cap, dtype=np.int64)
    ti_arr = np.empty(cap, dtype=np.int64)
    cdef double[::1] r = r_arr
    cdef double[::1] sh = sh_arr
    cdef double[::1] th = th_arr
    cdef cnp.int64_t[::1] si = si_arr
    cdef cnp.int64_t[::1] ti = ti_arr

    sh[0] = s[0]
    th[0] = t[0]
    si[0] = 0
    ti[0] = 0
    r[0] = s[0] if s[0] >= t[0] else t[0]
    cdef Py_ssize_t k = 1, i = 0, j = 0
    cdef double rp
    while True:
        rp = r[k - 1]
        while i < ns and s[i] <= rp:
            i += 1
        while j < nt and t[j] <= rp:
            j += 1
        if i >= ns or j >= nt:
            break
        sh[k] = s[i]
        th[k] = t[j]
        si[k] = i
        ti[k] = j
        r[k] = s[i] if s[i] >= t[j] else t[j]
        k += 1
    return (r_arr[:k].copy(), sh_arr[:k].copy(), th_arr[:k].copy(),
            si_arr[:k].copy(), ti_arr[:k].copy())


def msrv_sum(double[::1] x, double[::1] alphas):
    cdef Py_ssize_t nx = x.shape[0]
    cdef Py_ssize_t m = alphas.shape[0]
    cdef double acc = 0.0, inner, d
    cdef Py_ssize_t i, j
    for i in range(1, m + 1):
        if i >= nx:
            break
        inner = 0.0
        for j in range(i, nx):
            d = x[j] - x[j - i]
            inner += d * d
        acc += (alphas[i - 1] / i) * inner
    return acc
