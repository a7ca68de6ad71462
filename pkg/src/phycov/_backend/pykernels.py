"""Pure-Python/NumPy kernel implementations.

These are the reference semantics for the compiled core in ``_ckernels.pyx``:
both backends execute the same floating-point operations in the same order, so
their outputs are bit-identical and interchangeable. This module is the import
fallback when the extension is unavailable; it is much slower on the scan and
pair kernels (see ``benchmarks/bench_backends.py``).
"""

from math import exp

import numpy as np

NAME = "python"


def barrier_scan(m, mesh, var_step, dn, up, u_dn, u_up):
    """Sequential two-sided barrier-crossing scan along a discretized martingale.

    Starting from ``m[0]``, repeatedly finds the first time the path moves
    ``dn[d]`` below or ``up[d]`` above the level at the previous crossing.
    Crossings are detected on grid steps by endpoint sign change (crossing time
    placed by linear interpolation) and, inside full steps, by a Brownian-bridge
    excursion test using one pre-drawn uniform per step and side. The recorded
    level after a crossing is exactly the barrier, so increments between
    crossings are exactly two-valued.

    Parameters
    ----------
    m : ndarray
        Martingale values on the fine grid, length ``n_steps + 1``.
    mesh : float
        Grid step length.
    var_step : ndarray
        Conditional variance of one full step (spot variance times mesh),
        length ``n_steps``.
    dn, up : ndarray
        Positive barrier magnitudes per duration (already scaled); their
        common length caps the number of crossings.
    u_dn, u_up : ndarray
        Uniform(0,1) draws, one per grid step and side, consumed only by the
        bridge test of full steps.

    Returns
    -------
    times, values, sides, capped
        Crossing times, post-crossing martingale levels, exit sides (-1 down,
        +1 up), and whether the barrier arrays were exhausted before the grid.
    """
    n = var_step.shape[0]
    cap = dn.shape[0]
    times = np.empty(cap)
    values = np.empty(cap)
    sides = np.empty(cap, dtype=np.int8)

    d = 0
    sref = float(m[0])
    j = 0
    f = 0.0
    ycur = 0.0
    capped = False
    while j < n:
        if d >= cap:
            capped = True
            break
        yb = float(m[j + 1]) - sref
        lo = -float(dn[d])
        hi = float(up[d])
        crossed = False
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
            crossed = True
        elif f == 0.0:
            sv = float(var_step[j])
            if sv > 0.0:
                p_dn = exp(-2.0 * (ycur - lo) * (yb - lo) / sv)
                p_up = exp(-2.0 * (hi - ycur) * (hi - yb) / sv)
            else:
                p_dn = 0.0
                p_up = 0.0
            ev_dn = float(u_dn[j]) < p_dn
            ev_up = float(u_up[j]) < p_up
            if ev_dn and ev_up:
                side = -1 if p_dn >= p_up else 1
                crossed = True
            elif ev_dn:
                side = -1
                crossed = True
            elif ev_up:
                side = 1
                crossed = True
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
                    ycur = float(m[j]) - sref
        else:
            j += 1
            f = 0.0
            ycur = yb
    return times[:d], values[:d], sides[:d], capped


def phy_pair_sum(s, t, xbar, ybar, kn, tmax):
    """Kernel sum of pre-averaged products over overlapping windows.

    Accumulates ``xbar[i] * ybar[j]`` in (i, j)-lexicographic order over all
    pairs with ``[s[i], s[i+kn])`` and ``[t[j], t[j+kn])`` overlapping and
    ``max(s[i+kn], t[j+kn]) <= tmax``. Returns the raw (unnormalized) sum.
    """
    ns = s.shape[0]
    nt = t.shape[0]
    imax = ns - 1 - kn
    jmax = nt - 1 - kn
    acc = 0.0
    jlo = 0
    for i in range(imax + 1):
        if s[i + kn] > tmax:
            break
        while jlo <= jmax and t[jlo + kn] <= s[i]:
            jlo += 1
        xi = float(xbar[i])
        j = jlo
        while j <= jmax and t[j] < s[i + kn] and t[j + kn] <= tmax:
            acc += xi * float(ybar[j])
            j += 1
    return acc


def phy_pairs(s, t, xbar, ybar, kn, tmax):
    """Per-pair products and their entry times, in (i, j)-lexicographic order.

    Entry time of pair (i, j) is ``max(s[i+kn], t[j+kn])``, the time at which
    the pair starts contributing to the estimator path.
    """
    ns = s.shape[0]
    nt = t.shape[0]
    imax = ns - 1 - kn
    jmax = nt - 1 - kn
    prods = []
    entries = []
    jlo = 0
    for i in range(imax + 1):
        si_end = float(s[i + kn])
        if si_end > tmax:
            break
        while jlo <= jmax and t[jlo + kn] <= s[i]:
            jlo += 1
        xi = float(xbar[i])
        j = jlo
        while j <= jmax and t[j] < si_end and t[j + kn] <= tmax:
            tj_end = float(t[j + kn])
            prods.append(xi * float(ybar[j]))
            entries.append(si_end if si_end >= tj_end else tj_end)
            j += 1
    return np.asarray(prods, dtype=np.float64), np.asarray(entries, dtype=np.float64)


def refresh_merge(s, t):
    """Refresh times and next-tick interpolated epochs of two tick sequences.

    Returns ``(r, s_hat, t_hat, s_idx, t_idx)`` where ``s_hat[k]`` is the first
    s-tick strictly after ``r[k-1]`` (``s_hat[0] = s[0]``), ``r[k] = max(s_hat[k],
    t_hat[k])`` and ``s_idx``/``t_idx`` locate the hat epochs in the inputs.
    """
    ns = s.shape[0]
    nt = t.shape[0]
    cap = ns + nt
    r = np.empty(cap)
    sh = np.empty(cap)
    th = np.empty(cap)
    si = np.empty(cap, dtype=np.int64)
    ti = np.empty(cap, dtype=np.int64)
    sh[0] = s[0]
    th[0] = t[0]
    si[0] = 0
    ti[0] = 0
    r[0] = s[0] if s[0] >= t[0] else t[0]
    k = 1
    i = 0
    j = 0
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
    return r[:k].copy(), sh[:k].copy(), th[:k].copy(), si[:k].copy(), ti[:k].copy()


def msrv_sum(x, alphas):
    """Multiscale weighted sum of squared lag-i increments.

    ``sum_i (alphas[i-1]/i) * sum_{j>=i} (x[j]-x[j-i])^2`` with the inner sum
    accumulated sequentially (cumsum) and scales combined in ascending order.
    """
    acc = 0.0
    nx = x.shape[0]
    m = alphas.shape[0]
    for i in range(1, m + 1):
        if i >= nx:
            break
        d = x[i:] - x[:-i]
        inner = float(np.cumsum(d * d)[-1])
        acc += (float(alphas[i - 1]) / i) * inner
    return acc
