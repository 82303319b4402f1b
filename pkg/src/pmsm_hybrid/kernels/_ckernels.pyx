# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, fmod, INFINITY, NAN, isnan, isfinite

cnp.import_array()

cdef double DEG = 3.141592653589793 / 180.0


cdef inline double _mirror(double a) nogil:
    a = fmod(a, 360.0)
    if a < 0.0:
        a = a + 360.0
    if a > 180.0:
        a = 360.0 - a
    return a


cdef inline double _cell(const double[::1] axis, double x, Py_ssize_t* i0, Py_ssize_t* i1) nogil:
    """Clamp x to the axis, return the fractional position in the lower cell."""
    cdef Py_ssize_t n = axis.shape[0]
    cdef Py_ssize_t i = 0
    if x < axis[0]:
        x = axis[0]
    if x > axis[n - 1]:
        x = axis[n - 1]
    if n == 1:
        i0[0] = 0
        i1[0] = 0
        return 0.0
    while i < n - 2 and x >= axis[i + 1]:
        i += 1
    i0[0] = i
    i1[0] = i + 1
    return (x - axis[i]) / (axis[i + 1] - axis[i])


cdef inline double _blend(const double[:, :, ::1] v, Py_ssize_t m, Py_ssize_t i0, Py_ssize_t i1,
                          double t, Py_ssize_t j0, Py_ssize_t j1, double u) nogil:
    cdef double row0 = (1.0 - u) * v[m, i0, j0] + u * v[m, i0, j1]
    cdef double row1 = (1.0 - u) * v[m, i1, j0] + u * v[m, i1, j1]
    return (1.0 - t) * row0 + t * row1


cdef inline bint _feasible(double cur, double sa, double ca, double psi_d, double psi_q,
                           double r, double omega, double u_lim) nogil:
    cdef double i_d = -cur * sa
    cdef double i_q = cur * ca
    cdef double u_d = r * i_d - omega * psi_q
    cdef double u_q = r * i_q + omega * psi_d
    return u_d * u_d + u_q * u_q <= u_lim * u_lim


def bilinear(const double[::1] amps, const double[::1] angles, const double[:, :, ::1] values,
             current, alpha):
    cdef const double[::1] cur = np.ascontiguousarray(current, dtype=np.float64).ravel()
    cdef const double[::1] alp = np.ascontiguousarray(alpha, dtype=np.float64).ravel()
    cdef Py_ssize_t n = cur.shape[0], nm = values.shape[0], k, m, i0, i1, j0, j1
    cdef double t, u
    out = np.empty((nm, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for k in range(n):
            t = _cell(amps, cur[k], &i0, &i1)
            u = _cell(angles, _mirror(alp[k]), &j0, &j1)
            for m in range(nm):
                o[m, k] = _blend(values, m, i0, i1, t, j0, j1, u)
    return out.reshape((nm,) + np.shape(current))


def best_feasible(const double[::1] torque, const double[::1] psi_d, const double[::1] psi_q,
                  const double[::1] current, const double[::1] sin_a, const double[::1] cos_a,
                  double resistance, double omega, double u_lim):
    cdef Py_ssize_t k, best = -1
    cdef double bt = -INFINITY
    with nogil:
        for k in range(torque.shape[0]):
            if _feasible(current[k], sin_a[k], cos_a[k], psi_d[k], psi_q[k], resistance, omega, u_lim):
                if best < 0 or torque[k] > bt:
                    best = k
                    bt = torque[k]
    return best


def limit_search(const double[::1] amps, const double[::1] angles, const double[:, :, ::1] values,
                 cand_current, cand_alpha, omegas, double resistance, double u_lim, double i_max,
                 double step_current, double step_alpha, int levels, int npts):
    cdef const double[::1] cc = np.ascontiguousarray(cand_current, dtype=np.float64)
    cdef const double[::1] ca = np.ascontiguousarray(cand_alpha, dtype=np.float64)
    cdef const double[::1] om = np.ascontiguousarray(omegas, dtype=np.float64)
    cdef Py_ssize_t nc = cc.shape[0], ns = om.shape[0]
    base_arr = bilinear(amps, angles, values, np.asarray(cc), np.asarray(ca))
    cdef const double[:, ::1] base = base_arr
    cdef const double[::1] sin_c = np.sin(np.asarray(ca) * DEG)
    cdef const double[::1] cos_c = np.cos(np.asarray(ca) * DEG)
    out_i = np.full(ns, np.nan)
    out_a = np.full(ns, np.nan)
    out_t = np.full(ns, np.nan)
    found = np.zeros(ns, dtype=bool)
    cdef double[::1] oi = out_i, oa = out_a, ot = out_t
    cdef cnp.uint8_t[::1] of = found.view(np.uint8)
    cdef Py_ssize_t s, k, best, p, q, lev, i0, i1, j0, j1
    cdef double omega, bi, ba, bt, di, da, qi, qa, t, u, tq, pd, pq, li, la, off
    cdef double i_lo = amps[0], i_hi = min(amps[amps.shape[0] - 1], i_max)
    cdef double a_lo = angles[0], a_hi = angles[angles.shape[0] - 1]
    cdef double lbest_t, lbest_i, lbest_a
    cdef bint lfound
    with nogil:
        for s in range(ns):
            omega = om[s]
            best = -1
            bt = -INFINITY
            for k in range(nc):
                if _feasible(cc[k], sin_c[k], cos_c[k], base[1, k], base[2, k], resistance, omega, u_lim):
                    if best < 0 or base[0, k] > bt:
                        best = k
                        bt = base[0, k]
            if best < 0:
                continue
            bi = cc[best]
            ba = ca[best]
            bt = base[0, best]
            di = step_current
            da = step_alpha
            for lev in range(levels):
                lfound = False
                lbest_t = -INFINITY
                lbest_i = 0.0
                lbest_a = 0.0
                for p in range(npts):
                    off = 2.0 * p / (npts - 1) - 1.0
                    li = bi + di * off
                    if li < i_lo:
                        li = i_lo
                    if li > i_hi:
                        li = i_hi
                    for q in range(npts):
                        off = 2.0 * q / (npts - 1) - 1.0
                        la = ba + da * off
                        if la < a_lo:
                            la = a_lo
                        if la > a_hi:
                            la = a_hi
                        t = _cell(amps, li, &i0, &i1)
                        u = _cell(angles, _mirror(la), &j0, &j1)
                        tq = _blend(values, 0, i0, i1, t, j0, j1, u)
                        pd = _blend(values, 1, i0, i1, t, j0, j1, u)
                        pq = _blend(values, 2, i0, i1, t, j0, j1, u)
                        if _feasible(li, sin(la * DEG), cos(la * DEG), pd, pq, resistance, omega, u_lim):
                            if not lfound or tq > lbest_t:
                                lfound = True
                                lbest_t = tq
                                lbest_i = li
                                lbest_a = la
                if lfound and lbest_t > bt:
                    bi = lbest_i
                    ba = lbest_a
                    bt = lbest_t
                di = di / ((npts - 1) / 2.0)
                da = da / ((npts - 1) / 2.0)
            oi[s] = bi
            oa[s] = ba
            ot[s] = bt
            of[s] = 1
    return out_i, out_a, out_t, found


cdef struct RayResult:
    double loss
    double current
    double p_cu
    double p_hyst
    double p_eddy


cdef inline RayResult _try_alpha(const double[::1] amps, const double[::1] angles,
                                 const double[:, :, ::1] v, double alpha, double demand,
                                 double omega, double f_e, double r, double u_lim,
                                 double f_ref) nogil:
    cdef RayResult res
    cdef Py_ssize_t n_i = amps.shape[0], k, kk, j0, j1, k1
    cdef double u, lo, hi, t, cur, r0, r1, psi_d, psi_q, e_eddy, e_hyst, rad
    res.loss = INFINITY
    res.current = 0.0
    res.p_cu = 0.0
    res.p_hyst = 0.0
    res.p_eddy = 0.0
    u = _cell(angles, _mirror(alpha), &j0, &j1)
    kk = -1
    for k in range(n_i - 1):
        lo = (1.0 - u) * v[0, k, j0] + u * v[0, k, j1]
        hi = (1.0 - u) * v[0, k + 1, j0] + u * v[0, k + 1, j1]
        if (lo <= demand and demand <= hi) or (hi <= demand and demand <= lo):
            kk = k
            break
    if kk < 0:
        return res
    k1 = kk + 1
    if hi == lo:
        t = 0.0
    else:
        t = (demand - lo) / (hi - lo)
    cur = amps[kk] + t * (amps[k1] - amps[kk])
    r0 = (1.0 - u) * v[1, kk, j0] + u * v[1, kk, j1]
    r1 = (1.0 - u) * v[1, k1, j0] + u * v[1, k1, j1]
    psi_d = (1.0 - t) * r0 + t * r1
    r0 = (1.0 - u) * v[2, kk, j0] + u * v[2, kk, j1]
    r1 = (1.0 - u) * v[2, k1, j0] + u * v[2, k1, j1]
    psi_q = (1.0 - t) * r0 + t * r1
    r0 = (1.0 - u) * v[3, kk, j0] + u * v[3, kk, j1]
    r1 = (1.0 - u) * v[3, k1, j0] + u * v[3, k1, j1]
    e_eddy = (1.0 - t) * r0 + t * r1
    r0 = (1.0 - u) * v[4, kk, j0] + u * v[4, kk, j1]
    r1 = (1.0 - u) * v[4, k1, j0] + u * v[4, k1, j1]
    e_hyst = (1.0 - t) * r0 + t * r1
    rad = alpha * DEG
    if not _feasible(cur, sin(rad), cos(rad), psi_d, psi_q, r, omega, u_lim):
        return res
    res.current = cur
    res.p_cu = 1.5 * r * cur * cur
    res.p_hyst = e_hyst * f_e
    res.p_eddy = e_eddy * f_e * f_e / f_ref
    res.loss = res.p_cu + res.p_hyst + res.p_eddy
    return res


def min_loss_search(const double[::1] amps, const double[::1] angles, const double[:, :, ::1] values,
                    alpha_candidates, demand, omega, f_e, double resistance, double u_lim,
                    double f_ref, double alpha_step, int levels, int npts, chunk=None):
    cdef const double[::1] cand = np.ascontiguousarray(alpha_candidates, dtype=np.float64)
    cdef const double[::1] dem = np.ascontiguousarray(demand, dtype=np.float64)
    cdef const double[::1] om = np.ascontiguousarray(omega, dtype=np.float64)
    cdef const double[::1] fe = np.ascontiguousarray(f_e, dtype=np.float64)
    cdef Py_ssize_t nc = dem.shape[0], na = cand.shape[0], c, k, lev, p
    out = np.full((5, nc), np.nan)
    found = np.zeros(nc, dtype=bool)
    cdef double[:, ::1] o = out
    cdef cnp.uint8_t[::1] of = found.view(np.uint8)
    cdef RayResult best, trial, lbest
    cdef double best_alpha, lbest_alpha, step, la
    cdef double a_lo = angles[0], a_hi = angles[angles.shape[0] - 1]
    with nogil:
        for c in range(nc):
            best.loss = INFINITY
            best_alpha = cand[0]
            for k in range(na):
                trial = _try_alpha(amps, angles, values, cand[k], dem[c], om[c], fe[c],
                                   resistance, u_lim, f_ref)
                if trial.loss < best.loss:
                    best = trial
                    best_alpha = cand[k]
            if not isfinite(best.loss):
                continue
            step = alpha_step
            for lev in range(levels):
                lbest.loss = INFINITY
                lbest_alpha = best_alpha
                for p in range(npts):
                    la = best_alpha + step * (2.0 * p / (npts - 1) - 1.0)
                    if la < a_lo:
                        la = a_lo
                    if la > a_hi:
                        la = a_hi
                    trial = _try_alpha(amps, angles, values, la, dem[c], om[c], fe[c],
                                       resistance, u_lim, f_ref)
                    if trial.loss < lbest.loss:
                        lbest = trial
                        lbest_alpha = la
                if lbest.loss < best.loss:
                    best = lbest
                    best_alpha = lbest_alpha
                step = step / ((npts - 1) / 2.0)
            o[0, c] = best.current
            o[1, c] = best_alpha
            o[2, c] = best.p_cu
            o[3, c] = best.p_hyst
            o[4, c] = best.p_eddy
            of[c] = 1
    return out[0], out[1], out[2], out[3], out[4], found


cdef inline double _uq(const double[::1] amps, const double[::1] angles, const double[:, :, ::1] v,
                       double cur, double alpha, double cos_a, double omega, double r) nogil:
    cdef Py_ssize_t i0, i1, j0, j1
    cdef double t = _cell(amps, cur, &i0, &i1)
    cdef double u = _cell(angles, _mirror(alpha), &j0, &j1)
    return r * cur * cos_a + omega * _blend(v, 0, i0, i1, t, j0, j1, u)


cdef inline double _uq_root(const double[::1] amps, const double[::1] angles, const double[:, :, ::1] v,
                            double alpha, double omega, double r, double i_max, int iters) nogil:
    cdef double cos_a = cos(alpha * DEG)
    cdef double lo = 0.0, hi = i_max, mid
    cdef double f0 = _uq(amps, angles, v, 0.0, alpha, cos_a, omega, r)
    cdef double f1 = _uq(amps, angles, v, i_max, alpha, cos_a, omega, r)
    cdef int it
    if not (f0 == 0.0 or ((f0 > 0.0) != (f1 > 0.0))):
        return NAN
    for it in range(iters):
        mid = 0.5 * (lo + hi)
        if (f0 > 0.0) != (_uq(amps, angles, v, mid, alpha, cos_a, omega, r) > 0.0):
            hi = mid
        else:
            lo = mid
    if f0 == 0.0:
        return 0.0
    return 0.5 * (lo + hi)


cdef inline double _h(const double[::1] amps, const double[::1] angles, const double[:, :, ::1] v,
                      double alpha, double omega, double r, double i_max, int iters) nogil:
    cdef Py_ssize_t i0, i1, j0, j1
    cdef double cur = _uq_root(amps, angles, v, alpha, omega, r, i_max, iters)
    if isnan(cur):
        return NAN
    cdef double t = _cell(amps, cur, &i0, &i1)
    cdef double u = _cell(angles, _mirror(alpha), &j0, &j1)
    cdef double psi_q = _blend(v, 1, i0, i1, t, j0, j1, u)
    return -r * cur * sin(alpha * DEG) - omega * psi_q


def short_circuit(const double[::1] amps, const double[::1] angles, const double[:, :, ::1] values,
                  omegas, double resistance, double i_max, int n_scan, int iters_i, int iters_a):
    cdef const double[::1] om = np.ascontiguousarray(omegas, dtype=np.float64)
    cdef Py_ssize_t ns = om.shape[0], s, q, bracket
    out_i = np.full(ns, np.nan)
    out_a = np.full(ns, np.nan)
    cdef double[::1] oi = out_i, oa = out_a
    scan_arr = 90.0 + 90.0 * np.arange(n_scan) / (n_scan - 1)
    cdef const double[::1] scan = scan_arr
    cdef double[::1] h = np.empty(n_scan)
    cdef double lo, hi, f_lo, mid, f_mid, a_sc, omega
    cdef bint exact
    cdef int it
    with nogil:
        for s in range(ns):
            omega = om[s]
            if omega == 0.0:
                oi[s] = 0.0
                oa[s] = 90.0
                continue
            for q in range(n_scan):
                h[q] = _h(amps, angles, values, scan[q], omega, resistance, i_max, iters_i)
            bracket = -1
            for q in range(n_scan - 1):
                if h[q] == 0.0 or (isfinite(h[q]) and isfinite(h[q + 1]) and ((h[q] > 0.0) != (h[q + 1] > 0.0))):
                    bracket = q
                    break
            if bracket < 0:
                continue
            lo = scan[bracket]
            hi = scan[bracket + 1]
            f_lo = h[bracket]
            exact = f_lo == 0.0
            if not exact:
                for it in range(iters_a):
                    mid = 0.5 * (lo + hi)
                    f_mid = _h(amps, angles, values, mid, omega, resistance, i_max, iters_i)
                    if isnan(f_mid) or ((f_lo > 0.0) != (f_mid > 0.0)):
                        hi = mid
                    else:
                        lo = mid
                        f_lo = f_mid
            if exact:
                a_sc = lo
            else:
                a_sc = 0.5 * (lo + hi)
            oa[s] = a_sc
            oi[s] = _uq_root(amps, angles, values, a_sc, omega, resistance, i_max, iters_i)
    return out_i, out_a
