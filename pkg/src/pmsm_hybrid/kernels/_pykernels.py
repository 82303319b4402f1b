"""Pure numpy kernels; reference semantics for the compiled backend.

Every function here has a twin in ``_ckernels.pyx`` that performs the same
floating-point operations in the same order.

Map tables are ``values[m, i, j]`` on an amplitude axis ``amps`` (ascending,
starting at zero current) and an angle axis ``angles`` (ascending, degrees,
within [0, 180]). Queries are mirrored about 180 degrees and clamped to the
lattice hull.
"""

from __future__ import annotations

import numpy as np

DEG = np.pi / 180.0


def _mirror(alpha):
    a = np.mod(alpha, 360.0)
    return np.where(a > 180.0, 360.0 - a, a)


def _cells(axis, x):
    """Clamped query, lower cell index and fractional position along ``axis``."""
    n = axis.shape[0]
    x = np.minimum(np.maximum(x, axis[0]), axis[n - 1])
    if n == 1:
        idx = np.zeros(np.shape(x), dtype=np.intp)
        return x, idx, idx, np.zeros(np.shape(x))
    idx = np.searchsorted(axis, x, side="right") - 1
    idx = np.clip(idx, 0, n - 2)
    frac = (x - axis[idx]) / (axis[idx + 1] - axis[idx])
    return x, idx, idx + 1, frac


def _blend(values, i0, i1, t, j0, j1, u):
    """values: (m, nI, na) -> (m, ...) using the shared bilinear formula."""
    row0 = (1.0 - u) * values[:, i0, j0] + u * values[:, i0, j1]
    row1 = (1.0 - u) * values[:, i1, j0] + u * values[:, i1, j1]
    return (1.0 - t) * row0 + t * row1


def bilinear(amps, angles, values, current, alpha):
    """Evaluate every map at the query points; returns (m, n)."""
    current = np.asarray(current, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    _, i0, i1, t = _cells(amps, current)
    _, j0, j1, u = _cells(angles, _mirror(alpha))
    return _blend(values, i0, i1, t, j0, j1, u)


def _feasible(current, sin_a, cos_a, psi_d, psi_q, resistance, omega, u_lim):
    i_d = -current * sin_a
    i_q = current * cos_a
    u_d = resistance * i_d - omega * psi_q
    u_q = resistance * i_q + omega * psi_d
    return u_d * u_d + u_q * u_q <= u_lim * u_lim


def best_feasible(torque, psi_d, psi_q, current, sin_a, cos_a, resistance, omega, u_lim):
    """Index of the maximal-torque feasible candidate (first on ties), or -1."""
    ok = _feasible(current, sin_a, cos_a, psi_d, psi_q, resistance, omega, u_lim)
    if not ok.any():
        return -1
    return int(np.argmax(np.where(ok, torque, -np.inf)))


def limit_search(amps, angles, values, cand_current, cand_alpha, omegas, resistance, u_lim, i_max,
                 step_current, step_alpha, levels, npts):
    """Maximal feasible mean torque per speed.

    ``values`` holds (torque, psi_d, psi_q). Coarse candidates are searched
    first, then ``levels`` local lattices of ``npts x npts`` points, each
    spanning +-1 step around the incumbent and shrinking the step by
    ``(npts - 1) / 2``. Currents never exceed ``i_max``. Returns (current, alpha, torque, found) per speed.
    """
    cand_current = np.ascontiguousarray(cand_current, dtype=np.float64)
    cand_alpha = np.ascontiguousarray(cand_alpha, dtype=np.float64)
    base = bilinear(amps, angles, values, cand_current, cand_alpha)
    sin_c = np.sin(cand_alpha * DEG)
    cos_c = np.cos(cand_alpha * DEG)
    n = len(omegas)
    out_i = np.full(n, np.nan)
    out_a = np.full(n, np.nan)
    out_t = np.full(n, np.nan)
    found = np.zeros(n, dtype=bool)
    offsets = 2.0 * np.arange(npts) / (npts - 1) - 1.0
    i_lo, i_hi = amps[0], min(amps[-1], i_max)
    a_lo, a_hi = angles[0], angles[-1]
    for s, omega in enumerate(omegas):
        k = best_feasible(base[0], base[1], base[2], cand_current, sin_c, cos_c, resistance, omega, u_lim)
        if k < 0:
            continue
        bi, ba, bt = cand_current[k], cand_alpha[k], base[0, k]
        di, da = step_current, step_alpha
        for _ in range(levels):
            li = np.minimum(np.maximum(bi + di * offsets, i_lo), i_hi)
            la = np.minimum(np.maximum(ba + da * offsets, a_lo), a_hi)
            qi = np.repeat(li, npts)
            qa = np.tile(la, npts)
            v = bilinear(amps, angles, values, qi, qa)
            k = best_feasible(v[0], v[1], v[2], qi, np.sin(qa * DEG), np.cos(qa * DEG),
                              resistance, omega, u_lim)
            if k >= 0 and v[0, k] > bt:
                bi, ba, bt = qi[k], qa[k], v[0, k]
            di = di / ((npts - 1) / 2.0)
            da = da / ((npts - 1) / 2.0)
        out_i[s], out_a[s], out_t[s], found[s] = bi, ba, bt, True
    return out_i, out_a, out_t, found


def _try_alphas(amps, angles, values, alpha, demand, omega, f_e, resistance, u_lim, f_ref):
    """Loss of the cheapest way to deliver ``demand`` along each alpha ray.

    alpha: (c, m) per cell; demand/omega/f_e: (c,). ``values`` holds
    (torque, psi_d, psi_q, e_eddy, e_hyst). Returns (loss, current, p_cu,
    p_hyst, p_eddy) each (c, m); loss is +inf where infeasible.
    """
    n_i = amps.shape[0]
    _, j0, j1, u = _cells(angles, _mirror(alpha))
    # node values along the ray: (maps, c, m, nI)
    rows = (1.0 - u)[None, :, :, None] * values[:, :, j0].transpose(0, 2, 3, 1) \
        + u[None, :, :, None] * values[:, :, j1].transpose(0, 2, 3, 1)
    tau = rows[0]
    d = demand[:, None, None]
    lo, hi = tau[..., :-1], tau[..., 1:]
    hit = ((lo <= d) & (d <= hi)) | ((hi <= d) & (d <= lo))
    any_hit = hit.any(axis=-1)
    k = np.argmax(hit, axis=-1)
    lo_k = np.take_along_axis(lo, k[..., None], -1)[..., 0]
    hi_k = np.take_along_axis(hi, k[..., None], -1)[..., 0]
    same = hi_k == lo_k
    t = np.where(same, 0.0, (demand[:, None] - lo_k) / np.where(same, 1.0, hi_k - lo_k))
    current = amps[k] + t * (amps[np.minimum(k + 1, n_i - 1)] - amps[k])

    def at(m):
        r0 = np.take_along_axis(rows[m], k[..., None], -1)[..., 0]
        r1 = np.take_along_axis(rows[m], np.minimum(k + 1, n_i - 1)[..., None], -1)[..., 0]
        return (1.0 - t) * r0 + t * r1

    psi_d, psi_q, e_eddy, e_hyst = at(1), at(2), at(3), at(4)
    rad = alpha * DEG
    ok = any_hit & _feasible(current, np.sin(rad), np.cos(rad), psi_d, psi_q, resistance,
                             omega[:, None], u_lim)
    p_cu = 1.5 * resistance * current * current
    p_hyst = e_hyst * f_e[:, None]
    p_eddy = e_eddy * f_e[:, None] * f_e[:, None] / f_ref
    loss = p_cu + p_hyst + p_eddy
    loss = np.where(ok, loss, np.inf)
    return loss, current, p_cu, p_hyst, p_eddy


def min_loss_search(amps, angles, values, alpha_candidates, demand, omega, f_e, resistance, u_lim,
                    f_ref, alpha_step, levels, npts, chunk=256):
    """Loss-minimal feasible operating point delivering each demanded torque.

    Candidate rays are tried first, then ``levels`` local refinements of
    ``npts`` angles spanning +-``alpha_step`` around the best ray, the step
    shrinking by ``(npts - 1) / 2`` each time.
    Returns arrays per cell: current, alpha, p_cu, p_hyst, p_eddy, found.
    """
    demand = np.asarray(demand, dtype=np.float64)
    parts = []
    for s in range(0, max(demand.shape[0], 1), chunk):
        sl = slice(s, s + chunk)
        parts.append(_min_loss_block(amps, angles, values, alpha_candidates, demand[sl],
                                     np.asarray(omega, dtype=np.float64)[sl],
                                     np.asarray(f_e, dtype=np.float64)[sl], resistance, u_lim,
                                     f_ref, alpha_step, levels, npts))
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(6))


def _min_loss_block(amps, angles, values, alpha_candidates, demand, omega, f_e, resistance, u_lim,
                    f_ref, alpha_step, levels, npts):
    demand = np.asarray(demand, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    f_e = np.asarray(f_e, dtype=np.float64)
    cand = np.asarray(alpha_candidates, dtype=np.float64)
    c = demand.shape[0]
    alpha = np.broadcast_to(cand, (c, cand.shape[0]))
    res = _try_alphas(amps, angles, values, alpha, demand, omega, f_e, resistance, u_lim, f_ref)
    k = np.argmin(res[0], axis=1)
    rows = np.arange(c)
    best = [r[rows, k] for r in res]
    best_alpha = alpha[rows, k]
    found = np.isfinite(best[0])
    offsets = 2.0 * np.arange(npts) / (npts - 1) - 1.0
    a_lo, a_hi = angles[0], angles[-1]
    step = alpha_step
    for _ in range(levels):
        la = np.minimum(np.maximum(best_alpha[:, None] + step * offsets[None, :], a_lo), a_hi)
        r = _try_alphas(amps, angles, values, la, demand, omega, f_e, resistance, u_lim, f_ref)
        k = np.argmin(r[0], axis=1)
        cand_loss = r[0][rows, k]
        better = found & (cand_loss < best[0])
        for b, rr in zip(best, r):
            b[better] = rr[rows, k][better]
        best_alpha = np.where(better, la[rows, k], best_alpha)
        step = step / ((npts - 1) / 2.0)
    nan = np.where(found, 0.0, np.nan)
    return (best[1] + nan, best_alpha + nan, best[2] + nan, best[3] + nan, best[4] + nan, found)


def _uq_root(amps, angles, values, alpha, omega, resistance, i_max, iters):
    """Bisection on I for u_q(I, alpha) = 0; NaN where no sign change in [0, i_max]."""
    cos_a = np.cos(alpha * DEG)

    def u_q(cur):
        psi_d = bilinear(amps, angles, values[0:1], cur, alpha)[0]
        return resistance * cur * cos_a + omega * psi_d

    lo = np.zeros_like(alpha)
    hi = np.full_like(alpha, i_max)
    f0 = u_q(lo)
    f1 = u_q(hi)
    valid = (f0 == 0.0) | ((f0 > 0.0) != (f1 > 0.0))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        left = (f0 > 0.0) != (u_q(mid) > 0.0)
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
    root = np.where(f0 == 0.0, 0.0, 0.5 * (lo + hi))
    return np.where(valid, root, np.nan)


def _h(amps, angles, values, alpha, omega, resistance, i_max, iters):
    """u_d along the u_q = 0 locus; NaN where that locus leaves the hull."""
    cur = _uq_root(amps, angles, values, alpha, omega, resistance, i_max, iters)
    psi_q = bilinear(amps, angles, values[1:2], np.nan_to_num(cur), alpha)[0]
    h = -resistance * cur * np.sin(alpha * DEG) - omega * psi_q
    return np.where(np.isnan(cur), np.nan, h)


def short_circuit(amps, angles, values, omegas, resistance, i_max, n_scan, iters_i, iters_a):
    """Steady short-circuit operating point (u_d = u_q = 0) per speed.

    ``values`` holds (psi_d, psi_q). Alpha is scanned over [90, 180] for the
    first sign change of u_d along the u_q = 0 locus, then bisected.
    Returns (current, alpha) per speed, NaN where no root lies in the hull.
    """
    omegas = np.asarray(omegas, dtype=np.float64)
    ns = omegas.shape[0]
    rows = np.arange(ns)
    scan = 90.0 + 90.0 * np.arange(n_scan) / (n_scan - 1)
    a2 = np.broadcast_to(scan, (ns, n_scan)).copy()
    h = _h(amps, angles, values, a2, omegas[:, None], resistance, i_max, iters_i)
    h0, h1 = h[:, :-1], h[:, 1:]
    cond = (h0 == 0.0) | (np.isfinite(h0) & np.isfinite(h1) & ((h0 > 0.0) != (h1 > 0.0)))
    has = cond.any(axis=1) & (omegas != 0.0)
    q = np.argmax(cond, axis=1)
    lo = scan[q]
    hi = scan[q + 1]
    f_lo = h[rows, q]
    exact = f_lo == 0.0
    for _ in range(iters_a):
        mid = 0.5 * (lo + hi)
        f_mid = _h(amps, angles, values, mid, omegas, resistance, i_max, iters_i)
        left = np.isnan(f_mid) | ((f_lo > 0.0) != (f_mid > 0.0))
        hi = np.where(exact, hi, np.where(left, mid, hi))
        lo_new = np.where(left, lo, mid)
        f_lo = np.where(exact | left, f_lo, f_mid)
        lo = np.where(exact, lo, lo_new)
    a_sc = np.where(exact, lo, 0.5 * (lo + hi))
    i_sc = _uq_root(amps, angles, values, a_sc, omegas, resistance, i_max, iters_i)
    out_i = np.where(has, i_sc, np.nan)
    out_a = np.where(has, a_sc, np.nan)
    zero = omegas == 0.0
    out_i[zero] = 0.0
    out_a[zero] = 90.0
    return out_i, out_a
