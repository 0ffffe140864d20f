"""Hot numeric kernels: numba-jitted loops with pure-NumPy twins.

Each kernel exists twice with identical semantics:

* ``_<name>_nb``  - explicit loops, compiled with ``numba.njit``,
* ``_<name>_np``  - vectorized NumPy.

The public name dispatches on :data:`logitsphere.accel.NUMBA_ENABLED`
(numba importable and ``LOGITSPHERE_DISABLE_NUMBA`` unset).  Results agree
up to floating-point summation order; integer outputs agree exactly.
``benchmarks/bench_kernels.py`` times the two paths against each other.

Angular sweeps
--------------
Several kernels minimize an empirical risk over a great circle
``p(phi) = u*cos(phi) + v*sin(phi)``.  With per-sample coefficients
``(c_i, d_i)`` the hinge term ``[c_i cos + d_i sin]_+`` is active exactly on
a half-circle, so both the hinge risk and the misclassification count are
piecewise-smooth with at most ``2n`` breakpoints; sorting those breakpoints
gives exact minimization in O(n log n).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit as _sp_expit

from .accel import NUMBA_ENABLED, njit

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# projected subgradient descent for the hinge risk on the sphere


@njit(cache=True)
def _psd_minimize_nb(x, y, theta0, iters, step_c):
    n, d = x.shape
    theta = theta0.copy()
    best = theta0.copy()
    g = np.zeros(d)
    best_obj = 1e300
    prev_obj = 1e300
    last_change = 1e300
    for t in range(1, iters + 1):
        obj = 0.0
        for j in range(d):
            g[j] = 0.0
        for i in range(n):
            m = 0.0
            for j in range(d):
                m += x[i, j] * theta[j]
            m *= y[i]
            if m < 0.0:
                obj -= m
                for j in range(d):
                    g[j] -= y[i] * x[i, j]
        obj /= n
        if obj < best_obj:
            best_obj = obj
            best[:] = theta
        last_change = abs(obj - prev_obj)
        prev_obj = obj
        step = step_c / math.sqrt(t)
        norm2 = 0.0
        for j in range(d):
            theta[j] -= step * g[j] / n
            norm2 += theta[j] * theta[j]
        if norm2 <= 0.0:
            theta[:] = best
        else:
            inv = 1.0 / math.sqrt(norm2)
            for j in range(d):
                theta[j] *= inv
    # objective of the final iterate
    obj = 0.0
    for i in range(n):
        m = 0.0
        for j in range(d):
            m += x[i, j] * theta[j]
        m *= y[i]
        if m < 0.0:
            obj -= m
    obj /= n
    if obj < best_obj:
        best_obj = obj
        best[:] = theta
    last_change = abs(obj - prev_obj)
    return best, best_obj, last_change


def _psd_minimize_np(x, y, theta0, iters, step_c):
    n = x.shape[0]
    theta = theta0.copy()
    best = theta0.copy()
    best_obj = math.inf
    prev_obj = math.inf
    last_change = math.inf
    for t in range(1, iters + 1):
        m = y * (x @ theta)
        neg = m < 0.0
        obj = float(-m[neg].sum()) / n
        if obj < best_obj:
            best_obj = obj
            best = theta.copy()
        last_change = abs(obj - prev_obj)
        prev_obj = obj
        g = -(x[neg].T @ y[neg]) / n if neg.any() else np.zeros_like(theta)
        theta = theta - (step_c / math.sqrt(t)) * g
        norm = np.linalg.norm(theta)
        theta = best.copy() if norm <= 0.0 else theta / norm
    m = y * (x @ theta)
    obj = float(-m[m < 0.0].sum()) / n
    if obj < best_obj:
        best_obj = obj
        best = theta.copy()
    last_change = abs(obj - prev_obj)
    return best, best_obj, last_change


# ---------------------------------------------------------------------------
# exact hinge-risk minimization over a great circle
#
# Inputs are per-sample coefficients of the hinge argument:
#   risk(phi) = (1/n) * sum_i [cc_i*cos(phi) + dd_i*sin(phi)]_+


@njit(cache=True)
def _circle_relu_min_nb(cc, dd):
    n = cc.shape[0]
    ang = np.empty(2 * n)
    d_a = np.empty(2 * n)
    d_b = np.empty(2 * n)
    d_c = np.empty(2 * n, dtype=np.int64)
    m = 0
    a0 = 0.0
    b0 = 0.0
    c0 = 0
    for i in range(n):
        r = math.hypot(cc[i], dd[i])
        if r == 0.0:
            continue
        psi = math.atan2(dd[i], cc[i])
        enter = (psi - 0.5 * math.pi) % TWO_PI
        leave = (psi + 0.5 * math.pi) % TWO_PI
        ang[m] = enter
        d_a[m] = cc[i]
        d_b[m] = dd[i]
        d_c[m] = 1
        m += 1
        ang[m] = leave
        d_a[m] = -cc[i]
        d_b[m] = -dd[i]
        d_c[m] = -1
        m += 1
        # state just below angle 0 (wrap arc), so events at exactly 0 are
        # not double-counted
        if cc[i] > 0.0 or (cc[i] == 0.0 and dd[i] < 0.0):
            a0 += cc[i]
            b0 += dd[i]
            c0 += 1
    if m == 0:
        return 0.0, 0.0
    order = np.argsort(ang[:m])
    # candidate objective at every breakpoint, plus any zero-active arc
    best_val = 1e300
    best_phi = 0.0
    zero_phi = -1.0
    a = a0
    b = b0
    c = c0
    for k in range(m):
        e = order[k]
        phi = ang[e]
        val = a * math.cos(phi) + b * math.sin(phi)
        if val < best_val:
            best_val = val
            best_phi = phi
        a += d_a[e]
        b += d_b[e]
        c += d_c[e]
        if c == 0 and zero_phi < 0.0:
            nxt = ang[order[(k + 1) % m]]
            if k == m - 1:
                nxt += TWO_PI
            zero_phi = (0.5 * (phi + nxt)) % TWO_PI
    if zero_phi >= 0.0:
        return zero_phi, 0.0
    # exact re-evaluation at the winning breakpoint
    phi = best_phi
    cphi = math.cos(phi)
    sphi = math.sin(phi)
    val = 0.0
    for i in range(n):
        t = cc[i] * cphi + dd[i] * sphi
        if t > 0.0:
            val += t
    return phi, val / n


def _circle_relu_min_np(cc, dd):
    r = np.hypot(cc, dd)
    live = r > 0.0
    if not live.any():
        return 0.0, 0.0
    cc_l = cc[live]
    dd_l = dd[live]
    psi = np.arctan2(dd_l, cc_l)
    enter = np.mod(psi - 0.5 * math.pi, TWO_PI)
    leave = np.mod(psi + 0.5 * math.pi, TWO_PI)
    ang = np.concatenate([enter, leave])
    d_a = np.concatenate([cc_l, -cc_l])
    d_b = np.concatenate([dd_l, -dd_l])
    d_c = np.concatenate([np.ones(cc_l.size, np.int64), -np.ones(cc_l.size, np.int64)])
    active0 = (cc_l > 0.0) | ((cc_l == 0.0) & (dd_l < 0.0))
    a0 = float(cc_l[active0].sum())
    b0 = float(dd_l[active0].sum())
    c0 = int(active0.sum())
    order = np.argsort(ang)
    ang_s = ang[order]
    pre_a = a0 + np.concatenate([[0.0], np.cumsum(d_a[order])[:-1]])
    pre_b = b0 + np.concatenate([[0.0], np.cumsum(d_b[order])[:-1]])
    vals = pre_a * np.cos(ang_s) + pre_b * np.sin(ang_s)
    cnt_after = c0 + np.cumsum(d_c[order])
    zero = np.nonzero(cnt_after == 0)[0]
    if zero.size:
        k = int(zero[0])
        nxt = ang_s[(k + 1) % ang_s.size] + (TWO_PI if k == ang_s.size - 1 else 0.0)
        return float(np.mod(0.5 * (ang_s[k] + nxt), TWO_PI)), 0.0
    k = int(np.argmin(vals))
    phi = float(ang_s[k])
    t = cc * math.cos(phi) + dd * math.sin(phi)
    return phi, float(t[t > 0.0].sum()) / cc.shape[0]


# ---------------------------------------------------------------------------
# zero-one angular sweep over a great circle
#
# Sample i is misclassified at angle phi iff
#   cc_i*cos(phi) + dd_i*sin(phi) <= 0.
# The sweep returns every open arc (between consecutive breakpoints) with its
# exact error count; callers pick a minimizing arc.


@njit(cache=True)
def _circle_zero_one_arcs_nb(cc, dd):
    n = cc.shape[0]
    ang = np.empty(2 * n)
    d_c = np.empty(2 * n, dtype=np.int64)
    m = 0
    c0 = 0
    fixed = 0
    for i in range(n):
        r = math.hypot(cc[i], dd[i])
        if r == 0.0:
            fixed += 1  # identically zero margin: always an error
            continue
        psi = math.atan2(dd[i], cc[i])
        start = (psi + 0.5 * math.pi) % TWO_PI  # error region begins
        stop = (psi - 0.5 * math.pi) % TWO_PI  # error region ends
        ang[m] = start
        d_c[m] = 1
        m += 1
        ang[m] = stop
        d_c[m] = -1
        m += 1
        if cc[i] < 0.0 or (cc[i] == 0.0 and dd[i] > 0.0):  # error at phi = 0-
            c0 += 1
    if m == 0:
        mids = np.zeros(1)
        counts = np.empty(1, dtype=np.int64)
        counts[0] = fixed
        return mids, counts
    order = np.argsort(ang[:m])
    mids = np.empty(m)
    counts = np.empty(m, dtype=np.int64)
    c = c0
    for k in range(m):
        e = order[k]
        c += d_c[e]
        phi = ang[e]
        nxt = ang[order[(k + 1) % m]]
        if k == m - 1:
            nxt += TWO_PI
        mids[k] = (0.5 * (phi + nxt)) % TWO_PI
        counts[k] = c + fixed
    return mids, counts


def _circle_zero_one_arcs_np(cc, dd):
    r = np.hypot(cc, dd)
    live = r > 0.0
    fixed = int((~live).sum())
    cc_l = cc[live]
    dd_l = dd[live]
    if cc_l.size == 0:
        return np.zeros(1), np.array([fixed], dtype=np.int64)
    psi = np.arctan2(dd_l, cc_l)
    start = np.mod(psi + 0.5 * math.pi, TWO_PI)
    stop = np.mod(psi - 0.5 * math.pi, TWO_PI)
    ang = np.concatenate([start, stop])
    d_c = np.concatenate([np.ones(cc_l.size, np.int64), -np.ones(cc_l.size, np.int64)])
    c0 = int(((cc_l < 0.0) | ((cc_l == 0.0) & (dd_l > 0.0))).sum())
    order = np.argsort(ang)
    ang_s = ang[order]
    counts = c0 + np.cumsum(d_c[order]) + fixed
    nxt = np.roll(ang_s, -1)
    nxt[-1] += TWO_PI
    mids = np.mod(0.5 * (ang_s + nxt), TWO_PI)
    return mids, counts.astype(np.int64)


# ---------------------------------------------------------------------------
# zero-one counting and local search


@njit(cache=True)
def _zero_one_count_nb(x, y, theta):
    n, d = x.shape
    c = 0
    for i in range(n):
        m = 0.0
        for j in range(d):
            m += x[i, j] * theta[j]
        if y[i] * m <= 0.0:
            c += 1
    return c


def _zero_one_count_np(x, y, theta):
    return int(np.count_nonzero(y * (x @ theta) <= 0.0))


@njit(cache=True)
def _local_search_zero_one_nb(x, y, theta0, proposals, halve_after, scale_floor, budget):
    n, d = x.shape
    theta = theta0.copy()
    best_count = _zero_one_count_nb(x, y, theta)
    scale = 0.5
    rejects = 0
    since_improve = 0
    cand = np.empty(d)
    for p in range(proposals.shape[0]):
        if since_improve >= budget:
            break
        norm2 = 0.0
        for j in range(d):
            cand[j] = theta[j] + scale * proposals[p, j]
            norm2 += cand[j] * cand[j]
        if norm2 <= 0.0:
            continue
        inv = 1.0 / math.sqrt(norm2)
        for j in range(d):
            cand[j] *= inv
        c = _zero_one_count_nb(x, y, cand)
        if c < best_count:
            best_count = c
            theta[:] = cand
            rejects = 0
            since_improve = 0
        else:
            rejects += 1
            since_improve += 1
            if rejects >= halve_after:
                rejects = 0
                half = scale * 0.5
                scale = half if half > scale_floor else scale_floor
    return theta, best_count


def _local_search_zero_one_np(x, y, theta0, proposals, halve_after, scale_floor, budget):
    theta = theta0.copy()
    best_count = _zero_one_count_np(x, y, theta)
    scale = 0.5
    rejects = 0
    since_improve = 0
    for p in range(proposals.shape[0]):
        if since_improve >= budget:
            break
        cand = theta + scale * proposals[p]
        norm = np.linalg.norm(cand)
        if norm <= 0.0:
            continue
        cand = cand / norm
        c = _zero_one_count_np(x, y, cand)
        if c < best_count:
            best_count = c
            theta = cand
            rejects = 0
            since_improve = 0
        else:
            rejects += 1
            since_improve += 1
            if rejects >= halve_after:
                rejects = 0
                scale = max(scale * 0.5, scale_floor)
    return theta, best_count


# ---------------------------------------------------------------------------
# greedy maximal packing on the sphere


@njit(cache=True)
def _greedy_keep_nb(candidates, kept, n_kept, eps2, rejects, stop_factor):
    """Feed a block of unit candidates into a greedy packing.

    Returns (n_kept, rejects, done).  done=1 once the consecutive-rejection
    counter reaches stop_factor * n_kept with at least one point kept.
    """
    n_cand, d = candidates.shape
    for i in range(n_cand):
        if n_kept > 0 and rejects >= stop_factor * n_kept:
            return n_kept, rejects, 1
        ok = True
        for k in range(n_kept):
            dist2 = 0.0
            for j in range(d):
                diff = candidates[i, j] - kept[k, j]
                dist2 += diff * diff
            if dist2 < eps2:
                ok = False
                break
        if ok:
            if n_kept >= kept.shape[0]:
                return n_kept, rejects, 2  # buffer full: caller raises
            for j in range(d):
                kept[n_kept, j] = candidates[i, j]
            n_kept += 1
            rejects = 0
        else:
            rejects += 1
    if n_kept > 0 and rejects >= stop_factor * n_kept:
        return n_kept, rejects, 1
    return n_kept, rejects, 0


def _greedy_keep_np(candidates, kept, n_kept, eps2, rejects, stop_factor):
    for i in range(candidates.shape[0]):
        if n_kept > 0 and rejects >= stop_factor * n_kept:
            return n_kept, rejects, 1
        if n_kept == 0:
            ok = True
        else:
            diff = kept[:n_kept] - candidates[i]
            ok = bool((np.einsum("kj,kj->k", diff, diff) >= eps2).all())
        if ok:
            if n_kept >= kept.shape[0]:
                return n_kept, rejects, 2
            kept[n_kept] = candidates[i]
            n_kept += 1
            rejects = 0
        else:
            rejects += 1
    if n_kept > 0 and rejects >= stop_factor * n_kept:
        return n_kept, rejects, 1
    return n_kept, rejects, 0


# ---------------------------------------------------------------------------
# hinge-difference moment accumulation
#
# delta = [-y*zt]_+ - [-y*zs]_+ where zs = x.T truth, zt = x.T theta is the
# correlated coordinate and y is drawn from the logistic link at beta*zs.
# Sampling (zs, zperp, u) is done by the caller; this kernel is pure
# arithmetic so both paths consume identical random inputs.


@njit(cache=True)
def _delta_moment_chunk_nb(zs, zperp, u, rho, beta, qs, acc):
    n = zs.shape[0]
    root = math.sqrt(max(0.0, 1.0 - rho * rho))
    nq = qs.shape[0]
    for i in range(n):
        t = beta * zs[i]
        if t >= 0.0:
            p = 1.0 / (1.0 + math.exp(-t))
        else:
            e = math.exp(t)
            p = e / (1.0 + e)
        yi = 1.0 if u[i] < p else -1.0
        zt = rho * zs[i] + root * zperp[i]
        a = -yi * zt
        b = -yi * zs[i]
        delta = (a if a > 0.0 else 0.0) - (b if b > 0.0 else 0.0)
        acc[0] += delta
        acc[1] += delta * delta
        ad = abs(delta)
        for k in range(nq):
            v = ad ** qs[k]
            acc[2 + 2 * k] += v
            acc[3 + 2 * k] += v * v
    return acc


def _delta_moment_chunk_np(zs, zperp, u, rho, beta, qs, acc):
    root = math.sqrt(max(0.0, 1.0 - rho * rho))
    p = _sp_expit(beta * zs)
    y = np.where(u < p, 1.0, -1.0)
    zt = rho * zs + root * zperp
    delta = np.maximum(-y * zt, 0.0) - np.maximum(-y * zs, 0.0)
    acc[0] += float(delta.sum())
    acc[1] += float((delta * delta).sum())
    ad = np.abs(delta)
    for k, q in enumerate(qs):
        v = ad**q
        acc[2 + 2 * k] += float(v.sum())
        acc[3 + 2 * k] += float((v * v).sum())
    return acc


# ---------------------------------------------------------------------------
# dispatch

if NUMBA_ENABLED:
    psd_minimize = _psd_minimize_nb
    circle_relu_min = _circle_relu_min_nb
    circle_zero_one_arcs = _circle_zero_one_arcs_nb
    zero_one_count = _zero_one_count_nb
    local_search_zero_one = _local_search_zero_one_nb
    greedy_keep = _greedy_keep_nb
    delta_moment_chunk = _delta_moment_chunk_nb
else:
    psd_minimize = _psd_minimize_np
    circle_relu_min = _circle_relu_min_np
    circle_zero_one_arcs = _circle_zero_one_arcs_np
    zero_one_count = _zero_one_count_np
    local_search_zero_one = _local_search_zero_one_np
    greedy_keep = _greedy_keep_np
    delta_moment_chunk = _delta_moment_chunk_np

PATHS = {
    "numba": {
        "psd_minimize": _psd_minimize_nb,
        "circle_relu_min": _circle_relu_min_nb,
        "circle_zero_one_arcs": _circle_zero_one_arcs_nb,
        "zero_one_count": _zero_one_count_nb,
        "local_search_zero_one": _local_search_zero_one_nb,
        "greedy_keep": _greedy_keep_nb,
        "delta_moment_chunk": _delta_moment_chunk_nb,
    },
    "numpy": {
        "psd_minimize": _psd_minimize_np,
        "circle_relu_min": _circle_relu_min_np,
        "circle_zero_one_arcs": _circle_zero_one_arcs_np,
        "zero_one_count": _zero_one_count_np,
        "local_search_zero_one": _local_search_zero_one_np,
        "greedy_keep": _greedy_keep_np,
        "delta_moment_chunk": _delta_moment_chunk_np,
    },
}
