"""Loop kernels compiled with numba; twins of ``_numpy.py``."""
import numpy as np
from numba import njit


@njit(cache=True)
def _pnorm(v, p):
    n = v.shape[0]
    if n == 1:
        return abs(v[0])
    scale = 0.0
    for k in range(n):
        a = abs(v[k])
        if a > scale:
            scale = a
    if scale == 0.0:
        return 0.0
    s = 0.0
    if p == 2.0:
        for k in range(n):
            u = v[k] / scale
            s += u * u
        return scale * np.sqrt(s)
    for k in range(n):
        s += (abs(v[k]) / scale) ** p
    return scale * s ** (1.0 / p)


@njit(cache=True)
def pnorm_rows(X, p):
    m = X.shape[0]
    out = np.empty(m)
    for i in range(m):
        out[i] = _pnorm(X[i], p)
    return out


@njit(cache=True)
def duality_map_rows(X, p):
    m, n = X.shape
    out = np.zeros((m, n))
    for i in range(m):
        if p == 2.0:
            for k in range(n):
                out[i, k] = X[i, k]
            continue
        scale = 0.0
        for k in range(n):
            a = abs(X[i, k])
            if a > scale:
                scale = a
        if scale == 0.0:
            continue
        s = 0.0
        for k in range(n):
            s += (abs(X[i, k]) / scale) ** p
        nu = s ** (1.0 / p)
        c = scale * nu ** (2.0 - p)
        for k in range(n):
            u = abs(X[i, k]) / scale
            out[i, k] = c * u ** (p - 1.0) * np.sign(X[i, k])
    return out


@njit(cache=True)
def regularized_values(fvals, Y, xstar, lam, p):
    m, n = Y.shape
    g = np.empty(m)
    for i in range(m):
        if not np.isfinite(fvals[i]):
            g[i] = np.inf
            continue
        dot = 0.0
        for k in range(n):
            dot += Y[i, k] * xstar[k]
        r = _pnorm(Y[i], p)
        g[i] = fvals[i] - dot + 0.5 * lam * r * r
    return g


@njit(cache=True)
def cell_lower_bounds(vertex_vals, widths, curv):
    k, c = vertex_vals.shape
    n = widths.shape[1]
    lb = np.empty(k)
    for i in range(k):
        lo = np.inf
        bad = False
        for j in range(c):
            v = vertex_vals[i, j]
            if not np.isfinite(v):
                bad = True
                break
            if v < lo:
                lo = v
        if bad:
            lb[i] = np.inf
            continue
        w2 = 0.0
        for a in range(n):
            w2 += widths[i, a] * widths[i, a]
        lb[i] = lo - curv * w2 / 8.0
    return lb


@njit(cache=True)
def violation_min(Y, YS, x, xs):
    m, n = Y.shape
    best = np.inf
    bi = 0
    for i in range(m):
        s = 0.0
        for k in range(n):
            s += (YS[i, k] - xs[k]) * (Y[i, k] - x[k])
        if s < best:
            best = s
            bi = i
    return best, bi


@njit(cache=True)
def _ratio(d, r):
    if r > 0.0:
        return d / r
    if d == 0.0:
        return 0.0
    return np.inf


@njit(cache=True)
def entourage_search(Y, YS, x, xs, p, q, rx, rxs):
    m, n = Y.shape
    best = np.inf
    bi = 0
    bdx = np.inf
    bdxs = np.inf
    buf = np.empty(n)
    for i in range(m):
        for k in range(n):
            buf[k] = Y[i, k] - x[k]
        dx = _pnorm(buf, p)
        for k in range(n):
            buf[k] = YS[i, k] - xs[k]
        dxs = _pnorm(buf, q)
        s = max(_ratio(dx, rx), _ratio(dxs, rxs))
        if s < best or i == 0:
            best = s
            bi = i
            bdx = dx
            bdxs = dxs
    return best, bi, bdx, bdxs


@njit(cache=True)
def ekeland_descend(fvals, P, start_f, start_pt, slope, p, atol):
    m, n = P.shape
    idx = -1
    cur_f = start_f
    cur = start_pt.copy()
    buf = np.empty(n)
    for _ in range(m + 1):
        best = np.inf
        bj = -1
        for j in range(m):
            for k in range(n):
                buf[k] = P[j, k] - cur[k]
            if fvals[j] + slope * _pnorm(buf, p) <= cur_f + atol and fvals[j] < best:
                best = fvals[j]
                bj = j
        if bj < 0 or not best < cur_f:
            return idx
        idx = bj
        cur_f = best
        for k in range(n):
            cur[k] = P[bj, k]
    return -2


@njit(cache=True)
def subgrad_residual(Y, fY, x, fx, xs):
    m, n = Y.shape
    best = -np.inf
    for i in range(m):
        if not np.isfinite(fY[i]):
            continue
        s = fx - fY[i]
        for k in range(n):
            s += (Y[i, k] - x[k]) * xs[k]
        if s > best:
            best = s
    return best
