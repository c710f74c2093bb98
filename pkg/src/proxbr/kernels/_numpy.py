"""Vectorized numpy implementations of the hot kernels.

Every function here has a loop-based twin in ``_numba.py`` with the same
signature and the same tie-breaking (first index wins).
"""
import numpy as np


def pnorm_rows(X, p):
    X = np.abs(np.asarray(X, dtype=float))
    if X.shape[1] == 1:
        return X[:, 0].copy()
    # scale by the largest entry so tiny or huge rows neither underflow nor overflow
    scale = X.max(axis=1)
    out = np.zeros(X.shape[0])
    nz = scale > 0
    if np.any(nz):
        U = X[nz] / scale[nz, None]
        if p == 2.0:
            out[nz] = scale[nz] * np.sqrt(np.einsum("ij,ij->i", U, U))
        else:
            out[nz] = scale[nz] * np.sum(U ** p, axis=1) ** (1.0 / p)
    return out


def duality_map_rows(X, p):
    X = np.asarray(X, dtype=float)
    if p == 2.0:
        return X.copy()
    A = np.abs(X)
    scale = A.max(axis=1)
    out = np.zeros_like(X)
    nz = scale > 0
    if np.any(nz):
        U = A[nz] / scale[nz, None]
        nu = np.sum(U ** p, axis=1) ** (1.0 / p)
        out[nz] = (scale[nz] * nu ** (2.0 - p))[:, None] * U ** (p - 1.0) * np.sign(X[nz])
    return out


def regularized_values(fvals, Y, xstar, lam, p):
    """f(x+y) - <x*, y> + lam * 0.5 * ||y||_p^2 row-wise; +inf rows stay +inf."""
    nrm = pnorm_rows(Y, p)
    g = np.full(Y.shape[0], np.inf)
    fin = np.isfinite(fvals)
    g[fin] = fvals[fin] - Y[fin] @ xstar + 0.5 * lam * nrm[fin] ** 2
    return g


def cell_lower_bounds(vertex_vals, widths, curv):
    lb = vertex_vals.min(axis=1) - curv * np.sum(widths ** 2, axis=1) / 8.0
    lb[~np.all(np.isfinite(vertex_vals), axis=1)] = np.inf
    return lb


def violation_min(Y, YS, x, xs):
    vals = np.einsum("ij,ij->i", YS - xs, Y - x)
    i = int(np.argmin(vals))
    return float(vals[i]), i


def _ratio(d, r):
    out = np.where(d == 0.0, 0.0, np.inf)
    pos = r > 0
    if pos:
        out = d / r
    return out


def entourage_search(Y, YS, x, xs, p, q, rx, rxs):
    dx = pnorm_rows(Y - x, p)
    dxs = pnorm_rows(YS - xs, q)
    score = np.maximum(_ratio(dx, rx), _ratio(dxs, rxs))
    i = int(np.argmin(score))
    return float(score[i]), i, float(dx[i]), float(dxs[i])


def ekeland_descend(fvals, P, start_f, start_pt, slope, p, atol):
    """Iterated slice minimization; returns the final grid index or -1."""
    idx = -1
    cur_f = start_f
    cur = start_pt
    for _ in range(fvals.shape[0] + 1):
        d = pnorm_rows(P - cur, p)
        inside = fvals + slope * d <= cur_f + atol
        cand = np.where(inside, fvals, np.inf)
        j = int(np.argmin(cand))
        if not cand[j] < cur_f:
            return idx
        idx, cur_f, cur = j, fvals[j], P[j]
    raise RuntimeError("ekeland descent did not terminate")


def subgrad_residual(Y, fY, x, fx, xs):
    fin = np.isfinite(fY)
    if not np.any(fin):
        return -np.inf
    vals = (Y[fin] - x) @ xs + fx - fY[fin]
    return float(vals.max())
