"""Constructive approximation of epsilon-related pairs by true subgradient pairs.

The central routine ``br_approximate`` solves one regularized problem

    y in argmin  f(x+y) - <x*, y> + lam * j(y)

and returns the pair ``(x+y, x* - lam*J(y))``. Stationarity makes the second
component a (proximal) subgradient of f at ``x+y``. The primal distance
``||y||`` and dual distance ``lam*||y||`` then satisfy the entourage radii
whenever the query is eps-related to the constructed pair, since
``<y* - x*, (x+y) - x> = -lam*||y||^2``.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .catalog import FunctionSpec, add, tilt
from .errors import (
    LambdaBelowThreshold, NumericalFailure, PreconditionError, ToleranceNotReached,
)
from .monotone import CONSTRUCTED, SubgradPair, eps_subdiff_gap
from .normed_space import NormedSpace
from .prox_bounded import BOUNDED, ThresholdEstimate, conjugate_domain_member, estimate_threshold
from .proximal import regularized_argmin

IDENTITY_TOL = 1e-9
DEFAULT_SLACK = 1e-6


def iterate_bound(nu, eps, lam):
    """``(nu + sqrt(nu^2 + 4*eps*lam)) / (2*lam)``; equals ``sqrt(eps/lam)`` at ``nu = 0``."""
    return (nu + math.sqrt(nu * nu + 4.0 * eps * lam)) / (2.0 * lam)


@dataclass
class CertificateRecord:
    function: str
    p: float
    query_x: np.ndarray
    query_xstar: np.ndarray
    eps: float
    lam: float
    constructed: SubgradPair
    step: np.ndarray
    dx: float
    dxstar: float
    bound_x: float
    bound_xstar: float
    iterate_bound: float
    passed: bool
    solver_gap: float
    slack: float
    nu: float = 0.0
    identity: tuple = (0.0, 0.0, 0.0)
    pair_violation: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def describe(self):
        c = self.constructed
        lines = [
            f"function      {self.function}  (p={self.p:g})",
            f"query         x={_fmt(self.query_x)}  x*={_fmt(self.query_xstar)}",
            f"eps, lambda   {self.eps!r}, {self.lam!r}",
            f"constructed   y={_fmt(c.x)}  y*={_fmt(c.xstar)}  ({c.provenance}, residual {c.residual:.3g})",
            f"distances     dx={self.dx!r}  dx*={self.dxstar!r}",
            f"radii         sqrt(eps/lam)={self.bound_x!r}  sqrt(lam*eps)={self.bound_xstar!r}",
            f"iterate bound {self.iterate_bound!r}",
            f"solver gap    {self.solver_gap:.3g}   slack {self.slack:.3g}",
        ]
        if self.pair_violation is not None:
            lines.append(f"violation     {self.pair_violation!r}")
        lines.append(f"pass          {self.passed}")
        return "\n".join(lines)


def _fmt(v):
    v = np.atleast_1d(v)
    return repr(float(v[0])) if v.size == 1 else "(" + ", ".join(repr(float(t)) for t in v) + ")"


def _threshold_value(f, space, threshold):
    if threshold is None:
        if f.known_threshold is not None:
            return float(f.known_threshold)
        return estimate_threshold(f, space).value
    if isinstance(threshold, ThresholdEstimate):
        return threshold.value
    return float(threshold)


def _testpoints_around(f, space, center, width=None):
    lo, hi = f.box_lo, f.box_hi
    if width is not None:
        lo = np.minimum(lo, center - width)
        hi = np.maximum(hi, center + width)
    k = 2001 if space.n == 1 else (101 if space.n == 2 else 21)
    axes = [np.union1d(np.linspace(a, b, k), [c]) for a, b, c in zip(lo, hi, center)]
    if space.n == 1 and f.breakpoints:
        axes[0] = np.union1d(axes[0], np.asarray(f.breakpoints, dtype=float))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def br_approximate(f, space, x, xstar, eps, lam, tol=1e-9, slack=DEFAULT_SLACK, threshold=None):
    """Manufacture a true subgradient pair near the query ``(x, x*)``.

    ``threshold`` may be a number or a ``ThresholdEstimate``; without one the
    catalog value is used, falling back to an estimate.

    Raises
    ------
    LambdaBelowThreshold
        ``lam`` does not exceed the prox-boundedness threshold.
    UnboundedBelowError
        The regularized problem has no minimizer.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    thr = _threshold_value(f, space, threshold)
    if not lam > thr:
        raise LambdaBelowThreshold(
            f"lambda={lam!r} must exceed the prox-boundedness threshold {thr!r} of {f.name}")
    x = space.vec(x)
    xstar = space.vec(xstar)
    res = regularized_argmin(f, space, x, xstar, lam, tol)
    cx = f.snap(x + res.minimizer)
    y = cx - x
    Jy = space.duality_map(y)
    ystar = xstar - lam * Jy

    ny = space.norm(y)
    dx = ny
    dxstar = space.dual_norm(xstar - ystar)
    w = (xstar - ystar) / lam
    ident = (float(w @ y), ny * ny, space.dual_norm(w) ** 2)
    scale = max(1.0, ident[1])
    if max(abs(ident[0] - ident[1]), abs(ident[1] - ident[2]), abs(ident[0] - ident[2])) > IDENTITY_TOL * scale:
        raise NumericalFailure(f"duality identity drifted: {ident}")

    if f.convex:
        T = _testpoints_around(f, space, cx, width=2.0 * (1.0 + ny))
        residual = max(0.0, eps_subdiff_gap(f, cx, ystar, T))
    else:
        residual = res.certified_gap
    pair = SubgradPair(cx, ystar, CONSTRUCTED, residual)

    bx = math.sqrt(eps / lam)
    bxs = math.sqrt(eps * lam)
    # a certified gap g leaves the minimizer within sqrt(2g/lam) of the computed one
    absorb = math.sqrt(2.0 * res.certified_gap / lam)
    ok = dx <= bx + slack + absorb and dxstar <= bxs + slack + lam * absorb
    return CertificateRecord(
        function=f.name, p=space.p, query_x=x, query_xstar=xstar, eps=float(eps), lam=float(lam),
        constructed=pair, step=y, dx=dx, dxstar=dxstar, bound_x=bx, bound_xstar=bxs,
        iterate_bound=iterate_bound(0.0, eps, lam), passed=bool(ok), solver_gap=res.certified_gap,
        slack=float(slack), nu=0.0, identity=ident,
        pair_violation=float(-lam * ny * ny),
    )


# -- Ekeland on a grid -----------------------------------------------------------------

def _grid_rows(space, grid):
    G = np.asarray(grid, dtype=float)
    if G.ndim == 1:
        G = G[:, None] if space.n == 1 else G.reshape(-1, space.n)
    return G


def ekeland_conditions(f, space, xbar, xl, eps, lam, grid, atol=1e-12):
    """Check (a) ||x_l - xbar|| <= lam, (b) f(x_l) <= f(xbar), (c) x_l minimizes f + (eps/lam)||. - x_l|| on the grid."""
    G = _grid_rows(space, grid)
    fx, fb = f(xl), f(xbar)
    fG = f.values(G)
    d = kernels.pnorm_rows(G - xl, space.p)
    a = space.norm(np.asarray(xl) - np.asarray(xbar)) <= lam * (1 + atol) + atol
    b = fx <= fb + atol
    c = bool(np.all(fx <= fG + (eps / lam) * d + atol * (1.0 + abs(fx))))
    return a, b, c


def ekeland_point(f, space, xbar, eps, lam, domain_grid, atol=1e-12):
    """Grid version of the variational principle.

    Starting from ``xbar`` the iteration moves to the minimizer of f over the
    slice ``{x : f(x) + (eps/lam)||x - x_k|| <= f(x_k)}`` until that slice
    offers no lower value. The returned point satisfies (a)-(c) of
    ``ekeland_conditions``, which are re-verified before returning.
    """
    if not (eps > 0 and lam > 0):
        raise ValueError("eps and lam must be positive")
    xbar = space.vec(xbar)
    G = _grid_rows(space, domain_grid)
    G = np.vstack([G, xbar[None, :]])
    G = np.unique(G, axis=0)
    fG = f.values(G)
    fb = f(xbar)
    if not np.isfinite(fb):
        raise PreconditionError(f"f(xbar) is not finite")
    if fb > fG.min() + eps + atol:
        raise PreconditionError(
            f"xbar is not an eps-minimizer on the grid: f(xbar)={fb!r}, grid min={fG.min()!r}, eps={eps!r}")
    idx = kernels.ekeland_descend(fG, G, fb, xbar, eps / lam, space.p, atol)
    xl = xbar.copy() if idx < 0 else G[idx].copy()
    if not all(ekeland_conditions(f, space, xbar, xl, eps, lam, G, 1e-9)):
        raise NumericalFailure("ekeland point failed its own conditions")
    return xl


# -- range density -------------------------------------------------------------------------

def _split_sum(target, a_desc, b_desc):
    """Closest point s of a_desc + b_desc to ``target`` and a split s = a + b."""
    a_lo, a_hi, b_lo, b_hi = a_desc.lo, a_desc.hi, b_desc.lo, b_desc.hi
    with np.errstate(invalid="ignore"):
        s = np.clip(target, a_lo + b_lo, a_hi + b_hi)
        b0 = np.clip(0.0, b_lo, b_hi)
        a = np.clip(s - b0, np.maximum(a_lo, s - b_hi), np.minimum(a_hi, s - b_lo))
    return s, a, s - a


def range_density_probe(f, phi, space, xstar, eps, grid_points=2001):
    """Find x with subgradients of f and phi at x summing to within ``eps`` of ``x*``.

    Mirrors the constructive argument: certify a near-minimizer of
    ``f + phi - x*``, run the grid variational principle with slope ``eps``
    around it, then read off analytic subgradients at the resulting point.
    Returns ``(x, f_sub, phi_sub)``.
    """
    if not phi.convex:
        raise PreconditionError("phi must be convex")
    if not (f.has_subdiff and phi.has_subdiff):
        raise PreconditionError("both functions need analytic subdifferentials")
    xstar = space.vec(xstar)
    g = add(f, phi)
    probe = conjugate_domain_member(g, space, xstar)
    if probe.verdict != BOUNDED:
        raise PreconditionError(f"x* is not in the domain of the conjugate at probe scale ({probe.verdict})")
    h = tilt(g, xstar)
    zero = np.zeros(space.n)
    delta = min(eps * eps, 1e-8)
    res = regularized_argmin(h, space, zero, zero, delta, tol=min(1e-10, eps * eps))
    xbar = h.snap(res.minimizer)

    k = grid_points if space.n == 1 else 41
    axes = [np.linspace(c - eps, c + eps, k) for c in xbar]
    if space.n == 1 and h.breakpoints:
        b = np.asarray(h.breakpoints, dtype=float)
        axes[0] = np.union1d(axes[0], b[np.abs(b - xbar[0]) <= eps])
    mesh = np.meshgrid(*axes, indexing="ij")
    G = np.stack([m.ravel() for m in mesh], axis=1)
    fG = h.values(G)
    if h(xbar) > fG.min() + eps * eps:
        xbar = G[int(np.argmin(fG))]
    xe = ekeland_point(h, space, xbar, eps * eps, eps, G)

    # subgradients are read at x_e, or (fuzzy sum rule) at the nearest grid point that works
    order = np.argsort(kernels.pnorm_rows(G - xe, space.p), kind="stable")
    best = np.inf
    for z in np.vstack([xe[None, :], G[order]]):
        fd, pd = f.subdiff(z), phi.subdiff(z)
        if fd.is_empty or pd.is_empty:
            continue
        s, fs, ps = _split_sum(xstar, fd, pd)
        miss = space.dual_norm(xstar - s)
        if miss <= eps:
            return z.copy(), fs, ps
        best = min(best, miss)
    raise ToleranceNotReached(f"subgradient sums miss x* by at least {best!r} > eps={eps!r}")


# -- resolvent check -------------------------------------------------------------------------

def minty_surjectivity_check(f, space, xstar, tol=1e-8):
    """Solve ``x* in x + df(x)`` for convex f on a Euclidean space.

    Returns the pair ``(x, x* - x)`` whose residual is the distance of
    ``x* - x`` to ``df(x)``.
    """
    if not f.convex:
        raise PreconditionError(f"{f.name} is not convex")
    if space.p != 2.0:
        raise PreconditionError("the resolvent check needs p = 2")
    xstar = space.vec(xstar)
    zero = np.zeros(space.n)
    res = regularized_argmin(f, space, zero, xstar, 1.0, tol=min(1e-12, tol * tol))
    xb = f.snap(res.minimizer)
    v = xstar - xb
    if f.has_subdiff:
        residual = f.subdiff(xb).distance(v, 2.0)
    else:
        residual = max(0.0, eps_subdiff_gap(f, xb, v, _testpoints_around(f, space, xb, 2.0)))
    if not residual <= tol:
        raise ToleranceNotReached(f"resolvent residual {residual!r} exceeds {tol!r}")
    return SubgradPair(xb, v, CONSTRUCTED, residual)
