"""Finite samples of subdifferential graphs and the tests run against them.

A ``GraphSample`` is a finite subset of graph(df). Infima over the sample
over-estimate infima over the true graph, so a failed relatedness test is a
certificate of non-membership while a passed one is only necessary.
"""
import csv
import io
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .catalog import _axis_grid, subgradient_residual  # noqa: F401  (re-exported)
from .errors import InvalidFunctionError, PreconditionError
from .proximal import regularized_argmin

ANALYTIC = "analytic"
CONSTRUCTED = "constructed"
DECLARED = "declared"


@dataclass(frozen=True, eq=False)
class SubgradPair:
    x: np.ndarray
    xstar: np.ndarray
    provenance: str = DECLARED
    residual: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "xstar", np.atleast_1d(np.asarray(self.xstar, dtype=float)))


@dataclass(frozen=True, eq=False)
class GraphSample:
    """Immutable array-backed sample of graph(df)."""

    f_name: str
    X: np.ndarray
    XS: np.ndarray
    provenance: tuple
    residual: np.ndarray
    box: tuple
    density: float
    dual_cap: float = np.inf
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    @property
    def resolution(self):
        return 1.0 / self.density

    @property
    def pairs(self):
        return [SubgradPair(self.X[i], self.XS[i], self.provenance[i], float(self.residual[i]))
                for i in range(len(self))]

    def pair(self, i):
        return SubgradPair(self.X[i], self.XS[i], self.provenance[i], float(self.residual[i]))

    def extended(self, pairs):
        """A new sample with ``pairs`` appended."""
        pairs = list(pairs)
        if not pairs:
            return self
        X = np.vstack([self.X] + [p.x[None, :] for p in pairs])
        XS = np.vstack([self.XS] + [p.xstar[None, :] for p in pairs])
        prov = self.provenance + tuple(p.provenance for p in pairs)
        res = np.concatenate([self.residual, [p.residual for p in pairs]])
        return GraphSample(self.f_name, X, XS, prov, res, self.box, self.density,
                           self.dual_cap, dict(self.meta))

    def to_csv(self, dest=None):
        """Write ``x..., xstar..., provenance, residual`` rows; returns the text if ``dest`` is None."""
        n = self.dim
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(n)] + [f"xstar{i}" for i in range(n)]
                   + ["provenance", "residual"])
        for i in range(len(self)):
            w.writerow([repr(float(v)) for v in self.X[i]] + [repr(float(v)) for v in self.XS[i]]
                       + [self.provenance[i], repr(float(self.residual[i]))])
        text = buf.getvalue()
        if dest is None:
            return text
        with open(dest, "w", newline="") as fh:
            fh.write(text)
        return text


def _box_grid(lo, hi, density, extra=()):
    axes = [_axis_grid(float(a), float(b), density) for a, b in zip(lo, hi)]
    if len(axes) == 1 and len(extra):
        e = np.asarray(extra, dtype=float)
        axes[0] = np.union1d(axes[0], e[(e >= lo[0]) & (e <= hi[0])])
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _finite_bound(sd):
    if sd.is_empty:
        return 0.0
    v = np.concatenate([sd.lo, sd.hi])
    v = v[np.isfinite(v)]
    return float(np.max(np.abs(v))) if v.size else 0.0


def sample_graph(f, space, box=None, density=50.0, dual_cap=None, lam=None):
    """Sample graph(df) on ``box`` at ``density`` points per unit length.

    Entries with an analytic subdifferential are swept deterministically:
    every grid point (catalog breakpoints included) emits its subdifferential
    discretized at the same density, with infinite directions capped at
    ``dual_cap``. Without one, pairs are constructed through the proximal
    rule ``(x+y, -lam*J(y))`` and carry the solver gap as residual.
    """
    if f.dim != space.n:
        raise InvalidFunctionError(f"{f.name} lives in R^{f.dim}, space is R^{space.n}")
    if not density > 0:
        raise ValueError("density must be positive")
    if box is None:
        lo, hi = f.box_lo, f.box_hi
    else:
        lo = np.broadcast_to(np.asarray(box[0], dtype=float), (space.n,)).copy()
        hi = np.broadcast_to(np.asarray(box[1], dtype=float), (space.n,)).copy()
    grid = _box_grid(lo, hi, density, f.breakpoints)

    if f.has_subdiff:
        descs = [f.subdiff(x) for x in grid]
        if dual_cap is None:
            dual_cap = 10.0 * (1.0 + max(_finite_bound(d) for d in descs))
        Xs, XSs = [], []
        for x, d in zip(grid, descs):
            pts = d.discretize(density, dual_cap)
            if pts.size == 0:
                continue
            Xs.append(np.repeat(x[None, :], pts.shape[0], axis=0))
            XSs.append(pts)
        if not Xs:
            raise PreconditionError(f"{f.name}: no graph points on the sampling box")
        X, XS = np.vstack(Xs), np.vstack(XSs)
        prov = (ANALYTIC,) * X.shape[0]
        res = np.zeros(X.shape[0])
    else:
        if lam is None:
            thr = f.known_threshold
            if thr is None:
                raise PreconditionError(
                    f"{f.name}: no analytic subdifferential and no lambda for constructed pairs")
            lam = max(1.0, 2.0 * thr + 1.0)
        zero = np.zeros(space.n)
        Xs, XSs, res = [], [], []
        for x in grid:
            if not np.isfinite(f(x)):
                continue
            r = regularized_argmin(f, space, x, zero, lam)
            y = r.minimizer
            Xs.append(x + y)
            XSs.append(-lam * space.duality_map(y))
            res.append(r.certified_gap)
        X, XS = np.array(Xs), np.array(XSs)
        prov = (CONSTRUCTED,) * X.shape[0]
        res = np.asarray(res)
        if dual_cap is None:
            dual_cap = 10.0 * (1.0 + float(np.max(kernels.pnorm_rows(XS, space.q))))
    return GraphSample(f.name, X, XS, prov, res, (lo, hi), float(density), float(dual_cap))


def violation_measure(sample, x, xstar):
    """``min over sampled (y, y*) of <y* - x*, y - x>``."""
    return violation_certificate(sample, x, xstar)[0]


def violation_certificate(sample, x, xstar):
    """Violation value together with the sampled pair attaining it."""
    if len(sample) == 0:
        raise PreconditionError("empty graph sample")
    val, i = kernels.violation_min(sample.X, sample.XS, np.atleast_1d(x), np.atleast_1d(xstar))
    return val, sample.pair(i)


def is_eps_related(sample, x, xstar, eps, slack=0.0):
    return violation_measure(sample, x, xstar) >= -eps - slack


def _testpoint_rows(testpoints, dim):
    T = np.asarray(testpoints, dtype=float)
    if T.ndim == 1:
        T = T.reshape(-1, dim) if dim > 1 else T[:, None]
    return T


def eps_subdiff_gap(f, x, xstar, testpoints):
    """``max over testpoints y of <x*, y-x> + f(x) - f(y)`` (>= 0 when x is a testpoint)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    fx = f(x)
    if not np.isfinite(fx):
        raise PreconditionError(f"{f.name}({x.tolist()}) is not finite")
    T = _testpoint_rows(testpoints, f.dim)
    return kernels.subgrad_residual(T, f.values(T), x, fx, np.atleast_1d(xstar))


def eps_subdiff_test(f, x, xstar, eps, testpoints, slack=1e-12):
    """Sampled membership test ``x* in d_eps f(x)`` for convex ``f``."""
    if not f.convex:
        raise PreconditionError(f"{f.name} is not convex")
    return eps_subdiff_gap(f, x, xstar, testpoints) <= eps + slack


class EntourageResult(NamedTuple):
    passed: bool
    witness: Optional[SubgradPair]
    dx: float
    dxstar: float


def default_slack(density):
    return 1e-6 + 2.0 / density


def entourage_check(sample, space, x, xstar, eps, lam, slack=None):
    """Look for a sampled pair within ``sqrt(eps/lam)`` (primal) and ``sqrt(lam*eps)`` (dual).

    The witness minimizes the larger of the two distances normalized by
    their radii; pass means both distances are within radius + slack.
    """
    if len(sample) == 0:
        raise PreconditionError("empty graph sample")
    if not lam > 0 or eps < 0:
        raise ValueError("need lam > 0 and eps >= 0")
    if slack is None:
        slack = default_slack(sample.density)
    rx = np.sqrt(eps / lam) + slack
    rxs = np.sqrt(eps * lam) + slack
    x = space.vec(x)
    xstar = space.vec(xstar)
    _, i, dx, dxs = kernels.entourage_search(sample.X, sample.XS, x, xstar, space.p, space.q, rx, rxs)
    ok = dx <= rx and dxs <= rxs
    return EntourageResult(bool(ok), sample.pair(i), dx, dxs)


def find_properness_witness(f, sample, eps, candidates_x, candidates_xstar, testpoints, margin=1e-3):
    """Search a candidate grid for a pair in the sampled ``(df)^eps`` but outside ``d_eps f``.

    Both tests must hold with ``margin`` to spare. Returns ``(x, x*)`` or None.
    """
    T = _testpoint_rows(testpoints, f.dim)
    fT = f.values(T)
    best = None
    for x in np.atleast_2d(np.asarray(candidates_x, dtype=float).reshape(-1, f.dim)):
        fx = f(x)
        if not np.isfinite(fx):
            continue
        for xs in np.asarray(candidates_xstar, dtype=float).reshape(-1, f.dim):
            v, _ = kernels.violation_min(sample.X, sample.XS, x, xs)
            if v < -eps + margin:
                continue
            gap = kernels.subgrad_residual(T, fT, x, fx, xs)
            if gap > eps + margin and (best is None or gap > best[2]):
                best = (x.copy(), xs.copy(), gap)
    return None if best is None else (best[0], best[1])
