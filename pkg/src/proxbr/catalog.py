"""Catalog of proper lsc test functions on R^n with their analytic metadata.

Every entry carries a vectorized value oracle (rows -> values, ``+inf`` off
the domain), a starting search box, a curvature bound valid on each open
cell of its breakpoint partition, and a quadratic minorant
``f(z) >= alpha - (mu/2) ||z||_2^2`` used to certify search boxes.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import DimensionError, InvalidFunctionError, PreconditionError, UnknownFunctionError

INF = np.inf

EMPTY = "empty"
SINGLETON = "singleton"
INTERVAL_BOX = "interval_box"
HALFLINE_PRODUCT = "halfline_product"


@dataclass(frozen=True, eq=False)
class SubdiffDescription:
    """A box-shaped subdifferential: empty, a point, or a product of intervals/half-lines."""

    kind: str
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    @classmethod
    def empty(cls):
        return cls(EMPTY)

    @classmethod
    def point(cls, v):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return cls(SINGLETON, v, v)

    @classmethod
    def box(cls, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box bounds must satisfy lo <= hi componentwise")
        if np.array_equal(lo, hi):
            return cls.point(lo)
        kind = INTERVAL_BOX if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) else HALFLINE_PRODUCT
        return cls(kind, lo, hi)

    @property
    def is_empty(self):
        return self.kind == EMPTY

    def distance(self, v, q=2.0):
        """Dual-norm distance from ``v`` to the set (``inf`` when empty)."""
        if self.is_empty:
            return INF
        v = np.atleast_1d(np.asarray(v, dtype=float))
        d = np.abs(v - np.clip(v, self.lo, self.hi))
        if not np.any(d):
            return 0.0
        return float(np.sum(d ** q) ** (1.0 / q))

    def contains(self, v, atol=0.0):
        return self.distance(v, 2.0) <= atol

    def __add__(self, other):
        if self.is_empty or other.is_empty:
            return SubdiffDescription.empty()
        with np.errstate(invalid="ignore"):
            return SubdiffDescription.box(self.lo + other.lo, self.hi + other.hi)

    def shift(self, v):
        if self.is_empty:
            return self
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return SubdiffDescription.box(self.lo + v, self.hi + v)

    def discretize(self, density, cap):
        """Grid points of the set at ``density`` per unit length, infinite ends capped at +-cap."""
        if self.is_empty:
            return np.empty((0, 0))
        if self.kind == SINGLETON:
            return self.lo[None, :].copy()
        lo = np.maximum(self.lo, -cap)
        hi = np.minimum(self.hi, cap)
        if np.any(lo > hi):
            return np.empty((0, self.lo.shape[0]))
        axes = [_axis_grid(a, b, density) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def _axis_grid(a, b, density):
    if a == b:
        return np.array([a])
    k = max(1, int(np.ceil((b - a) * density - 1e-9)))
    return np.linspace(a, b, k + 1)


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    """A proper lsc function on R^dim with analytic side information.

    Contract used by the certified minimizer: on every open cell of the
    partition generated by ``breakpoints`` (1-D) the function is either
    identically ``+inf`` or finite with second derivatives bounded by
    ``curvature``. Multi-dimensional entries carry no breakpoints and are
    finite and smooth everywhere.
    """

    name: str
    dim: int
    value_oracle: Callable
    convex: bool
    effective_box: tuple
    curvature: float
    dom_point: np.ndarray
    analytic_subdiff: Optional[Callable] = None
    gradient: Optional[Callable] = None
    known_threshold: Optional[float] = None
    breakpoints: tuple = ()
    minorant: tuple = (0.0, 0.0)
    lsc_points: tuple = ()
    box_note: str = ""
    params: dict = field(default_factory=dict)

    def values(self, Z):
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z.reshape(-1, self.dim) if self.dim > 1 else Z[:, None]
        if Z.ndim != 2 or Z.shape[1] != self.dim:
            raise DimensionError(f"{self.name}: expected rows of length {self.dim}, got {Z.shape}")
        v = np.asarray(self.value_oracle(Z), dtype=float)
        if np.any(np.isnan(v)) or np.any(v == -INF):
            raise InvalidFunctionError(f"{self.name}: value oracle returned NaN or -inf")
        return v

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise DimensionError(f"{self.name}: expected a vector of length {self.dim}")
        return float(self.values(x[None, :])[0])

    @property
    def box_lo(self):
        return np.asarray(self.effective_box[0], dtype=float)

    @property
    def box_hi(self):
        return np.asarray(self.effective_box[1], dtype=float)

    @property
    def has_subdiff(self):
        return self.analytic_subdiff is not None

    def subdiff(self, x):
        if self.analytic_subdiff is None:
            raise InvalidFunctionError(f"{self.name} has no analytic subdifferential")
        return self.analytic_subdiff(np.atleast_1d(np.asarray(x, dtype=float)))

    def snap(self, x, atol=1e-9):
        """Move ``x`` onto a breakpoint lying within ``atol``, otherwise return it unchanged."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.dim == 1 and self.breakpoints:
            b = np.asarray(self.breakpoints)
            k = int(np.argmin(np.abs(b - x[0])))
            if abs(b[k] - x[0]) <= atol * (1.0 + abs(b[k])):
                return np.array([b[k]])
        return x


def _scalar_subdiff(rule):
    def subdiff(x):
        return rule(float(x[0]))

    return subdiff


def _box1(lo, hi):
    return (np.array([float(lo)]), np.array([float(hi)]))


def _abs():
    def sd(z):
        if z > 0:
            return SubdiffDescription.point(1.0)
        if z < 0:
            return SubdiffDescription.point(-1.0)
        return SubdiffDescription.box(-1.0, 1.0)

    return FunctionSpec(
        name="abs", dim=1, value_oracle=lambda Z: np.abs(Z[:, 0]), convex=True,
        effective_box=_box1(-4, 4), curvature=0.0, dom_point=np.zeros(1),
        analytic_subdiff=_scalar_subdiff(sd), gradient=lambda z: np.sign(z),
        known_threshold=0.0, breakpoints=(0.0,), minorant=(0.0, 0.0),
        box_note="f >= 0, so f + lam*j is coercive for every lam > 0",
    )


def _quad():
    return FunctionSpec(
        name="quad", dim=1, value_oracle=lambda Z: 0.5 * Z[:, 0] ** 2, convex=True,
        effective_box=_box1(-4, 4), curvature=1.0, dom_point=np.zeros(1),
        analytic_subdiff=lambda z: SubdiffDescription.point(z), gradient=lambda z: z.copy(),
        known_threshold=0.0, minorant=(0.0, 0.0),
        box_note="f >= 0 and strongly convex",
    )


def _indicator_box():
    def value(Z):
        z = Z[:, 0]
        return np.where((z >= 0.0) & (z <= 1.0), 0.0, INF)

    def sd(z):
        if 0.0 < z < 1.0:
            return SubdiffDescription.point(0.0)
        if z == 0.0:
            return SubdiffDescription.box(-INF, 0.0)
        if z == 1.0:
            return SubdiffDescription.box(0.0, INF)
        return SubdiffDescription.empty()

    return FunctionSpec(
        name="indicator_box", dim=1, value_oracle=value, convex=True,
        effective_box=_box1(-0.5, 1.5), curvature=0.0, dom_point=np.zeros(1),
        analytic_subdiff=_scalar_subdiff(sd), gradient=lambda z: np.zeros_like(z),
        known_threshold=0.0, breakpoints=(0.0, 1.0), minorant=(0.0, 0.0), lsc_points=(0.0, 1.0),
        box_note="dom f = [0, 1] lies inside the box; every minimizer is in dom f",
    )


def _neg_quad(c=1.0):
    c = float(c)
    if c < 0:
        raise InvalidFunctionError("neg_quad_c needs c >= 0")
    return FunctionSpec(
        name=f"neg_quad_c:{c:g}", dim=1, value_oracle=lambda Z: -0.5 * c * Z[:, 0] ** 2,
        convex=(c == 0.0), effective_box=_box1(-4, 4), curvature=c, dom_point=np.zeros(1),
        analytic_subdiff=lambda z: SubdiffDescription.point(-c * z),
        gradient=lambda z: -c * z, known_threshold=c, minorant=(c, 0.0),
        box_note="f + lam*j = ((lam - c)/2) z^2 is coercive exactly when lam > c",
        params={"c": c},
    )


def _l0():
    def sd(z):
        if z == 0.0:
            return SubdiffDescription.box(-INF, INF)
        return SubdiffDescription.point(0.0)

    return FunctionSpec(
        name="l0", dim=1, value_oracle=lambda Z: np.where(Z[:, 0] == 0.0, 0.0, 1.0), convex=False,
        effective_box=_box1(-4, 4), curvature=0.0, dom_point=np.zeros(1),
        analytic_subdiff=_scalar_subdiff(sd), gradient=lambda z: np.zeros_like(z),
        known_threshold=0.0, breakpoints=(0.0,), minorant=(0.0, 0.0), lsc_points=(0.0,),
        box_note="0 <= f <= 1, so f + lam*j is coercive for every lam > 0",
    )


def _w_shape():
    def value(Z):
        z = Z[:, 0]
        return np.minimum(np.abs(z - 1.0), np.abs(z + 1.0))

    def grad(z):
        return np.where(z > 0, np.sign(z - 1.0), np.sign(z + 1.0))

    def sd(z):
        # proximal subdifferential: locally convex kinks at +-1, concave kink at 0
        if z == 1.0 or z == -1.0:
            return SubdiffDescription.box(-1.0, 1.0)
        if z == 0.0:
            return SubdiffDescription.empty()
        return SubdiffDescription.point(float(grad(np.array([z]))[0]))

    return FunctionSpec(
        name="w_shape", dim=1, value_oracle=value, convex=False,
        effective_box=_box1(-4, 4), curvature=0.0, dom_point=np.zeros(1),
        analytic_subdiff=_scalar_subdiff(sd), gradient=grad,
        known_threshold=0.0, breakpoints=(-1.0, 0.0, 1.0), minorant=(0.0, 0.0),
        box_note="f >= 0, so f + lam*j is coercive for every lam > 0",
    )


def _quad2d():
    return FunctionSpec(
        name="quad2d", dim=2, value_oracle=lambda Z: 0.5 * np.einsum("ij,ij->i", Z, Z), convex=True,
        effective_box=(np.full(2, -3.0), np.full(2, 3.0)), curvature=1.0, dom_point=np.zeros(2),
        analytic_subdiff=lambda z: SubdiffDescription.point(z), gradient=lambda z: z.copy(),
        known_threshold=0.0, minorant=(0.0, 0.0),
        box_note="f >= 0 and strongly convex",
    )


_FACTORIES = {
    "abs": _abs,
    "quad": _quad,
    "indicator_box": _indicator_box,
    "neg_quad_c": _neg_quad,
    "l0": _l0,
    "w_shape": _w_shape,
    "quad2d": _quad2d,
}


def catalog_names():
    return list(_FACTORIES)


def catalog_get(name, **params):
    """Look up a catalog entry. ``"neg_quad_c:3"`` is shorthand for ``c=3``."""
    base, _, arg = str(name).partition(":")
    if base not in _FACTORIES:
        raise UnknownFunctionError(f"unknown catalog function {name!r}; known: {', '.join(_FACTORIES)}")
    if arg:
        if base != "neg_quad_c":
            raise UnknownFunctionError(f"{base} takes no parameter")
        try:
            params["c"] = float(arg)
        except ValueError as exc:
            raise UnknownFunctionError(f"bad parameter in {name!r}") from exc
    return _FACTORIES[base](**params)


# -- combinators ---------------------------------------------------------------

def zero(dim=1):
    """The zero function on R^dim (not listed in the catalog)."""
    return FunctionSpec(
        name="zero", dim=dim, value_oracle=lambda Z: np.zeros(Z.shape[0]), convex=True,
        effective_box=(np.full(dim, -4.0), np.full(dim, 4.0)), curvature=0.0,
        dom_point=np.zeros(dim), analytic_subdiff=lambda z: SubdiffDescription.point(np.zeros(dim)),
        gradient=lambda z: np.zeros_like(z), known_threshold=0.0, minorant=(0.0, 0.0),
    )



def tilt(f, xstar):
    """``f - <x*, .>``."""
    xs = np.atleast_1d(np.asarray(xstar, dtype=float))
    mu, alpha = f.minorant
    nxs = float(np.linalg.norm(xs))
    delta = 1e-3 * (1.0 + mu)
    sd = None
    if f.analytic_subdiff is not None:
        sd = lambda z: f.analytic_subdiff(z).shift(-xs)
    grad = None
    if f.gradient is not None:
        grad = lambda z: f.gradient(z) - xs
    return FunctionSpec(
        name=f"{f.name}-tilt", dim=f.dim, value_oracle=lambda Z: f.value_oracle(Z) - Z @ xs,
        convex=f.convex, effective_box=f.effective_box, curvature=f.curvature,
        dom_point=f.dom_point, analytic_subdiff=sd, gradient=grad,
        known_threshold=f.known_threshold, breakpoints=f.breakpoints,
        minorant=(mu + delta, alpha - nxs ** 2 / (2 * delta)), lsc_points=f.lsc_points,
    )


def add(f, g):
    """Pointwise sum of two entries of equal dimension."""
    if f.dim != g.dim:
        raise DimensionError("cannot add functions of different dimension")
    sd = None
    if f.analytic_subdiff is not None and g.analytic_subdiff is not None and (f.convex or g.convex):
        sd = lambda z: f.analytic_subdiff(z) + g.analytic_subdiff(z)
    grad = None
    if f.gradient is not None and g.gradient is not None:
        grad = lambda z: f.gradient(z) + g.gradient(z)
    thr = None
    if f.known_threshold is not None and g.convex:
        thr = f.known_threshold
    elif g.known_threshold is not None and f.convex:
        thr = g.known_threshold
    lo = np.minimum(f.box_lo, g.box_lo)
    hi = np.maximum(f.box_hi, g.box_hi)
    return FunctionSpec(
        name=f"{f.name}+{g.name}", dim=f.dim,
        value_oracle=lambda Z: f.value_oracle(Z) + g.value_oracle(Z),
        convex=f.convex and g.convex, effective_box=(lo, hi),
        curvature=f.curvature + g.curvature, dom_point=f.dom_point,
        analytic_subdiff=sd, gradient=grad, known_threshold=thr,
        breakpoints=tuple(sorted(set(f.breakpoints) | set(g.breakpoints))),
        minorant=(f.minorant[0] + g.minorant[0], f.minorant[1] + g.minorant[1]),
        lsc_points=tuple(sorted(set(f.lsc_points) | set(g.lsc_points))),
    )


# -- user-defined piecewise quadratics ---------------------------------------------

_PIECE_KEYS = {"lo", "hi", "coeffs"}
_DEF_KEYS = {"name", "pieces", "convex", "threshold", "box"}


def _quad_min(c0, c1, c2, lo, hi):
    """Infimum of c0 + c1 z + c2 z^2 over [lo, hi] (ends may be infinite)."""
    if c2 < 0 and (np.isinf(lo) or np.isinf(hi)):
        return -INF
    if c2 == 0:
        if (c1 > 0 and np.isinf(lo)) or (c1 < 0 and np.isinf(hi)):
            return -INF
    cands = [e for e in (lo, hi) if np.isfinite(e)]
    if c2 > 0:
        cands.append(float(np.clip(-c1 / (2 * c2), lo, hi)))
    if not cands:
        return c0 if c1 == 0 and c2 == 0 else -INF
    return min(c0 + c1 * z + c2 * z * z for z in cands)


def from_piecewise(defn):
    """Build a 1-D entry from ``{"name", "pieces": [{"lo", "hi", "coeffs"}], "convex", ...}``.

    Each piece is the polynomial ``c0 + c1 z + c2 z^2`` on the closed interval
    ``[lo, hi]`` (``null`` for an infinite end); the function is ``+inf``
    outside every piece. Pieces must have disjoint interiors. Where two closed
    pieces share an endpoint the smaller value is taken, which keeps the
    function lsc.
    """
    if not isinstance(defn, dict):
        raise InvalidFunctionError("inline function definition must be a JSON object")
    unknown = set(defn) - _DEF_KEYS
    if unknown:
        raise InvalidFunctionError(f"unknown keys in function definition: {sorted(unknown)}")
    raw = defn.get("pieces")
    if not raw:
        raise InvalidFunctionError("piecewise function needs at least one piece")
    pieces = []
    for pc in raw:
        if not isinstance(pc, dict) or set(pc) - _PIECE_KEYS or "coeffs" not in pc:
            raise InvalidFunctionError(f"bad piece {pc!r}")
        lo = -INF if pc.get("lo") is None else float(pc["lo"])
        hi = INF if pc.get("hi") is None else float(pc["hi"])
        co = [float(c) for c in pc["coeffs"]]
        if not 1 <= len(co) <= 3 or lo > hi:
            raise InvalidFunctionError(f"bad piece {pc!r}")
        co += [0.0] * (3 - len(co))
        pieces.append((lo, hi, *co))
    pieces.sort(key=lambda t: (t[0], t[1]))
    for a, b in zip(pieces, pieces[1:]):
        if b[0] < a[1]:
            raise InvalidFunctionError("pieces overlap")

    def value(Z):
        z = Z[:, 0]
        out = np.full(z.shape, INF)
        for lo, hi, c0, c1, c2 in pieces:
            m = (z >= lo) & (z <= hi)
            out[m] = np.minimum(out[m], c0 + c1 * z[m] + c2 * z[m] ** 2)
        return out

    def piece_at(z, side):
        # piece covering an open neighbourhood on the given side of z
        for lo, hi, c0, c1, c2 in pieces:
            if (side < 0 and lo < z <= hi) or (side > 0 and lo <= z < hi):
                return c0, c1, c2
        return None

    def grad(z):
        z0 = float(np.atleast_1d(z)[0])
        pc = piece_at(z0, 1) or piece_at(z0, -1)
        return np.array([0.0 if pc is None else pc[1] + 2 * pc[2] * z0])

    bps = sorted({e for pc in pieces for e in pc[:2] if np.isfinite(e)})
    curvature = max(2 * abs(pc[4]) for pc in pieces)

    mu = 0.0
    for lo, hi, c0, c1, c2 in pieces:
        if np.isinf(lo) or np.isinf(hi):
            mu = max(mu, -2 * c2)

    def alpha_for(m):
        return min(_quad_min(c0, c1, c2 + m / 2, lo, hi) for lo, hi, c0, c1, c2 in pieces)

    alpha = alpha_for(mu)
    if not np.isfinite(alpha):
        mu = mu + 1e-3 * (1 + mu)
        alpha = alpha_for(mu)

    box = defn.get("box")
    if box is None:
        fin = [b for b in bps] or [0.0]
        lo_b, hi_b = min(fin) - 2.0, max(fin) + 2.0
    else:
        lo_b, hi_b = float(box[0]), float(box[1])

    probe = np.linspace(lo_b, hi_b, 2001)
    probe = np.union1d(probe, np.asarray(bps, dtype=float))
    vals = value(probe[:, None])
    fin = np.isfinite(vals)
    if not np.any(fin):
        raise InvalidFunctionError("function has no finite value on its box (not proper)")
    dom_point = np.array([probe[np.argmax(fin)]])

    convex = bool(defn.get("convex", False))
    if convex:
        _check_midpoint_convex(value, probe, defn.get("name", "piecewise"))

    sd = None
    if convex:
        def sd(z):
            z0 = float(z[0])
            fz = value(np.array([[z0]]))[0]
            if not np.isfinite(fz):
                return SubdiffDescription.empty()
            left, right = piece_at(z0, -1), piece_at(z0, 1)
            dl = -INF if left is None else left[1] + 2 * left[2] * z0
            dr = INF if right is None else right[1] + 2 * right[2] * z0
            if dl > dr:
                return SubdiffDescription.empty()
            return SubdiffDescription.box(dl, dr)

    thr = defn.get("threshold")
    return FunctionSpec(
        name=str(defn.get("name", "piecewise")), dim=1, value_oracle=value, convex=convex,
        effective_box=_box1(lo_b, hi_b), curvature=float(curvature), dom_point=dom_point,
        analytic_subdiff=sd, gradient=grad,
        known_threshold=None if thr is None else float(thr),
        breakpoints=tuple(bps), minorant=(float(mu), float(alpha)), lsc_points=tuple(bps),
        box_note="user supplied",
    )


def _check_midpoint_convex(value, pts, name):
    v = value(pts[:, None])
    fin = np.isfinite(v)
    x = pts[fin]
    if x.size < 3:
        return
    sub = x[:: max(1, x.size // 200)]
    X, Y = np.meshgrid(sub, sub)
    fx = value(X.ravel()[:, None])
    fy = value(Y.ravel()[:, None])
    fm = value(((X.ravel() + Y.ravel()) / 2)[:, None])
    if np.any(fm > (fx + fy) / 2 + 1e-9):
        raise InvalidFunctionError(f"{name}: declared convex but midpoint convexity fails")


def resolve_function(spec):
    """Accept a catalog name (``"neg_quad_c:2"``), an inline definition dict, or a FunctionSpec."""
    if isinstance(spec, FunctionSpec):
        return spec
    if isinstance(spec, dict):
        return from_piecewise(spec)
    return catalog_get(spec)


def subgradient_residual(f, pair, testpoints):
    """``max over testpoints y of <x*, y-x> + f(x) - f(y)`` for a pair ``(x, x*)``, floored at 0.

    Testpoints with ``f(y) = +inf`` are skipped. Zero means the subgradient
    inequality holds on every testpoint, which is necessary but not
    sufficient for ``x* in df(x)``.
    """
    if not f.convex:
        raise PreconditionError(f"{f.name} is not convex; the subgradient inequality is global")
    x, xstar = (pair.x, pair.xstar) if hasattr(pair, "xstar") else pair
    x = np.atleast_1d(np.asarray(x, dtype=float))
    fx = f(x)
    if not np.isfinite(fx):
        raise PreconditionError(f"{f.name}({x.tolist()}) is not finite")
    T = np.asarray(testpoints, dtype=float)
    if T.ndim == 1:
        T = T.reshape(-1, f.dim) if f.dim > 1 else T[:, None]
    gap = kernels.subgrad_residual(T, f.values(T), x, fx, np.atleast_1d(np.asarray(xstar, dtype=float)))
    return max(0.0, gap)
