"""Boundedness-below probes of f + lam*j and the prox-boundedness threshold."""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InconclusiveError

BOUNDED = "bounded"
UNBOUNDED = "unbounded"
INCONCLUSIVE = "inconclusive"

PROBE_POINTS = {1: 401, 2: 101, 3: 31}
STABLE_TOL = 1e-9
STABLE_COUNT = 2
DECREASE_STEP = 1.0
DECREASE_COUNT = 6
LAMBDA_SCHEDULE = tuple(2.0 ** k for k in range(-10, 11))


@dataclass(frozen=True)
class Probe:
    lam: float
    verdict: str
    radius: float


@dataclass
class ThresholdEstimate:
    lower: float
    upper: float
    probes: list = field(default_factory=list)
    prox_bounded: bool = True

    @property
    def value(self):
        """Working estimate: 0 when no probe was unbounded, else the smallest bounded lambda."""
        if not any(pr.verdict == UNBOUNDED for pr in self.probes):
            return 0.0
        return self.upper

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, lam):
        return self.lower <= lam <= self.upper

    def consistent_with(self, known, tol):
        return abs(self.value - known) <= max(tol, 0.05 * known)


def _ball_grid(n, R, p, extra):
    k = PROBE_POINTS.get(n, 15)
    axes = [np.union1d(np.linspace(-R, R, k), extra[(extra >= -R) & (extra <= R)]) if n == 1
            else np.linspace(-R, R, k) for _ in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.stack([m.ravel() for m in mesh], axis=1)
    P = np.vstack([P, np.zeros((1, n))])
    return P[kernels.pnorm_rows(P, p) <= R * (1 + 1e-12)]


def _probe(fun, space, breakpoints, radius_cap, r0=1.0):
    """Run the doubling schedule on ``fun`` (rows -> values); returns (verdict, radius)."""
    n, p = space.n, space.p
    extra = np.asarray(breakpoints, dtype=float) if n == 1 else np.empty(0)
    R = min(r0, radius_cap)
    m = float(fun(_ball_grid(n, R, p, extra)).min())
    stable = 0
    falls = 0
    while 2 * R <= radius_cap:
        R *= 2
        m2 = min(m, float(fun(_ball_grid(n, R, p, extra)).min()))
        stable = stable + 1 if (np.isfinite(m2) and abs(m2 - m) <= STABLE_TOL) else 0
        falls = falls + 1 if m - m2 >= DECREASE_STEP else 0
        m = m2
        if stable >= STABLE_COUNT:
            return BOUNDED, R
        if falls >= DECREASE_COUNT:
            return UNBOUNDED, R
    return INCONCLUSIVE, R


def _reg(f, space, lam, x=None, xstar=None):
    shift = np.zeros(space.n) if x is None else space.vec(x)
    tilt = np.zeros(space.n) if xstar is None else space.vec(xstar)

    def fun(Y):
        fv = f.values(shift + Y)
        return kernels.regularized_values(fv, Y, tilt, lam, space.p)

    return fun


def boundedness_probe(f, space, lam, radius_cap=2.0 ** 30):
    """Three-valued test of whether ``f + lam*j`` is bounded below.

    The grid minimum ``m(R)`` over the ball of radius ``R`` is tracked while
    ``R`` doubles. Two consecutive changes of at most 1e-9 mean bounded; six
    consecutive drops of at least 1 mean unbounded.
    """
    verdict, R = _probe(_reg(f, space, lam), space, f.breakpoints, radius_cap)
    return Probe(float(lam), verdict, R)


def shifted_boundedness(f, space, x, lam, radius_cap=2.0 ** 30):
    """``boundedness_probe`` for ``y -> f(x+y) + lam*j(y)``."""
    x = space.vec(x)
    bps = tuple(np.asarray(f.breakpoints, dtype=float) - x[0]) if space.n == 1 else ()
    verdict, R = _probe(_reg(f, space, lam, x=x), space, bps, radius_cap)
    return Probe(float(lam), verdict, R)


def conjugate_domain_member(f, space, xstar, radius_cap=2.0 ** 30):
    """Is ``inf (f - x*) > -inf`` at probe scale? (membership of x* in dom f*)"""
    verdict, R = _probe(_reg(f, space, 0.0, xstar=xstar), space, f.breakpoints, radius_cap)
    return Probe(0.0, verdict, R)


def estimate_threshold(f, space, tol=0.05, radius_cap=2.0 ** 30, schedule=LAMBDA_SCHEDULE):
    """Bracket the prox-boundedness threshold by a power-of-two sweep and bisection."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    probes = [boundedness_probe(f, space, lam, radius_cap) for lam in schedule]
    bounded = [pr.lam for pr in probes if pr.verdict == BOUNDED]
    unbounded = [pr.lam for pr in probes if pr.verdict == UNBOUNDED]
    if not bounded and not unbounded:
        raise InconclusiveError(f"{f.name}: every boundedness probe was inconclusive")
    if not unbounded:
        return ThresholdEstimate(0.0, min(bounded), probes, True)
    if not bounded:
        return ThresholdEstimate(max(unbounded), max(schedule), probes, False)
    hi = min(bounded)
    below = [u for u in unbounded if u < hi]
    lo = max(below) if below else 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        pr = boundedness_probe(f, space, mid, radius_cap)
        probes.append(pr)
        if pr.verdict == BOUNDED:
            hi = mid
        elif pr.verdict == UNBOUNDED:
            lo = mid
        else:
            break
    return ThresholdEstimate(lo, hi, probes, True)
