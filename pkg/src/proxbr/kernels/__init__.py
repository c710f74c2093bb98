"""Hot numeric kernels with a selectable backend.

Set ``PROXBR_USE_NUMBA=0`` to force the pure-numpy path. The numba path is
used by default whenever numba imports cleanly. Both backends return
identical tie-breaking (first index of the minimum).
"""
import os

import numpy as np

from . import _numpy as numpy_backend

_FLAG = os.environ.get("PROXBR_USE_NUMBA", "1").strip().lower()

try:
    from . import _numba as numba_backend
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None

if _FLAG in ("0", "false", "no", "off") or numba_backend is None:
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    _impl = numba_backend
    BACKEND = "numba"


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _rows(a):
    a = _f64(a)
    return a.reshape(a.shape[0], -1) if a.ndim != 2 else a


def pnorm_rows(X, p):
    return _impl.pnorm_rows(_rows(X), float(p))


def duality_map_rows(X, p):
    return _impl.duality_map_rows(_rows(X), float(p))


def regularized_values(fvals, Y, xstar, lam, p):
    return _impl.regularized_values(_f64(fvals), _rows(Y), _f64(xstar), float(lam), float(p))


def cell_lower_bounds(vertex_vals, widths, curv):
    return _impl.cell_lower_bounds(_rows(vertex_vals), _rows(widths), float(curv))


def violation_min(Y, YS, x, xs):
    val, i = _impl.violation_min(_rows(Y), _rows(YS), _f64(x), _f64(xs))
    return float(val), int(i)


def entourage_search(Y, YS, x, xs, p, q, rx, rxs):
    s, i, dx, dxs = _impl.entourage_search(
        _rows(Y), _rows(YS), _f64(x), _f64(xs), float(p), float(q), float(rx), float(rxs)
    )
    return float(s), int(i), float(dx), float(dxs)


def ekeland_descend(fvals, P, start_f, start_pt, slope, p, atol=1e-12):
    idx = _impl.ekeland_descend(
        _f64(fvals), _rows(P), float(start_f), _f64(start_pt), float(slope), float(p), float(atol)
    )
    if idx == -2:
        raise RuntimeError("ekeland descent did not terminate")
    return int(idx)


def subgrad_residual(Y, fY, x, fx, xs):
    return float(_impl.subgrad_residual(_rows(Y), _f64(fY), _f64(x), float(fx), _f64(xs)))
