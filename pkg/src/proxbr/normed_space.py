"""Finite-dimensional l_p spaces, the half squared norm j and its gradient J."""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionError


@dataclass(frozen=True)
class NormedSpace:
    """R^n with the l_p norm, 1 < p < inf, paired with its dual through the dot product."""

    n: int = 1
    p: float = 2.0
    q: float = field(init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.n!r}")
        p = float(self.p)
        if not (1.0 < p < np.inf):
            raise ValueError(f"norm exponent must lie in (1, inf), got {self.p!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", p / (p - 1.0))

    def vec(self, x):
        v = np.atleast_1d(np.asarray(x, dtype=float))
        if v.ndim != 1 or v.shape[0] != self.n:
            raise DimensionError(f"expected a vector of length {self.n}, got shape {np.shape(x)}")
        return v

    def rows(self, X):
        A = np.asarray(X, dtype=float)
        if A.ndim == 1 and self.n == 1:
            A = A[:, None]
        if A.ndim != 2 or A.shape[1] != self.n:
            raise DimensionError(f"expected rows of length {self.n}, got shape {np.shape(X)}")
        return A

    def norm(self, x):
        return float(kernels.pnorm_rows(self.vec(x)[None, :], self.p)[0])

    def dual_norm(self, xstar):
        return float(kernels.pnorm_rows(self.vec(xstar)[None, :], self.q)[0])

    def j(self, x):
        return 0.5 * self.norm(x) ** 2

    def duality_map(self, x):
        return kernels.duality_map_rows(self.vec(x)[None, :], self.p)[0]

    def pairing(self, xstar, x):
        return float(self.vec(xstar) @ self.vec(x))


def norm(space, x):
    """``(sum |x_i|^p)^(1/p)``."""
    return space.norm(x)


def dual_norm(space, xstar):
    return space.dual_norm(xstar)


def j_value(space, x):
    """Half the squared norm."""
    return space.j(x)


def duality_map(space, x):
    """Single-valued duality map, the gradient of ``j_value``.

    Returns ``||x||_p^(2-p) * |x|^(p-1) * sign(x)``, which satisfies
    ``<J(x), x> = ||x||_p^2`` and ``||J(x)||_q = ||x||_p``.
    """
    return space.duality_map(x)


def lower_pnorm_constant(space):
    """Largest ``c`` with ``||y||_p >= c * ||y||_2`` on R^n."""
    if space.p <= 2.0:
        return 1.0
    return float(space.n ** (1.0 / space.p - 0.5))
