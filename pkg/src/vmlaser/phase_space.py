"""Phase-space grids, distribution slices, majorants and velocity moments."""

from dataclasses import dataclass
from math import comb

import numpy as np

from .numerics import periodic_integral, trapezoid


class ModelVariant:
    """Momentum-velocity closure: non-relativistic or quasi-relativistic."""

    NR = "nr"
    QR = "qr"

    def __init__(self, tag):
        tag = tag.lower()
        if tag not in (self.NR, self.QR):
            raise ValueError(f"unknown model variant {tag!r} (use 'nr' or 'qr')")
        self.tag = tag

    @property
    def is_qr(self):
        return self.tag == self.QR

    def __eq__(self, other):
        return isinstance(other, ModelVariant) and self.tag == other.tag

    def __repr__(self):
        return f"ModelVariant({self.tag!r})"


NR = ModelVariant("nr")
QR = ModelVariant("qr")


def vhat(p, variant):
    """Velocity as a function of momentum: p (NR) or p/sqrt(1+p^2) (QR)."""
    p = np.asarray(p, dtype=float)
    if variant.is_qr:
        return p / np.sqrt(1.0 + p * p)
    return p.copy() if p.ndim else float(p)


def kappa(p, variant):
    """Kinetic energy, the primitive of vhat: p^2/2 (NR), sqrt(1+p^2) (QR)."""
    p = np.asarray(p, dtype=float)
    if variant.is_qr:
        return np.sqrt(1.0 + p * p)
    return 0.5 * p * p


@dataclass(frozen=True)
class PhaseGrid:
    """Periodic x-grid of period L and symmetric truncated p-grid.

    np_ must be odd so that p = 0 is a node and even/odd symmetry checks
    are exact.
    """

    L: float
    nx: int
    p_max: float
    np_: int

    def __post_init__(self):
        if self.nx < 8:
            raise ValueError("nx must be >= 8")
        if self.np_ < 9 or self.np_ % 2 == 0:
            raise ValueError("np must be odd and >= 9")
        if self.L <= 0 or self.p_max <= 0:
            raise ValueError("L and p_max must be positive")

    @property
    def dx(self):
        return self.L / self.nx

    @property
    def dp(self):
        return 2.0 * self.p_max / (self.np_ - 1)

    @property
    def x(self):
        return np.arange(self.nx) * self.dx

    @property
    def p(self):
        p = -self.p_max + np.arange(self.np_) * self.dp
        # enforce exact symmetry p[-1-i] == -p[i]
        return 0.5 * (p - p[::-1])

    def __repr__(self):
        return (f"PhaseGrid(L={self.L}, nx={self.nx}, "
                f"p_max={self.p_max}, np={self.np_})")


class DistSlice:
    """Nonnegative distribution f sampled on a PhaseGrid, shape (nx, np)."""

    def __init__(self, grid, values, support_tol=1e-10):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.nx, grid.np_):
            raise ValueError(f"values shape {values.shape} does not match grid")
        if np.any(values < 0):
            raise ValueError("distribution values must be nonnegative")
        self.grid = grid
        self.values = values
        self.support_tol = support_tol

    @classmethod
    def zero(cls, grid):
        return cls(grid, np.zeros((grid.nx, grid.np_)))

    @classmethod
    def from_function(cls, grid, fn, **kw):
        xx, pp = np.meshgrid(grid.x, grid.p, indexing="ij")
        return cls(grid, fn(xx, pp), **kw)

    def support_ok(self):
        """True when f at |p| = p_max stays below the support tolerance."""
        edge = max(self.values[:, 0].max(), self.values[:, -1].max())
        return edge <= self.support_tol

    def max(self):
        return float(self.values.max())

    def mass(self):
        g = self.grid
        return float(periodic_integral(trapezoid(self.values, g.dp, axis=1), g.dx))


class MajorizingFn:
    """Even, positive majorant g(p) decreasing in |p|, with cached moments."""

    def __init__(self, evaluator, p_max=None, quad_points=20001, quad_span=60.0):
        self.evaluator = evaluator
        span = quad_span if p_max is None else max(quad_span, 2 * p_max)
        self._pq = np.linspace(-span, span, quad_points)
        self._gq = np.asarray(evaluator(self._pq), dtype=float)
        if np.any(self._gq < 0) or float(evaluator(0.0)) <= 0:
            raise ValueError("majorant must be positive at 0 and nonnegative "
                             "(tail underflow to 0 is tolerated)")
        self._dq = self._pq[1] - self._pq[0]
        self._moments = {}

    def __call__(self, p):
        return self.evaluator(np.asarray(p, dtype=float))

    @property
    def g0(self):
        return float(self.evaluator(0.0))

    def moment(self, k):
        """M_k = integral of |p|^k g(p) dp (quadrature over the cached span)."""
        if k not in self._moments:
            self._moments[k] = float(
                np.trapezoid(np.abs(self._pq) ** k * self._gq, dx=self._dq))
        return self._moments[k]


def gaussian_majorant(amplitude=1.0, sigma=1.0):
    return MajorizingFn(lambda p: amplitude * np.exp(-p * p / (2 * sigma ** 2)))


def exponential_majorant(amplitude=1.0, scale=1.0):
    return MajorizingFn(lambda p: amplitude * np.exp(-np.abs(p) / scale))


def g_plateau(g, r):
    """Shifted plateau majorant: g(0) on |p| <= r, g(|p|-r) beyond."""
    if r < 0:
        raise ValueError("shift r must be >= 0")
    if r == 0:
        return g
    g0 = g.g0
    ev = g.evaluator
    return MajorizingFn(
        lambda p: np.where(np.abs(p) <= r, g0, ev(np.abs(p) - r)))


def moment(f, kind, variant, order=None):
    """Velocity moment over the p-grid, one value per x-node.

    kind: 'density' (n), 'flux' (j), 'quasi_density' (n_gamma, identical to
    n in both NR and QR) or 'abs_moment' (m_k, needs `order`).
    """
    g = f.grid
    vals = f.values
    if kind == "density":
        return trapezoid(vals, g.dp, axis=1)
    if kind == "quasi_density":
        # gamma_2 = 1 in both NR and QR, so n_gamma is exactly n
        return trapezoid(vals, g.dp, axis=1)
    if kind == "flux":
        return trapezoid(vals * vhat(g.p, variant)[None, :], g.dp, axis=1)
    if kind == "abs_moment":
        if order is None or order < 0:
            raise ValueError("abs_moment needs a nonnegative order")
        return trapezoid(vals * np.abs(g.p)[None, :] ** order, g.dp, axis=1)
    raise ValueError(f"unknown moment kind {kind!r}")


def density_bound(M0, g0, t, F_norm):
    """A priori sup bound on the density: M0 + 2 g(0) t sup|F|."""
    if min(M0, g0, t, F_norm) < 0:
        raise ValueError("all inputs must be >= 0")
    return M0 + 2.0 * g0 * t * F_norm


def moment_bound_Rk(k, M0, Mk, g0, r):
    """A priori bound on the k-th absolute moment after a support shift r."""
    if k == 0:
        raise ValueError("use density_bound for k = 0")
    if k < 0 or min(M0, Mk, g0, r) < 0:
        raise ValueError("all inputs must be >= 0 and k >= 1")
    head = 2.0 * g0 / (k + 1) * r ** (k + 1)
    tail = sum(comb(k, i) * r ** (k - i) for i in range(1, k + 1)) * (M0 + Mk)
    return head + tail
