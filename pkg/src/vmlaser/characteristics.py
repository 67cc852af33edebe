"""Backward characteristic tracing and semi-Lagrangian transport.

The distribution at a time slice is obtained by tracing every grid node
back to t = 0 through the force field (classical RK4, one step per slice)
and evaluating the initial distribution at the foot of the characteristic.
"""

import numpy as np

from .numerics import periodic_cubic, spectral_derivative, trapezoid
from .phase_space import DistSlice, vhat


class FieldHistory:
    """E, A, dA/dt and dA/dx sampled on (time slice, x-node).

    All arrays have shape (nt+1, nx); dxA is carried explicitly because the
    Duhamel update produces it independently of A.
    """

    def __init__(self, grid, dt, E, A, Adot, dxA, dxxA=None):
        self.grid = grid
        self.dt = float(dt)
        arrays = dict(E=E, A=A, Adot=Adot, dxA=dxA)
        shapes = {k: np.asarray(v).shape for k, v in arrays.items()}
        if len(set(shapes.values())) != 1:
            raise ValueError(f"field arrays must share a shape, got {shapes}")
        self.E = np.asarray(E, dtype=float)
        self.A = np.asarray(A, dtype=float)
        self.Adot = np.asarray(Adot, dtype=float)
        self.dxA = np.asarray(dxA, dtype=float)
        self.dxxA = None if dxxA is None else np.asarray(dxxA, dtype=float)
        if self.E.shape[1] != grid.nx:
            raise ValueError("field arrays do not match the x-grid")

    @property
    def nt(self):
        return self.E.shape[0] - 1

    @property
    def t_end(self):
        return self.nt * self.dt

    @classmethod
    def constant_extension(cls, grid, dt, nt, E0, A0, Adot0):
        """Initial iterate: fields frozen at their t = 0 values on nt+1
        slices; dxA extended from the spatial derivative of A0."""
        tile = lambda a: np.tile(np.asarray(a, dtype=float), (nt + 1, 1))
        dxA0 = spectral_derivative(A0, grid.L)
        return cls(grid, dt, tile(E0), tile(A0), tile(Adot0), tile(dxA0))

    def force_array(self):
        return self.E + self.A * self.dxA


class ForceSampler:
    """Evaluates F(t, x) = E + A dA/dx from a FieldHistory: linear
    interpolation in time between slices, periodic cubic in x."""

    def __init__(self, fields):
        self.fields = fields
        self.grid = fields.grid
        self.dt = fields.dt
        self.F = fields.force_array()
        self.dxF = spectral_derivative(self.F, self.grid.L, axis=1)

    def sup_norm(self):
        return float(np.abs(self.F).max())

    def sup_dxF(self):
        return float(np.abs(self.dxF).max())

    def running_sup(self):
        """sup over (0, s) of |F| for each slice time s (monotone array)."""
        return np.maximum.accumulate(np.abs(self.F).max(axis=1))

    def __call__(self, t, x):
        nt = self.fields.nt
        s = np.clip(t / self.dt, 0.0, nt)
        s0 = min(int(np.floor(s)), nt - 1) if nt > 0 else 0
        w = s - s0
        row = periodic_cubic(self.F[s0], x, self.grid.L)
        if nt == 0 or w == 0.0:
            return row
        row1 = periodic_cubic(self.F[s0 + 1], x, self.grid.L)
        return (1.0 - w) * row + w * row1


def assemble_force(fields):
    return ForceSampler(fields)


def _rk4_step_back(x, p, t1, h, F, variant):
    """One backward RK4 step from time t1 to t1 - h for
    dX/ds = vhat(P), dP/ds = -F(s, X)."""
    k1x = vhat(p, variant)
    k1p = -F(t1, x)
    k2x = vhat(p - 0.5 * h * k1p, variant)
    k2p = -F(t1 - 0.5 * h, x - 0.5 * h * k1x)
    k3x = vhat(p - 0.5 * h * k2p, variant)
    k3p = -F(t1 - 0.5 * h, x - 0.5 * h * k2x)
    k4x = vhat(p - h * k3p, variant)
    k4p = -F(t1 - h, x - h * k3x)
    xn = x - (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
    pn = p - (h / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
    return xn, pn


def trace_back(slice_index, x, p, F, variant, substeps=1):
    """Trace the characteristic ending at (x, p) on slice `slice_index`
    back to s = 0. Returns (X0, P0, X0_wrapped) with X0 unwrapped and the
    wrapped representative in [0, L)."""
    if not (0 <= slice_index <= F.fields.nt):
        raise ValueError("slice index outside the stored window")
    dt = F.dt
    h = dt / substeps
    X = np.asarray(x, dtype=float).copy()
    P = np.asarray(p, dtype=float).copy()
    for s in range(slice_index, 0, -1):
        for m in range(substeps):
            t1 = s * dt - m * h
            X, P = _rk4_step_back(X, P, t1, h, F, variant)
    return X, P, np.mod(X, F.grid.L)


def trace_back_all_slices(F, variant):
    """Feet of the characteristics for every grid node of every slice.

    Returns arrays X0, P0 of shape (nt+1, nx, np): entry [s] is the foot at
    t = 0 of the characteristic ending at that node on slice s. All slices
    are advanced in one backward sweep so each time level costs a single
    vectorized RK4 step.
    """
    grid = F.grid
    nt = F.fields.nt
    dt = F.dt
    xx, pp = np.meshgrid(grid.x, grid.p, indexing="ij")
    X = np.broadcast_to(xx, (nt + 1, grid.nx, grid.np_)).copy()
    P = np.broadcast_to(pp, (nt + 1, grid.nx, grid.np_)).copy()
    for s in range(nt, 0, -1):
        # all slices with index >= s take the step from s*dt to (s-1)*dt
        Xa, Pa = _rk4_step_back(X[s:], P[s:], s * dt, dt, F, variant)
        X[s:] = Xa
        P[s:] = Pa
    return X, P


def eval_f0(f0, X, P):
    """Evaluate an initial DistSlice at arbitrary phase-space points:
    quintic Lagrange per axis, periodic in x, clamped in p (0 outside the
    p-domain), negative undershoots floored at 0.

    Quintic (rather than cubic) keeps the transport interpolation error
    well below the O(dx^2) quadrature terms of the field updates, so the
    energy drift of a converged run refines cleanly with the grid.
    """
    from .numerics import _quintic_weights
    grid = f0.grid
    n = grid.nx
    npts = grid.np_
    xi = X / grid.dx
    bx = np.floor(xi).astype(np.int64)
    wx = _quintic_weights(xi - bx)
    pi = (P + grid.p_max) / grid.dp
    inside = (pi >= 0.0) & (pi <= npts - 1.0)
    pi_safe = np.clip(pi, 0.0, npts - 1.0)
    bp = np.clip(np.floor(pi_safe).astype(np.int64), 2, npts - 4)
    wp = _quintic_weights(pi_safe - bp)
    total = np.zeros(np.broadcast(X, P).shape)
    for k in range(6):
        ixk = (bx + k - 2) % n
        col = np.zeros_like(total)
        for l in range(6):
            col += wp[l] * f0.values[ixk, bp + l - 2]
        total += wx[k] * col
    return np.where(inside, np.maximum(total, 0.0), 0.0)


def transport_f0(f0, F, slice_index, variant):
    """Characteristic solution at one slice: trace back, evaluate f0."""
    if slice_index == 0:
        return DistSlice(f0.grid, f0.values.copy(),
                         support_tol=f0.support_tol), False
    grid = f0.grid
    xx, pp = np.meshgrid(grid.x, grid.p, indexing="ij")
    X0, P0, _ = trace_back(slice_index, xx, pp, F, variant)
    values = eval_f0(f0, X0, P0)
    escaped = _support_escape(f0, P0)
    return DistSlice(grid, values, support_tol=f0.support_tol), escaped


def _support_escape(f0, P0):
    """Fraction of feet leaving the p-domain where f0 is still above the
    support tolerance must stay below 1e-6."""
    grid = f0.grid
    outside = np.abs(P0) > grid.p_max
    if not np.any(outside):
        return False
    edge = max(f0.values[:, 0].max(), f0.values[:, -1].max())
    if edge <= f0.support_tol:
        return False
    return float(np.mean(outside)) > 1e-6


def transport_history(f0, F, variant):
    """Distribution at every slice of the window (one backward sweep).

    Returns (values array of shape (nt+1, nx, np), escape_flag).
    """
    if f0.values.max() == 0.0:
        # vacuum transports to vacuum; skip the backward sweep entirely
        shape = (F.fields.nt + 1, f0.grid.nx, f0.grid.np_)
        return np.zeros(shape), False
    X0, P0 = trace_back_all_slices(F, variant)
    values = eval_f0(f0, X0, P0)
    values[0] = f0.values  # slice 0 is f0 itself, bypass interpolation
    return values, _support_escape(f0, P0)


def divergence_check(F1, F2, samples, variant):
    """Compare foot divergence for two forces against the a priori bounds
    t * int ||F1-F2|| and int ||F1-F2||. Returns a report dict with the
    max observed ratio."""
    if F1.grid is not F2.grid and F1.grid != F2.grid:
        raise ValueError("samplers must share a grid")
    dt = F1.dt
    diff = np.abs(F1.F - F2.F).max(axis=1)
    run = np.maximum.accumulate(diff)  # ||F1 - F2||_s at slice times
    entries = []
    max_ratio = 0.0
    for (s, x, p) in samples:
        X1, P1, _ = trace_back(s, x, p, F1, variant)
        X2, P2, _ = trace_back(s, x, p, F2, variant)
        t = s * dt
        int_norm = float(trapezoid(run[:s + 1], dt)) if s > 0 else 0.0
        dX = float(np.abs(X1 - X2))
        dP = float(np.abs(P1 - P2))
        bound_X = t * int_norm
        bound_P = int_norm
        rX = dX / bound_X if bound_X > 0 else (0.0 if dX == 0 else np.inf)
        rP = dP / bound_P if bound_P > 0 else (0.0 if dP == 0 else np.inf)
        ratio = max(rX, rP)
        max_ratio = max(max_ratio, ratio)
        entries.append(dict(slice=s, x=x, p=p, dX=dX, dP=dP,
                            bound_X=bound_X, bound_P=bound_P, ratio=ratio))
    return dict(entries=entries, max_ratio=max_ratio)
