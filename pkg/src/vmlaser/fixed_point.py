"""The recurrence operator (transport + Ampere + Duhamel) and the outer
iteration that converges to its unique fixed point, with convergence
metrics and the blow-up sentinel for the non-relativistic model."""

import math
from dataclasses import dataclass, field

import numpy as np

from .characteristics import (FieldHistory, ForceSampler, assemble_force,
                              transport_history)
from .fields import ampere_history, duhamel_history, poisson_E0
from .phase_space import DistSlice, moment, vhat
from .numerics import spectral_derivative, trapezoid


@dataclass
class IterationTrace:
    """Per-iteration sup-norm deltas of the field iterates plus the
    second-derivative readings watched by the blow-up sentinel."""

    dE: list = field(default_factory=list)
    dA: list = field(default_factory=list)
    dxA_delta: list = field(default_factory=list)
    dF: list = field(default_factory=list)
    sup_dxxA: list = field(default_factory=list)
    sup_dxF: list = field(default_factory=list)
    converged: bool = False
    iterations_used: int = 0
    support_escape: bool = False

    def u(self):
        """The telescoping quantity per iteration: sup|dA| + sup|dF|."""
        return [a + f for a, f in zip(self.dA, self.dF)]


@dataclass
class WindowSolution:
    """Converged (or best-effort) state of one time window."""

    fields: FieldHistory
    dist: np.ndarray          # (nt+1, nx, np)
    n_hist: np.ndarray        # (nt+1, nx)
    j_hist: np.ndarray
    trace: IterationTrace
    f0: DistSlice
    n_ext: np.ndarray
    variant: object

    @property
    def converged(self):
        return self.trace.converged


# evolved densities restarted into later windows carry interpolation-level
# mass drift, so the strict initialization gate is relaxed there
RESTART_NEUTRALITY_RTOL = 1e-4


def apply_L(fields, f0, n_ext, variant, neutrality_rtol=1e-8):
    """One application of the recurrence operator.

    Transports f0 through the force of the input fields, then rebuilds E
    from the Ampere integral of the new flux and A from the Duhamel formula
    with source -n * A_old (new density, input iterate's A).
    """
    grid = fields.grid
    F = assemble_force(fields)
    dist, escaped = transport_history(f0, F, variant)
    dp = grid.dp
    p = grid.p
    n_hist = trapezoid(dist, dp, axis=2)
    j_hist = trapezoid(dist * vhat(p, variant)[None, None, :], dp, axis=2)

    E0 = poisson_E0(n_hist[0], n_ext, grid, rtol=neutrality_rtol)
    E_new = ampere_history(E0, j_hist, fields.dt)
    S = -n_hist * fields.A
    A_new, Adot_new, dxA_new, dxxA_new = duhamel_history(
        fields.A[0], fields.Adot[0], S, grid, fields.dt)
    out = FieldHistory(grid, fields.dt, E_new, A_new, Adot_new, dxA_new,
                       dxxA=dxxA_new)
    return out, dist, n_hist, j_hist, escaped


@dataclass
class SolverConfig:
    t_end: float
    nt: int
    tol_fp: float = 1e-9
    max_iters: int = 60

    @property
    def dt(self):
        return self.t_end / self.nt


def solve_window(f0, A0, Adot0, n_ext, grid, variant, config,
                 neutrality_rtol=1e-8):
    """Iterate the recurrence operator from the constant-in-time extension
    of the initial data until sup|dA| + sup|dF| falls below the tolerance.

    Always returns a WindowSolution; non-convergence is reported through
    the trace, never raised.
    """
    n0 = trapezoid(f0.values, grid.dp, axis=1)
    E0 = poisson_E0(n0, n_ext, grid, rtol=neutrality_rtol)
    fields = FieldHistory.constant_extension(
        grid, config.dt, config.nt, E0, A0, Adot0)
    trace = IterationTrace()
    F_old = fields.force_array()
    dist = n_hist = j_hist = None
    for k in range(1, config.max_iters + 1):
        new_fields, dist, n_hist, j_hist, escaped = apply_L(
            fields, f0, n_ext, variant, neutrality_rtol=neutrality_rtol)
        trace.support_escape = trace.support_escape or escaped
        F_new = new_fields.force_array()
        dA = float(np.abs(new_fields.A - fields.A).max())
        dF = float(np.abs(F_new - F_old).max())
        trace.dE.append(float(np.abs(new_fields.E - fields.E).max()))
        trace.dA.append(dA)
        trace.dxA_delta.append(float(np.abs(new_fields.dxA - fields.dxA).max()))
        trace.dF.append(dF)
        trace.sup_dxxA.append(float(np.abs(new_fields.dxxA).max()))
        trace.sup_dxF.append(
            float(np.abs(spectral_derivative(F_new, grid.L, axis=1)).max()))
        fields, F_old = new_fields, F_new
        trace.iterations_used = k
        if dA + dF <= config.tol_fp:
            trace.converged = True
            break
    return WindowSolution(fields, dist, n_hist, j_hist, trace,
                          f0, np.asarray(n_ext, dtype=float), variant)


class WindowNotConverged(RuntimeError):
    def __init__(self, partial):
        super().__init__("fixed-point iteration did not converge; "
                         "partial results attached")
        self.partial = partial


@dataclass
class GlobalSolution:
    """Window solutions stitched over [0, T_total]."""

    windows: list
    grid: object
    dt: float

    @property
    def converged(self):
        return all(w.converged for w in self.windows)

    def slice_times(self):
        ts = [0.0]
        for w in self.windows:
            t0 = ts[-1]
            ts.extend(t0 + (np.arange(w.fields.nt) + 1) * w.fields.dt)
        return np.array(ts)

    def stitched(self, attr):
        """Concatenate per-window histories, dropping duplicated restart
        slices."""
        parts = []
        for i, w in enumerate(self.windows):
            arr = getattr(w, attr) if hasattr(w, attr) else getattr(w.fields, attr)
            parts.append(arr if i == 0 else arr[1:])
        return np.concatenate(parts, axis=0)


def solve(f0, A0, Adot0, n_ext, grid, variant, config,
          window_length=None, max_halvings=3):
    """Chain window solves over [0, t_end], restarting each window from the
    final slice of the previous one (E is rebuilt from the Poisson integral
    of the restarted f0, so the Gauss constraint is re-imposed).

    On a non-converged window the window is split in half (same dt), up to
    `max_halvings` times; if it still fails, WindowNotConverged carries the
    partial GlobalSolution.
    """
    if window_length is None:
        window_length = min(config.t_end, 1.0)
    n_windows = round(config.t_end / window_length)
    if abs(n_windows * window_length - config.t_end) > 1e-12 * config.t_end:
        raise ValueError("t_end must be an integer number of windows")
    nt_w = round(config.nt / n_windows)
    if nt_w * n_windows != config.nt:
        raise ValueError("nt must split evenly across windows")

    windows = []
    cur_f0, cur_A0, cur_Adot0 = f0, np.asarray(A0, float), np.asarray(Adot0, float)

    def run_piece(piece_f0, pA0, pAdot0, length, nt, depth, strict):
        cfg = SolverConfig(t_end=length, nt=nt, tol_fp=config.tol_fp,
                           max_iters=config.max_iters)
        rtol = 1e-8 if strict else RESTART_NEUTRALITY_RTOL
        sol = solve_window(piece_f0, pA0, pAdot0, n_ext, grid, variant, cfg,
                           neutrality_rtol=rtol)
        if sol.converged:
            return [sol]
        if depth >= max_halvings or nt < 2 or nt % 2 != 0:
            return [sol]  # give up; caller sees the non-converged trace
        first = run_piece(piece_f0, pA0, pAdot0, length / 2, nt // 2,
                          depth + 1, strict)
        if not first[-1].converged:
            return first
        w = first[-1]
        nf0 = DistSlice(grid, w.dist[-1], support_tol=piece_f0.support_tol)
        second = run_piece(nf0, w.fields.A[-1], w.fields.Adot[-1],
                           length / 2, nt // 2, depth + 1, False)
        return first + second

    for wi in range(n_windows):
        pieces = run_piece(cur_f0, cur_A0, cur_Adot0, window_length, nt_w, 0,
                           wi == 0)
        windows.extend(pieces)
        last = pieces[-1]
        if not last.converged:
            raise WindowNotConverged(GlobalSolution(windows, grid, config.dt))
        cur_f0 = DistSlice(grid, last.dist[-1], support_tol=f0.support_tol)
        cur_A0 = last.fields.A[-1]
        cur_Adot0 = last.fields.Adot[-1]
    return GlobalSolution(windows, grid, config.dt)


def telescope_envelope(a, b, c, t, k):
    """Bound on the k-th telescoping increment:
    a * sum_{i=1..k-1} (b t)^i / i!  +  c * (b t)^k / k!."""
    if min(a, b, c, t) < 0 or k < 0:
        raise ValueError("a, b, c, t must be >= 0 and k >= 0")
    bt = b * t
    head = a * sum(bt ** i / math.factorial(i) for i in range(1, k))
    return head + c * bt ** k / math.factorial(k)


def fit_envelope_rate(trace, t):
    """Smallest b such that u_k <= u_0 (b t)^k / k! for every recorded k."""
    u = trace.u()
    if len(u) < 2 or u[0] <= 0:
        return 0.0
    rates = []
    for k in range(1, len(u)):
        if u[k] <= 0:
            continue
        rates.append((u[k] * math.factorial(k) / u[0]) ** (1.0 / k) / t)
    return max(rates) if rates else 0.0


def blowup_sentinel(trace, growth_factor=10.0, lookback=5):
    """Advisory WARN when the second-derivative readings grow monotonically
    by more than `growth_factor` over the last `lookback` recorded
    iterations (fewer when the trace is shorter, minimum 3) -- the
    numerical signature of passing the NR existence horizon."""
    warned = []
    for name, series in (("sup_dxxA", trace.sup_dxxA),
                         ("sup_dxF", trace.sup_dxF)):
        n = min(lookback, len(series))
        if n < 3:
            continue
        tail = series[-n:]
        monotone = all(tail[i + 1] > tail[i] for i in range(n - 1))
        if monotone and tail[0] > 0 and tail[-1] / tail[0] > growth_factor:
            warned.append(name)
    return dict(warn=bool(warned), quantities=warned)
