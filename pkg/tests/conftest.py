"""Shared fixtures. The expensive reference-resolution runs are session
scoped so the acceptance criteria can share them."""

import time

import numpy as np
import pytest

from vmlaser.fixed_point import SolverConfig, solve
from vmlaser.harness import builtin_f0
from vmlaser.phase_space import NR, QR, DistSlice, PhaseGrid

REF = dict(L=2.0 * np.pi, nx=64, p_max=8.0, np_=129)


@pytest.fixture(scope="session")
def grid_ref():
    return PhaseGrid(REF["L"], REF["nx"], REF["p_max"], REF["np_"])


@pytest.fixture(scope="session")
def grid_small():
    return PhaseGrid(2.0 * np.pi, 32, 8.0, 65)


def _histories(sol):
    return dict(sol=sol,
                t=sol.slice_times(),
                dist=sol.stitched("dist"),
                n=sol.stitched("n_hist"),
                j=sol.stitched("j_hist"),
                E=sol.stitched("E"),
                A=sol.stitched("A"),
                Adot=sol.stitched("Adot"),
                dxA=sol.stitched("dxA"),
                dxxA=sol.stitched("dxxA"))


@pytest.fixture(scope="session")
def run_free_stream(grid_ref):
    """Uniform neutral Maxwellian, no wave (acceptance run 2)."""
    g = grid_ref
    f0, _ = builtin_f0("uniform_maxwellian(1)", g, QR)
    t0 = time.perf_counter()
    sol = solve(f0, np.zeros(g.nx), np.zeros(g.nx), np.ones(g.nx),
                g, QR, SolverConfig(1.0, 64), window_length=1.0)
    out = _histories(sol)
    out["elapsed"] = time.perf_counter() - t0
    out["f0"] = f0
    out["n_ext"] = np.ones(g.nx)
    return out


@pytest.fixture(scope="session")
def run3(grid_ref):
    """Modulated Maxwellian (eps 0.1) plus pump A0 = 0.1 sin x, QR
    (acceptance run 3)."""
    g = grid_ref
    f0, _ = builtin_f0("modulated_maxwellian(1, 0.1, 1)", g, QR)
    t0 = time.perf_counter()
    sol = solve(f0, 0.1 * np.sin(g.x), np.zeros(g.nx), np.ones(g.nx),
                g, QR, SolverConfig(1.0, 64), window_length=1.0)
    out = _histories(sol)
    out["elapsed"] = time.perf_counter() - t0
    out["f0"] = f0
    out["n_ext"] = np.ones(g.nx)
    return out


@pytest.fixture(scope="session")
def run4_refined():
    """Run 3 with dt, dx, dp halved (refinement leg of acceptance 4)."""
    g = PhaseGrid(2.0 * np.pi, 128, 8.0, 257)
    f0, _ = builtin_f0("modulated_maxwellian(1, 0.1, 1)", g, QR)
    t0 = time.perf_counter()
    sol = solve(f0, 0.1 * np.sin(g.x), np.zeros(g.nx), np.ones(g.nx),
                g, QR, SolverConfig(1.0, 128), window_length=1.0)
    out = _histories(sol)
    out["elapsed"] = time.perf_counter() - t0
    out["grid"] = g
    out["n_ext"] = np.ones(g.nx)
    return out


@pytest.fixture(scope="session")
def free_stream_baseline(grid_ref):
    """Continuity residual of force-free advection of a modulated
    Maxwellian, with the transported distribution written down in closed
    form (no solver involved): the pure discretization error of the
    residual operator at run-3 resolution."""
    from vmlaser.diagnostics import continuity_residual
    from vmlaser.numerics import trapezoid
    from vmlaser.phase_space import vhat
    g = grid_ref
    dt = 1.0 / 64
    phi_p = np.exp(-0.5 * g.p ** 2) / np.sqrt(2.0 * np.pi)
    v = vhat(g.p, QR)
    n = np.empty((65, g.nx))
    j = np.empty((65, g.nx))
    for m in range(65):
        shifted = g.x[:, None] - v[None, :] * (m * dt)
        f = (1.0 + 0.5 * np.cos(shifted)) * phi_p[None, :]
        n[m] = trapezoid(f, g.dp, axis=1)
        j[m] = trapezoid(f * v[None, :], g.dp, axis=1)
    res = continuity_residual(n, j, dt, g)
    return float(res[1:-1].max())
