"""Periodic steady states f_inf = gamma(kappa(p) - Phi(x) - alpha) with
prescribed mass, neutral perturbations of them, and stability experiments."""

from dataclasses import dataclass

import numpy as np

from .diagnostics import (h1_distance, lp_distance, relative_entropy,
                          solve_potential, transversal_energy)
from .numerics import periodic_integral, spectral_derivative, trapezoid
from .phase_space import DistSlice, kappa, moment


@dataclass(frozen=True)
class EntropyGenerator:
    """Strictly convex entropy density sigma with derivatives and the
    generalized inverse gamma of -sigma', extended by 0."""

    name: str
    sigma: callable
    sigma_prime: callable
    sigma_pp: callable
    gamma: callable

    def check_consistency(self, s_samples=None, tol=1e-10):
        """gamma(-sigma'(s)) = s on a log-spaced sample of (0, inf)."""
        if s_samples is None:
            s_samples = np.logspace(-6, 2, 25)
        s = np.asarray(s_samples, dtype=float)
        back = self.gamma(-self.sigma_prime(s))
        err = float(np.abs(back - s).max())
        if err > tol:
            raise ValueError(
                f"generator {self.name!r} fails gamma(-sigma') = id "
                f"(max error {err:.3e})")
        if np.any(np.asarray(self.sigma_pp(s)) <= 0):
            raise ValueError(f"generator {self.name!r} is not strictly convex")
        return err


def maxwellian_generator():
    """sigma(s) = s ln s - s (sigma(0) = 0), gamma(s) = e^{-s}."""
    def sigma(s):
        s = np.asarray(s, dtype=float)
        out = np.where(s > 0, s * np.log(np.maximum(s, 1e-300)) - s, 0.0)
        return out if out.ndim else float(out)
    return EntropyGenerator(
        name="maxwellian",
        sigma=sigma,
        sigma_prime=lambda s: np.log(s),
        sigma_pp=lambda s: 1.0 / np.asarray(s, dtype=float),
        gamma=lambda s: np.exp(-np.asarray(s, dtype=float)),
    )


def power_generator(q):
    """sigma(s) = s^q/(q-1); gamma(s) = ((q-1) max(-s,0)/q)^{1/(q-1)}."""
    if q <= 1:
        raise ValueError("power generator needs q > 1")
    def gamma(s):
        s = np.asarray(s, dtype=float)
        return ((q - 1.0) * np.maximum(-s, 0.0) / q) ** (1.0 / (q - 1.0))
    return EntropyGenerator(
        name=f"power:{q}",
        sigma=lambda s: np.asarray(s, dtype=float) ** q / (q - 1.0),
        sigma_prime=lambda s: q * np.asarray(s, dtype=float) ** (q - 1.0) / (q - 1.0),
        sigma_pp=lambda s: q * np.asarray(s, dtype=float) ** (q - 2.0),
        gamma=gamma,
    )


def make_generator(spec):
    """'maxwellian' or 'power:q'."""
    spec = spec.strip().lower()
    if spec == "maxwellian":
        return maxwellian_generator()
    if spec.startswith("power:"):
        return power_generator(float(spec.split(":", 1)[1]))
    raise ValueError(f"unknown entropy generator {spec!r}")


@dataclass
class Equilibrium:
    f_inf: DistSlice
    Phi_inf: np.ndarray
    alpha: float
    mass: float
    gen: EntropyGenerator
    variant: object
    n_ext: np.ndarray


def _mass_of_alpha(alpha, phi, grid, gen, variant):
    """Total mass of gamma(kappa(p) - phi(x) - alpha) on the grid."""
    arg = kappa(grid.p, variant)[None, :] - np.asarray(phi)[:, None] - alpha
    vals = gen.gamma(arg)
    return float(periodic_integral(trapezoid(vals, grid.dp, axis=1), grid.dx)), vals


def _solve_alpha(M, phi, grid, gen, variant, rtol=1e-12):
    """Bisection on the strictly increasing mass-vs-alpha map."""
    lo, hi = -1.0, 1.0
    while _mass_of_alpha(lo, phi, grid, gen, variant)[0] > M:
        lo = 2 * lo - 1
        if lo < -1e6:
            raise ValueError("mass unreachable: no alpha small enough")
    while _mass_of_alpha(hi, phi, grid, gen, variant)[0] < M:
        hi = 2 * hi + 1
        if hi > 1e6:
            raise ValueError(
                "mass unreachable on this p-grid (gamma support too small)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        m, _ = _mass_of_alpha(mid, phi, grid, gen, variant)
        if m < M:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def homogeneous_equilibrium(M, grid, gen, variant):
    """Steady state with constant exterior density n_ext = M/L: Phi = 0 and
    alpha fixed by the mass constraint."""
    phi = np.zeros(grid.nx)
    alpha = _solve_alpha(M, phi, grid, gen, variant)
    _, vals = _mass_of_alpha(alpha, phi, grid, gen, variant)
    edge = max(vals[:, 0].max(), vals[:, -1].max())
    f = DistSlice(grid, vals, support_tol=max(1e-10, 2.0 * edge))
    n_ext = np.full(grid.nx, M / grid.L)
    return Equilibrium(f, phi, alpha, M, gen, variant, n_ext)


def solve_equilibrium(M, n_ext, grid, gen, variant, omega=0.5,
                      tol=1e-10, max_sweeps=2000):
    """Damped Picard iteration on the potential: n_k from the current
    (Phi_k, alpha_k), alpha re-solved for mass M each sweep, then
    Phi_{k+1} = (1-omega) Phi_k + omega solve_potential(n_k).

    The damping halves adaptively when the update grows. The returned
    potential satisfies int Phi n_ext = 0 with alpha shifted so Phi + alpha
    (the physically meaningful combination) is unchanged.
    """
    n_ext = np.asarray(n_ext, dtype=float)
    if np.any(n_ext <= 0):
        raise ValueError("n_ext must be positive")
    if abs(periodic_integral(n_ext, grid.dx) - M) > 1e-8 * M:
        raise ValueError("n_ext must integrate to the prescribed mass M")
    phi = np.zeros(grid.nx)
    w = omega
    prev_delta = np.inf
    history = []
    for sweep in range(max_sweeps):
        alpha = _solve_alpha(M, phi, grid, gen, variant)
        _, vals = _mass_of_alpha(alpha, phi, grid, gen, variant)
        n = trapezoid(vals, grid.dp, axis=1)
        target = solve_potential(n, n_ext, grid)
        new_phi = (1.0 - w) * phi + w * target
        delta = float(np.abs(new_phi - phi).max())
        history.append(delta)
        if delta > prev_delta and w > 1.0 / 64:
            w *= 0.5
            continue
        phi, prev_delta = new_phi, delta
        if delta <= tol:
            break
    else:
        raise RuntimeError(
            f"equilibrium Picard iteration did not converge in {max_sweeps} "
            f"sweeps (last deltas {history[-5:]})")
    alpha = _solve_alpha(M, phi, grid, gen, variant)
    shift = (periodic_integral(phi * n_ext, grid.dx)
             / periodic_integral(n_ext, grid.dx))
    phi = phi - shift
    alpha = alpha + shift
    _, vals = _mass_of_alpha(alpha, phi, grid, gen, variant)
    edge = max(vals[:, 0].max(), vals[:, -1].max())
    f = DistSlice(grid, vals, support_tol=max(1e-10, 2.0 * edge))
    return Equilibrium(f, phi, alpha, M, gen, variant, n_ext)


def poisson_residual(eq):
    """max |D_x^2 Phi + n_ext - n| for the constructed equilibrium."""
    g = eq.f_inf.grid
    n = moment(eq.f_inf, "density", eq.variant)
    lap = spectral_derivative(eq.Phi_inf, g.L, order=2)
    return float(np.abs(lap + np.asarray(eq.n_ext) - n).max())


def stationarity_residual(eq, variant):
    """max over interior nodes of p_hat D_x f + (D_x Phi) D_p f, the
    stationary transport equation with A = 0."""
    from .phase_space import vhat
    g = eq.f_inf.grid
    f = eq.f_inf.values
    dxf = spectral_derivative(f, g.L, axis=0)
    # 4th-order centered momentum derivative on interior nodes
    dpf = (f[:, :-4] - 8 * f[:, 1:-3] + 8 * f[:, 3:-1] - f[:, 4:]) / (12 * g.dp)
    dphi = spectral_derivative(eq.Phi_inf, g.L)
    res = (vhat(g.p, variant)[None, 2:-2] * dxf[:, 2:-2]
           + dphi[:, None] * dpf)
    return float(np.abs(res).max())


def perturb(eq, eps, mode, kind="density_mod"):
    """Neutral mass-preserving perturbation of an equilibrium.

    density_mod multiplies by 1 + eps cos(2 pi mode x / L) and rescales to
    the equilibrium mass; odd_p adds an odd-in-p ripple that leaves the
    density untouched at every x.
    """
    g = eq.f_inf.grid
    x = g.x
    wave = np.cos(2.0 * np.pi * mode * x / g.L)
    if kind == "density_mod":
        vals = eq.f_inf.values * (1.0 + eps * wave)[:, None]
        if np.any(vals < 0):
            raise ValueError(
                f"perturbation makes f negative; max feasible eps is 1.0, "
                f"got {eps}")
        vals *= eq.mass / float(periodic_integral(
            trapezoid(vals, g.dp, axis=1), g.dx))
    elif kind == "odd_p":
        bump = g.p * np.exp(-g.p * g.p)
        ripple = eps * eq.f_inf.max() * wave[:, None] * bump[None, :]
        vals = eq.f_inf.values + ripple
        if np.any(vals < 0):
            neg = ripple < 0
            feasible = eps * float(
                np.min(eq.f_inf.values[neg] / (-ripple[neg])))
            raise ValueError(
                f"perturbation makes f negative; max feasible eps is "
                f"{feasible:.3e}, got {eps}")
    else:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    return DistSlice(g, vals, support_tol=eq.f_inf.support_tol)


def stability_experiment(eq, eps, mode, config, kind="density_mod",
                         A0_amplitude=0.0, A0_mode=1, window_length=None):
    """Evolve a perturbed equilibrium and track the conserved combination
    relative_entropy + WT together with L1, L2 and H1(Phi) distances.

    Returns a dict of per-slice arrays plus the GlobalSolution.
    """
    from .fixed_point import solve
    g = eq.f_inf.grid
    f0 = perturb(eq, eps, mode, kind=kind) if eps != 0 else eq.f_inf
    A0 = A0_amplitude * np.sin(2.0 * np.pi * A0_mode * g.x / g.L)
    Adot0 = np.zeros(g.nx)
    sol = solve(f0, A0, Adot0, eq.n_ext, g, eq.variant, config,
                window_length=window_length)
    dist = sol.stitched("dist")
    A = sol.stitched("A")
    Adot = sol.stitched("Adot")
    dxA = sol.stitched("dxA")
    times = sol.slice_times()
    sigma_wt = np.empty(len(times))
    l1 = np.empty(len(times))
    l2 = np.empty(len(times))
    h1 = np.empty(len(times))
    for m in range(len(times)):
        fm = DistSlice(g, dist[m], support_tol=eq.f_inf.support_tol)
        wt = transversal_energy(fm, A[m], Adot[m], dxA[m])
        sigma_wt[m] = relative_entropy(fm, eq.f_inf, eq.gen) + wt
        l1[m] = lp_distance(fm, eq.f_inf, 1)
        l2[m] = lp_distance(fm, eq.f_inf, 2)
        phi_m = solve_potential(moment(fm, "density", eq.variant),
                                eq.n_ext, g)
        h1[m] = h1_distance(phi_m, eq.Phi_inf, g)
    return dict(t=times, sigma_plus_wt=sigma_wt, l1=l1, l2=l2, h1=h1,
                solution=sol)
