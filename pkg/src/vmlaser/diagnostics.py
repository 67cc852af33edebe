"""Conserved functionals (mass, transversal/longitudinal energy, entropy),
relative entropy, Gauss/continuity residuals, and norm distances."""

from dataclasses import dataclass

import numpy as np

from .numerics import periodic_integral, spectral_derivative, trapezoid
from .phase_space import kappa, moment

_TINY = 1e-300


def _poisson_spectral(rhs, L):
    """Zero-mean periodic solution of d2u/dx2 = rhs (rhs must be neutral)."""
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.shape[-1]
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=1.0 / n) / L
    rh = np.fft.rfft(rhs)
    rh[..., 0] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        uh = np.where(k == 0, 0.0, -rh / np.maximum(k * k, 1e-300))
    return np.fft.irfft(uh, n=n)


def solve_potential(n, n_ext, grid, return_flag=False, neutrality_rtol=1e-4):
    """Electrostatic potential: -d2Phi/dx2 = n_ext - n, shifted so that
    the discrete normalization int Phi * n_ext dx = 0 holds exactly.

    The neutrality tolerance is looser than at initialization because
    evolved densities carry interpolation-level mass drift; the mean mode
    is projected out of the right-hand side. When n_ext vanishes
    identically the normalization is undefined; the zero-mean potential is
    returned instead and the flag (second element when return_flag=True)
    is False.
    """
    from .fields import check_neutrality
    n = np.asarray(n, dtype=float)
    n_ext = np.asarray(n_ext, dtype=float)
    check_neutrality(n, n_ext, grid, rtol=neutrality_rtol)
    phi = _poisson_spectral(n - n_ext, grid.L)
    w = periodic_integral(n_ext, grid.dx)
    if abs(w) < 1e-14 * max(1.0, float(np.abs(n).max())) * grid.L:
        normalized = False
    else:
        phi = phi - periodic_integral(phi * n_ext, grid.dx) / w
        normalized = True
    return (phi, normalized) if return_flag else phi


def transversal_energy(f, A, Adot, dxA):
    """WT = 1/2 int (n A^2 + |dA/dx|^2 + Adot^2) dx."""
    g = f.grid
    n = moment(f, "density", None)
    A = np.asarray(A, dtype=float)
    integrand = n * A * A + np.asarray(dxA) ** 2 + np.asarray(Adot) ** 2
    return 0.5 * float(periodic_integral(integrand, g.dx))


def longitudinal_energy(f, n_ext, variant):
    """Kinetic plus electrostatic energy in both equivalent forms.

    form1 integrates (kappa(p) - Phi/2) against f; form2 uses the field
    energy int |dPhi/dx|^2 / 2 instead. They agree up to quadrature
    whenever the potential normalization int Phi n_ext = 0 holds; in the
    fallback mode (n_ext identically 0) form1 differs by a constant.
    """
    g = f.grid
    n = moment(f, "density", variant)
    phi = solve_potential(n, n_ext, g)
    kin = float(periodic_integral(
        trapezoid(f.values * kappa(g.p, variant)[None, :], g.dp, axis=1), g.dx))
    form1 = kin - 0.5 * float(periodic_integral(phi * n, g.dx))
    dphi = spectral_derivative(phi, g.L)
    form2 = kin + 0.5 * float(periodic_integral(dphi * dphi, g.dx))
    return form1, form2


def total_energy(f, A, Adot, dxA, n_ext, variant):
    """Conserved total W = WT + WL (field-energy form)."""
    return (transversal_energy(f, A, Adot, dxA)
            + longitudinal_energy(f, n_ext, variant)[1])


def fr_energy(f, A, Adot, dxA, n_ext):
    """Fully relativistic energy functional evaluated on a stored state:
    int int (sqrt(1 + p^2 + A^2) - Phi/2) f + 1/2 int (Adot^2 + |dA/dx|^2)."""
    g = f.grid
    A = np.asarray(A, dtype=float)
    n = moment(f, "density", None)
    phi = solve_potential(n, n_ext, g)
    gam = np.sqrt(1.0 + g.p[None, :] ** 2 + (A * A)[:, None])
    kin = float(periodic_integral(trapezoid(f.values * gam, g.dp, axis=1), g.dx))
    es = -0.5 * float(periodic_integral(phi * n, g.dx))
    wave = 0.5 * float(periodic_integral(
        np.asarray(Adot) ** 2 + np.asarray(dxA) ** 2, g.dx))
    return kin + es + wave


def entropy(f, gen):
    """S_sigma = int int sigma(f); values below 1e-300 contribute sigma(0)."""
    g = f.grid
    vals = f.values
    s0 = float(gen.sigma(0.0))
    out = np.where(vals > _TINY, gen.sigma(np.maximum(vals, _TINY)), s0)
    return float(periodic_integral(trapezoid(out, g.dp, axis=1), g.dx))


def relative_entropy(f, f_ref, gen, n_ext=None):
    """Bregman divergence of sigma plus the electrostatic field term:
    int int [sigma(f) - sigma(g) - sigma'(g)(f - g)] + 1/2 int |dPhi[f-g]/dx|^2.
    """
    if f.grid != f_ref.grid:
        raise ValueError("distributions must share a grid")
    g = f.grid
    fv, gv = f.values, f_ref.values
    bad = (gv <= _TINY) & (fv > _TINY)
    if np.any(bad):
        with np.errstate(divide="ignore", invalid="ignore"):
            probe = float(gen.sigma_prime(0.0))
        if not np.isfinite(probe):
            raise ValueError(
                "sigma'(0) is singular and f > 0 where the reference "
                "vanishes; relative entropy undefined")
    s0 = float(gen.sigma(0.0))
    sf = np.where(fv > _TINY, gen.sigma(np.maximum(fv, _TINY)), s0)
    sg = np.where(gv > _TINY, gen.sigma(np.maximum(gv, _TINY)), s0)
    sp = np.where(gv > _TINY, gen.sigma_prime(np.maximum(gv, _TINY)), 0.0)
    integrand = sf - sg - sp * (fv - gv)
    integrand[(gv <= _TINY) & (fv <= _TINY)] = 0.0
    breg = float(periodic_integral(trapezoid(integrand, g.dp, axis=1), g.dx))
    dn = moment(f, "density", None) - moment(f_ref, "density", None)
    phi = _poisson_spectral(dn, g.L)
    dphi = spectral_derivative(phi, g.L)
    field = 0.5 * float(periodic_integral(dphi * dphi, g.dx))
    return breg + field


def continuity_residual(n_hist, j_hist, dt, grid):
    """Per-slice max-norm of dn/dt + dj/dx: centered time differences at
    interior slices, one-sided at the ends (exclude the ends when
    reporting a window max)."""
    n = np.asarray(n_hist, dtype=float)
    j = np.asarray(j_hist, dtype=float)
    dxj = spectral_derivative(j, grid.L, axis=1)
    nt = n.shape[0] - 1
    res = np.empty(nt + 1)
    if nt == 0:
        res[0] = 0.0
        return res
    res[0] = np.abs((n[1] - n[0]) / dt + dxj[0]).max()
    res[nt] = np.abs((n[nt] - n[nt - 1]) / dt + dxj[nt]).max()
    if nt >= 2:
        cent = (n[2:] - n[:-2]) / (2.0 * dt) + dxj[1:-1]
        res[1:nt] = np.abs(cent).max(axis=1)
    return res


def lp_distance(f, f_ref, p):
    """L^p norm of f - f_ref over one period times the p-domain, p in {1, 2}."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    g = f.grid
    diff = np.abs(f.values - f_ref.values) ** p
    val = periodic_integral(trapezoid(diff, g.dp, axis=1), g.dx)
    return float(val) if p == 1 else float(np.sqrt(val))


def h1_distance(phi, phi_ref, grid):
    """H^1 norm of phi - phi_ref: L^2 of the value plus L^2 of D_x."""
    d = np.asarray(phi, dtype=float) - np.asarray(phi_ref, dtype=float)
    dd = spectral_derivative(d, grid.L)
    return float(np.sqrt(periodic_integral(d * d + dd * dd, grid.dx)))


@dataclass
class DiagnosticsRow:
    """One CSV row of run diagnostics; distance fields are None when no
    reference equilibrium is configured."""

    t: float
    mass: float
    WT: float
    WL_form1: float
    WL_form2: float
    W_total: float
    S_sigma: float
    KT_sigma: float
    relative_entropy: float = None
    gauss_residual: float = 0.0
    continuity_residual: float = 0.0
    sup_dxxA: float = 0.0
    l1_dist: float = None
    l2_dist: float = None
    h1_phi_dist: float = None

    COLUMNS = ("t", "mass", "WT", "WL_form1", "WL_form2", "W_total",
               "S_sigma", "KT_sigma", "relative_entropy", "gauss_residual",
               "continuity_residual", "sup_dxxA", "l1_dist", "l2_dist",
               "h1_phi_dist")

    @classmethod
    def header(cls):
        return ",".join(cls.COLUMNS)

    def to_line(self):
        cells = []
        for name in self.COLUMNS:
            v = getattr(self, name)
            cells.append("" if v is None else f"{v:.17g}")
        return ",".join(cells)
