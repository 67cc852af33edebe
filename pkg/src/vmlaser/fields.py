"""Electrostatic initialization, Ampere update, and the explicit
d'Alembert/Duhamel solution of the forced 1D wave equation."""

import numpy as np

from .numerics import (PeriodicAntiderivative, cumtrapz, periodic_integral,
                       spectral_derivative, spectral_shift)

NEUTRALITY_RTOL = 1e-8


def check_neutrality(n0, n_ext, grid, rtol=NEUTRALITY_RTOL):
    """Net charge over one period must vanish for a periodic E0 to exist."""
    imbalance = periodic_integral(np.asarray(n_ext) - np.asarray(n0), grid.dx)
    scale = max(periodic_integral(np.abs(n0), grid.dx), 1.0)
    if abs(imbalance) > rtol * scale:
        raise ValueError(
            f"density pair is not neutral over one period "
            f"(net charge {imbalance:.3e}); periodic E0 does not exist")


def poisson_E0(n0, n_ext, grid, rtol=NEUTRALITY_RTOL):
    """Initial electrostatic field from the charge density, in the
    zero-mean gauge (the unique choice compatible with a periodic
    potential)."""
    n0 = np.asarray(n0, dtype=float)
    n_ext = np.asarray(n_ext, dtype=float)
    check_neutrality(n0, n_ext, grid, rtol=rtol)
    rho = n0 - n_ext
    rho = rho - np.mean(rho)  # remove roundoff-level net charge
    E = -cumtrapz(np.append(rho, rho[0]), grid.dx)[:-1]
    return E - np.mean(E)


def ampere_history(E0, j_history, dt):
    """E at every slice: E0 plus the cumulative time integral of the flux."""
    j = np.asarray(j_history, dtype=float)
    if j.shape[1] != np.asarray(E0).shape[0]:
        raise ValueError("flux history does not match E0")
    return np.asarray(E0)[None, :] + cumtrapz(j, dt, axis=0)


def gauss_residual(E_slice, n_slice, n_ext, grid):
    """max_x |dE/dx - (n_ext - n)|."""
    dxE = spectral_derivative(np.asarray(E_slice, dtype=float), grid.L)
    return float(np.abs(dxE - (np.asarray(n_ext) - np.asarray(n_slice))).max())


def duhamel_history(A0, Adot0, S, grid, dt):
    """Explicit solution of d2A/dt2 - d2A/dx2 = S at every slice.

    Returns (A, Adot, dxA, dxxA), each of shape (nt+1, nx). Every spatial
    evaluation happens on a uniformly shifted copy of the grid (the cone
    vertices are x +- (t - s)), so point values and the inner cone-base
    integrals are computed by exact FFT phase shifts; the only quadrature
    left is the outer trapezoid over slices. The four formulas are
    evaluated independently (dxA is not a derivative of the returned A).
    """
    A0 = np.asarray(A0, dtype=float)
    Adot0 = np.asarray(Adot0, dtype=float)
    S = np.asarray(S, dtype=float)
    nt = S.shape[0] - 1
    nx = grid.nx
    L = grid.L

    u0p = spectral_derivative(A0, L)
    u0pp = spectral_derivative(A0, L, order=2)
    v0p = spectral_derivative(Adot0, L)
    V0 = PeriodicAntiderivative(Adot0, L)

    k = 2.0 * np.pi * np.fft.rfftfreq(nx, d=L / nx)
    S_hat = np.fft.rfft(S, axis=1)
    S_mean = S_hat[:, 0].real / nx
    ik = 1.0j * k
    with np.errstate(divide="ignore", invalid="ignore"):
        # periodic part of the x-antiderivative of S (offset irrelevant:
        # only differences across the cone are used)
        P_hat = np.where(ik == 0, 0.0, S_hat / np.where(ik == 0, 1.0, ik))
    dxS_hat = S_hat * ik
    if nx % 2 == 0:
        P_hat[:, -1] = 0.0
        dxS_hat[:, -1] = 0.0

    def shift_rows(hat_rows, d_col):
        """irfft of each row shifted by its own offset d."""
        ph = np.exp(1.0j * np.outer(d_col, k))
        if nx % 2 == 0:
            ph[:, -1] = np.cos(d_col * k[-1])
        return np.fft.irfft(hat_rows * ph, n=nx, axis=-1)

    A = np.empty((nt + 1, nx))
    Adot = np.empty((nt + 1, nx))
    dxA = np.empty((nt + 1, nx))
    dxxA = np.empty((nt + 1, nx))

    shift = lambda table, d: spectral_shift(table, d, L)

    for m in range(nt + 1):
        t = m * dt
        u0_p, u0_m = shift(A0, t), shift(A0, -t)
        u0p_p, u0p_m = shift(u0p, t), shift(u0p, -t)
        u0pp_p, u0pp_m = shift(u0pp, t), shift(u0pp, -t)
        v0_p, v0_m = shift(Adot0, t), shift(Adot0, -t)
        v0p_p, v0p_m = shift(v0p, t), shift(v0p, -t)

        if m > 0:
            # cone half-width at source slice s: endpoints x -+ d
            d = t - np.arange(m + 1) * dt
            inner = (shift_rows(P_hat[:m + 1], d)
                     - shift_rows(P_hat[:m + 1], -d)
                     + 2.0 * d[:, None] * S_mean[:m + 1, None])
            src_left = shift_rows(S_hat[:m + 1], -d)
            src_right = shift_rows(S_hat[:m + 1], d)
            dsrc_left = shift_rows(dxS_hat[:m + 1], -d)
            dsrc_right = shift_rows(dxS_hat[:m + 1], d)
            tint = lambda rows: np.trapezoid(rows, dx=dt, axis=0)
            cone = tint(inner)
            sum_src = tint(src_left + src_right)
            diff_src = tint(src_right - src_left)
            diff_dsrc = tint(dsrc_right - dsrc_left)
        else:
            cone = sum_src = diff_src = diff_dsrc = 0.0

        int_v0 = (shift(V0.table, t) - shift(V0.table, -t)
                  + 2.0 * t * V0.mean)
        A[m] = 0.5 * (u0_p + u0_m + int_v0 + cone)
        Adot[m] = 0.5 * (u0p_p - u0p_m + v0_p + v0_m + sum_src)
        dxA[m] = 0.5 * (u0p_p + u0p_m + v0_p - v0_m + diff_src)
        dxxA[m] = 0.5 * (u0pp_p + u0pp_m + v0p_p - v0p_m + diff_dsrc)
    return A, Adot, dxA, dxxA


def leapfrog_wave_oracle(A0, Adot0, S, grid, dt):
    """Independent cross-check: second-order explicit finite differences
    for the same periodic wave problem. Requires dt <= dx (CFL)."""
    if dt > grid.dx:
        raise ValueError(f"CFL violated: dt={dt} > dx={grid.dx}")
    A0 = np.asarray(A0, dtype=float)
    Adot0 = np.asarray(Adot0, dtype=float)
    S = np.asarray(S, dtype=float)
    nt = S.shape[0] - 1
    lap = lambda u: (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / grid.dx ** 2
    A = np.empty((nt + 1, grid.nx))
    A[0] = A0
    if nt == 0:
        return A
    A[1] = A0 + dt * Adot0 + 0.5 * dt * dt * (lap(A0) + S[0])
    for m in range(1, nt):
        A[m + 1] = 2.0 * A[m] - A[m - 1] + dt * dt * (lap(A[m]) + S[m])
    return A
