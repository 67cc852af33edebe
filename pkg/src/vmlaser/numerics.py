"""Shared quadrature, differentiation and interpolation helpers.

All routines are deterministic: quadratures reduce with numpy's fixed-order
pairwise summation, so results never depend on evaluation order.
"""

import numpy as np


def trapezoid(values, dx, axis=-1):
    """Composite trapezoid rule on a uniform grid."""
    values = np.asarray(values)
    return np.trapezoid(values, dx=dx, axis=axis)


def periodic_integral(values, dx, axis=-1):
    """Integral over one full period of a periodic sample set (rectangle
    rule, which is the trapezoid rule with wrap-around and is spectrally
    accurate for smooth periodic integrands)."""
    return np.sum(values, axis=axis) * dx


def cumtrapz(values, dx, axis=-1):
    """Cumulative trapezoid along `axis`; output has the same length,
    starting at 0."""
    values = np.asarray(values)
    v = np.moveaxis(values, axis, -1)
    out = np.zeros_like(v)
    np.cumsum(0.5 * dx * (v[..., 1:] + v[..., :-1]), axis=-1, out=out[..., 1:])
    return np.moveaxis(out, -1, axis)


def spectral_derivative(values, length, order=1, axis=-1):
    """Derivative of a periodic sample set via FFT.

    The contract elsewhere only requires a periodic differentiation operator
    of order >= 4; the spectral one is used because it also makes discrete
    integration-by-parts identities exact on the uniform grid.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    k = 2.0j * np.pi * np.fft.rfftfreq(n, d=length / n)
    vhat = np.fft.rfft(values, axis=axis)
    shape = [1] * values.ndim
    shape[axis] = vhat.shape[axis]
    vhat = vhat * (k.reshape(shape) ** order)
    if order % 2 == 1 and n % 2 == 0:
        # odd derivative of the unresolved Nyquist mode is set to zero
        idx = [slice(None)] * values.ndim
        idx[axis] = -1
        vhat[tuple(idx)] = 0.0
    return np.fft.irfft(vhat, n=n, axis=axis)


def spectral_shift(values, shift, length):
    """Evaluate a periodic table at the uniformly shifted nodes x_j + shift
    by trigonometric interpolation (FFT phase shift, exact for band-limited
    data; the Nyquist mode is shifted as a pure cosine)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=length / n)
    phase = np.exp(1j * k * shift)
    if n % 2 == 0:
        phase[-1] = np.cos(k[-1] * shift)
    return np.fft.irfft(np.fft.rfft(values, axis=-1) * phase, n=n, axis=-1)


def _cubic_weights(theta):
    """Weights of 4-point cubic Lagrange interpolation, nodes at
    offsets (-1, 0, 1, 2) from the base index, for fraction theta in [0,1)."""
    t = theta
    w0 = -t * (t - 1.0) * (t - 2.0) / 6.0
    w1 = (t * t - 1.0) * (t - 2.0) / 2.0
    w2 = -t * (t + 1.0) * (t - 2.0) / 2.0
    w3 = t * (t * t - 1.0) / 6.0
    return w0, w1, w2, w3


def _quintic_weights(theta):
    """Weights of 6-point quintic Lagrange interpolation, nodes at offsets
    (-2, -1, 0, 1, 2, 3) from the base index, for fraction theta in [0,1)."""
    t = theta
    a = t + 2.0
    b = t + 1.0
    c = t - 1.0
    d = t - 2.0
    e = t - 3.0
    w0 = -b * t * c * d * e / 120.0
    w1 = a * t * c * d * e / 24.0
    w2 = -a * b * c * d * e / 12.0
    w3 = a * b * t * d * e / 12.0
    w4 = -a * b * t * c * e / 24.0
    w5 = a * b * t * c * d / 120.0
    return w0, w1, w2, w3, w4, w5


def periodic_cubic(table, x, length):
    """Cubic (4-point Lagrange) interpolation of a periodic table.

    `table` holds samples at x_j = j * length / len(table); `x` is an
    arbitrary array of query points (any real values, wrapped mod length).
    """
    table = np.asarray(table, dtype=float)
    n = table.shape[-1]
    dx = length / n
    xi = np.asarray(x, dtype=float) / dx
    base = np.floor(xi).astype(np.int64)
    theta = xi - base
    w0, w1, w2, w3 = _cubic_weights(theta)
    i0 = (base - 1) % n
    i1 = base % n
    i2 = (base + 1) % n
    i3 = (base + 2) % n
    return (w0 * table[..., i0] + w1 * table[..., i1]
            + w2 * table[..., i2] + w3 * table[..., i3])


def clamped_cubic(table, x, x0, dx):
    """Cubic interpolation of a non-periodic table sampled at
    x0 + i*dx, i in [0, n). Queries outside the table return 0; near the
    edges the 4-point stencil is shifted inward."""
    table = np.asarray(table, dtype=float)
    n = table.shape[-1]
    xq = np.asarray(x, dtype=float)
    xi = (xq - x0) / dx
    inside = (xi >= 0.0) & (xi <= n - 1.0)
    xi_safe = np.clip(xi, 0.0, n - 1.0)
    base = np.floor(xi_safe).astype(np.int64)
    base = np.clip(base, 1, n - 3)
    theta = xi_safe - base
    w0, w1, w2, w3 = _cubic_weights(theta)
    val = (w0 * table[..., base - 1] + w1 * table[..., base]
           + w2 * table[..., base + 1] + w3 * table[..., base + 2])
    return np.where(inside, val, 0.0)


class PeriodicAntiderivative:
    """H(x) = integral of a periodic sample set from 0 to x, for arbitrary x.

    The periodic part of the antiderivative is tabulated once (spectrally,
    so node values are accurate to roundoff) and evaluated off-grid by cubic
    interpolation; the secular part mean * x is added analytically.
    """

    def __init__(self, values, length):
        values = np.asarray(values, dtype=float)
        self.length = length
        n = values.shape[-1]
        self.mean = float(np.mean(values))
        vhat = np.fft.rfft(values - self.mean)
        k = 2.0j * np.pi * np.fft.rfftfreq(n, d=length / n)
        with np.errstate(divide="ignore", invalid="ignore"):
            phat = np.where(k == 0, 0.0, vhat / np.where(k == 0, 1.0, k))
        per = np.fft.irfft(phat, n=n)
        self.table = per - per[0]  # periodic part, H_per(0) = 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.mean * x + periodic_cubic(self.table, x, self.length)

    def integral(self, a, b):
        return self(b) - self(a)
