"""The scalar recurrence v_{k+1} = alpha + beta t e^{t(1+v_k)}: fixed
points, the critical time where they merge, and sequence classification.

This map bounds the growth of the force gradient across recurrence-operator
iterations; its behaviour separates the convergent regime from blow-up.
"""

import math
from dataclasses import dataclass

_EXP_CAP = 700.0  # exp overflow guard
INF = float("inf")


@dataclass(frozen=True)
class PhiParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")


def phi(v, t, params):
    """phi_t(v) = alpha + beta t e^{t(1+v)}; +inf past the overflow guard."""
    if t < 0:
        raise ValueError("t must be >= 0")
    arg = t * (1.0 + v)
    if arg > _EXP_CAP:
        return INF
    return params.alpha + params.beta * t * math.exp(arg)


def phi_prime(v, t, params):
    arg = t * (1.0 + v)
    if arg > _EXP_CAP:
        return INF
    return params.beta * t * t * math.exp(arg)


def compute_T1(params, tol=1e-12):
    """Unique root of beta t^2 e^{alpha t^2 + 2 t} = 1 (the time where the
    two fixed points of phi_t merge), by bisection on the strictly
    increasing left-hand side."""
    a, b = params.alpha, params.beta

    def lhs(t):
        arg = a * t * t + 2.0 * t
        if arg > _EXP_CAP:
            return INF
        return b * t * t * math.exp(arg)

    lo, hi = 0.0, 1.0
    while lhs(hi) < 1.0:
        hi *= 2.0
    while hi - lo > tol * max(hi, 1.0) or abs(lhs(0.5 * (lo + hi)) - 1.0) > tol:
        mid = 0.5 * (lo + hi)
        if lhs(mid) < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-17:
            break
    return 0.5 * (lo + hi)


def x_tangent(t, beta):
    """Abscissa where phi_t has unit slope: (1/t) ln(1/(beta t^2)) - 1."""
    if t <= 0:
        raise ValueError("t must be > 0")
    return math.log(1.0 / (beta * t * t)) / t - 1.0


class Classification:
    TWO = "two"
    TANGENT = "tangent"
    NONE = "none"
    DEGENERATE = "degenerate"  # t = 0: phi is the constant alpha


@dataclass(frozen=True)
class FixedPoints:
    kind: str
    v_low: float = math.nan
    v_high: float = math.nan


def _bisect(fn, lo, hi, tol=1e-13, iters=200):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm <= 0) == (flo <= 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def fixed_points(t, params, tangent_tol=1e-10):
    """Solve phi_t(v) = v. phi_t - id is convex with minimum at the
    unit-slope abscissa, so the classification follows from the sign of the
    minimum and each root is bracketed on one side of it."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return FixedPoints(Classification.DEGENERATE,
                           v_low=params.alpha, v_high=params.alpha)
    vstar = x_tangent(t, params.beta)
    gap = phi(vstar, t, params) - vstar  # minimum of phi - id
    if abs(gap) <= tangent_tol:
        return FixedPoints(Classification.TANGENT, v_low=vstar, v_high=vstar)
    if gap > 0:
        return FixedPoints(Classification.NONE)
    g = lambda v: phi(v, t, params) - v
    # left root: g > 0 far left (phi >= alpha > v for v very negative)
    lo = vstar
    step = max(1.0, abs(vstar))
    while g(lo) < 0:
        lo -= step
        step *= 2.0
    v_low = _bisect(g, lo, vstar)
    hi = vstar
    step = max(1.0, abs(vstar))
    while g(hi) < 0:
        hi += step
        step *= 2.0
    v_high = _bisect(g, vstar, hi)
    return FixedPoints(Classification.TWO, v_low=v_low, v_high=v_high)


class Verdict:
    CONVERGED = "converged"
    DIVERGED = "diverged"
    UNDECIDED = "undecided"


def iterate_v(v0, t, params, K, conv_tol=1e-12, div_cap=1e9):
    """Iterate v <- phi_t(v) up to K steps. Returns (sequence, verdict,
    limit-or-None)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    seq = [float(v0)]
    v = float(v0)
    for _ in range(K):
        vn = phi(v, t, params)
        seq.append(vn)
        if vn > div_cap or math.isinf(vn):
            return seq, Verdict.DIVERGED, None
        if abs(vn - v) <= conv_tol:
            return seq, Verdict.CONVERGED, vn
        v = vn
    return seq, Verdict.UNDECIDED, None
