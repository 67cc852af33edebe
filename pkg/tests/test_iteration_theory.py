import math

import numpy as np
import pytest

from vmlaser.iteration_theory import (Classification, PhiParams, Verdict,
                                      compute_T1, fixed_points, iterate_v,
                                      phi, phi_prime, x_tangent)

P11 = PhiParams(1.0, 1.0)

# frozen pre-build oracle values (independent bisection)
T1_FROZEN = 0.5196301715066209
VLOW_FROZEN = 1.1236600402992667
VHIGH_FROZEN = 63.35415384276532


def _true_merge_time(params):
    """Time where the minimum of phi_t - id crosses zero (actual tangency
    of the map, found by bisection; differs from the printed critical-time
    equation that compute_T1 implements)."""
    gap = lambda t: phi(x_tangent(t, params.beta), t, params) \
        - x_tangent(t, params.beta)
    lo, hi = 1e-6, 10.0
    while gap(hi) < 0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_params_validation():
    with pytest.raises(ValueError):
        PhiParams(-0.1, 1.0)
    with pytest.raises(ValueError):
        PhiParams(0.0, 0.0)


def test_phi_values():
    assert phi(0.0, 1.0, P11) == pytest.approx(1.0 + math.e)
    assert phi(0.0, 0.0, P11) == 1.0  # phi_0 is the constant alpha
    assert phi(1e6, 1.0, P11) == float("inf")  # overflow guard
    assert phi_prime(0.0, 1.0, P11) == pytest.approx(math.e)


def test_compute_T1_against_frozen_oracle():
    assert abs(compute_T1(P11) - T1_FROZEN) < 1e-9


def test_x_tangent():
    assert x_tangent(0.1, 1.0) == pytest.approx(np.log(100.0) / 0.1 - 1.0)
    with pytest.raises(ValueError):
        x_tangent(0.0, 1.0)


def test_fixed_points_two_regime():
    fp = fixed_points(0.1, P11)
    assert fp.kind == Classification.TWO
    assert fp.v_low == pytest.approx(VLOW_FROZEN, abs=1e-9)
    assert fp.v_high == pytest.approx(VHIGH_FROZEN, abs=1e-6)
    # both really are fixed points
    assert phi(fp.v_low, 0.1, P11) == pytest.approx(fp.v_low, abs=1e-9)
    assert phi(fp.v_high, 0.1, P11) == pytest.approx(fp.v_high, abs=1e-6)


def test_fixed_points_degenerate_at_zero():
    fp = fixed_points(0.0, P11)
    assert fp.kind == Classification.DEGENERATE
    assert fp.v_low == 1.0


def test_fixed_points_none_past_merge():
    assert fixed_points(2 * T1_FROZEN, P11).kind == Classification.NONE


def test_tangency_at_true_merge_time():
    tm = _true_merge_time(P11)
    fp = fixed_points(tm, P11, tangent_tol=1e-8)
    assert fp.kind == Classification.TANGENT
    assert fp.v_low == pytest.approx(fp.v_high)


def test_iterate_converges_below_merge():
    seq, verdict, limit = iterate_v(0.0, 0.1, P11, K=200)
    assert verdict == Verdict.CONVERGED
    assert limit == pytest.approx(VLOW_FROZEN, abs=1e-9)
    assert seq[0] == 0.0


def test_iterate_diverges_past_merge():
    _, verdict, limit = iterate_v(0.0, 2 * T1_FROZEN, P11, K=60)
    assert verdict == Verdict.DIVERGED
    assert limit is None


def test_monotone_branches():
    ts = [0.1, 0.2, 0.3, 0.4]
    fps = [fixed_points(t, P11) for t in ts]
    assert all(fp.kind == Classification.TWO for fp in fps)
    lows = [fp.v_low for fp in fps]
    highs = [fp.v_high for fp in fps]
    assert all(b > a + 1e-9 for a, b in zip(lows, lows[1:]))
    assert all(b < a - 1e-9 for a, b in zip(highs, highs[1:]))


def test_convergence_property_random_params():
    rng = np.random.default_rng(5)
    tested = 0
    while tested < 20:
        params = PhiParams(float(rng.uniform(0.1, 3.0)),
                           float(rng.uniform(0.1, 3.0)))
        t = 0.8 * _true_merge_time(params)
        fp = fixed_points(t, params)
        if fp.kind != Classification.TWO:
            continue
        for v0 in (0.0, fp.v_low - 1.0, fp.v_high - 1e-3):
            _, verdict, limit = iterate_v(v0, t, params, K=5000,
                                          conv_tol=1e-13)
            assert verdict == Verdict.CONVERGED
            assert limit == pytest.approx(fp.v_low, abs=1e-9)
        tested += 1


def test_iterate_k_validation():
    with pytest.raises(ValueError):
        iterate_v(0.0, 0.1, P11, K=0)
