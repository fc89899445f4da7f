import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardyopt import errors
from hardyopt.calculus import p_laplacian_radial, p_laplacian_scale
from hardyopt.domain import Limit, ProblemParams, RadialDomain, green_radial, user_profile
from hardyopt.weights import (as_potential, composed_profile_weight, convex_combination_potential, hardy_weight_alpha,
                              hardy_weight_case1, hardy_weight_case2, hardy_weight_two_ends, interpolated_weight,
                              interpolation_hessian, supersolution_construct_radial, weight_table)

from conftest import power, rel_err

R = np.geomspace(1e-3, 1e3, 200)
BALL_R = np.linspace(0.01, 0.99, 99)


def case2_setup():
    params = ProblemParams(3.0, 2)
    G = green_radial(params, RadialDomain.punctured_ball(1.0))
    return params, G


def residual(weight, ground, params, r, V=None):
    """Relative strong-form residual of ``-Delta_p v + (V - W) v^{p-1}``."""
    u = ground.as_radial()
    v = ground(r)
    Vr = 0.0 if V is None else V(r)
    res = p_laplacian_radial(u, params).value(r) + (Vr - weight(r)) * v ** (params.p - 1)
    scale = p_laplacian_scale(u, params, r) + (np.abs(Vr) + np.abs(weight(r))) * v ** (params.p - 1)
    return res, scale


def test_case1_classical_hardy():
    params = ProblemParams(2.0, 3)
    W, v = hardy_weight_case1(green_radial(params, RadialDomain.punctured_space()), params)
    assert rel_err(W(R), 0.25 / R ** 2) < 1e-14
    assert rel_err(v(R), R ** -0.5) < 1e-14
    assert W.expected_lambda0 == 1.0 and W.optimal


def test_case1_p4_n2():
    params = ProblemParams(4.0, 2)
    W, _ = hardy_weight_case1(green_radial(params, RadialDomain.punctured_space()), params)
    assert rel_err(W(R), R ** -4.0 / 16.0) < 1e-13


def test_case1_scale_invariant():
    params = ProblemParams(2.0, 3)
    dom = RadialDomain.punctured_space()
    G = green_radial(params, dom)
    cG = user_profile(params, dom, lambda r: 7.0 / r, lambda r: -7.0 / r ** 2, lambda r: 14.0 / r ** 3,
                      Limit.infinite(), Limit.finite(0.0))
    assert rel_err(hardy_weight_case1(cG, params)[0](R), hardy_weight_case1(G, params)[0](R)) < 1e-14


def test_case1_rejects_gamma_profile():
    params, G = case2_setup()
    with pytest.raises(errors.WrongClassification):
        hardy_weight_case1(G, params)


def test_case2_zero_at_quarter():
    params, G = case2_setup()
    W, v = hardy_weight_case2(G, 1.0, params)
    assert abs(W(0.25)) < 1e-12
    assert W.singular_radii == pytest.approx((0.25,), abs=1e-12)
    assert v(0.25) == pytest.approx(0.25 ** (2 / 3), rel=1e-14)
    assert np.all(v(BALL_R) <= v(0.25) * (1 + 1e-15))


def test_case2_zero_root_bracketing():
    from scipy.optimize import brentq
    params, G = case2_setup()
    W, _ = hardy_weight_case2(G, 1.0, params)
    # W is nonnegative and touches zero, so bracket the sign change of G - gamma/2 instead
    r0 = brentq(lambda r: G.value(r) - 0.5, 0.01, 0.99, xtol=1e-15)
    assert r0 == pytest.approx(0.25, abs=1e-12)
    assert np.all(W(BALL_R) >= -1e-14)


def test_case2_gamma_mismatch():
    params, G = case2_setup()
    with pytest.raises(errors.GammaMismatch):
        hardy_weight_case2(G, 2.0, params)


def test_case2_p2_reduction():
    # p = 2 > n has no admissible dimension, so the closed form is evaluated at p = 2 on a p = 3 profile
    from hardyopt.weights import _case2_eval
    _, G = case2_setup()
    g, dg = G.value(BALL_R), G.derivative(BALL_R)
    want = 0.25 * (dg / g + dg / (1.0 - g)) ** 2
    assert rel_err(_case2_eval(G, 1.0, 2.0)(BALL_R), want) < 1e-13


def test_composed_profile_matches_case2():
    params, G = case2_setup()
    a, _ = hardy_weight_case2(G, 1.0, params)
    b, v = composed_profile_weight(G, 1.0, params)
    assert rel_err(b(BALL_R), a(BALL_R)) < 1e-12
    # v' vanishes at r = 1/4, where every term of the residual is zero
    res, scale = residual(b, v, params, BALL_R[np.abs(BALL_R - 0.25) > 1e-6])
    assert np.all(np.abs(res) < 1e-10 * scale)


def test_alpha_weight_examples():
    params = ProblemParams(3.0, 5)
    G = green_radial(params, RadialDomain.punctured_space())
    c1, _ = hardy_weight_case1(G, params)
    wa, _ = hardy_weight_alpha(G, params.beta, params)
    assert rel_err(wa(R), c1(R)) < 1e-14 and wa.expected_lambda0 == 1.0
    assert hardy_weight_alpha(G, 0.3, params)[0].expected_lambda0 is None
    assert np.max(hardy_weight_alpha(G, 1e-9, params)[0](R) / c1(R)) < 1e-15
    assert np.max(hardy_weight_alpha(G, 1 - 1e-9, params)[0](R) / c1(R)) < 1e-7
    p2 = ProblemParams(2.0, 3)
    G2 = green_radial(p2, RadialDomain.punctured_space())
    assert rel_err(hardy_weight_alpha(G2, 0.5, p2)[0](R), 0.25 / R ** 2) < 1e-14
    with pytest.raises(errors.AlphaOutOfRange):
        hardy_weight_alpha(G, 1.0, params)


def test_alpha_argmax():
    a = np.linspace(0.0, 1.0, 200001)
    for p in [1.2, 1.5, 2.0, 3.0, 4.5]:
        assert a[np.argmax(a ** (p - 1) * (1 - a))] == pytest.approx((p - 1) / p, abs=1e-5)


def test_two_ends_annulus_p2():
    params = ProblemParams(2.0, 3)
    dom = RadialDomain.annulus(1.0, 2.0)
    G = user_profile(params, dom, lambda r: 1.0 / r, lambda r: -1.0 / r ** 2, lambda r: 2.0 / r ** 3,
                     Limit.finite(1.0), Limit.finite(0.5))
    W, _ = hardy_weight_two_ends(G, 0.5, 1.0, 0.5, params)
    r = np.linspace(1.01, 1.99, 50)
    g, dg = 1 / r, -1 / r ** 2
    want = 0.25 * (dg / (g - 0.5) + dg / (1.0 - g)) ** 2
    assert rel_err(W(r), want) < 1e-13


def test_two_ends_bracket_at_optimal_alpha():
    params = ProblemParams(3.0, 3)
    dom = RadialDomain.annulus(1.0, 2.0)
    G = green_radial(params, dom)
    m, M = sorted((G.inner_limit.value, G.outer_limit.value))
    W, v = hardy_weight_two_ends(G, m, M, None, params)
    r = np.linspace(1.01, 1.99, 50)
    g, dg = G.value(r), G.derivative(r)
    v1 = (g - m) * (M - g)
    want = params.beta ** 3 * np.abs(dg / v1) ** 3 * np.abs(m + M - 2 * g) * (2 * v1 + (M - m) ** 2)
    assert rel_err(W(r), want) < 1e-12
    res, scale = residual(W, v, params, r)
    assert np.all(np.abs(res) < 1e-6 * scale)


def test_two_ends_matches_case2():
    params, G = case2_setup()
    a, _ = hardy_weight_case2(G, 1.0, params)
    b, _ = hardy_weight_two_ends(G, 0.0, 1.0, None, params)
    assert rel_err(b(BALL_R), a(BALL_R)) < 1e-12


def test_two_ends_alpha_rule():
    params = ProblemParams(3.0, 3)
    G = user_profile(params, RadialDomain.annulus(1.0, 2.0), lambda r: 1.0 + np.log(2.0 / r), lambda r: -1.0 / r,
                     lambda r: 1.0 / r ** 2, Limit.finite(1.0 + math.log(2.0)), Limit.finite(1.0))
    m, M = 1.0, 1.0 + math.log(2.0)
    assert hardy_weight_two_ends(G, m, M, 0.5, params)[0].parameters["alpha"] == 0.5
    with pytest.raises(errors.AlphaOutOfRange):
        hardy_weight_two_ends(G, m, M, 0.4, params)
    with pytest.raises(errors.EndLimitMismatch):
        hardy_weight_two_ends(G, m, M + 1.0, None, params)


def test_two_ends_unbounded():
    # admissible profiles with one infinite end are those of Case1; the branch reproduces that weight
    for p, n in [(2.0, 3), (4.0, 2)]:
        params = ProblemParams(p, n)
        G = green_radial(params, RadialDomain.punctured_space())
        W, v = hardy_weight_two_ends(G, 0.0, math.inf, None, params)
        r = R
        assert rel_err(W(r), hardy_weight_case1(G, params)[0](r)) < 1e-13
        assert W.construction == "TwoEndsUnbounded" and W.expected_lambda0 == 1.0
    res, scale = residual(W, v, params, r)
    assert np.all(np.abs(res) < 1e-6 * scale)


@pytest.mark.parametrize("p,n,dom", [(2.0, 3, RadialDomain.punctured_space()), (3.0, 5, RadialDomain.punctured_space()),
                                     (4.0, 2, RadialDomain.punctured_space()), (1.5, 3, RadialDomain.punctured_space())])
def test_case1_ground_state_residual(p, n, dom):
    params = ProblemParams(p, n)
    W, v = hardy_weight_case1(green_radial(params, dom), params)
    res, scale = residual(W, v, params, R)
    assert np.all(np.abs(res) < 1e-6 * scale)
    assert np.all(W(R) >= -1e-14)


def test_case2_ground_state_residual():
    params, G = case2_setup()
    W, v = hardy_weight_case2(G, 1.0, params)
    r = BALL_R[np.abs(BALL_R - 0.25) > 1e-6]
    res, scale = residual(W, v, params, r)
    assert np.all(np.abs(res) < 1e-6 * scale)


def test_interpolated_weight():
    params, G = case2_setup()
    W0, v0 = interpolated_weight(G, 1.0, 0.0, params)
    assert np.all(W0(BALL_R) == 0.0)
    assert rel_err(v0(BALL_R), G.value(BALL_R)) < 1e-14
    W, v = interpolated_weight(G, 1.0, 0.5, params)
    assert abs(W(0.25)) < 1e-12
    assert W.expected_lambda0 is None and not W.optimal
    res, scale = residual(W, v, params, BALL_R[np.abs(BALL_R - 0.25) > 1e-6])
    assert np.all(np.abs(res) < 1e-6 * scale)


def test_interpolated_weight_matches_supersolution_pair():
    # v0 = G and v1 = gamma - G are both p-harmonic; interpolating them gives the same weight,
    # which pins down the gamma^2 factor since gamma != 1 here
    from hardyopt.calculus import RadialFunction
    params = ProblemParams(3.0, 2)
    G = green_radial(params, RadialDomain.punctured_ball(2.5))
    gamma = G.classification.gamma
    assert abs(gamma - 1.0) > 0.1
    r = np.linspace(0.02, 2.45, 80)
    r = r[np.abs(G.value(r) - gamma * 0.7) > 1e-6]
    v0 = G.as_radial()
    v1 = RadialFunction(lambda x: gamma - G.value(x), lambda x: -G.derivative(x), lambda x: -G.second_derivative(x))
    W, v = interpolated_weight(G, gamma, 0.3, params)
    ground, V, Ws = supersolution_construct_radial(v0, None, v1, None, 0.3, params, RadialDomain.punctured_ball(2.5),
                                                   sample_radii=r)
    assert rel_err(W(r), Ws(r)) < 1e-12
    assert rel_err(v(r), ground(r)) < 1e-13


def test_supersolution_prop_cross_check():
    # v0 = G, v1 = 1, zero potentials: W_alpha = alpha (1-alpha)^{p-1} (p-1) |(log G)'|^p
    for p, n in [(2.0, 3), (3.0, 5), (1.5, 2)]:
        params = ProblemParams(p, n)
        a = (p - n) / (p - 1)
        alpha = 0.35
        v, V, W = supersolution_construct_radial(power(a), None, power(0.0), None, alpha, params)
        want = alpha * (1 - alpha) ** (p - 1) * (p - 1) * np.abs(a / R) ** p
        assert rel_err(W(R), want) < 1e-12
        assert rel_err(v(R), R ** (a * (1 - alpha))) < 1e-12
        assert np.all(V(R) == 0.0)


def test_supersolution_alpha_zero():
    params = ProblemParams(3.0, 2)
    V0 = as_potential(lambda r: -0.1 / r ** 3)
    v, V, W = supersolution_construct_radial(power(0.5), V0, power(-1.0), None, 0.0, params)
    assert rel_err(v(R), R ** 0.5) < 1e-14
    assert np.all(W(R) == 0.0)
    assert V is V0


def test_supersolution_optimized_alpha():
    # v0 = 1, v1 = v: the best alpha gives ((p-1)/p)^p |v'/v|^p
    for p in [1.5, 2.0, 3.0]:
        params = ProblemParams(p, 3)
        a = np.linspace(1e-3, 1 - 1e-3, 9999)
        coef = a * (1 - a) * (p - 1) * a ** (p - 2)
        alpha = a[np.argmax(coef)]
        _, _, W = supersolution_construct_radial(power(0.0), None, power(-0.8), None, alpha, params)
        want = ((p - 1) / p) ** p * np.abs(0.8 / R) ** p
        assert rel_err(W(R), want) < 1e-6


def test_supersolution_vanishing_derivative():
    params = ProblemParams(2.0, 3)
    with pytest.raises(errors.VanishingDerivative):
        supersolution_construct_radial(power(1.0), None, power(-1.0), None, 0.5, params)
    with pytest.raises(errors.VanishingDerivative):
        supersolution_construct_radial(power(0.0), 1.0, power(-1.0), None, 0.5, params)


def _supersolution(s, extra, params):
    """``(r^s, V)`` with ``-Delta_p v + V v^{p-1} = extra r^{s(p-1)-p} >= 0``."""
    v = power(s)
    plap = p_laplacian_radial(v, params)
    return v, (lambda r: -plap.value(r) / v.value(r) ** (params.p - 1) + extra / np.asarray(r) ** params.p)


def test_supersolution_residual_random_pairs():
    rng = np.random.default_rng(20261016)
    for _ in range(10):
        p = float(rng.choice([1.5, 2.0, 3.0, 4.0]))
        n = int(rng.integers(2, 6))
        params = ProblemParams(p, n)
        s0, s1 = rng.uniform(-3, -0.2), rng.uniform(0.2, 3) * rng.choice([-1, 1])
        alpha = rng.uniform(0.05, 0.95)
        if abs((1 - alpha) * s0 + alpha * s1) < 0.05:
            alpha = 0.5 * alpha
        v0, V0 = _supersolution(s0, rng.uniform(0, 2), params)
        v1, V1 = _supersolution(s1, rng.uniform(0, 2), params)
        v, V, W = supersolution_construct_radial(v0, V0, v1, V1, alpha, params)
        res, scale = residual(W, v, params, R, V)
        assert np.all(res >= -1e-6 * scale)


@given(p=st.sampled_from([1.3, 1.5, 2.0, 2.5, 3.0, 4.0]), alpha=st.floats(0.0, 1.0),
       a0=st.floats(0.0, 5.0), a1=st.floats(0.0, 5.0), s0=st.floats(-3, 3), s1=st.floats(-3, 3))
def test_majorization(p, alpha, a0, a1, s0, s1):
    # admissible pairs are monotone in the same direction, so |(log v_alpha)'| is the
    # convex combination of |(log v_j)'| on which the concavity argument rests
    if abs(s0) < 0.05 or abs(s1) < 0.05 or s0 * s1 < 0:
        return
    params = ProblemParams(p, 3)
    sign = 1.0 if p <= 2 else -1.0
    V0 = lambda r: sign * a0 / np.asarray(r) ** 2
    V1 = lambda r: sign * a1 * (1 + np.asarray(r)) / np.asarray(r) ** 3
    cal = convex_combination_potential(V0, V1, alpha, params, sample_radii=R)
    _, V, _ = supersolution_construct_radial(power(s0), V0, power(s1), V1, alpha, params)
    big, small = cal(R), V(R)
    assert np.all(big >= small - 1e-12 * (np.abs(big) + np.abs(small)))


def test_convex_combination_examples():
    p3 = ProblemParams(3.0, 2)
    V = lambda r: -1.0 / np.asarray(r) ** 2
    assert rel_err(convex_combination_potential(V, V, 0.3, p3)(R), V(R)) < 1e-14
    V1 = lambda r: -2.0 / np.asarray(r)
    assert rel_err(convex_combination_potential(V, V1, 1.0, p3)(R), V1(R)) < 1e-14
    p2 = ProblemParams(2.0, 3)
    W0, W1 = (lambda r: np.sin(r)), (lambda r: np.cos(r))
    assert rel_err(convex_combination_potential(W0, W1, 0.25, p2)(R), 0.75 * np.sin(R) + 0.25 * np.cos(R)) < 1e-14


def test_convex_combination_sign_rule():
    with pytest.raises(errors.SignConditionViolated):
        convex_combination_potential(lambda r: np.ones_like(r), None, 0.5, ProblemParams(3.0, 2), sample_radii=R)
    with pytest.raises(errors.SignConditionViolated):
        convex_combination_potential(lambda r: -np.ones_like(r), None, 0.5, ProblemParams(1.5, 2), sample_radii=R)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_hessian_sign(p):
    rng = np.random.default_rng(7)
    xi, eta = np.exp(rng.uniform(np.log(0.01), np.log(100), (2, 1000)))
    h = interpolation_hessian(xi, eta, p)
    tr = np.trace(h, axis1=-2, axis2=-1)
    det = np.linalg.det(h)
    scale = np.abs(h).sum(axis=(-2, -1))
    assert np.all(np.abs(det) <= 1e-12 * scale ** 2)
    if p > 2:
        assert np.all(tr > 0) and np.all(np.linalg.eigvalsh(h) >= -1e-12 * scale[:, None])
    elif p < 2:
        assert np.all(tr < 0) and np.all(np.linalg.eigvalsh(h) <= 1e-12 * scale[:, None])
    else:
        assert np.all(h == 0)


def test_hessian_matches_finite_differences():
    p, x, y, e = 3.3, 1.7, 0.6, 1e-4
    f = lambda a, b: a ** (p - 1) * b ** (2 - p)
    fd = np.array([[(f(x + e, y) - 2 * f(x, y) + f(x - e, y)) / e ** 2,
                    (f(x + e, y + e) - f(x + e, y - e) - f(x - e, y + e) + f(x - e, y - e)) / (4 * e ** 2)],
                   [0, (f(x, y + e) - 2 * f(x, y) + f(x, y - e)) / e ** 2]])
    fd[1, 0] = fd[0, 1]
    assert np.allclose(interpolation_hessian(x, y, p), fd, rtol=1e-5)


def test_weight_descriptor_and_table():
    params = ProblemParams(2.0, 3)
    W, v = hardy_weight_case1(green_radial(params, RadialDomain.punctured_space()), params)
    d = W.descriptor()
    assert d["construction"] == "Case1" and d["expected_lambda0"] == 1.0 and d["params"]["p"] == 2.0
    t = weight_table(W, v, [1.0, 2.0])
    assert t.shape == (2, 3) and t[0, 1] == pytest.approx(0.25)
