import math

import numpy as np
import pytest

from hardyopt import errors
from hardyopt.domain import ProblemParams, RadialDomain, green_radial
from hardyopt.energy import RadialGrid
from hardyopt.optimality import (VerificationWindow, build_construction, null_criticality_mass, null_sequence,
                                 optimality_probe, probe_pieces, rayleigh_min, rayleigh_search, verify_construction)
from hardyopt.weights import hardy_weight_case1, hardy_weight_case2

P23 = ProblemParams(2.0, 3)
SPACE = RadialDomain.punctured_space()


def case1(params=P23):
    G = green_radial(params, SPACE)
    W, v = hardy_weight_case1(G, params)
    return G, W, v


def test_window_validation():
    with pytest.raises(errors.PreconditionError):
        VerificationWindow(2.0, 1.0)
    with pytest.raises(errors.PreconditionError):
        VerificationWindow(1.0, 2.0, "sideways")
    w = VerificationWindow.from_decades(SPACE, -2, 2)
    assert (w.r_lo, w.r_hi) == pytest.approx((1e-2, 1e2), rel=1e-14)


def test_truncated_window_value_p2():
    # on a window of log-length L the Case1 quotient for p = 2, n = 3 is exactly 1 + 4 pi^2 / L^2
    _, W, v = case1()
    grid = RadialGrid.log_spaced(1e-2, 1e2, 2048, P23)
    res = rayleigh_min(W, None, grid, VerificationWindow(1e-2, 1e2))
    L = 4 * math.log(10)
    assert res.lambda_hat == pytest.approx(1 + 4 * math.pi ** 2 / L ** 2, rel=1e-5)
    assert res.lambda_hat >= 1 - 3e-2


def test_scaling_halves_quotient():
    _, W, v = case1()
    grid = RadialGrid.log_spaced(1e-2, 1e2, 512, P23)
    win = VerificationWindow(1e-2, 1e2)
    a = rayleigh_min(W, None, grid, win, ground_state=v).lambda_hat
    b = rayleigh_min(W.scaled(2.0), None, grid, win, ground_state=v).lambda_hat
    assert b == pytest.approx(a / 2, rel=1e-7)


@pytest.mark.parametrize("p,n", [(2.0, 3), (3.0, 5), (1.5, 3)])
def test_growing_windows_non_increasing(p, n):
    params = ProblemParams(p, n)
    _, W, v = case1(params)
    grid = RadialGrid.log_spaced(1e-4, 1e4, 1024, params)
    lams, prev = [], []
    for k in (1, 2, 4):
        res = rayleigh_search(W, None, grid, VerificationWindow(10.0 ** -k, 10.0 ** k), ground_state=v,
                              extra_starts=prev)
        prev = [res.minimizer]
        lams.append(res.lambda_hat)
    assert all(b <= a + 1e-10 for a, b in zip(lams, lams[1:]))
    assert lams[-1] >= 1 - 3e-2


def test_seeded_search_is_deterministic():
    params = ProblemParams(3.0, 5)
    _, W, v = case1(params)
    grid = RadialGrid.log_spaced(1e-2, 1e2, 256, params)
    win = VerificationWindow(1e-2, 1e2)
    a = rayleigh_search(W, None, grid, win, ground_state=v, seed=5)
    b = rayleigh_search(W, None, grid, win, ground_state=v, seed=5, threads=4)
    assert a.quotients == b.quotients
    assert np.array_equal(a.minimizer.values, b.minimizer.values)


def test_zero_weight_raises():
    grid = RadialGrid.log_spaced(1e-2, 1e2, 64, P23)
    with pytest.raises(errors.ZeroDenominator):
        rayleigh_min(lambda r: np.zeros_like(r), None, grid, VerificationWindow(1e-1, 1e1))


def test_window_too_narrow():
    grid = RadialGrid.log_spaced(1e-2, 1e2, 64, P23)
    with pytest.raises(errors.GridTooNarrow):
        rayleigh_min(lambda r: np.ones_like(r), None, grid, VerificationWindow(1.0, 1.01))


def test_null_sequence_localization_constant():
    _, _, v = case1()
    norms = [null_sequence("A7", v, k).normalization for k in (3, 10, 100, 1000)]
    assert np.ptp(norms) < 1e-9 * norms[0]


def test_null_sequence_decay_case1():
    _, _, v = case1()
    e = [null_sequence("A7", v, k).normalized_energy for k in (10, 100, 1000)]
    assert e[0] > e[1] > e[2] and e[2] < 0.5 * e[0]


def test_null_sequence_case2_one_sided():
    params = ProblemParams(3.0, 2)
    G = green_radial(params, RadialDomain.punctured_ball(1.0))
    _, v = hardy_weight_case2(G, 1.0, params)
    e = [null_sequence("A8GammaPos", v, k).normalized_energy for k in (10, 100, 1000)]
    assert e[0] > e[1] > e[2]


def test_null_sequence_errors():
    _, _, v = case1()
    with pytest.raises(errors.PreconditionError):
        null_sequence("A7", v, 2)
    with pytest.raises(errors.WrongClassification):
        null_sequence("TwoEnds", v, 10)
    with pytest.raises(errors.GridTooNarrow):
        null_sequence("A7", v, 100, grid=RadialGrid.log_spaced(1e-2, 1e2, 64, P23))


def test_mass_examples():
    G, _, v = case1()
    assert null_criticality_mass(v, G, 1.0, math.e, P23) == pytest.approx(2 * math.pi, rel=1e-9)
    assert null_criticality_mass(v, G, 3.0, 3.0, P23) == 0.0
    one = null_criticality_mass(v, G, 2.0, 2.0 * math.e, P23)
    two = null_criticality_mass(v, G, 2.0, 2.0 * math.e ** 2, P23)
    assert two == pytest.approx(2 * one, rel=1e-9)
    with pytest.raises(errors.LevelOutOfRange):
        null_criticality_mass(v, G, 2.0, 1.0, P23)


@pytest.mark.parametrize("p,n", [(3.0, 5), (4.0, 2), (1.5, 3)])
def test_mass_linear_in_log_band(p, n):
    from hardyopt.calculus import coarea_constants
    params = ProblemParams(p, n)
    G, _, v = case1(params)
    c, _ = coarea_constants(G, params)
    for k in range(1, 7):
        assert null_criticality_mass(v, G, 1.0, 10.0 ** k, params) == pytest.approx(c * k * math.log(10), rel=1e-6)


def test_mass_case2_grows():
    params = ProblemParams(3.0, 2)
    G = green_radial(params, RadialDomain.punctured_ball(1.0))
    _, v = hardy_weight_case2(G, 1.0, params)
    m = [null_criticality_mass(v, G, 10.0 ** -k, 0.5, params, levels="G") for k in range(1, 8)]
    assert all(b > a for a, b in zip(m, m[1:])) and m[-1] > 10 * m[0]


def test_probe_diverges_for_critical_exponent():
    lo, hi = optimality_probe(0.5, 1e-2), optimality_probe(0.5, 1e-6)
    assert (hi.lhs / hi.rhs) > 1.5 * (lo.lhs / lo.rhs)


def test_probe_converges_for_large_exponent():
    a, b = optimality_probe(1.0, 1e-5), optimality_probe(1.0, 1e-6)
    assert abs(b.lhs / a.lhs - 1) < 1e-2 and abs(b.rhs / a.rhs - 1) < 1e-2


def test_probe_ramp_vanishes():
    ramps = [probe_pieces(0.5, eps)["ramp_lhs"] for eps in (1e-2, 1e-4, 1e-8)]
    # (1/(eps |log eps|^g))^p eps^p / p = 1 / (p |log eps|^{g p})
    for eps, val in zip((1e-2, 1e-4, 1e-8), ramps):
        assert val == pytest.approx(1 / (2 * abs(math.log(eps))), rel=1e-10)
    assert ramps[0] > ramps[1] > ramps[2]


def test_probe_middle_closed_form():
    # with p gamma = 1 the middle of the left side is log|log eps| - log log 2
    eps = 1e-6
    got = probe_pieces(0.5, eps)["middle_lhs"]
    assert got == pytest.approx(math.log(abs(math.log(eps))) - math.log(math.log(2)), rel=1e-10)


def test_probe_preconditions():
    with pytest.raises(errors.PreconditionError):
        optimality_probe(0.5, 0.7)
    with pytest.raises(errors.PreconditionError):
        optimality_probe(0.0, 0.1)


SMALL = {"nodes": 1024, "global_decades": [1.0, 2.0], "inner_decades": [[-4.0, -2.0], [-5.0, -2.0]],
         "outer_decades": [[2.0, 4.0], [2.0, 5.0]], "sequence_indices": [10, 100, 1000]}


def test_verify_case1_report():
    cons = build_construction("case1", P23, SPACE)
    rep = verify_construction(cons, SMALL)
    checks = rep.checks
    assert checks["global_non_increasing"]["pass"]
    assert checks["null_sequence_decay"]["pass"]
    assert checks["mass_divergence"]["pass"]
    for row in rep.mass_divergence:
        assert row["mass"] == pytest.approx(row["expected"], rel=1e-6)
    assert rep.lambda_hat > 0
    assert set(rep.to_json()) >= {"lambda_hat", "window_table", "null_seq_table", "checks", "verdict"}


def test_verify_flags_interpolated_weight():
    cons = build_construction("interpolated", ProblemParams(4.0, 2), RadialDomain.punctured_ball(1.0), alpha=0.25)
    rep = verify_construction(cons, {**SMALL, "nodes": 512})
    assert rep.verdict == "consistent with subcritical"


def test_verify_rejects_unknown_keys():
    cons = build_construction("case1", P23, SPACE)
    with pytest.raises(KeyError):
        verify_construction(cons, {"span": 3})


def test_build_construction_errors():
    with pytest.raises(errors.PreconditionError):
        build_construction("nope", P23, SPACE)
    with pytest.raises(errors.AlphaOutOfRange):
        build_construction("interpolated", ProblemParams(4.0, 2), RadialDomain.punctured_ball(1.0))
