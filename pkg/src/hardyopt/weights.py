"""Hardy weights built from Green profiles and from pairs of positive supersolutions.

Every constructor returns a lazily evaluated :class:`Weight` together with the
:class:`GroundState` it pairs with. A weight records ``expected_lambda0 = 1``
when the construction is claimed optimal (best constant 1, critical,
null-critical) and ``None`` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import errors
from .calculus import RadialFunction, abs_pow, compose, level_range
from .defaults import DEFAULTS
from .domain import GreenProfile, Limit, ProblemParams, RadialDomain


@dataclass(frozen=True)
class Weight:
    """A nonnegative radial weight with construction metadata."""

    eval: Callable
    construction: str
    parameters: dict
    expected_lambda0: Optional[float]
    params: ProblemParams
    domain: RadialDomain
    singular_radii: tuple = ()
    optimal: bool = False
    note: str = ""

    def __call__(self, r):
        return self.eval(np.asarray(r, dtype=float))

    def scaled(self, factor: float) -> "Weight":
        base = self.eval
        return Weight(lambda r: factor * base(r), self.construction, {**self.parameters, "scale": factor},
                      None, self.params, self.domain, self.singular_radii, False, self.note)

    def descriptor(self) -> dict:
        return {
            "construction": self.construction,
            "params": {"p": self.params.p, "n": self.params.n, **self.parameters},
            "expected_lambda0": self.expected_lambda0,
            "optimal": self.optimal,
            "note": self.note,
            "domain": self.domain.to_json(),
        }


@dataclass(frozen=True)
class GroundState:
    """Positive solution paired with a weight: ``v``, ``v'`` and ``v''``."""

    value: Callable
    derivative: Callable
    second_derivative: Optional[Callable]
    construction: str
    params: ProblemParams
    domain: RadialDomain

    def __call__(self, r):
        return self.value(np.asarray(r, dtype=float))

    def as_radial(self) -> RadialFunction:
        return RadialFunction(self.value, self.derivative, self.second_derivative)


@dataclass(frozen=True)
class PotentialProfile:
    """A real radial potential."""

    eval: Callable
    label: str = ""

    def __call__(self, r):
        return self.eval(np.asarray(r, dtype=float))


def zero_potential() -> PotentialProfile:
    return PotentialProfile(lambda r: np.zeros_like(np.asarray(r, dtype=float)), "zero")


def as_potential(V) -> PotentialProfile:
    if V is None:
        return zero_potential()
    if isinstance(V, PotentialProfile):
        return V
    if np.isscalar(V):
        c = float(V)
        return PotentialProfile(lambda r: np.full_like(np.asarray(r, dtype=float), c), f"const {c}")
    return PotentialProfile(V)


def _check_derivative(G: GreenProfile) -> None:
    r = G.domain.sample_radii(DEFAULTS["derivative_check_samples"])
    if np.any(G.derivative(r) == 0):
        raise errors.VanishingDerivative("the profile has a critical point on the domain")


def _ground(G: GreenProfile, f: RadialFunction, tag: str) -> GroundState:
    g = compose(f, G.as_radial())
    return GroundState(g.value, g.derivative, g.second_derivative, tag, G.params, G.domain)


def _power_map(alpha: float, shift: float = 0.0) -> RadialFunction:
    """The scalar map ``s -> (s - shift)^alpha``."""
    return RadialFunction(
        lambda s: (s - shift) ** alpha,
        lambda s: alpha * (s - shift) ** (alpha - 1.0),
        lambda s: alpha * (alpha - 1.0) * (s - shift) ** (alpha - 2.0),
    )


def _product_power_map(alpha: float, m: float, M: float) -> RadialFunction:
    """The scalar map ``s -> [(s - m)(M - s)]^alpha``."""

    def q(s):
        return (s - m) * (M - s)

    return RadialFunction(
        lambda s: q(s) ** alpha,
        lambda s: alpha * q(s) ** (alpha - 1.0) * (m + M - 2.0 * s),
        lambda s: alpha * (alpha - 1.0) * q(s) ** (alpha - 2.0) * (m + M - 2.0 * s) ** 2
        - 2.0 * alpha * q(s) ** (alpha - 1.0),
    )


def _zero_radius(G: GreenProfile, level: float) -> tuple:
    low, high = level_range(G)
    if low < level < high:
        return (float(np.ravel(G.inverse(level))[0]),)
    return ()


def hardy_weight_case1(G: GreenProfile, params: ProblemParams):
    """``W = ((p-1)/p)^p |G'/G|^p`` with ground state ``G^{(p-1)/p}``.

    For profiles that blow up at the origin and vanish at infinity (p <= n) or
    vanish at the origin and blow up at infinity (p > n).
    """
    if G.classification.kind not in ("A7", "A8Gamma0"):
        raise errors.WrongClassification(
            f"this weight needs a profile that is infinite at one end and zero at the other, got {G.classification}")
    _check_derivative(G)
    p, beta = params.p, params.beta
    coef = beta ** p

    def W(r):
        return coef * np.abs(G.derivative(r) / G.value(r)) ** p

    weight = Weight(W, "Case1", {}, 1.0, params, G.domain, (), True)
    return weight, _ground(G, _power_map(beta), "Case1")


def _check_gamma(G: GreenProfile, gamma: float) -> None:
    if G.classification.kind != "A8GammaPos":
        raise errors.WrongClassification(
            f"this weight needs p > n and a profile with a positive finite limit at the origin and zero "
            f"at infinity, got {G.classification}")
    if not gamma > 0 or abs(gamma - G.classification.gamma) > 1e-12 * max(1.0, gamma):
        raise errors.GammaMismatch(
            f"gamma={gamma!r} differs from the profile limit at the origin {G.classification.gamma!r}")


def _case2_eval(G: GreenProfile, gamma: float, p: float):
    coef = ((p - 1.0) / p) ** p

    def W(r):
        g = G.value(r)
        q = g * (gamma - g)
        return (coef * np.abs(G.derivative(r) / q) ** p * abs_pow(gamma - 2.0 * g, p - 2.0)
                * (2.0 * (p - 2.0) * q + gamma ** 2))

    return W


def hardy_weight_case2(G: GreenProfile, gamma: float, params: ProblemParams):
    """Optimal weight for profiles with limit ``gamma`` > 0 at the origin and 0 at infinity (p > n).

    ``W = ((p-1)/p)^p |G'/(G(gamma-G))|^p |gamma-2G|^{p-2} [2(p-2) G(gamma-G) + gamma^2]``
    with ground state ``[G(gamma-G)]^{(p-1)/p}``. For p > 2 the weight vanishes
    on the sphere where ``G = gamma/2``.
    """
    if not params.p > params.n:
        raise errors.WrongClassification("this weight needs p > n")
    _check_gamma(G, gamma)
    _check_derivative(G)
    zeros = _zero_radius(G, 0.5 * gamma)
    weight = Weight(_case2_eval(G, gamma, params.p), "Case2", {"gamma": gamma}, 1.0, params, G.domain,
                    zeros, True)
    return weight, _ground(G, _product_power_map(params.beta, 0.0, gamma), "Case2")


def composed_profile_weight(G: GreenProfile, gamma: float, params: ProblemParams):
    """``W = -Delta_p(psi(G)) / psi(G)^{p-1}`` for ``psi(s) = [s(gamma-s)]^{(p-1)/p}``.

    The quotient has the same closed form as :func:`hardy_weight_case2`; this
    entry point exists so the identity can be cross-checked against a direct
    p-Laplacian evaluation of the composed profile.
    """
    w, v = hardy_weight_case2(G, gamma, params)
    weight = Weight(w.eval, "ComposedProfile", {"gamma": gamma}, 1.0, params, G.domain, w.singular_radii, True)
    return weight, GroundState(v.value, v.derivative, v.second_derivative, "ComposedProfile", params, G.domain)


def hardy_weight_alpha(G: GreenProfile, alpha: float, params: ProblemParams):
    """``W_alpha = alpha^{p-1}(1-alpha)(p-1)|G'/G|^p`` with ground state ``G^alpha``."""
    if not 0.0 < alpha < 1.0:
        raise errors.AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha!r}")
    _check_derivative(G)
    p = params.p
    coef = alpha ** (p - 1.0) * (1.0 - alpha) * (p - 1.0)

    def W(r):
        return coef * np.abs(G.derivative(r) / G.value(r)) ** p

    optimal = abs(alpha - params.beta) < 1e-14
    weight = Weight(W, "Alpha", {"alpha": alpha}, 1.0 if optimal else None, params, G.domain, (),
                    optimal and G.classification.kind in ("A7", "A8Gamma0"))
    return weight, _ground(G, _power_map(alpha), "Alpha")


def _matches(limit: Limit, x: float) -> bool:
    return limit.close_to(Limit.infinite() if math.isinf(x) else Limit.finite(x), rtol=1e-12)


def hardy_weight_two_ends(G: GreenProfile, m: float, M: float, alpha: Optional[float], params: ProblemParams):
    """Weights for profiles with limits ``m`` and ``M`` at the two ends.

    Bounded branch (``M`` finite): with ``v1 = (G-m)(M-G)``,
    ``W = (p-1) alpha^{p-1} |G'/v1|^p |m+M-2G|^{p-2} [2(2 alpha-1) v1 + (1-alpha)(M-m)^2]``
    and ground state ``v1^alpha``; alpha lies in [1/2, 1] if m > 0 and in [0, 1]
    if m = 0. Unbounded branch (``M = inf``):
    ``W = alpha^{p-1}(1-alpha)(p-1)|G'/(G-m)|^p`` with ground state ``(G-m)^alpha``.
    ``alpha=None`` selects the optimal value (p-1)/p.
    """
    p, beta = params.p, params.beta
    if alpha is None:
        alpha = beta
    ends = (G.inner_limit, G.outer_limit)
    if not ((_matches(ends[0], m) and _matches(ends[1], M)) or (_matches(ends[0], M) and _matches(ends[1], m))):
        raise errors.EndLimitMismatch(
            f"profile end limits ({G.inner_limit}, {G.outer_limit}) are not {{m, M}} = {{{m!r}, {M!r}}}")
    if not m < M or m < 0:
        raise errors.EndLimitMismatch("two-ends weights need 0 <= m < M")
    _check_derivative(G)
    optimal = abs(alpha - beta) < 1e-14
    if math.isinf(M):
        if not 0.0 <= alpha <= 1.0:
            raise errors.AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha!r}")
        coef = alpha ** (p - 1.0) * (1.0 - alpha) * (p - 1.0)

        def W(r):
            return coef * np.abs(G.derivative(r) / (G.value(r) - m)) ** p

        weight = Weight(W, "TwoEndsUnbounded", {"m": m, "alpha": alpha}, 1.0 if optimal else None, params,
                        G.domain, (), optimal)
        return weight, _ground(G, _power_map(alpha, m), "TwoEndsUnbounded")

    lo = 0.5 if m > 0 else 0.0
    if not lo <= alpha <= 1.0:
        raise errors.AlphaOutOfRange(
            f"alpha={alpha!r} is outside [{lo}, 1]; when the smaller end limit m is positive, "
            f"alpha must be at least 1/2")
    span2 = (M - m) ** 2

    def W(r):
        g = G.value(r)
        v1 = (g - m) * (M - g)
        return ((p - 1.0) * alpha ** (p - 1.0) * np.abs(G.derivative(r) / v1) ** p
                * abs_pow(m + M - 2.0 * g, p - 2.0) * (2.0 * (2.0 * alpha - 1.0) * v1 + (1.0 - alpha) * span2))

    zeros = _zero_radius(G, 0.5 * (m + M))
    weight = Weight(W, "TwoEndsBounded", {"m": m, "M": M, "alpha": alpha}, 1.0 if optimal else None, params,
                    G.domain, zeros, optimal)
    return weight, _ground(G, _product_power_map(alpha, m, M), "TwoEndsBounded")


def interpolated_weight(G: GreenProfile, gamma: float, alpha: float, params: ProblemParams):
    """Weight of the interpolate ``v = G^{1-alpha} (gamma-G)^alpha`` of two p-harmonic profiles.

    ``W = alpha(1-alpha)(p-1) gamma^2 |gamma(1-alpha)-G|^{p-2} |G'/(G(gamma-G))|^p``.
    The resulting functional is subcritical, so the weight is flagged non-optimal.
    """
    if not params.p > params.n:
        raise errors.WrongClassification("this weight needs p > n")
    _check_gamma(G, gamma)
    if not 0.0 <= alpha <= 1.0:
        raise errors.AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha!r}")
    _check_derivative(G)
    p = params.p
    coef = alpha * (1.0 - alpha) * (p - 1.0) * gamma ** 2

    def W(r):
        g = G.value(r)
        return coef * abs_pow(gamma * (1.0 - alpha) - g, p - 2.0) * np.abs(G.derivative(r) / (g * (gamma - g))) ** p

    def value(r):
        g = G.value(r)
        return g ** (1.0 - alpha) * (gamma - g) ** alpha

    def log_derivs(r):
        g, dg, d2g = G.value(r), G.derivative(r), G.second_derivative(r)
        h = gamma - g
        l1 = (1.0 - alpha) * dg / g - alpha * dg / h
        l2 = (1.0 - alpha) * (d2g / g - (dg / g) ** 2) + alpha * (-d2g / h - (dg / h) ** 2)
        return l1, l2

    def d1(r):
        return value(r) * log_derivs(r)[0]

    def d2(r):
        l1, l2 = log_derivs(r)
        return value(r) * (l2 + l1 ** 2)

    zeros = _zero_radius(G, gamma * (1.0 - alpha)) if 0 < alpha < 1 else ()
    weight = Weight(W, "Interpolated", {"gamma": gamma, "alpha": alpha}, None, params, G.domain, zeros, False,
                    "subcritical: the functional admits a strict improvement")
    return weight, GroundState(value, d1, d2, "Interpolated", params, G.domain)


def supersolution_construct_radial(v0: RadialFunction, V0, v1: RadialFunction, V1, alpha: float,
                                   params: ProblemParams, domain: Optional[RadialDomain] = None,
                                   sample_radii=None):
    """Interpolate two positive radial supersolutions.

    With ``l_j = (log v_j)'`` and ``l = (1-alpha) l_0 + alpha l_1``, returns
    ``v_alpha = v1^alpha v0^{1-alpha}``,
    ``V_alpha = ((1-alpha) V0 |l_0|^{2-p} + alpha V1 |l_1|^{2-p}) |l|^{p-2}`` and
    ``W_alpha = alpha(1-alpha)(p-1) |l_0 - l_1|^2 |l|^{p-2}``.

    Nonvanishing of the derivatives is checked on sampled radii only (1000 by
    default), which is a heuristic stand-in for a global hypothesis. ``v_j'`` may
    vanish where ``V_j = 0``; the corresponding term is then zero.
    """
    if not 0.0 <= alpha <= 1.0:
        raise errors.AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha!r}")
    if v0.second_derivative is None or v1.second_derivative is None:
        raise errors.MissingSecondDerivative("both supersolutions need second derivatives")
    domain = domain or RadialDomain.punctured_space()
    V0, V1 = as_potential(V0), as_potential(V1)
    p = params.p
    r_s = domain.sample_radii(DEFAULTS["derivative_check_samples"]) if sample_radii is None else np.asarray(
        sample_radii, dtype=float)

    def logd(v, r):
        return v.derivative(r) / v.value(r)

    l0s, l1s = logd(v0, r_s), logd(v1, r_s)
    ls = (1.0 - alpha) * l0s + alpha * l1s
    if np.any(ls == 0):
        raise errors.VanishingDerivative(
            f"the interpolate has a critical point at r={float(r_s[ls == 0][0])!r}")
    for name, l, V, a in (("v0", l0s, V0, 1.0 - alpha), ("v1", l1s, V1, alpha)):
        bad = (l == 0) & (np.asarray(V(r_s)) != 0) & (a > 0)
        if np.any(bad):
            raise errors.VanishingDerivative(f"{name}' vanishes where its potential does not (r={float(r_s[bad][0])!r})")

    def term(V, v, r):
        Vr = np.asarray(V(r), dtype=float)
        with np.errstate(all="ignore"):
            t = Vr * abs_pow(logd(v, r), 2.0 - p)
        return np.where(Vr == 0, 0.0, t)

    def ell(r):
        return (1.0 - alpha) * logd(v0, r) + alpha * logd(v1, r)

    def value(r):
        return v1.value(r) ** alpha * v0.value(r) ** (1.0 - alpha)

    def d1(r):
        return value(r) * ell(r)

    def d2(r):
        l2 = lambda v: v.second_derivative(r) / v.value(r) - logd(v, r) ** 2
        return value(r) * ((1.0 - alpha) * l2(v0) + alpha * l2(v1) + ell(r) ** 2)

    def V_alpha(r):
        r = np.asarray(r, dtype=float)
        return ((1.0 - alpha) * term(V0, v0, r) + alpha * term(V1, v1, r)) * abs_pow(ell(r), p - 2.0)

    def W_alpha(r):
        r = np.asarray(r, dtype=float)
        return alpha * (1.0 - alpha) * (p - 1.0) * (logd(v0, r) - logd(v1, r)) ** 2 * abs_pow(ell(r), p - 2.0)

    ground = GroundState(value, d1, d2, "Supersolution", params, domain)
    if alpha == 0.0:
        pot = V0
    elif alpha == 1.0:
        pot = V1
    else:
        pot = PotentialProfile(V_alpha, "interpolated potential")
    weight = Weight(W_alpha, "Supersolution", {"alpha": alpha}, None, params, domain, (), False)
    return ground, pot, weight


def convex_combination_potential(V0, V1, alpha: float, params: ProblemParams,
                                 sample_radii=None) -> PotentialProfile:
    """``+-((1-alpha)|V0|^{1/(p-1)} + alpha|V1|^{1/(p-1)})^{p-1}``, minus sign for nonpositive potentials.

    Needs ``V0, V1 >= 0`` when p < 2 and ``V0, V1 <= 0`` when p > 2; at p = 2 the
    combination is linear and any signs are allowed. Signs are checked at
    ``sample_radii`` when given and at every evaluation.
    """
    if not 0.0 <= alpha <= 1.0:
        raise errors.AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha!r}")
    V0, V1 = as_potential(V0), as_potential(V1)
    p = params.p
    q = 1.0 / (p - 1.0)

    def check(a, b):
        if p < 2 and (np.any(a < 0) or np.any(b < 0)):
            raise errors.SignConditionViolated("for p < 2 both potentials must be nonnegative")
        if p > 2 and (np.any(a > 0) or np.any(b > 0)):
            raise errors.SignConditionViolated("for p > 2 both potentials must be nonpositive")

    if sample_radii is not None:
        r = np.asarray(sample_radii, dtype=float)
        check(V0(r), V1(r))

    def ev(r):
        a, b = np.asarray(V0(r), dtype=float), np.asarray(V1(r), dtype=float)
        if p == 2:
            return (1.0 - alpha) * a + alpha * b
        check(a, b)
        sign = 1.0 if p < 2 else -1.0
        return sign * ((1.0 - alpha) * np.abs(a) ** q + alpha * np.abs(b) ** q) ** (p - 1.0)

    return PotentialProfile(ev, "convex combination")


def weight_table(weight: Weight, ground: GroundState, radii) -> np.ndarray:
    """Rows ``(r, W(r), v(r))``."""
    r = np.asarray(radii, dtype=float)
    return np.column_stack([r, weight(r), ground(r)])


def interpolation_hessian(xi, eta, p: float) -> np.ndarray:
    """Hessian of ``f(xi, eta) = xi^{p-1} eta^{2-p}`` at positive points, shape ``(..., 2, 2)``.

    ``f`` is homogeneous of degree one, so the determinant vanishes and the
    sign of the trace, that of ``(p-1)(p-2)``, decides definiteness: convex
    for p >= 2 and concave for 1 < p <= 2.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(xi <= 0) or np.any(eta <= 0):
        raise errors.PreconditionError("the Hessian is taken at positive points")
    k = (p - 1.0) * (p - 2.0)
    f = xi ** (p - 1.0) * eta ** (2.0 - p)
    h = np.empty(xi.shape + (2, 2))
    h[..., 0, 0] = k * f / xi ** 2
    h[..., 1, 1] = k * f / eta ** 2
    h[..., 0, 1] = h[..., 1, 0] = -k * f / (xi * eta)
    return h
