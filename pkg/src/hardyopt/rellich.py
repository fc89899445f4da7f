"""Weighted L^p Rellich inequalities for the Laplacian in the radial setting.

A :class:`RellichTriple` ``(L, R, C)`` asserts
``int L |Delta phi|^p dnu >= C int R |phi|^p dnu`` for compactly supported
``phi``. The checker evaluates both sides on analytic bumps
``exp(a s - b (s - c)^2)`` with ``s = log r``, whose Laplacians are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import errors
from .calculus import RadialFunction
from .domain import ProblemParams, RadialDomain
from .quadrature import integrate


@dataclass(frozen=True)
class RellichTriple:
    lhs_weight: Callable
    rhs_weight: Callable
    constant: float


def laplacian(v: RadialFunction, n: int, r):
    """``Delta v = v'' + (n-1) v'/r`` for radial ``v``."""
    if v.second_derivative is None:
        raise errors.MissingSecondDerivative("the Laplacian needs v''")
    r = np.asarray(r, dtype=float)
    return v.second_derivative(r) + (n - 1.0) * v.derivative(r) / r


def davies_hinz_constant(p: float, delta: float) -> float:
    """``[(p-1) delta + 1]^p / p^{2p}``; defined for p >= 1."""
    if p < 1:
        raise errors.PreconditionError("the constant is defined for p >= 1")
    return ((p - 1.0) * delta + 1.0) ** p / p ** (2.0 * p)


def rellich_constant(p: float, alpha: float) -> float:
    """``4^p (1-alpha)^p (p-1+alpha)^p / p^{2p}``; defined for p >= 1."""
    if p < 1:
        raise errors.PreconditionError("the constant is defined for p >= 1")
    return 4.0 ** p * (1.0 - alpha) ** p * (p - 1.0 + alpha) ** p / p ** (2.0 * p)


def _radii(sample_radii):
    if sample_radii is None:
        return RadialDomain.punctured_space().sample_radii(1000)
    return np.asarray(sample_radii, dtype=float)


def _power(v: RadialFunction, delta: float) -> RadialFunction:
    return RadialFunction(
        lambda r: v.value(r) ** delta,
        lambda r: delta * v.value(r) ** (delta - 1.0) * v.derivative(r),
        lambda r: delta * (delta - 1.0) * v.value(r) ** (delta - 2.0) * v.derivative(r) ** 2
        + delta * v.value(r) ** (delta - 1.0) * v.second_derivative(r),
    )


def _check_superharmonic(v: RadialFunction, n: int, r, strict: bool, what: str) -> None:
    lap = laplacian(v, n, r)
    scale = np.abs(v.second_derivative(r)) + (n - 1.0) * np.abs(v.derivative(r) / r)
    bad = (-lap <= 0) if strict else (-lap < -1e-10 * scale)
    if np.any(bad):
        r_bad = float(np.asarray(r)[bad][0])
        raise errors.SuperharmonicityFails(
            f"{what} fails at r={r_bad!r}: -Laplacian = {float(-lap[bad][0]):.3e}", radius=r_bad)


def davies_hinz_weights(v: RadialFunction, delta: float, params: ProblemParams, sample_radii=None) -> RellichTriple:
    """Weights ``v^p/|Delta v|^{p-1}`` and ``|Delta v|`` with constant ``[(p-1)delta+1]^p/p^{2p}``.

    Needs ``-Delta v > 0`` and ``-Delta(v^delta) >= 0`` for some ``delta > 1``,
    checked at ``sample_radii``.
    """
    if not delta > 1:
        raise errors.PreconditionError("delta must exceed 1")
    p, n = params.p, params.n
    r = _radii(sample_radii)
    _check_superharmonic(v, n, r, True, "strict superharmonicity of v")
    _check_superharmonic(_power(v, delta), n, r, False, f"superharmonicity of v^{delta!r}")

    def lhs(x):
        return v.value(x) ** p / np.abs(laplacian(v, n, x)) ** (p - 1.0)

    def rhs(x):
        return np.abs(laplacian(v, n, x))

    return RellichTriple(lhs, rhs, davies_hinz_constant(p, delta))


def rellich_weights(v0: RadialFunction, alpha: float, params: ProblemParams, sample_radii=None) -> RellichTriple:
    """With ``W = |(log v0)'|^2 / 4``: weights ``v0^alpha / W^{p-1}`` and ``W v0^alpha``.

    The constant is ``4^p (1-alpha)^p (p-1+alpha)^p / p^{2p}``; ``v0`` must be
    positive and superharmonic.
    """
    if not 0.0 < alpha < 1.0:
        raise errors.AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha!r}")
    p, n = params.p, params.n
    r = _radii(sample_radii)
    if np.any(v0.value(r) <= 0):
        raise errors.PreconditionError("v0 must be positive")
    _check_superharmonic(v0, n, r, False, "superharmonicity of v0")

    def W(x):
        return 0.25 * (v0.derivative(x) / v0.value(x)) ** 2

    def lhs(x):
        return v0.value(x) ** alpha / W(x) ** (p - 1.0)

    def rhs(x):
        return W(x) * v0.value(x) ** alpha

    return RellichTriple(lhs, rhs, rellich_constant(p, alpha))


def rellich_gst_weights(v0: RadialFunction, v1: RadialFunction, alpha: float, params: ProblemParams,
                        sample_radii=None) -> RellichTriple:
    """Ground-state transformed weights for two positive harmonic functions.

    ``W = |(log(v0/v1))'|^2 / 4``; weights ``(v0/v1)^alpha v1^{2-p} / W^{p-1}``
    and ``W (v0/v1)^alpha v1^{2-p}``; same constant as :func:`rellich_weights`.
    """
    if not 0.0 < alpha < 1.0:
        raise errors.AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha!r}")
    p, n = params.p, params.n
    r = _radii(sample_radii)
    for name, v in (("v0", v0), ("v1", v1)):
        if np.any(v.value(r) <= 0):
            raise errors.PreconditionError(f"{name} must be positive")
        lap = laplacian(v, n, r)
        scale = np.abs(v.second_derivative(r)) + (n - 1.0) * np.abs(v.derivative(r) / r) + 1e-300
        if np.any(np.abs(lap) > 1e-8 * np.maximum(scale, np.abs(v.value(r)) / r ** 2)):
            raise errors.SuperharmonicityFails(f"{name} is not harmonic on the sampled radii")

    def ratio(x):
        return (v0.value(x) / v1.value(x)) ** alpha * v1.value(x) ** (2.0 - p)

    def W(x):
        return 0.25 * (v0.derivative(x) / v0.value(x) - v1.derivative(x) / v1.value(x)) ** 2

    return RellichTriple(lambda x: ratio(x) / W(x) ** (p - 1.0), lambda x: W(x) * ratio(x),
                         rellich_constant(p, alpha))


@dataclass(frozen=True)
class LogGaussianBump:
    """``phi(r) = exp(a s - b (s - c)^2)`` with ``s = log r`` and an exact Laplacian."""

    a: float
    b: float
    c: float

    def _q(self, s):
        return self.a - 2.0 * self.b * (s - self.c)

    def value(self, r):
        s = np.log(np.asarray(r, dtype=float))
        return np.exp(self.a * s - self.b * (s - self.c) ** 2)

    def laplacian(self, r, n: int):
        r = np.asarray(r, dtype=float)
        s = np.log(r)
        phi = self.value(r)
        q = self._q(s)
        return phi * (q ** 2 - 2.0 * self.b + (n - 2.0) * q) / r ** 2

    def center(self) -> float:
        return self.c + self.a / (2.0 * self.b)

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c}


def bump_family(count: int, seed: int = 0, a_range=(-2.0, 2.0), b_range=(0.25, 4.0),
                c_range=(-3.0, 3.0)) -> list:
    """``count`` random bumps; ``b`` is sampled log-uniformly."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    out = []
    for _ in range(count):
        a = rng.uniform(*a_range)
        b = math.exp(rng.uniform(math.log(b_range[0]), math.log(b_range[1])))
        c = rng.uniform(*c_range)
        out.append(LogGaussianBump(float(a), float(b), float(c)))
    return out


_S_MAX = 60.0


def _log_integral(f, bump: LogGaussianBump, p: float, slope_bound: float = 30.0) -> float:
    """``int f(r) dr`` over (0, inf) in ``s = log r``, truncated where the Gaussian factor is below e^-80."""
    pb = p * bump.b
    B = p * abs(bump.a) + slope_bound
    half = (B + math.sqrt(B * B + 4.0 * pb * 80.0)) / (2.0 * pb)
    c = bump.c
    # beyond |log r| = 60 power weights overflow while the Gaussian factor is far below e^-80
    lo, hi = max(c - half, -_S_MAX), min(c + half, _S_MAX)
    edges = np.linspace(lo, hi, 33)

    def g(s):
        r = np.exp(s)
        return f(r) * r

    return integrate(g, float(edges[0]), float(edges[-1]), breakpoints=edges[1:-1], atol=0.0, rtol=1e-11)


@dataclass
class RellichCheck:
    min_ratio: float
    argmin: int
    ratios: list
    constant: float


def rellich_ratios(triple: RellichTriple, family, params: ProblemParams) -> RellichCheck:
    """Ratio ``int L |Delta phi|^p dnu / int R |phi|^p dnu`` for each bump."""
    p, n = params.p, params.n
    ratios = []
    for bump in family:
        num = _log_integral(lambda r: triple.lhs_weight(r) * np.abs(bump.laplacian(r, n)) ** p * params.measure(r),
                            bump, p)
        den = _log_integral(lambda r: triple.rhs_weight(r) * np.abs(bump.value(r)) ** p * params.measure(r),
                            bump, p)
        if not (np.isfinite(num) and np.isfinite(den) and den > 0):
            raise errors.NonFiniteIntegrand("Rellich integrals are not finite for a bump")
        ratios.append(float(num / den))
    k = int(np.argmin(ratios))
    return RellichCheck(ratios[k], k, ratios, triple.constant)


def rellich_check(triple: RellichTriple, family, grid=None, params: Optional[ProblemParams] = None) -> float:
    """Smallest ratio over the family; the inequality holds on the family when it is at least the constant.

    ``grid`` is accepted for interface symmetry with the grid-based energies;
    bumps are integrated adaptively over their effective support instead.
    """
    if params is None:
        params = grid.params
    return rellich_ratios(triple, family, params).min_ratio
