"""Radial p-Laplacian, its chain rule, level-set flux and the coarea reduction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import errors
from .domain import ProblemParams
from .quadrature import integrate, integrate_log


def abs_pow(x, e: float):
    """``|x|^e`` with ``|0|^0 = 1`` and ``|0|^e = inf`` for ``e < 0``."""
    x = np.abs(np.asarray(x, dtype=float))
    if e == 0:
        return np.ones_like(x)
    with np.errstate(divide="ignore"):
        return x ** e


@dataclass(frozen=True)
class RadialFunction:
    """A radial function with its first and (optionally) second derivative.

    Also used for scalar C^2 maps ``f(s)`` in the chain rule.
    """

    value: Callable
    derivative: Callable
    second_derivative: Optional[Callable] = None

    def __call__(self, r):
        return self.value(r)


def _fd_derivative(fn, r, rel=1e-6):
    r = np.asarray(r, dtype=float)
    h = rel * np.maximum(np.abs(r), 1e-300)
    return (fn(r + h) - fn(r - h)) / (2.0 * h)


def compose(f: RadialFunction, u: RadialFunction) -> RadialFunction:
    """The radial function ``f(u(r))`` with derivatives from the classical chain rule."""

    def value(r):
        return f.value(u.value(r))

    def d1(r):
        return f.derivative(u.value(r)) * u.derivative(r)

    def d2(r):
        if f.second_derivative is None or u.second_derivative is None:
            raise errors.MissingSecondDerivative("composition needs second derivatives of both factors")
        s = u.value(r)
        du = u.derivative(r)
        return f.second_derivative(s) * du ** 2 + f.derivative(s) * u.second_derivative(r)

    return RadialFunction(value, d1, d2)


def p_laplacian_radial(u: RadialFunction, params: ProblemParams) -> RadialFunction:
    """``-Delta_p u`` for a radial ``u``.

    ``-|u'|^{p-2} [(p-1) u'' + ((n-1)/r + sigma'/sigma) u']``. The factor
    ``|u'|^{p-2}`` is 1 at p = 2 and infinite at a zero of ``u'`` for p < 2.
    """
    if u.second_derivative is None:
        raise errors.MissingSecondDerivative("the radial p-Laplacian needs u''")
    p, n = params.p, params.n

    def value(r):
        r = np.asarray(r, dtype=float)
        du = u.derivative(r)
        bracket = (p - 1.0) * u.second_derivative(r) + ((n - 1.0) / r + params.density_log_derivative(r)) * du
        with np.errstate(invalid="ignore"):
            return -abs_pow(du, p - 2.0) * bracket

    return RadialFunction(value, lambda r: _fd_derivative(value, r))


def p_laplacian_scale(u: RadialFunction, params: ProblemParams, r):
    """Magnitude of the individual terms of ``-Delta_p u``, used for relative residuals."""
    p, n = params.p, params.n
    r = np.asarray(r, dtype=float)
    du = u.derivative(r)
    terms = (p - 1.0) * np.abs(u.second_derivative(r)) + np.abs(
        ((n - 1.0) / r + params.density_log_derivative(r)) * du)
    return abs_pow(du, p - 2.0) * terms


def chain_rule_plap(f: RadialFunction, u: RadialFunction, params: ProblemParams,
                    sample_radii=None) -> RadialFunction:
    """``-Delta_p(f(u))`` from ``-|f'(u)|^{p-2}[(p-1) f''(u) |u'|^p + f'(u) Delta_p u]``.

    ``f'`` must not vanish on the range of ``u``; this is checked at
    ``sample_radii`` when given and at every evaluation.
    """
    if f.second_derivative is None:
        raise errors.MissingSecondDerivative("the chain rule needs f''")
    p = params.p
    minus_plap = p_laplacian_radial(u, params)

    def check(r):
        fp = np.asarray(f.derivative(u.value(r)), dtype=float)
        if np.any(fp == 0):
            r_bad = np.broadcast_to(np.asarray(r, dtype=float), fp.shape)[fp == 0].flat[0]
            raise errors.DerivativeVanishes(f"f' vanishes on the range of u (at r={float(r_bad)!r})")
        return fp

    if sample_radii is not None:
        check(np.asarray(sample_radii, dtype=float))

    def value(r):
        r = np.asarray(r, dtype=float)
        fp = check(r)
        s = u.value(r)
        plap_u = -minus_plap.value(r)
        bracket = (p - 1.0) * f.second_derivative(s) * abs_pow(u.derivative(r), p) + fp * plap_u
        return -abs_pow(fp, p - 2.0) * bracket

    return RadialFunction(value, lambda r: _fd_derivative(value, r))


def level_range(G) -> tuple:
    """Open interval of levels attained by ``G``."""
    finite = sorted(x.value for x in (G.inner_limit, G.outer_limit) if not x.is_infinite)
    if len(finite) == 2:
        return finite[0], finite[1]
    return finite[0], np.inf


def _check_level(G, t: float) -> None:
    low, high = level_range(G)
    if not (low < t < high):
        raise errors.LevelOutOfRange(f"level {t!r} is not strictly between the end limits ({low}, {high})")


def flux(G, t: float, params: ProblemParams) -> float:
    """``omega_{n-1} r_t^{n-1} sigma(r_t) |G'(r_t)|^{p-1}`` on the sphere where G = t."""
    _check_level(G, t)
    r_t = float(G.inverse(t))
    dG = float(G.derivative(r_t))
    if dG == 0.0:
        raise errors.VanishingDerivative(f"profile has a critical point at r={r_t!r}")
    return float(params.measure(r_t)) * abs(dG) ** (params.p - 1.0)


def reference_level(G) -> float:
    """An interior level of ``G`` used to evaluate the flux constant."""
    low, high = level_range(G)
    return 0.5 * (low + high) if np.isfinite(high) else low + 1.0


def coarea_constants(G, params: ProblemParams) -> tuple:
    """``(c, c_tilde)``: the flux constant and its image ``((p-1)/p)^{p-1} c_tilde``."""
    c_tilde = flux(G, reference_level(G), params)
    return params.beta ** (params.p - 1.0) * c_tilde, c_tilde


@dataclass(frozen=True)
class CoareaResult:
    lhs: float
    rhs: float
    c: float
    c_tilde: float
    levels: str


def coarea_reduce(f, G, params: ProblemParams, support: tuple, levels: str = "v",
                  breakpoints=()) -> CoareaResult:
    """Both sides of the radial coarea identities.

    ``levels="v"``: ``int f(v)|grad v|^p dnu`` against ``c int f(tau) dtau/tau``
    with ``v = G^{(p-1)/p}``. ``levels="G"``: ``int f(G)|grad G|^p dnu`` against
    ``c_tilde int f(t) dt``. ``support`` is a level interval containing the
    support of ``f``; it must stay away from the end limits. ``breakpoints`` are
    levels where ``f`` is not smooth.
    """
    if levels not in ("v", "G"):
        raise errors.PreconditionError("levels must be 'v' or 'G'")
    lo, hi = float(support[0]), float(support[1])
    if not lo < hi:
        raise errors.SupportNotCompact("support interval is empty")
    beta = params.beta
    p = params.p
    to_g = (lambda x: x ** (1.0 / beta)) if levels == "v" else (lambda x: x)
    try:
        _check_level(G, to_g(lo))
        _check_level(G, to_g(hi))
    except errors.LevelOutOfRange as exc:
        raise errors.SupportNotCompact(f"support of the integrand reaches an end of the domain: {exc}") from None
    c, c_tilde = coarea_constants(G, params)
    radii = sorted(float(G.inverse(to_g(x))) for x in (lo, hi))
    bps = [float(G.inverse(to_g(x))) for x in breakpoints if lo < x < hi]

    if levels == "v":
        def integrand(r):
            g = G.value(r)
            dv = beta * g ** (beta - 1.0) * G.derivative(r)
            return f(g ** beta) * np.abs(dv) ** p * params.measure(r)

        lhs = integrate_log(integrand, radii[0], radii[1], breakpoints=bps)
        rhs = c * integrate(lambda s: f(np.exp(s)), np.log(lo), np.log(hi),
                            breakpoints=[np.log(x) for x in breakpoints if lo < x < hi])
    else:
        def integrand(r):
            return f(G.value(r)) * np.abs(G.derivative(r)) ** p * params.measure(r)

        lhs = integrate_log(integrand, radii[0], radii[1], breakpoints=bps)
        rhs = c_tilde * integrate(f, lo, hi, breakpoints=breakpoints)
    return CoareaResult(float(lhs), float(rhs), c, c_tilde, levels)
