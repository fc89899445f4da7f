"""Radial model domains and closed-form radial p-harmonic Green profiles.

Radii are handled through a *domain coordinate* ``u`` that maps the whole real
line onto the open domain: ``r = e^u`` for the punctured space,
``r = R expit(u)`` for the punctured ball, ``r = r1 + (r2 - r1) expit(u)`` for an
annulus and ``r = R + e^u`` for an exterior domain. Near either end, ``u`` is
asymptotically the logarithm of the distance to that end, so uniform ``u`` grids
resolve both ends equally well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, logit

from . import errors
from .defaults import DEFAULTS

ArrayFn = Callable[[np.ndarray], np.ndarray]


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class ProblemParams:
    """Exponent ``p``, dimension ``n`` and an optional radial density."""

    p: float
    n: int
    sigma: Optional[ArrayFn] = None
    sigma_derivative: Optional[ArrayFn] = None

    def __post_init__(self):
        if not (self.p > 1.0 and math.isfinite(self.p)):
            raise errors.PreconditionError(f"exponent p must satisfy 1 < p < inf, got {self.p}")
        if int(self.n) != self.n or self.n < 2:
            raise errors.PreconditionError(f"dimension n must be an integer >= 2, got {self.n}")
        if (self.sigma is None) != (self.sigma_derivative is None):
            raise errors.PreconditionError("a density needs both sigma and sigma_derivative")

    @property
    def is_lebesgue(self) -> bool:
        return self.sigma is None

    @property
    def beta(self) -> float:
        """The optimal exponent (p - 1)/p."""
        return (self.p - 1.0) / self.p

    @property
    def omega(self) -> float:
        return sphere_area(self.n)

    def density(self, r):
        r = np.asarray(r, dtype=float)
        if self.sigma is None:
            return np.ones_like(r)
        return np.asarray(self.sigma(r), dtype=float)

    def density_log_derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.sigma is None:
            return np.zeros_like(r)
        return np.asarray(self.sigma_derivative(r), dtype=float) / self.density(r)

    def measure(self, r):
        """Radial measure factor omega_{n-1} r^{n-1} sigma(r)."""
        r = np.asarray(r, dtype=float)
        return self.omega * r ** (self.n - 1) * self.density(r)

    def to_json(self) -> dict:
        if not self.is_lebesgue:
            raise errors.NonLebesgueMeasure("only Lebesgue parameters are serializable")
        return {"p": self.p, "n": self.n}


DOMAIN_KINDS = ("punctured_space", "punctured_ball", "annulus", "exterior")


@dataclass(frozen=True)
class RadialDomain:
    """One of the four radially symmetric model domains."""

    kind: str
    radii: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(x) for x in self.radii))
        expected = {"punctured_space": 0, "punctured_ball": 1, "annulus": 2, "exterior": 1}
        if self.kind not in expected:
            raise errors.PreconditionError(f"unknown domain kind {self.kind!r}")
        if len(self.radii) != expected[self.kind]:
            raise errors.PreconditionError(
                f"domain {self.kind} takes {expected[self.kind]} radii, got {len(self.radii)}")
        if any(not (x > 0 and math.isfinite(x)) for x in self.radii):
            raise errors.PreconditionError("domain radii must be positive and finite")
        if self.kind == "annulus" and not self.radii[0] < self.radii[1]:
            raise errors.PreconditionError("annulus needs r1 < r2")

    @classmethod
    def punctured_space(cls) -> "RadialDomain":
        return cls("punctured_space")

    @classmethod
    def punctured_ball(cls, R: float) -> "RadialDomain":
        return cls("punctured_ball", (R,))

    @classmethod
    def annulus(cls, r1: float, r2: float) -> "RadialDomain":
        return cls("annulus", (r1, r2))

    @classmethod
    def exterior(cls, R: float) -> "RadialDomain":
        return cls("exterior", (R,))

    @property
    def inner_radius(self) -> float:
        if self.kind in ("annulus", "exterior"):
            return self.radii[0]
        return 0.0

    @property
    def outer_radius(self) -> float:
        if self.kind == "punctured_ball":
            return self.radii[0]
        if self.kind == "annulus":
            return self.radii[1]
        return math.inf

    def contains(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return (r > self.inner_radius) & (r < self.outer_radius)

    def to_radius(self, u):
        """Map the domain coordinate to radii."""
        u = np.asarray(u, dtype=float)
        if self.kind == "punctured_space":
            return np.exp(u)
        if self.kind == "punctured_ball":
            return self.radii[0] * expit(u)
        if self.kind == "annulus":
            r1, r2 = self.radii
            return r1 + (r2 - r1) * expit(u)
        return self.radii[0] + np.exp(u)

    def to_coordinate(self, r):
        """Inverse of :meth:`to_radius`."""
        r = np.asarray(r, dtype=float)
        if self.kind == "punctured_space":
            return np.log(r)
        if self.kind == "punctured_ball":
            return logit(r / self.radii[0])
        if self.kind == "annulus":
            r1, r2 = self.radii
            return logit((r - r1) / (r2 - r1))
        return np.log(r - self.radii[0])

    def sample_radii(self, count: int = 1000, spread: float = 8.0) -> np.ndarray:
        """``count`` radii, uniform in the domain coordinate over [-spread, spread]."""
        return self.to_radius(np.linspace(-spread, spread, count))

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "annulus":
            out["r1"], out["r2"] = self.radii
        elif self.radii:
            out["R"] = self.radii[0]
        return out

    @classmethod
    def from_json(cls, obj) -> "RadialDomain":
        if isinstance(obj, str):
            obj = {"kind": obj}
        kind = obj.get("kind")
        allowed = {"punctured_space": set(), "punctured_ball": {"R"}, "annulus": {"r1", "r2"},
                   "exterior": {"R"}}
        if kind not in allowed:
            raise KeyError(f"unknown domain kind {kind!r}")
        extra = set(obj) - {"kind"} - allowed[kind]
        if extra:
            raise KeyError(f"unknown domain keys {sorted(extra)}")
        if kind == "annulus":
            return cls(kind, (obj["r1"], obj["r2"]))
        if kind == "punctured_space":
            return cls(kind)
        return cls(kind, (obj["R"],))


@dataclass(frozen=True)
class Limit:
    """Extended nonnegative real: ``Limit.finite(x)`` or ``Limit.infinite()``."""

    value: Optional[float]

    @classmethod
    def finite(cls, x: float) -> "Limit":
        return cls(float(x))

    @classmethod
    def infinite(cls) -> "Limit":
        return cls(None)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def close_to(self, other: "Limit", rtol: float = 1e-12) -> bool:
        if self.is_infinite or other.is_infinite:
            return self.is_infinite and other.is_infinite
        return abs(self.value - other.value) <= rtol * max(1.0, abs(self.value), abs(other.value))

    def to_json(self):
        return "inf" if self.is_infinite else self.value

    @classmethod
    def from_json(cls, obj) -> "Limit":
        return cls.infinite() if obj == "inf" else cls.finite(obj)

    def __str__(self) -> str:
        return "inf" if self.is_infinite else repr(self.value)


@dataclass(frozen=True)
class EndBehavior:
    which_end: str
    limit: Limit


@dataclass(frozen=True)
class Classification:
    """End classification of a profile.

    ``kind`` is one of ``"A7"`` (infinite at the inner end, zero at the outer end,
    p <= n), ``"A8Gamma0"`` (zero at the inner end, infinite at the outer end,
    p > n), ``"A8GammaPos"`` (finite ``gamma`` > 0 at the inner end, zero at the
    outer end, p > n) and ``"TwoEnds"`` (finite distinct limits ``m < M``).
    """

    kind: str
    gamma: Optional[float] = None
    m: Optional[float] = None
    M: Optional[float] = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "A8GammaPos":
            out["gamma"] = self.gamma
        if self.kind == "TwoEnds":
            out["m"], out["M"] = self.m, self.M
        return out

    def __str__(self) -> str:
        if self.kind == "A8GammaPos":
            return f"A8GammaPos(gamma={self.gamma!r})"
        if self.kind == "TwoEnds":
            return f"TwoEnds(m={self.m!r}, M={self.M!r})"
        return self.kind


def classify_limits(inner: Limit, outer: Limit, p: float, n: int, domain: RadialDomain) -> Optional[Classification]:
    """Classification implied by the two end limits, or ``None`` if no class fits."""
    punctured = domain.kind in ("punctured_space", "punctured_ball")
    if punctured and inner.is_infinite and outer.value == 0.0 and p <= n:
        return Classification("A7")
    if punctured and inner.value == 0.0 and outer.is_infinite and p > n:
        return Classification("A8Gamma0")
    if punctured and not inner.is_infinite and inner.value > 0 and outer.value == 0.0 and p > n:
        return Classification("A8GammaPos", gamma=inner.value)
    if not inner.is_infinite and not outer.is_infinite and inner.value != outer.value:
        lo, hi = sorted((inner.value, outer.value))
        return Classification("TwoEnds", m=lo, M=hi)
    return None


def green_exponent(params: ProblemParams) -> float:
    """The exponent (p - n)/(p - 1) of the fundamental radial p-harmonic power."""
    return (params.p - params.n) / (params.p - 1.0)


@dataclass(frozen=True)
class GreenProfile:
    """A positive radial p-harmonic function.

    Closed forms: ``power`` is ``A r^a``, ``power_shift`` is ``A (r^a - c)`` and
    ``log`` is ``A log(R/r)``; the scale ``A`` carries the sign that makes the
    profile positive. ``user`` profiles wrap caller-supplied evaluators.
    """

    form: str
    params: ProblemParams
    domain: RadialDomain
    classification: Classification
    A: float = 1.0
    a: Optional[float] = None
    c: Optional[float] = None
    R: Optional[float] = None
    inner_limit: Limit = field(default_factory=Limit.infinite)
    outer_limit: Limit = field(default_factory=Limit.infinite)
    user_value: Optional[ArrayFn] = None
    user_derivative: Optional[ArrayFn] = None
    user_second_derivative: Optional[ArrayFn] = None

    def value(self, r):
        r = np.asarray(r, dtype=float)
        if self.form == "power":
            return self.A * r ** self.a
        if self.form == "power_shift":
            return self.A * (r ** self.a - self.c)
        if self.form == "log":
            return self.A * np.log(self.R / r)
        return np.asarray(self.user_value(r), dtype=float)

    __call__ = value

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.form in ("power", "power_shift"):
            return self.A * self.a * r ** (self.a - 1.0)
        if self.form == "log":
            return -self.A / r
        return np.asarray(self.user_derivative(r), dtype=float)

    def second_derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.form in ("power", "power_shift"):
            return self.A * self.a * (self.a - 1.0) * r ** (self.a - 2.0)
        if self.form == "log":
            return self.A / r ** 2
        if self.user_second_derivative is None:
            raise errors.MissingSecondDerivative("user profile has no second derivative")
        return np.asarray(self.user_second_derivative(r), dtype=float)

    def as_radial(self):
        from .calculus import RadialFunction

        second = self.second_derivative if (self.form != "user" or self.user_second_derivative) else None
        return RadialFunction(self.value, self.derivative, second)

    def inverse(self, t):
        """Radius at which the profile takes the level ``t`` (profiles are monotone)."""
        t = np.asarray(t, dtype=float)
        if self.form == "power":
            return (t / self.A) ** (1.0 / self.a)
        if self.form == "power_shift":
            return (t / self.A + self.c) ** (1.0 / self.a)
        if self.form == "log":
            return self.R * np.exp(-t / self.A)
        return level_radii_array(self.value, self.domain, t)

    @property
    def gamma(self) -> Optional[float]:
        return self.classification.gamma

    def ends(self) -> tuple:
        return classify_ends(self)

    def scaled(self, factor: float) -> "GreenProfile":
        """The profile multiplied by ``factor`` > 0."""
        if not factor > 0:
            raise errors.PreconditionError("profiles may only be scaled by positive factors")
        return make_profile(self.form, self.params, self.domain, A=self.A * factor, a=self.a, c=self.c,
                            R=self.R, check=False)

    def to_json(self) -> dict:
        if self.form == "user":
            raise errors.PreconditionError("user-supplied profiles are not serializable")
        form_params = {"A": self.A}
        if self.form in ("power", "power_shift"):
            form_params["a"] = self.a
        if self.form == "power_shift":
            form_params["c"] = self.c
        if self.form == "log":
            form_params["R"] = self.R
        return {
            "form": self.form,
            "params": {**self.params.to_json(), **form_params},
            "domain": self.domain.to_json(),
            "classification": self.classification.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GreenProfile":
        params = dict(obj["params"])
        problem = ProblemParams(params.pop("p"), params.pop("n"))
        prof = make_profile(obj["form"], problem, RadialDomain.from_json(obj["domain"]), **params)
        if "classification" in obj and prof.classification.to_json() != obj["classification"]:
            raise errors.WrongClassification("stored classification does not match the profile limits")
        return prof


def _form_limit(form: str, A: float, a, c, R, radius: float) -> Limit:
    """Analytic limit of a closed form at ``radius`` (0, finite or inf)."""
    if form == "log":
        if radius == 0.0:
            return Limit.infinite()
        if math.isinf(radius):
            return Limit.infinite()
        return Limit.finite(A * math.log(R / radius))
    if radius == 0.0 or math.isinf(radius):
        base_small = (radius == 0.0) == (a > 0)
        if form == "power":
            return Limit.finite(0.0) if base_small else Limit.infinite()
        return Limit.finite(-A * c) if base_small else Limit.infinite()
    if form == "power":
        return Limit.finite(A * radius ** a)
    return Limit.finite(A * (radius ** a - c))


def make_profile(form: str, params: ProblemParams, domain: RadialDomain, A: float = 1.0, a=None, c=None, R=None,
                 check: bool = True) -> GreenProfile:
    """Build a closed-form profile, derive its end limits and classification."""
    if form not in ("power", "power_shift", "log"):
        raise errors.PreconditionError(f"unknown profile form {form!r}")
    if form in ("power", "power_shift") and a is None:
        a = green_exponent(params)
    if form == "power_shift" and c is None:
        raise errors.PreconditionError("power_shift needs the shift c")
    if form == "log" and R is None:
        raise errors.PreconditionError("log form needs the radius R")
    inner = _form_limit(form, A, a, c, R, domain.inner_radius)
    outer = _form_limit(form, A, a, c, R, domain.outer_radius)
    if inner.value is not None and abs(inner.value) < 1e-14 * max(1.0, abs(A)):
        inner = Limit.finite(0.0)
    if outer.value is not None and abs(outer.value) < 1e-14 * max(1.0, abs(A)):
        outer = Limit.finite(0.0)
    cls = classify_limits(inner, outer, params.p, params.n, domain)
    if cls is None:
        raise errors.WrongClassification(
            f"profile limits (inner {inner}, outer {outer}) fit no admissible end classification")
    prof = GreenProfile(form, params, domain, cls, A=float(A), a=a, c=c, R=R, inner_limit=inner, outer_limit=outer)
    if check:
        _validate(prof, DEFAULTS["catalog_residual_rtol"])
    return prof


def _validate(G: GreenProfile, rtol: float, samples: int = 100) -> None:
    from .calculus import p_laplacian_radial, p_laplacian_scale

    r = G.domain.sample_radii(samples, spread=6.0)
    vals = G.value(r)
    if not np.all(vals > 0):
        raise errors.PreconditionError("profile is not positive on the domain")
    u = G.as_radial()
    res = p_laplacian_radial(u, G.params).value(r)
    scale = p_laplacian_scale(u, G.params, r)
    rel = np.abs(res) / np.where(scale > 0, scale, 1.0)
    if not np.all(rel < rtol):
        raise errors.ResidualTooLarge(
            f"p-Laplacian residual {float(np.max(rel)):.3e} exceeds {rtol:.1e} (relative)")


def green_radial(params: ProblemParams, dom: RadialDomain) -> GreenProfile:
    """Closed-form positive radial p-harmonic profile with the required end limits."""
    if not params.is_lebesgue:
        raise errors.NonLebesgueMeasure("closed-form profiles are available only for the Lebesgue measure")
    p, n = params.p, params.n
    a = green_exponent(params)
    if dom.kind == "punctured_space":
        if p == n:
            raise errors.UnsupportedCombination(
                "no radial p-harmonic profile on the punctured space has the required end limits when p = n")
        return make_profile("power", params, dom, A=1.0, a=a)
    if dom.kind == "punctured_ball":
        R = dom.radii[0]
        if p == n:
            return make_profile("log", params, dom, A=1.0, R=R)
        sign = 1.0 if p < n else -1.0
        return make_profile("power_shift", params, dom, A=sign, a=a, c=R ** a)
    if dom.kind == "annulus":
        r1, r2 = dom.radii
        if p == n:
            return make_profile("log", params, dom, A=-1.0 / math.log(r2 / r1), R=r1)
        return make_profile("power_shift", params, dom, A=1.0 / (r2 ** a - r1 ** a), a=a, c=r1 ** a)
    if p >= n:
        raise errors.UnsupportedCombination("exterior domains have a decaying closed-form profile only for p < n")
    return make_profile("power", params, dom, A=1.0, a=a)


def user_profile(params: ProblemParams, dom: RadialDomain, value: ArrayFn, derivative: ArrayFn,
                 second_derivative: ArrayFn, inner_limit: Limit, outer_limit: Limit,
                 rtol: Optional[float] = None) -> GreenProfile:
    """Wrap a caller-supplied profile after checking positivity and p-harmonicity."""
    cls = classify_limits(inner_limit, outer_limit, params.p, params.n, dom)
    if cls is None:
        raise errors.WrongClassification("supplied end limits fit no admissible classification")
    prof = GreenProfile("user", params, dom, cls, inner_limit=inner_limit, outer_limit=outer_limit,
                        user_value=value, user_derivative=derivative, user_second_derivative=second_derivative)
    _validate(prof, DEFAULTS["user_profile_residual_rtol"] if rtol is None else rtol)
    return prof


def classify_ends(G: GreenProfile) -> tuple:
    """The (inner, outer) end behaviours of ``G``."""
    return EndBehavior("inner", G.inner_limit), EndBehavior("outer", G.outer_limit)


def level_radii_array(func: ArrayFn, dom: RadialDomain, levels, samples: int = 4001, spread: float = 150.0):
    """Radii where a strictly monotone radial function takes each of ``levels``."""
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    out = np.array([_single_level(func, dom, t, samples, spread, expect_one=True)[0] for t in levels])
    return out


def level_radii(func: ArrayFn, dom: RadialDomain, level: float, samples: int = 4001,
                spread: float = 150.0) -> np.ndarray:
    """All radii where ``func`` crosses ``level``, found by bracketing in the domain coordinate."""
    return _single_level(func, dom, level, samples, spread, expect_one=False)


def _single_level(func, dom, level, samples, spread, expect_one):
    from scipy.optimize import brentq

    u = np.linspace(-spread, spread, samples)
    with np.errstate(all="ignore"):
        vals = np.asarray(func(dom.to_radius(u)), dtype=float) - level
    ok = np.isfinite(vals)
    roots = []
    sgn = np.sign(vals)
    for i in range(samples - 1):
        if not (ok[i] and ok[i + 1]):
            continue
        if sgn[i] == 0:
            roots.append(u[i])
        elif sgn[i] * sgn[i + 1] < 0:
            g = lambda x: float(np.asarray(func(dom.to_radius(x)), dtype=float) - level)
            roots.append(brentq(g, u[i], u[i + 1], xtol=1e-14, rtol=1e-15, maxiter=200))
    if not roots or (expect_one and len(roots) != 1):
        raise errors.LevelOutOfRange(f"level {level!r} is attained {len(roots)} times on the domain")
    return dom.to_radius(np.array(roots))
