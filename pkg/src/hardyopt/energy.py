"""Radial grids, piecewise-linear test functions and the energy functionals.

Integrals against the measure ``dnu = omega_{n-1} r^{n-1} sigma(r) dr`` are
computed per grid interval with a fixed Gauss rule in ``log r``. The gradient
term of a piecewise-linear function is integrated exactly because its slope is
constant on each interval.

Functions that are not piecewise linear on a grid (for instance cutoffs
composed with a ground state) implement ``value``, ``derivative`` and
``radial_breakpoints``; they are integrated by adaptive quadrature between
their breakpoints.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import errors
from .calculus import abs_pow
from .defaults import DEFAULTS
from .domain import ProblemParams, RadialDomain
from .quadrature import gauss_rule, integrate_log


class RadialGrid:
    """Strictly increasing radii ``r_0 < ... < r_N`` with per-interval quadrature data."""

    def __init__(self, nodes, params: ProblemParams, domain: Optional[RadialDomain] = None,
                 gauss_points: Optional[int] = None):
        nodes = np.asarray(nodes, dtype=float)
        self.domain = domain or RadialDomain.punctured_space()
        self.params = params
        if nodes.ndim != 1 or nodes.size < DEFAULTS["min_grid_nodes"]:
            raise errors.PreconditionError(
                f"a grid needs at least {DEFAULTS['min_grid_nodes']} nodes, got {nodes.size}")
        if not np.all(np.diff(nodes) > 0):
            raise errors.PreconditionError("grid nodes must be strictly increasing")
        if not np.all(self.domain.contains(nodes)):
            raise errors.PreconditionError("grid nodes must lie in the open domain")
        self.nodes = nodes
        k = DEFAULTS["grid_gauss_points"] if gauss_points is None else gauss_points
        theta, wq = gauss_rule(k)
        r0 = nodes[:-1]
        self.h = np.diff(nodes)
        ell = np.log1p(self.h / r0)
        self.rq = r0[:, None] * np.exp(theta[None, :] * ell[:, None])
        self.tq = r0[:, None] * np.expm1(theta[None, :] * ell[:, None]) / self.h[:, None]
        self.wq = wq[None, :] * ell[:, None] * self.rq * params.measure(self.rq)
        if params.is_lebesgue:
            n = params.n
            self.mass = params.omega * r0 ** n * np.expm1(n * ell) / n
        else:
            self.mass = self.wq.sum(axis=1)

    @classmethod
    def log_spaced(cls, r_lo: float, r_hi: float, nodes: int, params: ProblemParams,
                   domain: Optional[RadialDomain] = None, breakpoints=()) -> "RadialGrid":
        r = np.geomspace(r_lo, r_hi, nodes)
        return cls(_insert(r, breakpoints), params, domain)

    @classmethod
    def uniform_coordinate(cls, domain: RadialDomain, u_lo: float, u_hi: float, nodes: int,
                           params: ProblemParams, breakpoints=()) -> "RadialGrid":
        """Nodes uniform in the domain coordinate (log-spaced on the punctured space)."""
        r = domain.to_radius(np.linspace(u_lo, u_hi, nodes))
        return cls(_insert(r, breakpoints), params, domain)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    def span(self) -> tuple:
        return float(self.nodes[0]), float(self.nodes[-1])

    def measure(self, r):
        return self.params.measure(r)


def _insert(r, breakpoints):
    extra = [b for b in breakpoints if r[0] < b < r[-1]]
    if not extra:
        return r
    r = np.union1d(r, extra)
    keep = np.concatenate([[True], np.diff(r) > 1e-12 * r[1:]])
    return r[keep]


class TestFunction:
    """Piecewise-linear nodal function on a grid, zero at both grid ends."""

    __test__ = False

    def __init__(self, grid: RadialGrid, values):
        values = np.array(values, dtype=float)
        if values.shape != grid.nodes.shape:
            raise errors.PreconditionError("nodal values must match the grid")
        if values[0] != 0 or values[-1] != 0:
            raise errors.SupportNotCompact("test functions must vanish at both grid ends")
        if not np.all(np.isfinite(values)):
            raise errors.NonFiniteIntegrand("nodal values must be finite")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @classmethod
    def from_callable(cls, grid: RadialGrid, f) -> "TestFunction":
        vals = np.asarray(f(grid.nodes), dtype=float).copy()
        vals[0] = vals[-1] = 0.0
        return cls(grid, vals)

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.grid.h

    def quadrature_values(self) -> np.ndarray:
        v = self.values
        return v[:-1, None] * (1.0 - self.grid.tq) + v[1:, None] * self.grid.tq

    def value(self, r):
        return np.interp(r, self.grid.nodes, self.values, left=0.0, right=0.0)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.clip(np.searchsorted(self.grid.nodes, r, side="right") - 1, 0, self.grid.N - 1)
        out = self.slopes()[idx]
        return np.where((r < self.grid.nodes[0]) | (r > self.grid.nodes[-1]), 0.0, out)

    def support(self) -> tuple:
        nz = np.nonzero(self.values)[0]
        if nz.size == 0:
            return (float(self.grid.nodes[0]), float(self.grid.nodes[0]))
        return float(self.grid.nodes[nz[0] - 1]), float(self.grid.nodes[nz[-1] + 1])

    def support_width(self) -> float:
        a, b = self.support()
        return float(np.log(b / a))

    def scaled(self, c: float) -> "TestFunction":
        return TestFunction(self.grid, c * self.values)

    def radial_breakpoints(self):
        a, b = self.support()
        g = self.grid.nodes
        return g[(g >= a) & (g <= b)]


@dataclass
class EnergyReport:
    Q: float
    gradient_term: float
    potential_term: float
    X: Optional[float] = None
    Y: Optional[float] = None
    Qsim: Optional[float] = None
    rhs: Optional[float] = None
    rayleigh: Optional[float] = None

    def to_json(self) -> dict:
        return asdict(self)


def _finite(x: float, what: str) -> float:
    if not np.isfinite(x):
        raise errors.NonFiniteIntegrand(f"{what} is not finite; split the grid at singular radii of the integrand")
    return float(x)


def _pointwise(fn, r):
    with np.errstate(all="ignore"):
        return np.asarray(fn(r), dtype=float)


def integrate_expression(w, grid: Optional[RadialGrid], params: ProblemParams, expr) -> float:
    """``int expr(r, w(r), w'(r)) dnu`` for a grid function or a breakpoint-aware function."""
    if isinstance(w, TestFunction):
        g = w.grid
        vals = w.quadrature_values()
        slopes = np.broadcast_to(w.slopes()[:, None], vals.shape)
        active = (vals != 0).any(axis=1) | (slopes[:, 0] != 0)
        with np.errstate(all="ignore"):
            integrand = expr(g.rq[active], vals[active], slopes[active])
        return float(np.sum(integrand * g.wq[active]))
    bps = np.asarray(w.radial_breakpoints(), dtype=float)

    def f(r):
        with np.errstate(all="ignore"):
            return expr(r, w.value(r), w.derivative(r)) * params.measure(r)

    return float(integrate_log(f, bps[0], bps[-1], breakpoints=bps[1:-1]))


def energy_QV(phi: TestFunction, V, grid: Optional[RadialGrid] = None, W=None) -> EnergyReport:
    """``Q_V(phi) = int (|phi'|^p + V |phi|^p) dnu``; with ``W`` also ``int W |phi|^p dnu``."""
    grid = grid or phi.grid
    p = grid.params.p
    grad = float(np.sum(np.abs(phi.slopes()) ** p * grid.mass))
    vals = np.abs(phi.quadrature_values()) ** p
    pot = 0.0
    if V is not None:
        Vq = _pointwise(V, grid.rq)
        with np.errstate(invalid="ignore"):
            pot = _finite(np.sum(np.where(vals > 0, Vq * vals, 0.0) * grid.wq), "potential term")
    rep = EnergyReport(Q=grad + pot, gradient_term=grad, potential_term=pot)
    if W is not None:
        Wq = _pointwise(W, grid.rq)
        with np.errstate(invalid="ignore"):
            rep.rhs = _finite(np.sum(np.where(vals > 0, Wq * vals, 0.0) * grid.wq), "weighted norm")
        if rep.rhs > 0:
            rep.rayleigh = rep.Q / rep.rhs
    return rep


def _check_nonnegative(w) -> None:
    if isinstance(w, TestFunction) and np.any(w.values < 0):
        raise errors.NegativeNodalValue("the simplified energy is defined for nonnegative functions only")


def qsim_density(p: float, v, dv, w, dw):
    """Integrand of the simplified energy (without the measure)."""
    dv, dw = np.abs(dv), np.abs(dw)
    if p <= 2:
        out = v ** 2 * dw ** 2 * abs_pow(v * dw + w * dv, p - 2.0)
        return np.where(dw == 0, 0.0, out)
    return v ** p * dw ** p + v ** 2 * dv ** (p - 2.0) * w ** (p - 2.0) * dw ** 2


def simplified_energy(w, v, grid: Optional[RadialGrid], params: ProblemParams) -> float:
    """Two-branch simplified energy of a nonnegative ``w`` relative to the ground state ``v``.

    ``1 < p <= 2``: ``int v^2 |w'|^2 (v|w'| + w|v'|)^{p-2} dnu``;
    ``p > 2``: ``int (v^p |w'|^p + v^2 |v'|^{p-2} w^{p-2} |w'|^2) dnu``.
    """
    _check_nonnegative(w)
    p = params.p
    return integrate_expression(w, grid, params,
                                lambda r, wv, dw: qsim_density(p, v.value(r), v.derivative(r), wv, dw))


@dataclass
class XYSplit:
    X: float
    Y: float
    Qsim: float
    bound_constant: float


def xy_split(w, v, grid: Optional[RadialGrid], params: ProblemParams) -> XYSplit:
    """``X = int v^p |w'|^p dnu`` and ``Y = int w^p |v'|^p dnu`` plus the smallest constant in the upper bound.

    The bound is ``Qsim <= C X`` for p <= 2 and ``Qsim <= C [X + (X/Y)^{2/p} Y]``
    for p > 2; when ``Y = 0`` the first form is used.
    """
    _check_nonnegative(w)
    p = params.p
    X = integrate_expression(w, grid, params, lambda r, wv, dw: v.value(r) ** p * np.abs(dw) ** p)
    Y = integrate_expression(w, grid, params, lambda r, wv, dw: np.abs(wv) ** p * np.abs(v.derivative(r)) ** p)
    Q = simplified_energy(w, v, grid, params)
    if X == 0:
        C = 0.0 if Q == 0 else np.inf
    elif p <= 2 or Y == 0:
        C = Q / X
    else:
        C = Q / (X + (X / Y) ** (2.0 / p) * Y)
    return XYSplit(X, Y, Q, float(C))


def product_energy(w, v, W, grid: Optional[RadialGrid], params: ProblemParams) -> float:
    """``Q_{-W}(v w) = int (|(v w)'|^p - W |v w|^p) dnu``."""
    p = params.p

    def expr(r, wv, dw):
        vv, dv = v.value(r), v.derivative(r)
        return np.abs(dv * wv + vv * dw) ** p - W(r) * np.abs(vv * wv) ** p

    return integrate_expression(w, grid, params, expr)
