"""Default tolerances and numerical knobs.

Every tolerance used by the library and the CLI is read from this table. The
CLI accepts a ``"tolerances"`` object in its config whose keys override these
entries for a single run.

=============================  ==========  ==================================================
key                            default     meaning
=============================  ==========  ==================================================
quad_atol                      1e-10       absolute target for the summed error estimate
quad_rtol                      1e-12       relative target for the summed error estimate
quad_max_depth                 60          maximum number of refinement sweeps
grid_gauss_points              4           Gauss points per grid interval for nodal test functions
catalog_residual_rtol          1e-10       p-harmonic residual bound for closed-form profiles
user_profile_residual_rtol     1e-8        p-harmonic residual bound for user-supplied profiles
derivative_check_samples       1000        radii sampled when checking nonvanishing derivatives
min_grid_nodes                 17          smallest admissible RadialGrid (N >= 16 intervals)
default_grid_nodes             4096        default number of grid nodes
rayleigh_starts                5           multi-start count for the Rayleigh minimizer
rayleigh_rtol                  1e-8        stall tolerance on the quotient over ``rayleigh_window``
rayleigh_window                10          iterations inspected by the stall test
rayleigh_max_iter              100000      iteration cap before NoConvergence
rayleigh_tie                   1e-10       quotients closer than this are ties
rayleigh_min_iter              30          iterations always performed before the stall test
lambda_global_range            0.97, 1.05  acceptance band for the global best constant
lambda_end_range               0.97, 1.3   acceptance band for end-window best constants
subcritical_margin             0.1         end quotient above 1 + margin flags non-optimality
=============================  ==========  ==================================================
"""

from __future__ import annotations

from typing import Any

DEFAULTS: dict[str, Any] = {
    "quad_atol": 1e-10,
    "quad_rtol": 1e-12,
    "quad_max_depth": 60,
    "grid_gauss_points": 4,
    "catalog_residual_rtol": 1e-10,
    "user_profile_residual_rtol": 1e-8,
    "derivative_check_samples": 1000,
    "min_grid_nodes": 17,
    "default_grid_nodes": 4096,
    "rayleigh_starts": 5,
    "rayleigh_rtol": 1e-8,
    "rayleigh_window": 10,
    "rayleigh_max_iter": 100_000,
    "rayleigh_tie": 1e-10,
    "rayleigh_min_iter": 30,
    "lambda_global_range": (0.97, 1.05),
    "lambda_end_range": (0.97, 1.3),
    "subcritical_margin": 0.1,
}


def resolve(overrides: dict[str, Any] | None = None) -> dict[str, Any]:
    """Return the defaults table with ``overrides`` applied.

    Unknown keys raise ``KeyError`` so typos in run configs do not pass silently.
    """
    table = dict(DEFAULTS)
    for key, value in (overrides or {}).items():
        if key not in table:
            raise KeyError(f"unknown tolerance key {key!r}")
        table[key] = tuple(value) if isinstance(value, list) else value
    return table
