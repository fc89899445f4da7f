"""Command-line front end.

Each command reads a JSON config, runs one experiment and writes a JSON report
(``schema_version`` 1, sorted keys) plus CSV sidecars into the output
directory. Reports carry no timestamps, so identical configs and seeds give
byte-identical files. All files are written at the end, each atomically.

Exit codes: 0 success, 2 config error, 3 precondition failure, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import errors
from .calculus import RadialFunction, coarea_constants, coarea_reduce, flux, level_range
from .defaults import resolve
from .domain import ProblemParams, RadialDomain, green_radial
from .optimality import (CONSTRUCTIONS, DEFAULT_GRID_SPEC, build_construction, null_sequence, optimality_probe,
                         verify_construction)
from .rellich import bump_family, davies_hinz_weights, rellich_gst_weights, rellich_ratios, rellich_weights
from .weights import weight_table

SCHEMA_VERSION = 1

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3, 4


class ConfigError(errors.HardyOptError):
    """Malformed config: unknown keys, missing fields or wrong types."""


REQUIRED = object()

# allowed keys per command, with defaults
_COMMON = {"p": REQUIRED, "n": REQUIRED, "domain": "punctured_space", "seed": 0, "output_dir": ".", "tolerances": {}}
_CONSTRUCTION = {"construction": "case1", "alpha": None, "m": None, "M": None, "gamma": None}
SCHEMAS = {
    "weight": {**_COMMON, **_CONSTRUCTION, "grid": {}},
    "verify": {**_COMMON, **_CONSTRUCTION, "grid": {}, "windows": {}, "sequence_indices": [10, 100, 1000]},
    "null-seq": {**_COMMON, **_CONSTRUCTION, "sequence_indices": [10, 100, 1000]},
    "coarea-check": {**_COMMON, "flux_levels": 20, "levels": ["v", "G"]},
    "rellich": {**_COMMON, "v0": {"power": 3.0}, "v1": None, "alpha": 0.5, "delta": None, "variant": "rellich",
                "family_size": 100},
    "probe-optimality": {"p": 2.0, "gamma_exponent": REQUIRED, "eps": [1e-2, 1e-3, 1e-4, 1e-5, 1e-6], "seed": 0,
                         "output_dir": ".", "tolerances": {}},
}
_GRID_KEYS = {"weight": {"r_lo", "r_hi", "nodes"}, "verify": {"nodes"}}
_WINDOW_KEYS = {"global_decades", "inner_decades", "outer_decades"}


def load_config(command: str, path, overrides: dict | None = None) -> dict:
    """Parse and validate a config file; ``overrides`` replace top-level entries."""
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    schema = SCHEMAS[command]
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config keys for {command!r}: {sorted(unknown)}")
    cfg = {**schema, **raw}
    missing = [k for k, v in cfg.items() if v is REQUIRED]
    if missing:
        raise ConfigError(f"missing required config keys: {missing}")
    for key in ("grid", "windows"):
        if key in cfg:
            if not isinstance(cfg[key], dict):
                raise ConfigError(f"{key!r} must be an object")
            allowed = _GRID_KEYS.get(command, set()) if key == "grid" else _WINDOW_KEYS
            extra = set(cfg[key]) - allowed
            if extra:
                raise ConfigError(f"unknown {key} keys: {sorted(extra)}")
    try:
        if "p" in cfg:
            cfg["p"] = float(cfg["p"])
        if "n" in cfg:
            cfg["n"] = _as_int(cfg["n"], "n")
        cfg["seed"] = _as_int(cfg["seed"], "seed")
        if cfg["seed"] < 0:
            raise ConfigError("seed must be nonnegative")
        cfg["tolerances"] = resolve(cfg["tolerances"])
        if "domain" in cfg:
            cfg["domain"] = RadialDomain.from_json(cfg["domain"])
    except KeyError as exc:
        raise ConfigError(str(exc.args[0]) if exc.args else "bad config") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, errors.PreconditionError):
            raise
        raise ConfigError(f"bad config value: {exc}") from None
    if "construction" in cfg and cfg["construction"] not in CONSTRUCTIONS:
        raise ConfigError(f"unknown construction {cfg['construction']!r}; expected one of {list(CONSTRUCTIONS)}")
    return cfg


def _as_int(x, name: str) -> int:
    if isinstance(x, bool) or not float(x).is_integer():
        raise ConfigError(f"{name} must be an integer")
    return int(x)


def _params(cfg) -> ProblemParams:
    return ProblemParams(cfg["p"], cfg["n"])


def _construction(cfg):
    return build_construction(cfg["construction"], _params(cfg), cfg["domain"], alpha=cfg["alpha"], m=cfg["m"],
                              M=cfg["M"], gamma=cfg["gamma"])


def _jsonable(x):
    """Plain JSON types; non-finite floats become the strings "inf", "-inf" and "nan"."""
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if hasattr(x, "to_json"):
        return _jsonable(x.to_json())
    return x


def render_json(report: dict) -> str:
    return json.dumps(_jsonable({"schema_version": SCHEMA_VERSION, **report}), sort_keys=True, indent=2) + "\n"


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def threads_from_env() -> int:
    raw = os.environ.get("HARDYOPT_THREADS", "1")
    try:
        t = int(raw)
    except ValueError:
        raise ConfigError(f"HARDYOPT_THREADS must be a positive integer, got {raw!r}") from None
    if t < 1:
        raise ConfigError("HARDYOPT_THREADS must be at least 1")
    return t


# commands: each returns {filename: text}

def cmd_weight(cfg) -> dict:
    cons = _construction(cfg)
    dom, grid = cfg["domain"], cfg["grid"]
    nodes = _as_int(grid.get("nodes", 201), "grid.nodes")
    if "r_lo" in grid or "r_hi" in grid:
        if not ("r_lo" in grid and "r_hi" in grid):
            raise ConfigError("grid needs both r_lo and r_hi")
        r = np.geomspace(float(grid["r_lo"]), float(grid["r_hi"]), nodes)
        if not np.all(dom.contains(r)):
            raise errors.PreconditionError("grid radii must lie in the open domain")
    else:
        r = dom.sample_radii(nodes, spread=3.0 * math.log(10.0))
    r = np.union1d(r, [x for x in cons.weight.singular_radii if r[0] <= x <= r[-1]])
    table = weight_table(cons.weight, cons.ground_state, r)
    report = {"command": "weight", "descriptor": cons.weight.descriptor(), "nodes": int(r.size),
              "classification": cons.profile.classification if cons.profile is not None else None}
    return {"weight.json": render_json(report), "weight.csv": render_csv(["r", "W", "v"], table)}


def cmd_verify(cfg, threads: int = 1) -> dict:
    cons = _construction(cfg)
    spec = {**DEFAULT_GRID_SPEC, **cfg["windows"], "sequence_indices": cfg["sequence_indices"],
            "seed": cfg["seed"], "tolerances": cfg["tolerances"]}
    if "nodes" in cfg["grid"]:
        spec["nodes"] = _as_int(cfg["grid"]["nodes"], "grid.nodes")
    rep = verify_construction(cons, spec, threads=threads)
    body = {"command": "verify", "descriptor": cons.weight.descriptor(), **rep.to_json()}
    m = rep.minimizer
    windows = render_csv(["tag", "r_lo", "r_hi", "lambda_hat"],
                         [[w["tag"], w["r_lo"], w["r_hi"], w["lambda_hat"]] for w in rep.window_table])
    minimizer = render_csv(["r", "phi"], np.column_stack([m.grid.nodes, m.values]))
    return {"verify.json": render_json(body), "windows.csv": windows, "minimizer.csv": minimizer}


def cmd_nullseq(cfg) -> dict:
    cons = _construction(cfg)
    kind = cons.profile.classification.kind
    rows = [null_sequence(kind, cons.ground_state, _as_int(k, "sequence_indices")) for k in cfg["sequence_indices"]]
    c, _ = coarea_constants(cons.profile, cons.params)
    body = {"command": "null-seq", "classification": cons.profile.classification, "c": c,
            "rows": [r.to_json() for r in rows]}
    csv = render_csv(["n", "X", "Y", "Qsim", "normalization", "normalized_energy"],
                     [[r.n, r.X, r.Y, r.Qsim, r.normalization, r.normalized_energy] for r in rows])
    return {"null_seq.json": render_json(body), "null_seq.csv": csv}


def coarea_integrands(lo: float, hi: float) -> list:
    """Five compactly supported level functions on [lo, hi]: (name, f, breakpoints)."""
    w = hi - lo
    mid = 0.5 * (lo + hi)
    return [
        ("indicator", lambda t: np.ones_like(np.asarray(t, dtype=float)), ()),
        ("quartic_bump", lambda t: ((t - lo) * (hi - t)) ** 2 / w ** 4, ()),
        ("sine_squared", lambda t: np.sin(np.pi * (t - lo) / w) ** 2, ()),
        ("hat", lambda t: 1.0 - np.abs(t - mid) / (0.5 * w), (mid,)),
        ("exponential", lambda t: np.exp(t / w), ()),
    ]


def coarea_support(G, levels: str, beta: float) -> tuple:
    low, high = level_range(G)
    if np.isfinite(high):
        lo, hi = low + 0.25 * (high - low), low + 0.75 * (high - low)
    else:
        lo, hi = low + 0.5, low + 1.5
    if levels == "v":
        return lo ** beta, hi ** beta
    return lo, hi


def cmd_coarea(cfg) -> dict:
    params = _params(cfg)
    G = green_radial(params, cfg["domain"])
    c, c_tilde = coarea_constants(G, params)
    count = _as_int(cfg["flux_levels"], "flux_levels")
    low, high = level_range(G)
    top = high if np.isfinite(high) else low + 10.0
    ts = low + (top - low) * (np.arange(1, count + 1) / (count + 1))
    fluxes = np.array([flux(G, t, params) for t in ts])
    dev = float(np.max(np.abs(fluxes - c_tilde)) / c_tilde)
    rows = []
    for levels in cfg["levels"]:
        if levels not in ("v", "G"):
            raise ConfigError("levels entries must be 'v' or 'G'")
        support = coarea_support(G, levels, params.beta)
        for name, f, bps in coarea_integrands(*support):
            res = coarea_reduce(f, G, params, support, levels=levels, breakpoints=bps)
            rows.append({"levels": levels, "integrand": name, "lhs": res.lhs, "rhs": res.rhs,
                         "rel_diff": abs(res.lhs - res.rhs) / abs(res.rhs)})
    body = {"command": "coarea-check", "c": c, "c_tilde": c_tilde, "flux_max_rel_deviation": dev,
            "identities": rows, "profile": G}
    flux_csv = render_csv(["level", "flux"], np.column_stack([ts, fluxes]))
    id_csv = render_csv(["levels", "integrand", "lhs", "rhs", "rel_diff"],
                        [[r["levels"], r["integrand"], r["lhs"], r["rhs"], r["rel_diff"]] for r in rows])
    return {"coarea.json": render_json(body), "flux.csv": flux_csv, "coarea.csv": id_csv}


def radial_from_spec(spec) -> RadialFunction:
    """``{"power": s}`` gives ``r^-s``; ``{"constant": c}`` gives ``c``."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError("a radial function is given as an object with one key, 'power' or 'constant'")
    (kind, x), = spec.items()
    try:
        x = float(x)
    except (TypeError, ValueError):
        raise ConfigError(f"radial function parameter must be a number, got {x!r}") from None
    if kind == "power":
        return RadialFunction(lambda r: np.asarray(r, dtype=float) ** -x,
                              lambda r: -x * np.asarray(r, dtype=float) ** (-x - 1.0),
                              lambda r: x * (x + 1.0) * np.asarray(r, dtype=float) ** (-x - 2.0))
    if kind == "constant":
        return RadialFunction(lambda r: np.full_like(np.asarray(r, dtype=float), x),
                              lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                              lambda r: np.zeros_like(np.asarray(r, dtype=float)))
    raise ConfigError(f"unknown radial function kind {kind!r}")


def cmd_rellich(cfg) -> dict:
    params = _params(cfg)
    v0 = radial_from_spec(cfg["v0"])
    variant = cfg["variant"]
    alpha = float(cfg["alpha"])
    if variant == "rellich":
        triple = rellich_weights(v0, alpha, params)
    elif variant == "gst":
        if cfg["v1"] is None:
            raise ConfigError("variant 'gst' needs v1")
        triple = rellich_gst_weights(v0, radial_from_spec(cfg["v1"]), alpha, params)
    elif variant == "davies_hinz":
        if cfg["delta"] is None:
            raise ConfigError("variant 'davies_hinz' needs delta")
        triple = davies_hinz_weights(v0, float(cfg["delta"]), params)
    else:
        raise ConfigError(f"unknown Rellich variant {variant!r}")
    family = bump_family(_as_int(cfg["family_size"], "family_size"), cfg["seed"])
    check = rellich_ratios(triple, family, params)
    body = {"command": "rellich", "constant": check.constant, "min_ratio": check.min_ratio,
            "argmin": check.argmin, "argmin_bump": family[check.argmin], "variant": variant,
            "holds_on_family": check.min_ratio >= check.constant}
    csv = render_csv(["id", "a", "b", "c", "ratio"],
                     [[i, f.a, f.b, f.c, q] for i, (f, q) in enumerate(zip(family, check.ratios))])
    return {"rellich.json": render_json(body), "rellich.csv": csv}


def cmd_probe(cfg) -> dict:
    g, p = float(cfg["gamma_exponent"]), float(cfg["p"])
    rows = []
    for eps in cfg["eps"]:
        res = optimality_probe(g, float(eps), p)
        rows.append({"eps": float(eps), "lhs": res.lhs, "rhs": res.rhs, "ratio": res.lhs / res.rhs})
    body = {"command": "probe-optimality", "gamma_exponent": g, "p": p, "rows": rows}
    csv = render_csv(["eps", "lhs", "rhs", "ratio"], [[r["eps"], r["lhs"], r["rhs"], r["ratio"]] for r in rows])
    return {"probe.json": render_json(body), "probe.csv": csv}


COMMANDS = {
    "weight": cmd_weight,
    "verify": cmd_verify,
    "null-seq": cmd_nullseq,
    "coarea-check": cmd_coarea,
    "rellich": cmd_rellich,
    "probe-optimality": cmd_probe,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardyopt", description="Optimal Hardy and Rellich weights on radial domains")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        sp.add_argument("--seed", type=int, help="random seed (overrides the config)")
        sp.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
    return parser


def run(command: str, cfg: dict) -> dict:
    if command == "verify":
        return cmd_verify(cfg, threads=threads_from_env())
    return COMMANDS[command](cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, {"output_dir": args.out, "seed": args.seed})
        files = run(args.command, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except errors.PreconditionError as exc:
        print(f"precondition failed ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except errors.NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out = Path(cfg["output_dir"])
    for name, text in files.items():
        write_atomic(out / name, text)
    if not args.quiet:
        for name in files:
            print(out / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
