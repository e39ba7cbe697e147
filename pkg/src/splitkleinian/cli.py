"""Command-line front end.

Each subcommand runs one experiment and writes its records as CSV or
JSON (to ``--out`` or stdout).  ``run CONFIG`` reads the same settings
from an INI file.  Exit status is 0 on success, 2 for configuration
errors and unwritable outputs, and 3 for numerical or domain failures;
errors are reported on stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import ast
import sys
from typing import Optional

import numpy as np

from . import dynamics, regions
from .config import COMMANDS, ExperimentConfig, from_mapping, load_config
from .errors import ConfigError, SplitKleinianError
from .export import dumps_json, render_csv, render_json, to_plain, write_atomic
from .group import GroupContext
from .linalg import logm

__all__ = ["PARAMS", "main", "run"]

# command -> {param: default}
PARAMS = {
    "split": {},
    "classify-grid": {"plane": "ims0,imu0", "res": 64, "window": [-1.0, 1.0], "base": None},
    "orbit": {"x0": "generic", "n": 100000, "eps": 0.03125, "points": None},
    "fixed-points": {"target": "generic", "n_max": 25, "b_box": 0, "top": None},
    "lattice-check": {"sigma": None, "h": 1.0, "lattice_tol": 1e-8},
    "norm-scan": {"n_range": [1, 200]},
    "psi-check": {"samples": 1000, "t_range": 2.0},
    "witness": {"z1": None, "z2": None, "n": 10},
}


class Result:
    def __init__(self, records: list, fields: Optional[list] = None, meta: Optional[dict] = None,
                 extra: Optional[dict] = None):
        self.records = records
        self.fields = fields
        self.meta = meta or {}
        # secondary outputs: path -> (records, fields, meta)
        self.extra = extra or {}


def _params(cfg: ExperimentConfig) -> dict:
    defaults = PARAMS[cfg.command]
    unknown = sorted(set(cfg.params) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown parameters for {cfg.command}: {unknown}")
    return {**defaults, **cfg.params}


def _context(cfg: ExperimentConfig) -> GroupContext:
    B = cfg.integer_matrix()
    if B is None:
        ctx = GroupContext(cfg.generator())
    else:
        ctx = GroupContext.from_integer_matrix(B)
    if cfg.mode != "auto" and B is not None and cfg.mode != ctx.mode:
        raise ConfigError(f"mode {cfg.mode!r} requested but B only embeds in the {ctx.mode} group")
    return ctx


def _vector(v, N: int, name: str, kind=float) -> np.ndarray:
    try:
        arr = np.array(v, dtype=kind)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a list of {N} numbers") from None
    if arr.shape != (N,):
        raise ConfigError(f"{name} must be a list of {N} numbers")
    return arr


def _int(v, name: str, lo: int = 0) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(f"{name} must be an integer >= {lo}")
    return v


def _point(v, N: int, name: str):
    if v == "generic":
        return dynamics.generic_point(N)
    return _vector(v, N, name)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _split(cfg, p) -> Result:
    ctx = _context(cfg)
    split = regions.build_splitting(ctx.M, cfg.tol)
    rec = {
        "N": split.N,
        "N_s": split.n_stable,
        "N_u": split.n_unstable,
        "mode": ctx.mode,
        "eigenvalues": split.spectrum.eigenvalues,
        "classification": list(split.spectrum.classification),
        "margin": split.spectrum.margin,
        "M": ctx.M,
        "V_s": split.V_s,
        "V_u": split.V_u,
        "P_s": None if split.P_s is None else split.P_s.P,
        "P_u": None if split.P_u is None else split.P_u.P,
        "C_s": None if split.P_s is None else split.P_s.C,
        "lambda_s": None if split.P_s is None else split.P_s.lam,
        "residual": split.residual,
    }
    return Result([rec])


def _plane_axis(token: str, split) -> np.ndarray:
    N = split.N
    for prefix, basis in (("ims", split.V_s), ("imu", split.V_u), ("re", None)):
        if token.startswith(prefix):
            try:
                k = int(token[len(prefix):])
            except ValueError:
                break
            width = N if basis is None else basis.shape[1]
            if not 0 <= k < width:
                raise ConfigError(f"plane axis {token!r} out of range (0..{width - 1})")
            if basis is None:
                e = np.zeros(N, dtype=complex)
                e[k] = 1.0
                return e
            return 1j * basis[:, k]
    raise ConfigError(f"bad plane axis {token!r}; use re<i>, ims<j> or imu<j>")


def _classify_grid(cfg, p) -> Result:
    ctx = _context(cfg)
    split = regions.build_splitting(ctx.M, cfg.tol)
    axes = [t.strip() for t in str(p["plane"]).split(",")]
    if len(axes) != 2 or axes[0] == axes[1]:
        raise ConfigError("plane must name two distinct axes, e.g. ims0,imu0")
    e1, e2 = (_plane_axis(a, split) for a in axes)
    res = _int(p["res"], "res", 1)
    lo, hi = _vector(p["window"], 2, "window")
    if not lo < hi:
        raise ConfigError("window must satisfy lo < hi")
    base = np.zeros(split.N, dtype=complex) if p["base"] is None else _vector(p["base"], split.N, "base", complex)
    # left-closed ticks, so a symmetric window puts the axes on index res // 2
    ticks = lo + (hi - lo) * np.arange(res) / res
    records = []
    boundary = 0
    for i, a in enumerate(ticks):
        for j, b in enumerate(ticks):
            label, s, u, flag = regions.classify_detailed(base + a * e1 + b * e2, split, cfg.tol)
            boundary += flag
            records.append({"i": i, "j": j, "a": float(a), "b": float(b), "label": label.value,
                            "s": s, "u": u, "boundary": flag})
    meta = {"plane": axes, "res": res, "window": [float(lo), float(hi)], "boundary_cells": boundary}
    return Result(records, meta=meta)


def _orbit(cfg, p) -> Result:
    B = cfg.integer_matrix()
    x0 = _point(p["x0"], B.n, "x0")
    n = _int(p["n"], "n")
    pts = dynamics.torus_orbit(B, x0, n)
    rep = dynamics.density_report(pts, float(p["eps"]))
    rec = {"n": n, "x0": x0, "epsilon": rep.epsilon, "boxes_total": rep.boxes_total,
           "boxes_hit": rep.boxes_hit, "coverage": rep.coverage, "max_gap": rep.max_gap}
    extra = {}
    if p["points"] is not None:
        extra[str(p["points"])] = ([{"n": k, "x": x} for k, x in enumerate(pts)], ["n", "x"], {"x0": x0})
    return Result([rec], extra=extra)


def _fixed_points(cfg, p) -> Result:
    B = cfg.integer_matrix()
    target = _point(p["target"], B.n, "target")
    sweep = dynamics.fixed_point_sweep(B, target, _int(p["n_max"], "n_max", 1),
                                       _int(p["b_box"], "b_box"), workers=cfg.workers)
    records = [r.record() for r in sweep.records]
    if p["top"] is not None:
        records = records[:_int(p["top"], "top", 1)]
    meta = {"target": sweep.target, "C": sweep.C, "bound_ok": sweep.bound_ok,
            "best_distance": sweep.best.distance}
    fields = ["b", "n", "x", "residual", "distance", "y_distance", "bound", "bound_ok"]
    return Result(records, fields, meta)


def _lattice_check(cfg, p) -> Result:
    B = cfg.integer_matrix()
    if B is not None:
        log = logm(B.to_array())
        if log.power != 1:
            raise ConfigError("lattice-check needs B = expm(M); this B only has a logarithm of B^2")
        M = log.M
    else:
        M = cfg.generator()
    N = M.shape[0]
    sigma = np.eye(N) if p["sigma"] is None else np.array(p["sigma"], dtype=float)
    if sigma.shape != (N, N):
        raise ConfigError(f"sigma must be {N}x{N}")
    h = float(p["h"])
    if not h > 0:
        raise ConfigError("h must be positive")
    chk = dynamics.check_lattice_condition(M, sigma, h, float(p["lattice_tol"]), cfg.hyp_tol)
    rec = {"passed": chk.passed, "reason": chk.reason, "max_deviation": chk.max_deviation,
           "h": h, "K": chk.K, "B": None if chk.B is None else chk.B.tolist()}
    return Result([rec])


def _norm_scan(cfg, p) -> Result:
    B = cfg.integer_matrix()
    rng = p["n_range"]
    if isinstance(rng, str) and ":" in rng:
        rng = [int(s) for s in rng.split(":")]
    lo, hi = (int(v) for v in _vector(rng, 2, "n_range", int))
    ns = [n for n in range(lo, hi + 1) if n != 0]
    scan = dynamics.norm_bound_scan(B, ns, tol=cfg.hyp_tol, workers=cfg.workers)
    meta = {"sup": scan.sup, "sup_at": scan.sup_at, "stabilized_at": scan.stabilized_at, "limit": scan.limit}
    return Result(scan.records(), ["n", "norm"], meta)


def _psi_check(cfg, p) -> Result:
    ctx = _context(cfg)
    split = regions.build_splitting(ctx.M, cfg.tol)
    rng = np.random.default_rng(cfg.seed)
    out = regions.psi_selfcheck(ctx, split, _int(p["samples"], "samples", 1), rng, float(p["t_range"]))
    return Result([out])


def _witness(cfg, p) -> Result:
    ctx = _context(cfg)
    split = regions.build_splitting(ctx.M, cfg.tol)
    if split.degenerate:
        raise ConfigError("witness needs both stable and unstable directions")
    N = split.N
    z1 = 1j * split.V_u[:, 0] if p["z1"] is None else _vector(p["z1"], N, "z1", complex)
    z2 = 1j * split.V_s[:, 0] if p["z2"] is None else _vector(p["z2"], N, "z2", complex)
    table = regions.divergence_witness(z1, z2, _int(p["n"], "n", 1), ctx, split, cfg.tol)
    return Result(table.records(), meta={"z1": z1, "z2": z2, "n0": table.n0})


_DISPATCH: dict = {
    "split": _split,
    "classify-grid": _classify_grid,
    "orbit": _orbit,
    "fixed-points": _fixed_points,
    "lattice-check": _lattice_check,
    "norm-scan": _norm_scan,
    "psi-check": _psi_check,
    "witness": _witness,
}


def run(cfg: ExperimentConfig) -> Result:
    """Validate and run one experiment; returns its records without writing."""
    p = _params(cfg)
    return _DISPATCH[cfg.command](cfg, p)


def _render(records, fields, meta, fmt: str) -> str:
    return render_csv(records, fields, meta) if fmt == "csv" else render_json(records, fields, meta)


def execute(cfg: ExperimentConfig, stdout=None) -> None:
    result = run(cfg)
    meta = {"command": cfg.command, "config": cfg.to_dict(), **result.meta}
    text = _render(result.records, result.fields, meta, cfg.format)
    # every output is rendered before anything is written
    extra = {path: _render(r, f, m, "json" if path.endswith(".json") else "csv")
             for path, (r, f, m) in result.extra.items()}
    if cfg.output is None:
        (stdout or sys.stdout).write(text)
    else:
        write_atomic(cfg.output, text)
    for path, body in extra.items():
        write_atomic(path, body)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="splitkleinian", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    runp = sub.add_parser("run", help="run an experiment described by an INI file")
    runp.add_argument("config")
    runp.add_argument("--out", dest="output", help="override the configured output path")
    for name in COMMANDS:
        sp = sub.add_parser(name)
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--preset", choices=["cat2", "cat3"])
        src.add_argument("--B", type=_literal, help="integer matrix, e.g. '[[2,1],[1,1]]'")
        src.add_argument("--M", type=_literal, help="real generator matrix")
        sp.add_argument("--mode", default="auto", choices=["auto", "connected", "disconnected"])
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--hyp-tol", dest="hyp_tol", type=float, default=1e-9)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", dest="output")
        sp.add_argument("--format", choices=["csv", "json"])
        for param in PARAMS[name]:
            flag = "--" + param.replace("_", "-")
            sp.add_argument(flag, dest=param, type=_literal, default=argparse.SUPPRESS)
    return parser


def _config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    d = {k: v for k, v in vars(ns).items() if v is not None}
    if d.get("format") is None:
        out = d.get("output") or ""
        d["format"] = "csv" if out.endswith(".csv") else "json"
    return from_mapping(d)


def _error(exc: Exception, code: int, stream) -> int:
    if isinstance(exc, SplitKleinianError):
        obj = {"kind": exc.kind, "message": str(exc), "details": exc.details}
    else:
        obj = {"kind": "numeric failure", "message": f"{type(exc).__name__}: {exc}", "details": {}}
    try:
        obj = to_plain(obj)
    except SplitKleinianError:
        obj["details"] = {k: str(v) for k, v in obj["details"].items()}
    stream.write(dumps_json({"error": obj}) + "\n")
    return code


def main(argv=None, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    try:
        ns = _build_parser().parse_args(argv)
        if ns.command == "run":
            cfg = load_config(ns.config)
            if ns.output is not None:
                cfg.output = ns.output
        else:
            cfg = _config_from_args(ns)
        execute(cfg, stdout)
    except ConfigError as exc:
        return _error(exc, 2, stderr)
    except (SplitKleinianError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error(exc, 3, stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
