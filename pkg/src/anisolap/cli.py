"""Command-line entry point.

Subcommands: solve, extremal, verify, sweep, check-norms.  Configuration
comes from an optional flat key = value file plus repeatable --set
overrides; every run is reproducible from (config, seed).  Reports are
emitted as JSON (default) or CSV.  Timestamps live in a separate metadata
block so that the payload itself is byte-for-byte deterministic.

Exit codes: 0 success, 2 configuration error, 3 convergence failure,
4 gate violation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from .config import DEFAULTS, build_spec, load_config
from .errors import ConfigError, ConvergenceError, GateError
from .extremal import (build_extremal, compute_extremal_report, mu_direct,
                       verify_inequality)
from .norms import FinslerNorm, invariant_suite
from .solver import EXPONENTIAL, solve_exponential, solve_mixed

CANONICAL_NORMS = ("euclidean", "lt:4", "lt:1.5", "lambda-mu:1:1",
                   "lambda-mu:2:0.5")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_GATE = 4


def _emit(payload: dict, args, default_name: str) -> None:
    """Write the deterministic payload wrapped with volatile metadata."""
    doc = {"payload": payload,
           "metadata": {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
                        "command": default_name}}
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    _write(text, args.out)


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _config(args) -> dict:
    cfg = load_config(args.config, args.set)
    if args.seed is not None:
        cfg["seed"] = str(args.seed)
    return cfg


def _mesh_stats(mesh) -> dict:
    return {"domain": mesh.domain, "vertices": int(mesh.num_vertices),
            "triangles": int(len(mesh.triangles))}


def _cmd_solve(args) -> int:
    cfg = _config(args)
    spec = build_spec(cfg)
    report = (solve_exponential if spec.kind == EXPONENTIAL
              else solve_mixed)(spec)
    if args.format == "csv":
        _write(report.history_csv(), args.out)
        return EXIT_OK
    payload = {"report": report.to_dict(), "config": cfg,
               "mesh": _mesh_stats(spec.mesh)}
    _emit(payload, args, "solve")
    return EXIT_OK


def _cmd_extremal(args) -> int:
    cfg = _config(args)
    if cfg["g"].strip() not in ("0", "0.0"):
        raise ConfigError("key 'g': extremal runs require g = 0")
    cfg["kind"] = "mixed"
    spec = build_spec(cfg)
    rep = compute_extremal_report(spec, restarts=int(cfg["restarts"]),
                                  seed=int(cfg["seed"]),
                                  trials=int(cfg["trials"]))
    payload = {"extremal": rep.to_dict(), "config": cfg,
               "mesh": _mesh_stats(spec.mesh)}
    _emit(payload, args, "extremal")
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg = _config(args)
    cfg["kind"] = "mixed"
    spec = build_spec(cfg)
    report = solve_mixed(spec)
    extremal, _, _ = build_extremal(report)
    seed = int(cfg["seed"])
    trials = int(cfg["trials"])
    if cfg["constant"].strip():
        try:
            constants = [float(cfg["constant"])]
        except ValueError:
            raise ConfigError(f"key 'constant': {cfg['constant']!r} "
                              "is not a number")
    else:
        mu, _ = mu_direct(spec, restarts=int(cfg["restarts"]), seed=seed,
                          warm_start=extremal)
        constants = [0.99 * mu, 1.05 * mu]
    verdicts = [verify_inequality(spec, c, trials=trials, seed=seed,
                                  extremal=extremal)
                for c in constants]
    if args.format == "csv":
        _write("".join(v.rows_csv() for v in verdicts), args.out)
        return EXIT_OK
    payload = {"verdicts": [v.to_dict() for v in verdicts], "config": cfg,
               "mesh": _mesh_stats(spec.mesh)}
    _emit(payload, args, "verify")
    return EXIT_OK


def _parse_list(cfg: dict, key: str) -> list:
    return [item.strip() for item in cfg[key].split(",") if item.strip()]


def _sweep_point(cfg: dict, p: str, delta: str, nu: str, norm: str) -> dict:
    point = {"p": p, "delta": delta, "nu": nu, "norm": norm}
    local = dict(cfg)
    local.update(p=p, delta=delta, norm=norm, g="0", kind="mixed")
    local["weight"] = "const:1" if float(nu) == 0.0 else f"power:{nu}"
    try:
        spec = build_spec(local)
        rep = compute_extremal_report(spec, restarts=int(cfg["restarts"]),
                                      seed=int(cfg["seed"]), trials=0)
        point.update(mu_formula=repr(rep.mu_formula),
                     mu_direct=repr(rep.mu_direct),
                     rel_gap=repr(rep.rel_gap), converged="1")
    except (ConfigError, GateError, ConvergenceError) as err:
        point.update(mu_formula="", mu_direct="", rel_gap="",
                     converged=f"0 ({type(err).__name__})")
    return point


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    grid = [(p, d, nu, norm)
            for p in _parse_list(cfg, "sweep_p")
            for d in _parse_list(cfg, "sweep_delta")
            for nu in _parse_list(cfg, "sweep_nu")
            for norm in _parse_list(cfg, "sweep_norm")]
    if not grid:
        raise ConfigError("sweep grid is empty")
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        points = list(pool.map(lambda g: _sweep_point(cfg, *g), grid))
    lines = ["p,delta,nu,norm,mu_formula,mu_direct,rel_gap,converged"]
    for pt in points:
        lines.append(",".join(pt[k] for k in
                              ("p", "delta", "nu", "norm", "mu_formula",
                               "mu_direct", "rel_gap", "converged")))
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_check_norms(args) -> int:
    cfg = _config(args)
    seed = int(cfg["seed"])
    results = [invariant_suite(FinslerNorm.from_tag(tag), seed=seed)
               for tag in CANONICAL_NORMS]
    payload = {"results": results, "all_passed": all(r["passed"]
                                                     for r in results)}
    _emit(payload, args, "check-norms")
    return EXIT_OK if payload["all_passed"] else EXIT_CONVERGENCE


_COMMANDS = {
    "solve": _cmd_solve,
    "extremal": _cmd_extremal,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
    "check-norms": _cmd_check_norms,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anisolap",
        description="Variational solver and verification suite for weighted "
                    "anisotropic p-Laplace problems with singular data.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", default=None,
                         help="flat key = value configuration file")
        cmd.add_argument("--out", default=None, help="output path (stdout "
                         "when omitted)")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--jobs", type=int, default=1)
        cmd.add_argument("--format", choices=("json", "csv"), default="json")
        cmd.add_argument("--set", action="append", default=[],
                         metavar="KEY=VALUE", help="inline config override, "
                         "applied after the file")
    return parser


def _error_record(args, err: Exception, code: int) -> int:
    record = {"error": {"type": type(err).__name__, "message": str(err),
                        "exit_code": code}}
    _write(json.dumps(record, sort_keys=True, indent=2) + "\n",
           getattr(args, "out", None))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except ConfigError as err:
        return _error_record(args, err, EXIT_CONFIG)
    except GateError as err:
        return _error_record(args, err, EXIT_GATE)
    except ConvergenceError as err:
        return _error_record(args, err, EXIT_CONVERGENCE)
    except ValueError as err:
        return _error_record(args, err, EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
