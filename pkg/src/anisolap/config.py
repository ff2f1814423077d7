"""Flat key = value configuration files and their translation to problems.

The format is one `key = value` pair per line with `#` comments, chosen so
that any tool can parse or generate it.  Data functions (f, g, h) accept a
numeric constant or an expression in x and y evaluated with a restricted
numpy namespace, e.g. `f = sin(pi*x)*sin(pi*y)`.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, GateError
from .meshing import mesh_from_tag
from .norms import FinslerNorm
from .solver import ProblemSpec
from .spaces import WeightSpec

DEFAULTS = {
    "domain": "square:32",
    "p": "2",
    "delta": "0.5",
    "gamma": "0.5",
    "norm": "euclidean",
    "weight": "const:1",
    "s": "2",
    "f": "1",
    "g": "0",
    "h": "0.01",
    "kind": "mixed",
    "n_max_exp": "10",
    "inner_tol": "1e-8",
    "outer_tol": "1e-6",
    "theta": "0.5",
    "max_inner_iters": "50000",
    "seed": "0",
    # subcommand-specific
    "restarts": "8",
    "trials": "1000",
    "constant": "",
    "sweep_p": "2",
    "sweep_delta": "0.5",
    "sweep_nu": "0",
    "sweep_norm": "euclidean",
}

# names available inside f/g/h expressions
_EXPR_NAMES = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "log": np.log, "sqrt": np.sqrt, "abs": np.abs, "minimum": np.minimum,
    "maximum": np.maximum, "pi": math.pi, "e": math.e,
}


def parse_config_text(text: str, base: dict | None = None) -> dict:
    """Parse `key = value` lines over the defaults; later keys win."""
    cfg = dict(DEFAULTS if base is None else base)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        cfg[key] = value
    return cfg


def load_config(path: str | None, overrides: list | None = None) -> dict:
    """Config from an optional file plus `key=value` override strings."""
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as err:
            raise ConfigError(f"cannot read config file {path}: {err}")
        cfg = parse_config_text(text, base=cfg)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key {key!r}")
        cfg[key] = value
    return cfg


def _float(cfg: dict, key: str) -> float:
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: {cfg[key]!r} is not a number")


def _int(cfg: dict, key: str) -> int:
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: {cfg[key]!r} is not an integer")


def parse_data_expression(text: str, key: str = "f"):
    """A constant, or a vectorized callable of (x, y) from an expression."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        code = compile(text, f"<{key}>", "eval")
    except SyntaxError as err:
        raise ConfigError(f"key {key!r}: bad expression {text!r}: {err}")
    for name in code.co_names:
        if name not in _EXPR_NAMES and name not in ("x", "y"):
            raise ConfigError(f"key {key!r}: unknown name {name!r} in expression")

    def fn(x, y):
        return eval(code, {"__builtins__": {}},
                    dict(_EXPR_NAMES, x=x, y=y))

    return fn


def build_spec(cfg: dict) -> ProblemSpec:
    """A ProblemSpec from a parsed configuration mapping."""
    try:
        mesh = mesh_from_tag(cfg["domain"])
        norm = FinslerNorm.from_tag(cfg["norm"])
        weight = WeightSpec.from_tag(cfg["weight"], s=_float(cfg, "s"))
    except GateError:
        raise
    except ValueError as err:
        raise ConfigError(str(err))
    kind = cfg["kind"]
    if kind not in ("mixed", "exponential"):
        raise ConfigError(f"key 'kind': must be mixed or exponential, got {kind!r}")
    n_max = _int(cfg, "n_max_exp")
    if n_max < 0:
        raise ConfigError("key 'n_max_exp': must be >= 0")
    return ProblemSpec(
        mesh=mesh,
        norm=norm,
        p=_float(cfg, "p"),
        weight=weight,
        kind=kind,
        delta=_float(cfg, "delta"),
        gamma=_float(cfg, "gamma"),
        f=parse_data_expression(cfg["f"], "f"),
        g=parse_data_expression(cfg["g"], "g"),
        h=parse_data_expression(cfg["h"], "h"),
        n_schedule=tuple(2 ** k for k in range(n_max + 1)),
        inner_tol=_float(cfg, "inner_tol"),
        outer_tol=_float(cfg, "outer_tol"),
        max_inner_iters=_int(cfg, "max_inner_iters"),
        theta=_float(cfg, "theta"),
    )
