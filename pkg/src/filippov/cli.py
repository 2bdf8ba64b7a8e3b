"""Command-line front end.

Subcommands: ``models``, ``simulate``, ``classify-surface``, ``return-map``,
``pseudo-eq`` and ``verify``. Trajectories go out as CSV (``t,x1,...,xn,mode``)
and events as JSON lines; floats are written with 17 significant digits so a
run can be replayed bit for bit. Exit codes: 0 success, 1 failed check,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .equilibria import Order, find_pseudo_equilibria
from .errors import FilippovError, UnknownModelError, UnknownParameterError
from .integrate import IntegrateOptions, RepellingChoice, integrate
from .retmap import default_grid, fit_asymptotics
from .surface import classify_point
from .system import REGISTRY, ModelId, build_model, model_ids

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad command-line input; reported on stderr with exit code 2."""


def fmt(v):
    return format(float(v), ".17g")


def parse_vector(text):
    try:
        return np.array([float(t) for t in str(text).split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}") from None


def parse_params(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"parameter override {item!r} must look like name=value")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"parameter {key!r} needs a numeric value") from None
    return out


def read_config(path):
    """Plain ``key = value`` lines; ``#`` starts a comment; ``param`` may repeat."""
    cfg = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{n}: expected key = value")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key == "param":
            cfg.setdefault("param", []).append(value)
        else:
            cfg[key] = value
    return cfg


@dataclass
class RunConfig:
    """Everything that determines a ``simulate`` run."""

    model: str
    params: dict = field(default_factory=dict)
    x0: Optional[np.ndarray] = None
    rtol: float = 1e-10
    atol: float = 1e-12
    v_converge: float = 1e-6
    guard_tol: float = 1e-8
    stop_norm: Optional[float] = None
    repelling_choice: str = "stop"
    t_end: float = 10.0
    seed: int = 0
    output: Optional[str] = None
    events: Optional[str] = None

    def __post_init__(self):
        for name in ("rtol", "atol", "v_converge", "guard_tol"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        if not self.t_end > 0:
            raise UsageError("the horizon t-end must be positive")
        if self.repelling_choice not in {c.value for c in RepellingChoice}:
            raise UsageError(f"unknown repelling choice {self.repelling_choice!r}")

    def options(self):
        return IntegrateOptions(rtol=self.rtol, atol=self.atol, v_converge=self.v_converge,
                                guard_tol=self.guard_tol, stop_norm=self.stop_norm,
                                repelling_choice=self.repelling_choice)


# -- argument handling ----------------------------------------------------------

SIM_DEFAULTS = {"rtol": 1e-10, "atol": 1e-12, "v_converge": 1e-6, "guard_tol": 1e-8, "t_end": 10.0, "seed": 0,
                "repelling_choice": "stop"}


def _merged(args, keys, defaults):
    """Flags over config file over defaults."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    out = {}
    for k in keys:
        v = getattr(args, k, None)
        if v is None:
            v = cfg.get(k)
        if v is None:
            v = defaults.get(k)
        out[k] = v
    params = dict(parse_params(cfg.get("param")))
    params.update(parse_params(getattr(args, "param", None)))
    out["params"] = params
    return out


def _add_model(p):
    p.add_argument("--model", help="model id (see `models`)")
    p.add_argument("--param", action="append", metavar="NAME=VALUE", help="parameter override, repeatable")
    p.add_argument("--config", help="key = value file; flags take precedence")


def build_parser():
    parser = argparse.ArgumentParser(prog="filippov", description="Second-order Filippov system toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("models", help="list built-in models and parameter defaults")
    p.add_argument("--json", action="store_true", help="emit JSON")

    p = sub.add_parser("simulate", help="integrate a Filippov solution")
    _add_model(p)
    p.add_argument("--x0", help="initial state, comma separated")
    p.add_argument("--t-end", type=float, help="horizon (default 10)")
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--v-converge", type=float, help="spiral hand-off amplitude (default 1e-6)")
    p.add_argument("--guard-tol", type=float, help="tangency guard (default 1e-8)")
    p.add_argument("--stop-norm", type=float, help="stop once |x| at a surface event falls below this")
    p.add_argument("--repelling-choice", choices=[c.value for c in RepellingChoice],
                   help="continuation after reaching repelling sliding (default stop)")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="CSV path (default standard output)")
    p.add_argument("--events", help="JSON-lines event path")

    p = sub.add_parser("classify-surface", help="classify a point of the switching surface")
    _add_model(p)
    p.add_argument("--x", help="point, comma separated")
    p.add_argument("--tol", type=float)

    p = sub.add_parser("return-map", help="fit return-map asymptotics around a tangency point")
    _add_model(p)
    p.add_argument("--base", help="base point on T, comma separated")
    p.add_argument("--nus", help="comma separated nu grid (default 8 halvings from 1e-2)")
    p.add_argument("--samples", action="store_true", help="include every return-map sample")

    p = sub.add_parser("pseudo-eq", help="find pseudo-equilibria by Newton's method")
    _add_model(p)
    p.add_argument("--order", choices=["first", "second"], default=None)
    p.add_argument("--seed-point", action="append", help="Newton seed, comma separated; repeatable")

    p = sub.add_parser("verify", help="run the acceptance checks and print a pass/fail table")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only", help="comma separated check ids, e.g. C1,C3")
    p.add_argument("--json", help="also write the JSON report to this path")
    return parser


def _system(opts):
    if not opts.get("model"):
        raise UsageError("--model is required")
    return build_model(opts["model"], opts["params"])


def _vector_for(sys_, text, what):
    if text is None:
        raise UsageError(f"--{what} is required")
    v = parse_vector(text)
    if v.size != sys_.dim:
        raise UsageError(f"--{what} needs {sys_.dim} components, got {v.size}")
    return v


def _write_json(obj, out):
    json.dump(obj, out, indent=2, sort_keys=True)
    out.write("\n")


# -- subcommands ---------------------------------------------------------------------


def cmd_models(args, out):
    rows = []
    for mid in model_ids():
        spec = REGISTRY[ModelId(mid)]
        sys_ = build_model(mid)
        rows.append({"id": mid, "dim": sys_.dim, "second_order": sys_.second_order,
                     "params": sys_.param_dict, "description": spec.description})
    if args.json:
        _write_json(rows, out)
        return EXIT_OK
    for r in rows:
        params = ", ".join(f"{k}={v:g}" for k, v in r["params"].items()) or "(none)"
        out.write(f"{r['id']:<18} dim={r['dim']}  {params}\n")
    return EXIT_OK


def write_csv(traj, dim, out):
    out.write(",".join(["t"] + [f"x{i + 1}" for i in range(dim)] + ["mode"]) + "\n")
    for t, x, mode in traj.samples():
        out.write(",".join([fmt(t)] + [fmt(v) for v in x] + [mode.value]) + "\n")


def write_events(traj, out):
    for e in traj.events:
        d = e.to_dict()
        out.write(json.dumps(d, sort_keys=True) + "\n")


def cmd_simulate(args, out):
    keys = ["model", "x0", "t_end", "rtol", "atol", "v_converge", "guard_tol", "stop_norm", "repelling_choice", "seed",
            "output", "events"]
    m = _merged(args, keys, SIM_DEFAULTS)
    sys_ = _system(m)
    try:
        cfg = RunConfig(model=m["model"], params=m["params"], x0=_vector_for(sys_, m["x0"], "x0"),
                        rtol=float(m["rtol"]), atol=float(m["atol"]), v_converge=float(m["v_converge"]),
                        guard_tol=float(m["guard_tol"]),
                        stop_norm=None if m["stop_norm"] is None else float(m["stop_norm"]),
                        repelling_choice=str(m["repelling_choice"]),
                        t_end=float(m["t_end"]), seed=int(m["seed"]), output=m["output"], events=m["events"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    traj = integrate(sys_, cfg.x0, cfg.t_end, cfg.options())
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            write_csv(traj, sys_.dim, fh)
    else:
        write_csv(traj, sys_.dim, out)
    if cfg.events:
        with open(cfg.events, "w", encoding="utf-8") as fh:
            write_events(traj, fh)
    return EXIT_OK


def cmd_classify(args, out):
    m = _merged(args, ["model", "x", "tol"], {})
    sys_ = _system(m)
    x = _vector_for(sys_, m["x"], "x")
    tol = None if m["tol"] is None else float(m["tol"])
    _write_json(classify_point(sys_, x, tol).to_dict(), out)
    return EXIT_OK


def cmd_return_map(args, out):
    m = _merged(args, ["model", "base", "nus"], {})
    sys_ = _system(m)
    base = _vector_for(sys_, m["base"], "base")
    nus = default_grid() if m["nus"] is None else parse_vector(m["nus"])
    fit = fit_asymptotics(sys_, base, nus)
    d = fit.to_dict()
    if not args.samples:
        d.pop("samples")
    _write_json(d, out)
    return EXIT_OK


def cmd_pseudo_eq(args, out):
    m = _merged(args, ["model", "order"], {"order": "first"})
    sys_ = _system(m)
    seeds = [_vector_for(sys_, s, "seed-point") for s in (args.seed_point or [])]
    if not seeds:
        raise UsageError("at least one --seed-point is required")
    order = Order.FIRST if str(m["order"]).lower() == "first" else Order.SECOND
    found = find_pseudo_equilibria(sys_, seeds, order)
    _write_json([q.to_dict() for q in found], out)
    return EXIT_OK


def cmd_verify(args, out):
    from .verify import verify

    only = [s.strip() for s in args.only.split(",")] if args.only else None
    rep = verify(seed=args.seed, only=only)
    for c in rep["checks"]:
        out.write(f"{c['id']:<4} {'PASS' if c['passed'] else 'FAIL'}  {c['name']}\n")
    out.write(f"overall: {'PASS' if rep['passed'] else 'FAIL'}\n")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            _write_json(rep, fh)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


COMMANDS = {
    "models": cmd_models,
    "simulate": cmd_simulate,
    "classify-surface": cmd_classify,
    "return-map": cmd_return_map,
    "pseudo-eq": cmd_pseudo_eq,
    "verify": cmd_verify,
}


def main(argv=None, out=None):
    """Run the command line; returns the process exit code."""
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, UnknownModelError, UnknownParameterError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"filippov: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except FilippovError as exc:
        print(f"filippov: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
