"""Argument parsing, command dispatch and the exit-code contract.

Exit codes: 0 success, 2 model or usage error, 3 runtime precondition error
(off-space point, parameter outside a domain), 4 property-suite failure.
Every command prints one JSON document on stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .. import deriv
from ..errors import DomainError, InvalidMapError, OffSpaceError, OutOfDomainError, SubflowError
from ..expr import emit
from ..flow import FlowSettings, curve_summary, maximal_curve
from ..flow.io import trajectory_csv
from ..space import contains, residual, restrict, sample
from .model import Model, ModelError, load
from .props import run_suite

EXIT_OK, EXIT_MODEL, EXIT_RUNTIME, EXIT_PROPS = 0, 2, 3, 4


class UsageError(SubflowError):
    """Malformed command-line value."""


class UnknownNameError(SubflowError):
    """A name on the command line that the model does not define."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _emit({"status": "usage_error", "message": message})
        raise SystemExit(EXIT_MODEL)


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_point(text: str, n: int | None = None) -> np.ndarray:
    try:
        values = [float(c) for c in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse point {text!r}; expected comma-separated numbers") from None
    if not all(math.isfinite(v) for v in values):
        raise UsageError(f"point {text!r} has non-finite coordinates")
    if n is not None and len(values) != n:
        raise UsageError(f"point {text!r} has {len(values)} coordinates, expected {n}")
    return np.array(values)


def _lookup(table: dict, name: str, kind: str):
    if name not in table:
        known = ", ".join(sorted(table)) or "none"
        raise UnknownNameError(f"unknown {kind} {name!r} (known: {known})")
    return table[name]


def _vec(x) -> list[float]:
    return [float(c) for c in np.ravel(x)]


def _settings(args, base: FlowSettings) -> FlowSettings:
    overrides = {k: getattr(args, k) for k in
                 ("rtol", "atol", "band_tol", "exit_bisect_tol", "t_budget", "max_restarts",
                  "max_step") if getattr(args, k) is not None}
    if args.reproject:
        overrides["reproject"] = True
    try:
        return dataclasses.replace(base, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _settings_dict(s: FlowSettings) -> dict:
    # JSON has no infinity; unbounded values are spelled out
    return {k: (repr(v) if isinstance(v, float) and not math.isfinite(v) else v)
            for k, v in dataclasses.asdict(s).items()}


# --- commands ----------------------------------------------------------------

def cmd_validate(model: Model, args) -> int:
    _emit({
        "command": "validate",
        "model": model.source,
        "status": "ok",
        "spaces": {k: {"dim": S.ambient_dim, "pieces": len(S.pieces), "points": len(S.points)}
                   for k, S in model.spaces.items()},
        "derivations": {k: {"space": model.derivation_space[k], "atlas": len(X.atlas)}
                        for k, X in model.derivations.items()},
        "maps": {k: {"source": s, "target": t} for k, (s, t) in model.map_spaces.items()},
        "functions": {k: model.function_space[k] for k in model.functions},
    })
    return EXIT_OK


def cmd_flow(model: Model, args) -> int:
    X = _lookup(model.derivations, args.derivation, "derivation")
    settings = _settings(args, model.settings)
    x0 = parse_point(args.start, X.space.ambient_dim)
    t_max = settings.t_budget if args.t_max is None else args.t_max
    t_min = -t_max if args.t_min is None else args.t_min
    if not (t_min <= 0.0 <= t_max) or t_min == t_max:
        raise UsageError("need t_min <= 0 <= t_max with t_min < t_max")
    directions = tuple(d for d, lim in ((-1, t_min), (1, t_max)) if lim != 0.0)
    lifted = maximal_curve(X, x0, settings, directions=directions, t_limit=(-t_min, t_max))
    csv_text = trajectory_csv(lifted)
    summary = {
        "command": "flow",
        "model": model.source,
        "derivation": args.derivation,
        "t_min": t_min,
        "t_max": t_max,
        "settings": _settings_dict(settings),
        "curve": curve_summary(lifted),
        "rows": csv_text.count("\n") - 1,
        "csv": None,
        "summary": None,
    }
    if args.out == "-":
        sys.stdout.write(csv_text)
        if args.summary:
            summary["summary"] = str(args.summary)
            write_atomic(Path(args.summary), json.dumps(summary, indent=2) + "\n")
        return EXIT_OK
    out = Path(args.out)
    side = Path(args.summary) if args.summary else out.with_suffix(".json")
    summary["csv"], summary["summary"] = str(out), str(side)
    write_atomic(out, csv_text)
    write_atomic(side, json.dumps(summary, indent=2) + "\n")
    _emit(summary)
    return EXIT_OK


def cmd_props(model: Model, args) -> int:
    report = run_suite(model, seed=args.seed, samples=args.samples)
    report = {"command": "props", "model": model.source, **report}
    _emit(report)
    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    for name in report["failing"]:
        law = report["laws"][name]
        print(f"FAIL {name}: max relative residual {law['max_relative']!r} > {law['tolerance']!r}",
              file=sys.stderr)
    return EXIT_OK if report["status"] == "pass" else EXIT_PROPS


def _points(specs, S, seed: int, count: int = 5):
    if specs:
        pts = [parse_point(p, S.ambient_dim) for spec in specs for p in spec.split(";") if p]
    else:
        pts = sample(S, count, seed)
    for p in pts:
        if not contains(S, p):
            raise OffSpaceError(f"point {_vec(p)} is not on the space", point=p,
                                residual=residual(S, p))
    return pts


def _test_functions(model: Model, sname: str):
    fns = model.functions_on(sname)
    if fns:
        return fns
    S = model.spaces[sname]
    return {f"x{i}": restrict(S, f"x{i}") for i in range(1, S.ambient_dim + 1)}


def cmd_bracket(model: Model, args) -> int:
    X = _lookup(model.derivations, args.X, "derivation")
    Y = _lookup(model.derivations, args.Y, "derivation")
    if model.derivation_space[args.X] != model.derivation_space[args.Y]:
        raise UnknownNameError(f"{args.X!r} and {args.Y!r} live on different spaces")
    sname = model.derivation_space[args.X]
    B = deriv.lie_bracket(X, Y)
    pts = _points(args.at, X.space, args.seed)
    worst = 0.0
    for f in _test_functions(model, sname).values():
        for p in pts:
            worst = max(worst, deriv.bracket_residual(X, Y, f, p).relative)
    ok = worst <= 1e-10
    _emit({
        "command": "bracket",
        "model": model.source,
        "X": args.X,
        "Y": args.Y,
        "coefficients": [emit(c) for c in B.coefficients],
        "evaluations": [{"at": _vec(p), "value": _vec(B.field(p))} for p in pts],
        "nested_apply_max_relative": worst,
        "tolerance": 1e-10,
        "status": "pass" if ok else "fail",
    })
    return EXIT_OK if ok else EXIT_PROPS


def cmd_push(model: Model, args) -> int:
    phi = _lookup(model.maps, args.map, "map")
    _, tgt = model.map_spaces[args.map]
    x = parse_point(args.at, phi.source.ambient_dim)
    vec = parse_point(args.vector, phi.source.ambient_dim)
    if not contains(phi.source, x):
        raise OffSpaceError(f"point {_vec(x)} is not on the map's source", point=x,
                            residual=residual(phi.source, x))
    v = deriv.PointDerivation(x, vec, phi.source)
    w = deriv.pushforward(phi, v)
    checks = {}
    for name, f in _test_functions(model, tgt).items():
        r = deriv.pushforward_residual(phi, v, f)
        checks[name] = {"lhs": w.act(f), "rhs": v.act(phi.pullback(f)), "relative": r.relative}
    ok = all(c["relative"] <= 1e-10 for c in checks.values())
    _emit({
        "command": "push",
        "model": model.source,
        "map": args.map,
        "base": _vec(w.base),
        "vector": _vec(w.vector),
        "checks": checks,
        "tolerance": 1e-10,
        "status": "pass" if ok else "fail",
    })
    return EXIT_OK if ok else EXIT_PROPS


def cmd_tangent(model: Model, args) -> int:
    S = _lookup(model.spaces, args.space, "space")
    x = parse_point(args.at, S.ambient_dim)
    v = parse_point(args.vector, S.ambient_dim)
    rep = deriv.tangency_probe(S, x, v, steps=args.steps)
    _emit({
        "command": "tangent",
        "model": model.source,
        "space": args.space,
        "at": _vec(x),
        "vector": _vec(v),
        "classification": rep.classification,
        "steps": list(rep.steps),
        "ratios": list(rep.ratios),
    })
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "flow": cmd_flow, "props": cmd_props,
            "bracket": cmd_bracket, "push": cmd_push, "tangent": cmd_tangent}


def _default_seed() -> int:
    raw = os.environ.get("SUBFLOW_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"SUBFLOW_SEED must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="subflow", description="Derivations and maximal integral curves on "
                                            "embedded subsets of R^n.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_model(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("model", help="model JSON path or bundled model name")
        return sp

    with_model("validate", "load and validate a model")

    fl = with_model("flow", "construct the maximal integral curve through a point")
    fl.add_argument("derivation")
    fl.add_argument("--start", required=True, help="start point, e.g. 1,0")
    fl.add_argument("--t-max", type=float, dest="t_max")
    fl.add_argument("--t-min", type=float, dest="t_min")
    fl.add_argument("--out", default="-", help="trajectory CSV path ('-' for stdout)")
    fl.add_argument("--summary", help="summary JSON path (default: next to --out)")
    for flag in ("rtol", "atol", "band-tol", "exit-bisect-tol", "t-budget", "max-step"):
        fl.add_argument(f"--{flag}", type=float, dest=flag.replace("-", "_"))
    fl.add_argument("--max-restarts", type=int, dest="max_restarts")
    fl.add_argument("--reproject", action="store_true",
                    help="project accepted points back onto the space")

    pr = with_model("props", "run the residual sweeps")
    pr.add_argument("--seed", type=int, default=None)
    pr.add_argument("--samples", type=int, default=16, help="sample points per space")

    br = with_model("bracket", "Lie bracket of two derivations")
    br.add_argument("X")
    br.add_argument("Y")
    br.add_argument("--at", action="append", help="point(s), ';'-separated or repeated")
    br.add_argument("--seed", type=int, default=None)

    pu = with_model("push", "pushforward of a tangent vector through a map")
    pu.add_argument("map")
    pu.add_argument("--at", required=True)
    pu.add_argument("--vector", required=True)

    tg = with_model("tangent", "screen whether a direction is tangent to a space")
    tg.add_argument("space")
    tg.add_argument("--at", required=True)
    tg.add_argument("--vector", required=True)
    tg.add_argument("--steps", type=int, default=8)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "seed", "absent") is None:
        args.seed = _default_seed()
    try:
        model = load(args.model)
    except ModelError as exc:
        _emit({"status": "model_error", "diagnostics": [d.as_dict() for d in exc.diagnostics]})
        for d in exc.diagnostics:
            print(f"{d.location}: {d.message}", file=sys.stderr)
        return EXIT_MODEL
    try:
        return COMMANDS[args.command](model, args)
    except (UnknownNameError, UsageError) as exc:
        _emit({"status": "usage_error" if isinstance(exc, UsageError) else "model_error",
               "message": str(exc)})
        print(exc, file=sys.stderr)
        return EXIT_MODEL
    except (OffSpaceError, OutOfDomainError, DomainError, InvalidMapError) as exc:
        _emit({"status": "runtime_error", "error": type(exc).__name__, "message": str(exc)})
        print(exc, file=sys.stderr)
        return EXIT_RUNTIME
