"""Model files: read a structured document, validate it, build library objects.

Reading is format-agnostic (a suffix-keyed table of readers producing plain
dicts); validation only sees the dict. Every problem found becomes one
:class:`Diagnostic` with a ``file:key.path`` location, and loading raises a
single :class:`ModelError` carrying all of them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from ..deriv import AtlasEntry, GlobalDerivation
from ..errors import AtlasAgreementError, SubflowError
from ..expr import ScalarExpr, parse
from ..flow import FlowSettings
from ..space import ConstraintPiece, EmbeddedSpace, SmoothFunction, SmoothMap

CATEGORIES = ("spaces", "derivations", "maps", "functions")
SETTINGS_KEYS = ("rtol", "atol", "band_tol", "exit_bisect_tol", "t_budget", "max_restarts",
                 "probe_h", "max_step", "reproject")


@dataclass(frozen=True)
class Diagnostic:
    location: str
    message: str

    def as_dict(self) -> dict:
        return {"location": self.location, "message": self.message}


class ModelError(SubflowError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(f"{d.location}: {d.message}" for d in diagnostics))


@dataclass
class Model:
    source: str
    spaces: dict[str, EmbeddedSpace] = field(default_factory=dict)
    derivations: dict[str, GlobalDerivation] = field(default_factory=dict)
    derivation_space: dict[str, str] = field(default_factory=dict)
    maps: dict[str, SmoothMap] = field(default_factory=dict)
    map_spaces: dict[str, tuple[str, str]] = field(default_factory=dict)
    functions: dict[str, SmoothFunction] = field(default_factory=dict)
    function_space: dict[str, str] = field(default_factory=dict)
    settings: FlowSettings = field(default_factory=FlowSettings)

    def functions_on(self, space: str) -> dict[str, SmoothFunction]:
        return {k: f for k, f in self.functions.items() if self.function_space[k] == space}

    def derivations_on(self, space: str) -> dict[str, GlobalDerivation]:
        return {k: X for k, X in self.derivations.items() if self.derivation_space[k] == space}


# --- reading -----------------------------------------------------------------

def _unique_pairs(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ValueError(f"duplicate key {k!r}")
        out[k] = v
    return out


def read_json(text: str) -> dict:
    return json.loads(text, object_pairs_hook=_unique_pairs)


READERS: dict[str, Callable[[str], dict]] = {".json": read_json}


def bundled_models() -> list[str]:
    root = resources.files(__package__) / "models"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve(ref: str) -> tuple[str, str]:
    """Return ``(label, text)`` for a model path or a bundled model name."""
    path = Path(ref)
    if path.is_file():
        return path.name, path.read_text(encoding="utf-8")
    if ref in bundled_models():
        res = resources.files(__package__) / "models" / f"{ref}.json"
        return f"{ref}.json", res.read_text(encoding="utf-8")
    raise ModelError([Diagnostic(ref, "no such model file or bundled model "
                                      f"(bundled: {', '.join(bundled_models())})")])


# --- validation ----------------------------------------------------------------

class _Builder:
    def __init__(self, label: str):
        self.label = label
        self.diagnostics: list[Diagnostic] = []

    def fail(self, key: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(f"{self.label}:{key}", message))

    def expr(self, key: str, text: Any, arity: int) -> ScalarExpr | None:
        if not isinstance(text, str):
            self.fail(key, "expected an expression string")
            return None
        try:
            return parse(text, arity)
        except SubflowError as exc:
            self.fail(key, str(exc))
            return None

    def exprs(self, key: str, items: Any, arity: int) -> list[ScalarExpr] | None:
        if not isinstance(items, list):
            self.fail(key, "expected a list of expression strings")
            return None
        out = [self.expr(f"{key}[{i}]", t, arity) for i, t in enumerate(items)]
        return None if any(e is None for e in out) else out

    def piece(self, key: str, raw: Any, n: int) -> ConstraintPiece | None:
        if not isinstance(raw, dict):
            self.fail(key, "expected an object with 'eq' and 'ineq' lists")
            return None
        extra = set(raw) - {"eq", "ineq"}
        if extra:
            self.fail(key, f"unknown keys {sorted(extra)}")
        eq = self.exprs(f"{key}.eq", raw.get("eq", []), n)
        ineq = self.exprs(f"{key}.ineq", raw.get("ineq", []), n)
        if eq is None or ineq is None:
            return None
        return ConstraintPiece(tuple(eq), tuple(ineq))


def _section(b: _Builder, doc: dict, name: str) -> dict:
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        b.fail(name, "expected an object keyed by name")
        return {}
    return raw


def _space(b: _Builder, key: str, name: str, raw: Any) -> EmbeddedSpace | None:
    if not isinstance(raw, dict):
        b.fail(key, "expected an object")
        return None
    n = raw.get("dim")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        b.fail(f"{key}.dim", "dim must be a positive integer")
        return None
    raw_pieces = raw.get("pieces", [])
    if not isinstance(raw_pieces, list):
        b.fail(f"{key}.pieces", "expected a list")
        return None
    pieces = [b.piece(f"{key}.pieces[{i}]", p, n) for i, p in enumerate(raw_pieces)]
    points = raw.get("points", [])
    if not (isinstance(points, list) and all(_is_point(p, n) for p in points)):
        b.fail(f"{key}.points", f"expected a list of {n}-element numeric lists")
        return None
    box = raw.get("box")
    if box is not None and not (isinstance(box, list) and len(box) == n
                                and all(_is_point(iv, 2) and iv[0] < iv[1] for iv in box)):
        b.fail(f"{key}.box", f"expected {n} [low, high] intervals")
        return None
    tol = raw.get("tol", 1e-9)
    if not _is_number(tol) or tol < 0:
        b.fail(f"{key}.tol", "tol must be a non-negative number")
        return None
    if any(p is None for p in pieces):
        return None
    if not pieces and not points:
        b.fail(key, "a space needs at least one piece or one explicit point")
        return None
    return EmbeddedSpace(n, tuple(pieces), tuple(tuple(p) for p in points), float(tol),
                         None if box is None else tuple(tuple(float(c) for c in iv) for iv in box),
                         name)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_point(p, n) -> bool:
    return isinstance(p, list) and len(p) == n and all(_is_number(c) for c in p)


def _ref(b: _Builder, key: str, raw: dict, field_name: str, table: dict, kind: str):
    name = raw.get(field_name)
    if not isinstance(name, str) or name not in table:
        b.fail(f"{key}.{field_name}", f"unknown {kind} {name!r}")
        return None
    return name


def _derivation(b: _Builder, key: str, raw: Any, spaces: dict) -> tuple[str, GlobalDerivation] | None:
    if not isinstance(raw, dict):
        b.fail(key, "expected an object")
        return None
    sname = _ref(b, key, raw, "space", spaces, "space")
    if sname is None:
        return None
    S = spaces[sname]
    n = S.ambient_dim
    coeffs = b.exprs(f"{key}.coefficients", raw.get("coefficients"), n)
    if coeffs is not None and len(coeffs) != n:
        b.fail(f"{key}.coefficients", f"expected {n} coefficients, got {len(coeffs)}")
        coeffs = None
    atlas = []
    raw_atlas = raw.get("atlas", [])
    if not isinstance(raw_atlas, list):
        b.fail(f"{key}.atlas", "expected a list")
        return None
    for i, entry in enumerate(raw_atlas):
        ekey = f"{key}.atlas[{i}]"
        if not isinstance(entry, dict):
            b.fail(ekey, "expected an object with 'region' and 'coefficients'")
            atlas.append(None)
            continue
        region = b.piece(f"{ekey}.region", entry.get("region"), n)
        ec = b.exprs(f"{ekey}.coefficients", entry.get("coefficients"), n)
        if ec is not None and len(ec) != n:
            b.fail(f"{ekey}.coefficients", f"expected {n} coefficients, got {len(ec)}")
            ec = None
        atlas.append(None if region is None or ec is None else AtlasEntry(region, tuple(ec)))
    if coeffs is None or any(a is None for a in atlas):
        return None
    X = GlobalDerivation(S, tuple(coeffs), tuple(atlas))
    try:
        X.validate_atlas()
    except AtlasAgreementError as exc:
        b.fail(f"{key}.atlas", str(exc))
        return None
    except SubflowError as exc:
        b.fail(f"{key}.atlas", f"agreement check failed: {exc}")
        return None
    return sname, X


def _map(b: _Builder, key: str, raw: Any, spaces: dict):
    if not isinstance(raw, dict):
        b.fail(key, "expected an object")
        return None
    src = _ref(b, key, raw, "source", spaces, "space")
    tgt = _ref(b, key, raw, "target", spaces, "space")
    if src is None or tgt is None:
        return None
    comps = b.exprs(f"{key}.components", raw.get("components"), spaces[src].ambient_dim)
    if comps is None:
        return None
    if len(comps) != spaces[tgt].ambient_dim:
        b.fail(f"{key}.components",
               f"expected {spaces[tgt].ambient_dim} components, got {len(comps)}")
        return None
    phi = SmoothMap(spaces[src], spaces[tgt], tuple(comps))
    try:
        phi.validate()
    except SubflowError as exc:
        b.fail(key, f"image validation failed: {exc}")
        return None
    return (src, tgt), phi


def _settings(b: _Builder, raw: Any) -> FlowSettings:
    if raw is None:
        return FlowSettings()
    if not isinstance(raw, dict):
        b.fail("settings", "expected an object")
        return FlowSettings()
    unknown = set(raw) - set(SETTINGS_KEYS)
    for k in sorted(unknown):
        b.fail(f"settings.{k}", f"unknown setting (known: {', '.join(SETTINGS_KEYS)})")
    try:
        return FlowSettings(**{k: v for k, v in raw.items() if k in SETTINGS_KEYS})
    except (TypeError, ValueError) as exc:
        b.fail("settings", str(exc))
        return FlowSettings()


def build(doc: Any, label: str = "<model>") -> Model:
    b = _Builder(label)
    if not isinstance(doc, dict):
        raise ModelError([Diagnostic(label, "top level must be an object")])
    for k in sorted(set(doc) - set(CATEGORIES) - {"settings", "description"}):
        b.fail(k, "unknown top-level key")
    model = Model(label)
    for name, raw in _section(b, doc, "spaces").items():
        S = _space(b, f"spaces.{name}", name, raw)
        if S is not None:
            model.spaces[name] = S
    for name, raw in _section(b, doc, "derivations").items():
        built = _derivation(b, f"derivations.{name}", raw, model.spaces)
        if built is not None:
            model.derivation_space[name], model.derivations[name] = built
    for name, raw in _section(b, doc, "maps").items():
        built = _map(b, f"maps.{name}", raw, model.spaces)
        if built is not None:
            model.map_spaces[name], model.maps[name] = built
    for name, raw in _section(b, doc, "functions").items():
        key = f"functions.{name}"
        if not isinstance(raw, dict):
            b.fail(key, "expected an object with 'space' and 'expr'")
            continue
        sname = _ref(b, key, raw, "space", model.spaces, "space")
        if sname is None:
            continue
        e = b.expr(f"{key}.expr", raw.get("expr"), model.spaces[sname].ambient_dim)
        if e is not None:
            model.functions[name] = SmoothFunction(e, model.spaces[sname])
            model.function_space[name] = sname
    model.settings = _settings(b, doc.get("settings"))
    if b.diagnostics:
        raise ModelError(b.diagnostics)
    return model


def load(ref: str) -> Model:
    """Load and fully validate a model from a path or bundled name."""
    label, text = resolve(ref)
    reader = READERS.get(Path(label).suffix, read_json)
    try:
        doc = reader(text)
    except ValueError as exc:
        raise ModelError([Diagnostic(label, f"malformed document: {exc}")]) from None
    return build(doc, label)
