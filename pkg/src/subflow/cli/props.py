"""Seeded residual sweeps over every object named in a model."""

from __future__ import annotations

import numpy as np

from .. import deriv
from ..corpus import OUTER
from ..errors import DomainError
from ..expr import evaluate, parse
from ..space import sample
from .model import Model

TOLERANCES = {
    "leibniz": 1e-10,
    "chain_rule": 1e-10,
    "value_at": 1e-12,
    "pushforward": 1e-10,
    "base_commutation": 0.0,
    "bracket_definition": 1e-10,
    "antisymmetry": 1e-9,
    "jacobi": 1e-9,
    "module_identity": 1e-9,
    "section_tau": 1e-12,
    "section_d": 1e-12,
    "section_round_trip": 0.0,
}


class _Law:
    def __init__(self, name: str):
        self.name = name
        self.tol = TOLERANCES[name]
        self.cases = 0
        self.skipped = 0
        self.worst = 0.0
        self.worst_abs = 0.0

    def record(self, res) -> None:
        self.cases += 1
        rel = res.relative if isinstance(res, deriv.Residual) else float(res)
        self.worst = max(self.worst, rel)
        self.worst_abs = max(self.worst_abs, float(res))

    @property
    def passed(self) -> bool:
        return self.worst <= self.tol

    def as_dict(self) -> dict:
        return {"cases": self.cases, "skipped": self.skipped, "max_residual": self.worst_abs,
                "max_relative": self.worst, "tolerance": self.tol, "pass": self.passed}


def _outer():
    return {k: [parse(e, k) for e in exprs] for k, exprs in OUTER.items()}


def run_suite(model: Model, seed: int = 0, samples: int = 16) -> dict:
    rng = np.random.default_rng(seed)
    laws = {name: _Law(name) for name in TOLERANCES}
    warnings: list[str] = []
    outer = _outer()
    if not model.functions:
        warnings.append("no test functions")

    def attempt(law: str, thunk):
        try:
            laws[law].record(thunk())
        except DomainError:
            laws[law].skipped += 1

    for sname, S in model.spaces.items():
        fns = list(model.functions_on(sname).values())
        fields = list(model.derivations_on(sname).values())
        if not fields:
            continue
        if not fns:
            if model.functions:
                warnings.append(f"no test functions on space {sname!r}")
            for X in fields:
                xi = deriv.section_from_derivation(X)
                laws["section_round_trip"].record(
                    0.0 if deriv.derivation_from_section(xi).coefficients == X.coefficients else 1.0)
            continue
        points = sample(S, samples, seed)
        if not points:
            warnings.append(f"could not sample space {sname!r}")
        for X in fields:
            xi = deriv.section_from_derivation(X)
            laws["section_round_trip"].record(
                0.0 if deriv.derivation_from_section(xi).coefficients == X.coefficients else 1.0)
            for x in points:
                v = deriv.value_at(X, x)
                f1, f2, g = (fns[i] for i in rng.integers(len(fns), size=3))
                attempt("leibniz", lambda: deriv.leibniz_residual(v, f1, f2))
                k = int(rng.integers(1, 4))
                F = outer[k][int(rng.integers(len(outer[k])))]
                fs = [fns[i] for i in rng.integers(len(fns), size=k)]
                attempt("chain_rule", lambda: deriv.chain_rule_residual(v, F, fs))
                attempt("value_at", lambda: deriv.Residual.between(
                    v(g), evaluate(deriv.apply(X, g).ambient, x)))
                tau, d = deriv.section_residuals(X, g, x)
                laws["section_tau"].record(tau)
                laws["section_d"].record(d)
                Y, Z = (fields[i] for i in rng.integers(len(fields), size=2))
                attempt("bracket_definition", lambda: deriv.bracket_residual(X, Y, g, x))
                attempt("antisymmetry", lambda: deriv.antisymmetry_residual(X, Y, g, x))
                attempt("jacobi", lambda: deriv.jacobi_residual(X, Y, Z, g, x))
                attempt("module_identity",
                        lambda: deriv.module_identity_residual(f1, f2, X, Y, g, x))

    for mname, phi in model.maps.items():
        _, tgt = model.map_spaces[mname]
        targets = list(model.functions_on(tgt).values())
        if not targets:
            continue
        for x in sample(phi.source, samples, seed):
            v = deriv.PointDerivation(x, rng.standard_normal(phi.source.ambient_dim), phi.source)
            pushed = deriv.pushforward(phi, v)
            same = np.array_equal(pushed.base, phi(x))
            laws["base_commutation"].record(0.0 if same else 1.0)
            f = targets[int(rng.integers(len(targets)))]
            attempt("pushforward", lambda: deriv.pushforward_residual(phi, v, f))

    failing = [name for name, law in laws.items() if not law.passed]
    return {
        "seed": seed,
        "samples": samples,
        "laws": {name: law.as_dict() for name, law in laws.items()},
        "warnings": warnings,
        "failing": failing,
        "status": "pass" if not failing else "fail",
    }
