import math

import numpy as np
import pytest

from subflow import deriv
from subflow.corpus import (
    CIRCLE, CROSS, FIELDS, HALF_LINE, L_CORNER, MAPS, OUTER, PLANE, ROTATION, ROTATION_ATLAS, SPACES,
    TARGET_FUNCTIONS, derivation, functions,
)
from subflow.deriv import (
    OBSTRUCTED, TANGENT, AtlasEntry, GlobalDerivation, PointDerivation, Residual, Section, TangentPair,
    antisymmetry_residual, apply, bracket_residual, chain_rule_residual,
    derivation_from_section, jacobi_residual, leibniz_residual, lie_bracket, locality_check,
    locality_witness, module_identity_residual, pushforward, pushforward_residual,
    section_from_derivation, section_residuals, tangency_probe, tangent_pair_eval, tangent_vector,
    value_at,
)
from subflow.errors import (
    AtlasAgreementError, LocalityPreconditionError, OffSpaceError, SpaceMismatchError,
)
from subflow.expr import evaluate, parse
from subflow.space import ConstraintPiece, SmoothFunction, restrict, sample


def _cases(seed, per_space=25):
    """Seeded (space, X, x, fns) tuples across every corpus space."""
    rng = np.random.default_rng(seed)
    for name, S in SPACES.items():
        fns = functions(name)
        pts = sample(S, per_space, seed)
        for x in pts:
            X = derivation(name, int(rng.integers(len(FIELDS[name]))))
            yield rng, S, X, x, fns


# apply / value_at

def test_rotation_kills_the_radius():
    f = restrict(CIRCLE, "x1*x1 + x2*x2")
    Xf = apply(ROTATION, f)
    assert all(abs(evaluate(Xf.ambient, x)) <= 1e-15 for x in sample(CIRCLE, 64, 0))


def test_derivations_kill_constants():
    for name in SPACES:
        X = derivation(name)
        c = restrict(SPACES[name], "7.25")
        assert all(evaluate(apply(X, c).ambient, x) == 0.0 for x in sample(SPACES[name], 10, 1))


def test_coordinate_derivative_on_half_line():
    X = GlobalDerivation(HALF_LINE, ("1",))
    Xf = apply(X, restrict(HALF_LINE, "x1"))
    assert all(evaluate(Xf.ambient, x) == 1.0 for x in sample(HALF_LINE, 10, 2))


def test_value_at_examples():
    v = value_at(ROTATION, (1, 0))
    assert v.base == (1.0, 0.0) and v.vector == (0.0, 1.0)
    Z = GlobalDerivation(CIRCLE, ("0", "0"))
    assert all(value_at(Z, x).vector == (0.0, 0.0) for x in sample(CIRCLE, 10, 0))
    with pytest.raises(OffSpaceError):
        value_at(ROTATION, (2, 0))


def test_value_at_matches_apply():
    count = 0
    for rng, S, X, x, fns in _cases(7, per_space=25):
        f = fns[int(rng.integers(len(fns)))]
        a = value_at(X, x)(f)
        b = evaluate(apply(X, f).ambient, x)
        assert abs(a - b) <= 1e-12 * (1 + abs(b))
        count += 1
    assert count >= 100


def test_apply_rejects_foreign_functions():
    with pytest.raises(SpaceMismatchError):
        apply(ROTATION, restrict(CROSS, "x1"))


# Leibniz and chain rule

def test_leibniz_hand_case():
    v = tangent_vector(HALF_LINE, (2.0,), (0.75,))
    x1 = restrict(HALF_LINE, "x1")
    assert leibniz_residual(v, x1, x1) <= 1e-12
    assert v(restrict(HALF_LINE, "x1*x1")) == 2 * 2.0 * v(x1)


def test_leibniz_with_unit_is_exact():
    one = restrict(CIRCLE, "1")
    g = restrict(CIRCLE, "sin(x1)*x2")
    for x in sample(CIRCLE, 20, 3):
        v = value_at(ROTATION, x)
        assert float(leibniz_residual(v, one, g)) == 0.0


def test_leibniz_sweep():
    worst = 0.0
    for rng, S, X, x, fns in _cases(1):
        f1, f2 = (fns[i] for i in rng.integers(len(fns), size=2))
        r = leibniz_residual(value_at(X, x), f1, f2)
        assert r.within(1e-10), (S.name, x)
        worst = max(worst, r.relative)
    assert worst < 1e-12


def test_chain_rule_reduces_to_leibniz_bit_for_bit():
    F = parse("x1*x2", 2)
    for name in SPACES:
        fns = functions(name)
        for x in sample(SPACES[name], 10, 4):
            v = value_at(derivation(name), x)
            f1, f2 = fns[1], fns[2]
            assert float(chain_rule_residual(v, F, [f1, f2])) == float(leibniz_residual(v, f1, f2))


def test_chain_rule_identity_outer_function():
    F = parse("x1", 1)
    for x in sample(CIRCLE, 10, 5):
        v = value_at(ROTATION, x)
        assert float(chain_rule_residual(v, F, [functions("circle")[4]])) == 0.0


def test_chain_rule_circle_example():
    F = parse("sin(x1) + x2^2", 2)
    fs = [restrict(CIRCLE, "x1^2"), restrict(CIRCLE, "x1 + x2")]
    for x in sample(CIRCLE, 100, 6):
        assert chain_rule_residual(value_at(ROTATION, x), F, fs).within(1e-10)


def test_chain_rule_sweep():
    outer = {k: [parse(e, k) for e in v] for k, v in OUTER.items()}
    n = 0
    for rng, S, X, x, fns in _cases(2):
        k = int(rng.integers(1, 4))
        F = outer[k][int(rng.integers(len(outer[k])))]
        fs = [fns[i] for i in rng.integers(len(fns), size=k)]
        assert chain_rule_residual(value_at(X, x), F, fs).within(1e-10)
        n += 1
    assert n >= 100


def test_chain_rule_paths_are_independent(monkeypatch):
    # corrupting only the weighted-action path must be visible
    original = deriv._weighted_actions

    def flipped(v, F, fs):
        s, terms = original(v, F, fs)
        return -s, terms

    monkeypatch.setattr(deriv, "_weighted_actions", flipped)
    v = value_at(ROTATION, (0.6, 0.8))
    r = chain_rule_residual(v, parse("x1*x2", 2), [restrict(CIRCLE, "x1"), restrict(CIRCLE, "x2")])
    assert not r.within(1e-10)


# pushforward

def test_pushforward_through_inclusion_is_identity():
    v = tangent_vector(CIRCLE, (1, 0), (0, 1))
    w = pushforward(MAPS["inclusion"], v)
    assert w.base == (1.0, 0.0) and w.vector == (0.0, 1.0)


def test_pushforward_through_parametrization():
    phi = MAPS["parametrization"]
    w = pushforward(phi, PointDerivation((math.pi / 2,), (1.0,)))
    assert np.allclose(w.base, (0, 1), atol=1e-15)
    assert np.allclose(w.vector, (-1, 0), atol=1e-15)


def test_pushforward_defining_property_and_base_law():
    rng = np.random.default_rng(8)
    for phi in MAPS.values():
        targets = [restrict(phi.target, e) for e in TARGET_FUNCTIONS[phi.target.name]]
        for x in sample(phi.source, 30, 8):
            v = PointDerivation(x, rng.standard_normal(phi.source.ambient_dim), phi.source)
            w = pushforward(phi, v)
            assert w.base == tuple(phi(x))
            for f in targets:
                assert pushforward_residual(phi, v, f).within(1e-10)


def test_pushforward_is_linear():
    rng = np.random.default_rng(9)
    phi = MAPS["parametrization"]
    for x in sample(phi.source, 20, 9):
        v, w = rng.standard_normal(1), rng.standard_normal(1)
        a, b = rng.standard_normal(2)
        lhs = np.array(pushforward(phi, PointDerivation(x, a * v + b * w)).vector)
        rhs = (a * np.array(pushforward(phi, PointDerivation(x, v)).vector)
               + b * np.array(pushforward(phi, PointDerivation(x, w)).vector))
        assert np.all(np.abs(lhs - rhs) <= 1e-12 * (1 + np.abs(lhs)))


def test_pushforward_rejects_off_source_base():
    with pytest.raises(OffSpaceError):
        pushforward(MAPS["inclusion"], PointDerivation((1.5, 0), (0, 1)))


# brackets

X1D2 = GlobalDerivation(PLANE, ("0", "x1"))
X2D1 = GlobalDerivation(PLANE, ("x2", "0"))


def test_bracket_hand_example():
    B = lie_bracket(X1D2, X2D1)
    expected = (parse("x1", 2), parse("-x2", 2))
    rng = np.random.default_rng(10)
    for x in rng.uniform(-3, 3, size=(100, 2)):
        got = B.field(x)
        want = [evaluate(e, x) for e in expected]
        assert np.all(np.abs(got - want) <= 1e-12)
    for f in (restrict(PLANE, "x1*x2"), restrict(PLANE, "sin(x1) + x2^3")):
        for x in sample(PLANE, 20, 1):
            assert bracket_residual(X1D2, X2D1, f, x).within(1e-10)


def test_bracket_with_itself_vanishes():
    for name in SPACES:
        X = derivation(name, 1)
        B = lie_bracket(X, X)
        for x in sample(SPACES[name], 20, 2):
            assert np.all(B.field(x) == 0.0)


def test_antisymmetry_and_jacobi_sweep():
    for rng, S, X, x, fns in _cases(3, per_space=15):
        name = S.name
        Y, Z = (derivation(name, int(i)) for i in rng.integers(len(FIELDS[name]), size=2))
        g = fns[int(rng.integers(len(fns)))]
        assert antisymmetry_residual(X, Y, g, x).within(1e-9)
        assert jacobi_residual(X, Y, Z, g, x).within(1e-9)
        assert bracket_residual(X, Y, g, x).within(1e-10)
        B1, B2 = lie_bracket(X, Y), lie_bracket(Y, X)
        assert np.all(np.abs(B1.field(x) + B2.field(x)) <= 1e-12 * (1 + np.abs(B1.field(x))))


def test_bracket_requires_a_common_space():
    with pytest.raises(SpaceMismatchError):
        lie_bracket(ROTATION, derivation("cross"))


# module identity

def test_module_identity_unit_and_zero_scalars():
    one, zero = restrict(CIRCLE, "1"), restrict(CIRCLE, "0")
    Y = derivation("circle", 2)
    g = restrict(CIRCLE, "exp(x1)*x2")
    for x in sample(CIRCLE, 20, 4):
        assert module_identity_residual(one, one, ROTATION, Y, g, x).within(1e-10)
        assert module_identity_residual(functions("circle")[3], zero, ROTATION, Y, g, x) <= 1e-15


def test_module_identity_sweep():
    n = 0
    for rng, S, X, x, fns in _cases(5):
        Y = derivation(S.name, int(rng.integers(len(FIELDS[S.name]))))
        f1, f2, g = (fns[i] for i in rng.integers(len(fns), size=3))
        assert module_identity_residual(f1, f2, X, Y, g, x).within(1e-9)
        n += 1
    assert n >= 100


# locality

def test_locality_with_witness_modification():
    f = restrict(CIRCLE, "sin(x1) + x2")
    bump = locality_witness(CIRCLE, (0.6, 0.8), "exp(x1 - x2)")
    g = SmoothFunction(f.ambient + bump, CIRCLE)
    assert locality_check(ROTATION, f, g, (0.6, 0.8), radius=0.3)


def test_locality_on_the_corner():
    X = derivation("lcorner", 0)
    f = restrict(L_CORNER, "x1 + x2*x2")
    g = SmoothFunction(f.ambient + locality_witness(L_CORNER, (-1.0, 0.0), "3*x1"), L_CORNER)
    assert locality_check(X, f, g, (-1.0, 0.0), radius=0.5)


def test_locality_same_function():
    f = restrict(CROSS, "x1*x1 - x2")
    assert locality_check(derivation("cross"), f, f, (0.0, 0.7), radius=0.2)


def test_locality_precondition_violation_is_distinct():
    f = restrict(CIRCLE, "x2")
    g = SmoothFunction(f.ambient + parse("x1", 2), CIRCLE)
    with pytest.raises(LocalityPreconditionError):
        locality_check(ROTATION, f, g, (0.6, 0.8), radius=0.1)


def test_locality_witness_needs_an_equality():
    with pytest.raises(ValueError):
        locality_witness(HALF_LINE, (1.0,), "x1")


# tangent pairs and sections

def test_tangent_pair_examples():
    p = TangentPair((1, 0), (0, 1), CIRCLE)
    assert tangent_pair_eval(p, restrict(CIRCLE, "x2")) == (0.0, 1.0)
    assert tangent_pair_eval(p, restrict(CIRCLE, "2.5")) == (2.5, 0.0)


def test_df_is_linear_in_the_vector():
    rng = np.random.default_rng(12)
    f = restrict(CIRCLE, "exp(x1)*sin(x2)")
    for x in sample(CIRCLE, 20, 12):
        v, w = rng.standard_normal(2), rng.standard_normal(2)
        a, b = rng.standard_normal(2)
        lhs = tangent_pair_eval(TangentPair(x, a * v + b * w), f)[1]
        rhs = a * tangent_pair_eval(TangentPair(x, v), f)[1] + b * tangent_pair_eval(TangentPair(x, w), f)[1]
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


def test_tangent_pair_requires_a_base_on_the_space():
    with pytest.raises(OffSpaceError):
        tangent_pair_eval(TangentPair((3, 0), (0, 1)), restrict(CIRCLE, "x1"))


def test_section_from_rotation():
    xi = section_from_derivation(ROTATION)
    p = xi((0.6, 0.8))
    assert isinstance(p, TangentPair)
    assert p.base == (0.6, 0.8) and p.vector == (-0.8, 0.6)


def test_section_round_trip_is_structural():
    for name in SPACES:
        X = derivation(name, 1)
        assert derivation_from_section(section_from_derivation(X)) == X
        xi = Section(SPACES[name], X.coefficients)
        assert section_from_derivation(derivation_from_section(xi)) == xi


def test_section_laws():
    for rng, S, X, x, fns in _cases(13, per_space=10):
        for f in fns:
            tau, d = section_residuals(X, f, x)
            assert tau <= 1e-12 * tau.scale and d <= 1e-12 * d.scale
    xi = section_from_derivation(ROTATION)
    x1 = restrict(CIRCLE, "x1")
    for x in sample(CIRCLE, 10, 0):
        assert xi.pullback_d(x1, x) == evaluate(ROTATION.coefficients[0], x)


# tangency screen

def test_tangency_probe_examples():
    assert tangency_probe(CIRCLE, (1, 0), (0, 1)).classification == TANGENT
    assert tangency_probe(CIRCLE, (1, 0), (1, 0)).classification == OBSTRUCTED
    assert tangency_probe(CROSS, (0, 0), (1, 1)).classification == TANGENT
    assert tangency_probe(L_CORNER, (0, 0), (1, 1)).classification == OBSTRUCTED
    assert tangency_probe(L_CORNER, (-1, 0), (1, 0)).classification == TANGENT


def test_tangency_ratios_follow_hand_values():
    rep = tangency_probe(CIRCLE, (1, 0), (1, 0), steps=4)
    for t, ratio in zip(rep.steps, rep.ratios):
        assert ratio == pytest.approx(2 + t, rel=1e-9)


# agreement

def test_atlas_agreement_is_validated():
    good = ROTATION_ATLAS
    good.validate_atlas()
    bad = GlobalDerivation(CIRCLE, ("-x2", "x1"),
                           (AtlasEntry(ConstraintPiece.from_strings(2, (), ["x1"]), ("-x2", "x1 + 1")),))
    with pytest.raises(AtlasAgreementError) as info:
        bad.validate_atlas()
    assert info.value.point is not None and info.value.disagreement > 0.1


def test_residual_scale():
    r = Residual.between(3.0, 3.5, -10.0)
    assert float(r) == 0.5 and r.scale == 11.0
    assert r.within(0.05) and not r.within(0.04)
