import math

import numpy as np
import pytest

from conslaw import dcm
from conslaw.jetexpr.calculus import substitute
from conslaw.jetexpr.evaluate import JetPoint, eval_at
from conslaw.jetexpr.expr import Jet, Sym, add, mul
from conslaw.jetexpr.oracle import is_proportional, is_zero
from conslaw.jetexpr.system import SystemDef
from conslaw.laws import MultiplierSet
from conslaw.symaction import (
    PointTransformation,
    TransformError,
    TrivialMultiplierError,
    factor_over,
    infer_factor_matrix,
    jacobian,
    lie_expand,
    newness_test,
    transform_densities,
    transform_multipliers,
    verify_factor_matrix,
)


def _t(pf, name):
    spec = pf.get(name)
    return PointTransformation.parse(spec.system, spec.forward, spec.inverse, spec.eps), spec


def _reflect(sys, e):
    return substitute(e, {Sym("t"): mul(-1, Sym("t")), Jet("v"): mul(-1, Jet("v"))}, closure=False)


def test_identity_jacobian_is_one(pf):
    assert is_zero(add(jacobian(PointTransformation.identity(pf.get("nlt46"))), -1)).zero


def test_reflection_jacobian(pf):
    t, _ = _t(pf, "refl")
    assert is_zero(add(jacobian(t), 1)).zero


def test_swap_jacobian_matches_numeric_determinant(pf):
    sys = pf.get("wave")
    t = PointTransformation.parse(sys, {"t": "x + u", "x": "t + sin(v)", "u": "u", "v": "v"})
    J = jacobian(t)
    U = lambda a, b: 0.3 * math.sin(a - 2 * b) + 0.1 * a  # noqa: E731
    V = lambda a, b: 0.2 * math.cos(a * b) - 0.4 * b  # noqa: E731
    T = lambda a, b: b + U(a, b)  # noqa: E731
    X = lambda a, b: a + math.sin(V(a, b))  # noqa: E731
    h = 1e-6
    for a, b in [(0.3, -0.2), (1.1, 0.7), (-0.5, 0.4)]:
        d = lambda f, i: ((f(a + h, b) - f(a - h, b)) if i == 0 else (f(a, b + h) - f(a, b - h))) / (2 * h)  # noqa: E731
        M = np.array([[d(T, 0), d(X, 0)], [d(T, 1), d(X, 1)]])
        pt = JetPoint({Sym("t"): a, Sym("x"): b, Jet("u"): U(a, b), Jet("v"): V(a, b),
                       Jet("u", ("t",)): d(U, 0), Jet("u", ("x",)): d(U, 1),
                       Jet("v", ("t",)): d(V, 0), Jet("v", ("x",)): d(V, 1)})
        assert eval_at(J, pt) == pytest.approx(np.linalg.det(M), rel=1e-6, abs=1e-8)


def test_inverse_must_compose_to_identity(pf):
    with pytest.raises(TransformError):
        PointTransformation.parse(pf.get("nlt46"), {"t": "-t", "x": "x", "u": "u", "v": "-v"},
                                  {"t": "t", "x": "x", "u": "u", "v": "-v"})


def test_family_must_start_at_identity(pf):
    with pytest.raises(TransformError):
        PointTransformation.parse(pf.get("nlt46"), {"t": "t", "x": "x", "u": "u", "v": "v + eps + 1"}, eps="eps")


def test_identity_keeps_densities(pf):
    cl = pf.get("cl48")
    out = transform_densities(cl, PointTransformation.identity(pf.get("nlt46")))
    for x in ("t", "x"):
        assert is_zero(add(out.component(x), mul(-1, cl.component(x)))).zero


def test_reflected_densities_pattern(pf):
    t, _ = _t(pf, "refl")
    sys = pf.get("nlt46")
    cl = pf.get("cl48")
    out = transform_densities(cl, t)
    assert is_zero(add(out.component("t"), mul(-1, _reflect(sys, cl.component("t"))))).zero
    assert is_zero(add(out.component("x"), _reflect(sys, cl.component("x")))).zero


def test_factor_matrix_identity(pf):
    sys = pf.get("nlt46")
    assert verify_factor_matrix(sys, PointTransformation.identity(sys), [[1, 0], [0, 1]]).passed


def test_reflection_factor_matrix(pf):
    t, spec = _t(pf, "refl")
    sys = spec.system
    assert verify_factor_matrix(sys, t, spec.A).passed
    wrong = pf.get("reflwrong").A
    assert not verify_factor_matrix(sys, t, wrong).passed
    A = infer_factor_matrix(sys, t)
    assert [[eval_at(c, JetPoint({})) for c in row] for row in A] == [[1, 0], [0, -1]]


def test_reflection_transports_multipliers(pf):
    t, spec = _t(pf, "refl")
    sys = spec.system
    out = transform_multipliers(pf.get("m47"), t, spec.A)
    a, b = pf.get("m47").values
    assert is_zero([add(out[0], _reflect(sys, a)), add(out[1], mul(-1, _reflect(sys, b)))]).zero
    pv = is_proportional(list(out), list(pf.get("m54")))
    assert pv.proportional and pv.c == pytest.approx(1.0)
    assert dcm.verify_multipliers(sys, out).passed


def test_reflection_of_shifted_set_gives_fourth_set(pf):
    t, spec = _t(pf, "refl")
    out = transform_multipliers(pf.get("m56"), t, spec.A)
    assert is_proportional(list(out), list(pf.get("m56r"))).proportional


def test_wrong_factor_matrix_is_rejected(pf):
    t, _ = _t(pf, "refl")
    with pytest.raises(TransformError):
        transform_multipliers(pf.get("m47"), t, pf.get("reflwrong").A)


def test_identity_keeps_multipliers(pf):
    m = pf.get("m47")
    out = transform_multipliers(m, PointTransformation.identity(m.system))
    assert is_zero([add(a, mul(-1, b)) for a, b in zip(out, m)]).zero


def test_reflected_set_is_new(pf):
    assert newness_test(pf.get("m54"), [pf.get("m47")]).new


def test_same_set_is_not_new(pf):
    nv = newness_test(pf.get("m47"), [pf.get("m47")])
    assert not nv.new and nv.index == 0 and nv.c == pytest.approx(1.0)
    nv2 = newness_test(pf.get("m47twice"), [pf.get("m47")])
    assert nv2.index == 0 and nv2.c == pytest.approx(2.0)


def test_trivial_candidate_rejected(pf):
    sys = pf.get("nlt46")
    triv = MultiplierSet((sys.parse("v_x - u_t"), sys.parse("0")), sys)
    with pytest.raises(TrivialMultiplierError):
        newness_test(triv, [pf.get("m47")])


def test_v_translation_first_order(pf):
    t, spec = _t(pf, "vshift")
    terms = lie_expand(pf.get("m47"), pf.get("cl48"), t, 1, spec.A)
    assert [k.order for k in terms] == [1]
    first = terms[0]
    assert first.verdict.passed
    pv = is_proportional(list(first.multipliers), list(pf.get("m56")))
    assert pv.proportional and pv.c == pytest.approx(0.5)
    cl57 = pf.get("cl57")
    dens = [first.law.component("t"), first.law.component("x")]
    assert is_proportional(dens, [cl57.component("t"), cl57.component("x")]).proportional


@pytest.mark.parametrize("with_A", [False, True])
def test_time_translation_series(pf, with_A):
    t, _ = _t(pf, "tshift")
    A = [[1, 0], [0, 1]] if with_A else None
    terms = lie_expand(pf.get("m50"), pf.get("cl51"), t, 4, A)
    assert [k.order for k in terms] == [1, 2]
    assert all(k.verdict.passed for k in terms)
    assert is_proportional(list(terms[0].multipliers), list(pf.get("mt"))).proportional
    assert is_proportional(list(terms[1].multipliers), list(pf.get("mone"))).proportional


def test_hyperbolic_flow_first_order(pf):
    t, _ = _t(pf, "hyperflow")
    terms = lie_expand(pf.get("mt"), pf.get("clt"), t, 1)
    assert len(terms) == 1 and terms[0].verdict.passed
    sys = pf.get("nlt49")
    on_sol = [substitute(v, sys.solved) for v in terms[0].multipliers]
    assert is_proportional(on_sol, list(pf.get("mv"))).proportional


def test_flow_generator_is_admitted(pf):
    from conslaw.potential import admitted

    assert admitted(pf.get("nlt49"), pf.get("hyper").generator).passed


def test_identity_family_has_no_terms(pf):
    sys = pf.get("nlt46")
    ids = {"t": Sym("t"), "x": Sym("x"), "u": Jet("u"), "v": Jet("v")}
    fam = PointTransformation(sys, ids, dict(ids), "eps")
    assert lie_expand(pf.get("m47"), pf.get("cl48"), fam, 3) == []


def test_series_cap_for_non_polynomial_families(pf):
    t, _ = _t(pf, "hyperflow")
    with pytest.raises(TransformError):
        lie_expand(pf.get("mt"), pf.get("clt"), t, 9)


def test_factor_over_recovers_coefficients(pf):
    sys = pf.get("nlt46")
    G1, G2 = sys.equations
    P = add(mul(sys.parse("u*exp(x)"), G1), mul(sys.parse("v + u_x"), G2))
    c = factor_over(P, sys)
    assert is_zero(add(P, mul(-1, add(mul(c[0], G1), mul(c[1], G2))))).zero


def test_factor_over_rejects_non_vanishing(pf):
    from conslaw.jetexpr.calculus import NonPolynomialError

    with pytest.raises(NonPolynomialError):
        factor_over(pf.get("nlt46").parse("u_t"), pf.get("nlt46"))


def test_transform_needs_symmetry():
    sys = SystemDef.from_strings(["t", "x"], ["u"], ["u_t - u*u_x"], solved={"u_t": "u*u_x"})
    m = MultiplierSet((sys.parse("1"),), sys)
    t = PointTransformation.parse(sys, {"t": "t", "x": "x", "u": "u + 1"}, {"t": "t", "x": "x", "u": "u - 1"})
    with pytest.raises(TransformError, match="admitted"):
        transform_multipliers(m, t)
