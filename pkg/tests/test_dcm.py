import mpmath as mp
import pytest

from conslaw import dcm
from conslaw.dcm import Ansatz
from conslaw.jetexpr.calculus import total_derivative
from conslaw.jetexpr.evaluate import JetPoint, eval_at
from conslaw.jetexpr.expr import ZERO, Jet, add, mul
from conslaw.jetexpr.oracle import is_proportional, is_zero
from conslaw.jetexpr.parse import parse_expr
from conslaw.jetexpr.system import SystemDef
from conslaw.laws import ConservationLaw, MultiplierSet
from conslaw.varcalc import euler_operator, is_divergence


def test_point_ansatz_reproduces_multiplier_determining_system(pf):
    rows = dcm.derive_determining(pf.get("nlt40"), pf.get("pointxtuv"))
    v = dcm.match_proportional(rows, pf.get("multdet").rows)
    assert v.passed and len(v.data["pairs"]) == 4


def test_printed_sign_convention_does_not_match(pf):
    rows = dcm.derive_determining(pf.get("nlt40"), pf.get("pointxtuv"))
    assert not dcm.match_proportional(rows, pf.get("multdetflip").rows).passed


def test_uv_ansatz_gives_adjoint_linear_pair(pf):
    rows = dcm.derive_determining(pf.get("quasi"), pf.get("quasiab"))
    assert dcm.match_proportional(rows, pf.get("quasiabdet").rows).passed


def test_single_equation_ansatz():
    sys = SystemDef.from_strings(["t", "x"], ["u"], ["u_t"])
    rows = dcm.derive_determining(sys, Ansatz({"L": ("x", "t")}))
    ref = parse_expr("L_t", sys.scope.extended(functions={"L": ("x", "t")}))
    assert dcm.match_proportional(rows, [ref]).passed


def test_ansatz_arity_mismatch():
    sys = SystemDef.from_strings(["t", "x"], ["u"], ["u_t"])
    with pytest.raises(dcm.ShapeError):
        dcm.derive_determining(sys, Ansatz({"a": ("x",), "b": ("x",)}))


@pytest.mark.parametrize("system,mult,dens", [("nlt46", "m47", "cl48"), ("nlt49", "m50", "cl51")])
def test_multipliers_and_densities(pf, system, mult, dens):
    sys, m, cl = pf.get(system), pf.get(mult), pf.get(dens)
    vm = dcm.verify_multipliers(sys, m)
    vc = dcm.verify_conservation_law(sys, m, cl)
    assert vm.passed and vc.passed
    assert vm.max_residual < 1e-9 and vc.max_residual < 1e-9


def test_single_term_perturbation_fails(pf):
    v = dcm.verify_multipliers(pf.get("nlt46"), pf.get("m47bad"))
    assert not v.passed and v.max_residual > 1e-3
    assert all(c.witness for c in v.failed())


def test_sin_cos_swap_fails(pf):
    sys = pf.get("nlt46")
    m = pf.get("m47")
    swapped = MultiplierSet((sys.parse(str(m[0]).replace("sin", "cos")), m[1]), sys)
    v = dcm.verify_multipliers(sys, swapped)
    assert not v.passed and v.failed()[0].witness


def test_flipped_flux_fails(pf):
    cl = pf.get("cl48")
    bad = ConservationLaw({"t": cl.component("t"), "x": mul(-1, cl.component("x"))}, cl.multipliers)
    assert not dcm.verify_conservation_law(pf.get("nlt46"), pf.get("m47"), bad).passed


def test_printed_sign_of_tanh_system_fails(pf):
    assert not dcm.verify_multipliers(pf.get("nlt49flip"), pf.get("m50flip")).passed


@pytest.mark.parametrize("system,mult,dens", [("nlt46", "m47", "cl48"), ("nlt49", "m50", "cl51")])
def test_line_integral_densities_differ_by_a_trivial_pair(pf, system, mult, dens):
    sys = pf.get(system)
    mine = dcm.densities_2var(sys, pf.get(mult))
    ref = pf.get(dens)
    diff_div = add(*(total_derivative(add(mine.component(x), mul(-1, ref.component(x))), x) for x in ("t", "x")))
    assert is_zero(diff_div).zero


def test_zero_multipliers_give_zero_densities(pf):
    sys = pf.get("nlt46")
    cl = dcm.densities_2var(sys, MultiplierSet((ZERO, ZERO), sys))
    assert cl.component("t").is_zero_literal and cl.component("x").is_zero_literal


def test_line_integral_rejects_other_shapes(pf):
    with pytest.raises(dcm.ShapeError):
        dcm.densities_2var(pf.get("nlt41"), MultiplierSet((ZERO, ZERO, ZERO), pf.get("nlt41")))


def test_divergence_examples():
    sys = SystemDef.from_strings(["t", "x"], ["u", "v"])
    e = add(total_derivative(sys.parse("u*v"), "t"), total_derivative(sys.parse("u^2"), "x"))
    assert is_divergence(e).passed
    ut_ux = sys.parse("u_t*u_x")
    assert not is_divergence(ut_ux).passed
    assert is_zero(add(euler_operator(ut_ux, "u"), sys.parse("2*u_tx"))).zero
    assert is_divergence(sys.parse("u_x")).passed


def test_multiplier_combination_is_a_divergence(pf):
    assert is_divergence(pf.get("m47").combination()).passed


def test_reflected_multipliers_are_independent(pf):
    assert not is_proportional(list(pf.get("m54")), list(pf.get("m47"))).proportional


@pytest.mark.parametrize("F,G", [("1", "u"), ("u^(-2)", "u^(-1)"), ("2*exp(2*u) - 1", "exp(u)")])
def test_classifying_functions_against_numeric_derivatives(F, G):
    sys = SystemDef.from_strings(["t", "x"], ["u"])
    Fe, Ge = sys.parse(F), sys.parse(G)
    d, h, tag = dcm.classify_dh(Fe, Ge, Jet("u"))
    mp.mp.dps = 30
    Fm = {"1": lambda s: 1, "u^(-2)": lambda s: s**-2, "2*exp(2*u) - 1": lambda s: 2 * mp.exp(2 * s) - 1}[F]
    Gm = {"u": lambda s: s, "u^(-1)": lambda s: 1 / s, "exp(u)": lambda s: mp.exp(s)}[G]
    for u0 in (0.7, 1.3):
        F1, F2, F3 = (mp.diff(Fm, u0, n) for n in (1, 2, 3))
        G1, G2, G3, G4 = (mp.diff(Gm, u0, n) for n in (1, 2, 3, 4))
        d_ref = G1**2 * F3 - 3 * G1 * G2 * F2 + (3 * G2**2 - G1 * G3) * F1
        h_ref = G1**2 * G4 - 4 * G1 * G2 * G3 + 3 * G2**3
        pt = JetPoint({Jet("u"): u0})
        assert eval_at(d, pt) == pytest.approx(float(d_ref), abs=1e-8)
        assert eval_at(h, pt) == pytest.approx(float(h_ref), abs=1e-8)
    assert tag == "d=0,h=0"


def test_generic_system_classifies_nonzero(pf):
    sys = pf.get("nlt40")
    _, _, tag = dcm.classify_dh(sys.parse("F(u)"), sys.parse("G(u)"), Jet("u"))
    assert tag == "d!=0,h!=0"


# --------------------------------------------------------------------------
# 50-digit recomputation


def _ref_T(t, x, u, v):
    sq2 = mp.sqrt(2)
    return -2 * mp.exp(-(u + t / sq2) / 2) * mp.cos((v + (x + 2 * mp.exp(u)) / sq2) / 2)


def test_density_value_matches_high_precision(pf):
    mp.mp.dps = 50
    T = pf.get("cl48").component("t")
    sys = pf.get("nlt46")
    pt = JetPoint.from_names(sys.scope, {"t": 0.3, "x": -0.7, "u": 0.4, "v": 1.1})
    ref = _ref_T(mp.mpf("0.3"), mp.mpf("-0.7"), mp.mpf("0.4"), mp.mpf("1.1"))
    assert abs(eval_at(T, pt) - float(ref)) <= 1e-14 * max(1.0, abs(float(ref)))


def test_characteristic_form_at_fifty_digits():
    """Lambda.G = D_t T + D_x X along explicit smooth fields, evaluated with mpmath."""
    mp.mp.dps = 50
    sq2 = mp.sqrt(2)
    U = lambda t, x: mp.sin(t + 2 * x) / 3 + x / 5  # noqa: E731
    V = lambda t, x: mp.cos(x - t) / 2 + t * x / 7  # noqa: E731
    pre = lambda t, u: mp.exp(-(u + t / sq2) / 2)  # noqa: E731
    arg = lambda x, u, v: (v + (x + 2 * mp.exp(u)) / sq2) / 2  # noqa: E731

    def T(t, x):
        u, v = U(t, x), V(t, x)
        return -2 * pre(t, u) * mp.cos(arg(x, u, v))

    def X(t, x):
        u, v = U(t, x), V(t, x)
        return 2 * pre(t, u) * (sq2 * mp.exp(u) * mp.cos(arg(x, u, v)) - mp.sin(arg(x, u, v)))

    t0, x0 = mp.mpf("0.4"), mp.mpf("-0.3")
    u, v = U(t0, x0), V(t0, x0)
    ut = mp.diff(lambda s: U(s, x0), t0)
    ux = mp.diff(lambda s: U(t0, s), x0)
    vt = mp.diff(lambda s: V(s, x0), t0)
    vx = mp.diff(lambda s: V(t0, s), x0)
    G1 = vt + (1 - 2 * mp.exp(2 * u)) * ux - mp.exp(u)
    G2 = vx - ut
    a = arg(x0, u, v)
    L1 = pre(t0, u) * mp.sin(a)
    L2 = -pre(t0, u) * (sq2 * mp.exp(u) * mp.sin(a) + mp.cos(a))
    div = mp.diff(lambda s: T(s, x0), t0) + mp.diff(lambda s: X(t0, s), x0)
    assert abs(L1 * G1 + L2 * G2 - div) < mp.mpf(10) ** -40
