import pytest

from conslaw import varcalc
from conslaw.jetexpr.calculus import total_derivative
from conslaw.jetexpr.expr import Jet, add, mul
from conslaw.jetexpr.oracle import is_zero
from conslaw.jetexpr.system import SystemDef
from conslaw.potential import admitted
from conslaw.symaction import PointTransformation
from conslaw.varcalc import Generator, Lagrangian

KDV = SystemDef.from_strings(["t", "x"], ["u"], ["u_t + u*u_x + u_xxx"],
                             solved={"u_t": "-u*u_x - u_xxx"})


def test_euler_operator_kills_divergence():
    e = add(total_derivative(KDV.parse("u^2*u_x"), "t"), total_derivative(KDV.parse("sin(u_t)"), "x"))
    assert is_zero(varcalc.euler_operator(e, "u")).zero


def test_euler_operator_detects_non_divergence():
    assert not varcalc.is_divergence(KDV.parse("u*u_t^2")).passed


def test_higher_euler_requires_nonempty_index():
    with pytest.raises(ValueError):
        varcalc.higher_euler(KDV.parse("u_x^2"), "u", ())


def test_euler_lagrange_of_potential_kdv_is_exact(pf):
    els = varcalc.euler_lagrange(pf.get("pkdvlag"))
    ref = pf.get("pkdv")
    assert els.equations == ref.equations


def test_self_adjoint_with_exponential_factor(pf):
    assert varcalc.is_self_adjoint(pf.get("wavehx")).passed


def test_not_self_adjoint_without_factor(pf):
    assert not varcalc.is_self_adjoint(pf.get("waveh")).passed


def test_kdv_is_not_self_adjoint(pf):
    v = varcalc.is_self_adjoint(pf.get("kdv"))
    assert not v.passed and v.data["order"] == 3


def test_linearized_wave_first_order_coefficient_carries_uxx(pf):
    # coefficient of W_x is H'(u_x) + u_xx H''(u_x)
    sys = pf.get("waveh")
    L = varcalc.frechet(sys)
    coeff = L.entry(0, 0)[("x",)]
    assert is_zero(add(coeff, mul(-1, sys.parse("H'(u_x) + u_xx*H''(u_x)")))).zero
    assert not is_zero(add(coeff, mul(-1, sys.parse("H'(u_x) + H''(u_x)")))).zero


def test_oscillator_variational_after_multiplying_by_exponential(pf):
    assert not varcalc.is_self_adjoint(pf.get("osc")).passed
    assert varcalc.is_self_adjoint(pf.get("oscfactor")).passed
    assert varcalc.is_self_adjoint(pf.get("free")).passed


def test_free_particle_maps_to_oscillator(pf):
    spec = pf.get("oscmap")
    t = PointTransformation.parse(spec.system, spec.forward, spec.inverse)
    image = t.apply(pf.get("free").equations[0])
    osc = pf.get("osc")
    assert is_zero(add(image, mul(-1, osc.parse("exp(x)*(y_xx + 2*y_x + y)")))).zero


def test_adjoint_is_an_involution_on_kdv():
    L = varcalc.frechet(KDV)
    assert varcalc.operators_equal(varcalc.adjoint(varcalc.adjoint(L), L.fields), L).passed


def test_bilinear_identity(pf):
    for name in ("kdv", "waveh", "nlt46"):
        assert varcalc.bilinear_identity_check(varcalc.frechet(pf.get(name))).passed


def test_bilinear_identity_rejects_wrong_adjoint():
    L = varcalc.frechet(KDV)
    assert not varcalc.bilinear_identity_check(L, L).passed


def test_kdv_point_symmetries_are_admitted():
    galilean = Generator.point({"x": KDV.parse("t")}, {"u": KDV.parse("1")})
    scaling = Generator.point({"x": KDV.parse("x"), "t": KDV.parse("3*t")}, {"u": KDV.parse("-2*u")})
    assert admitted(KDV, galilean).passed
    assert admitted(KDV, scaling).passed
    wrong = Generator.point({"x": KDV.parse("x"), "t": KDV.parse("2*t")}, {"u": KDV.parse("-2*u")})
    assert not admitted(KDV, wrong).passed


def test_galilean_determining_rows_vanish():
    g = Generator.point({"x": KDV.parse("t")}, {"u": KDV.parse("1")})
    assert varcalc.symmetry_determining(KDV, g) == []


def test_evolutionary_generator_rejects_xi():
    with pytest.raises(ValueError):
        Generator("evolutionary", {"u": KDV.parse("u_x")}, {"x": KDV.parse("1")})


def test_point_generator_rejects_derivatives():
    with pytest.raises(ValueError):
        Generator.point({}, {"u": KDV.parse("u_x")})


def test_translation_is_variational(pf):
    v = varcalc.variational_symmetry_test(pf.get("pkdvlag"), pf.get("pkdvx").generator)
    assert v.passed


def test_non_symmetry_is_not_variational(pf):
    g = Generator.evolutionary({"v": pf.get("pkdv").parse("v^2")})
    assert not varcalc.variational_symmetry_test(pf.get("pkdvlag"), g).passed


@pytest.mark.parametrize("gen", ["pkdvx", "pkdvt"])
def test_noether_flux_gives_conservation_law(pf, gen):
    from conslaw.dcm import verify_conservation_law, verify_multipliers

    lag = pf.get("pkdvlag")
    gs = pf.get(gen)
    cl = varcalc.noether_flux(lag, gs.generator, gs.f)
    els = varcalc.euler_lagrange(lag)
    assert verify_multipliers(els, cl.multipliers).passed
    assert verify_conservation_law(els, cl.multipliers, cl).passed


def test_noether_flux_rejects_wrong_f(pf):
    gs = pf.get("pkdvx")
    with pytest.raises(varcalc.NoetherError):
        varcalc.noether_flux(pf.get("pkdvlag"), gs.generator, {"t": Jet("v")})


def test_time_translation_gives_energy_density():
    lag = Lagrangian.parse("1/2*u_t^2 - 1/2*u_x^2 - 1/4*u^4", ["t", "x"], ["u"])
    # f is taken for the evolutionary form -u_t d/du, where X L = -D_t L
    cl = varcalc.noether_flux(lag, Generator.point({"t": lag.system.parse("1")}, {}), {"t": mul(-1, lag.L)})
    energy = lag.system.parse("1/2*u_t^2 + 1/2*u_x^2 + 1/4*u^4")
    assert is_zero(add(cl.component("t"), energy)).zero
