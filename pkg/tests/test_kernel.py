import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadprop import classical as C
from quadprop import kernel as K
from quadprop import oracle as O
from quadprop import scenario as S
from quadprop import states as St
from quadprop.errors import CausticError, ValidationError
from quadprop.grid import ComplexGridFunction

TIGHT = dict(rtol=1e-12, atol=1e-14)


def _const(v):
    return lambda t: v + 0 * np.asarray(t, float)


@pytest.fixture(scope="module")
def sho_prop(sho_basis):
    return K.Propagator("S", sho_basis)


def test_sho_origin_modulus(sho_prop):
    k = sho_prop(0.0, 0.0, math.pi / 4)
    assert abs(k) == pytest.approx((2 * math.pi * math.sin(math.pi / 4)) ** -0.5, rel=1e-10)


def test_free_closed_form():
    p = K.Propagator("S", C.standard_basis(S.free(), 0.0))
    x = np.linspace(-3, 3, 13)
    for T in (0.1, 0.8, 3.0):
        ref = cmath.sqrt(1 / (2j * math.pi * T)) * np.exp(1j * (x[:, None] - x[None, :]) ** 2 / (2 * T))
        assert np.max(np.abs(p(x[:, None], x[None, :], T) - ref)) <= 1e-12


def test_sho_coefficients(sho_prop):
    k = sho_prop.coefficients(math.pi / 4)
    assert k.B == pytest.approx(0.5, rel=1e-10)
    assert k.h == pytest.approx(-math.sqrt(2), rel=1e-10)
    assert k.alpha == 0.0 and k.beta == 0.0


@settings(max_examples=20, deadline=None)
@given(x_a=st.floats(-4, 4), x_b=st.floats(-4, 4), t_b=st.floats(0.8, 2.5),
       variant=st.sampled_from(K.VARIANTS))
def test_coefficients_reproduce_kernel(full, x_a, x_b, t_b, variant):
    b = C.standard_basis(full, 0.5)
    xp = C.solve_particular(full, 0.5, slope=0.2)
    p = K.Propagator(variant, b, xp)
    direct = complex(p(x_a, x_b, t_b))
    assert abs(complex(p.coefficients(t_b)(x_a, x_b)) - direct) <= 1e-9 * abs(direct)


def test_undriven_F_is_S(sho_basis, sho_prop):
    xp = C.solve_particular(sho_basis.scenario, 0.0)
    x = np.linspace(-2, 2, 9)
    pf = K.Propagator("F", sho_basis, xp)
    assert np.array_equal(pf(x[:, None], x, 1.3), sho_prop(x[:, None], x, 1.3))
    k = pf.coefficients(1.3)
    assert k.alpha == 0.0 and k.beta == 0.0


def test_gauge_free_G_is_F():
    sc = S.driven_sho()
    b = C.standard_basis(sc, 0.0)
    xp = C.solve_particular(sc, 0.0, slope=0.3)
    x = np.linspace(-2, 2, 9)
    g = K.Propagator("G", b, xp)(x[:, None], x, 1.7)
    f = K.Propagator("F", b, xp)(x[:, None], x, 1.7)
    assert np.max(np.abs(g - f)) <= 1e-14


def test_constant_f_is_a_phase():
    f0 = 0.37
    sc = S.Scenario(M=_const(1.0), w2=_const(1.0), f=_const(f0), dM=_const(0.0), da=_const(0.0), db=_const(0.0))
    b = C.standard_basis(sc, 0.0)
    xp = C.solve_particular(sc, 0.0)
    x = np.linspace(-2, 2, 9)
    g = K.Propagator("G", b, xp)(x[:, None], x, 1.2)
    s = K.Propagator("S", b)(x[:, None], x, 1.2)
    assert np.max(np.abs(g - s * cmath.exp(1j * f0 * 1.2))) <= 1e-12


def test_caustic(sho_prop):
    with pytest.raises(CausticError) as exc:
        sho_prop(0.0, 0.0, math.pi)
    assert exc.value.t_caustic == pytest.approx(math.pi, abs=1e-8)
    with pytest.raises(ValidationError):
        sho_prop(0.0, 0.0, 0.0)


def test_appendix_sho(sho_prop):
    assert K.check_appendix_odes(sho_prop, [0.4, 1.0, 2.0]).h <= 1e-6


def test_appendix_free_identity():
    p = K.Propagator("S", C.standard_basis(S.free(), 0.0))
    for T in (0.5, 1.5):
        k = p.coefficients(T)
        assert k.A == pytest.approx(1 / (2 * T), rel=1e-12)
        assert k.h == pytest.approx(-1 / T, rel=1e-12)
        assert K._appendix_rhs(k, "S", p.scenario, T)[0] == pytest.approx(-1 / (2 * T * T), rel=1e-12)
    assert K.check_appendix_odes(p, [0.5, 1.5]).A <= 1e-8


def test_appendix_full_quadratic(full):
    p = K.Propagator("G", C.standard_basis(full, 0.3), C.solve_particular(full, 0.3, slope=0.4))
    assert K.check_appendix_odes(p, [0.8, 1.5, 2.6]).max() <= 1e-6


def test_spectral_first_term(sho_basis):
    v = K.kernel_spectral_sum(sho_basis, sho_basis.scenario, 0, 0.0, 0.0, 0.0, 1.0)
    assert abs(v) == pytest.approx(math.pi ** -0.5, rel=1e-10)
    assert cmath.phase(v) == pytest.approx(-0.5, abs=1e-9)
    with pytest.raises(ValidationError):
        K.kernel_spectral_sum(sho_basis, sho_basis.scenario, 5, 0.0, 0.0, 1.0, 1.0)


def test_spectral_weak_limit(sho_basis):
    # pointwise convergence fails on the unit circle; smeared against a Gaussian it converges
    x = np.linspace(-8, 8, 801)
    dx = x[1] - x[0]
    g = np.exp(-((x - 0.5) ** 2))
    T = math.pi / 4
    exact = K.Propagator("S", sho_basis)(x[:, None], x[None, :], T)
    partial = K.kernel_spectral_sum(sho_basis, sho_basis.scenario, 60, x[:, None], x[None, :], 0.0, T)
    ref = np.trapezoid(exact * g[:, None], dx=dx, axis=0)
    got = np.trapezoid(partial * g[:, None], dx=dx, axis=0)
    assert np.max(np.abs(ref - got)) <= 1e-8


def test_propagate_ground_state(sho_basis):
    spec = St.StateSpec("S", 0, sho_basis)
    psi0 = St.sample(spec, 0.0, -9, 9, 901)
    p = K.Propagator("S", sho_basis)
    for t in (1.0, 4.0):  # 4.0 lies past the first caustic
        out = K.propagate(p, psi0, 0.0, t)
        assert np.max(np.abs(out.values - St.psi(spec, out.x, t))) <= 1e-6


def test_propagate_short_time(sho_basis):
    spec = St.StateSpec("S", 0, sho_basis)
    psi0 = St.sample(spec, 0.0, -9, 9, 1801)
    out = K.propagate(K.Propagator("S", sho_basis), psi0, 0.0, 1e-4)
    assert out.l2_distance(psi0) <= 1e-3


def test_propagate_zero(sho_basis):
    z = ComplexGridFunction(-5, 5, np.zeros(101, complex))
    out = K.propagate(K.Propagator("S", sho_basis), z, 0.0, 1.0)
    assert not np.any(out.values)


def test_semigroup(full):
    b = C.standard_basis(full, 0.0)
    xp = C.solve_particular(full, 0.0)
    x = np.linspace(-10, 10, 1601)
    psi0 = ComplexGridFunction(-10, 10, (2 / np.pi) ** 0.25 * np.exp(-((x - 1) ** 2) + 0.5j * x))
    direct = K.propagate(K.Propagator("G", b, xp), psi0, 0.0, 1.4)
    mid = K.propagate(K.Propagator("G", b, xp), psi0, 0.0, 0.6)
    xp_m = C.solve_particular(full, 0.6)
    two = K.propagate(K.Propagator("G", b, xp_m, t_a=0.6), mid, 0.6, 1.4)
    assert two.l2_distance(direct) <= 1e-4


@pytest.mark.parametrize("name,variant", [("driven-sho", "F"), ("full-quadratic", "G"), ("sho", "S")])
def test_kernel_solves_schroedinger(name, variant):
    sc = S.preset(name)
    b = C.standard_basis(sc, 0.0, **TIGHT)
    xp = C.solve_particular(sc, 0.0, slope=0.2, **TIGHT) if variant != "S" else None
    p = K.Propagator(variant, b, xp)
    rep = O.schrodinger_residual(lambda x, t: p(0.3, x, t), sc, (-4, 4, 2048), 1.1, 1e-4, variant)
    assert rep.l2_residual <= O.TOL_PDE


def test_short_time_rate(full):
    p = K.Propagator("G", C.standard_basis(full, 0.5), C.solve_particular(full, 0.5, slope=1.0))
    xs = np.linspace(-1, 1, 5)
    devs = []
    for T in (1e-2, 1e-3, 1e-4):
        k, ref = p(xs, xs, 0.5 + T), p.short_time_form(xs, xs, 0.5 + T)
        devs.append(np.max(np.abs(k / ref - 1)))
    slope = np.polyfit(np.log([1e-2, 1e-3, 1e-4]), np.log(devs), 1)[0]
    assert abs(slope - 1) <= 0.2


@settings(max_examples=8, deadline=None)
@given(u1=st.floats(-1, 1), c=st.floats(-1, 1), lam=st.floats(0.3, 3), slope=st.floats(-1, 1))
def test_kernel_basis_independent(full, u1, c, lam, slope):
    x = np.linspace(-3, 3, 7)
    ref = K.Propagator("G", C.standard_basis(full, 0.4, **TIGHT),
                       C.solve_particular(full, 0.4, **TIGHT))(x[:, None], x, 1.9)
    b = C.standard_basis(full, 0.4, u0=(lam, lam * u1), v0=(c, 1.5 + c * u1), **TIGHT)
    got = K.Propagator("G", b, C.solve_particular(full, 0.4, slope=slope, **TIGHT))(x[:, None], x, 1.9)
    assert np.max(np.abs(got - ref) / np.abs(ref)) <= 1e-8


def test_propagate_thread_count_irrelevant(sho_basis, monkeypatch):
    spec = St.StateSpec("S", 2, sho_basis)
    psi0 = St.sample(spec, 0.0, -9, 9, 501)
    p = K.Propagator("S", sho_basis)
    one = K.propagate(p, psi0, 0.0, 1.3).values
    monkeypatch.setenv("QUADPROP_THREADS", "4")
    assert np.array_equal(K.propagate(p, psi0, 0.0, 1.3).values, one)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("QUADPROP_THREADS", "3")
    assert K.threads() == 3
    monkeypatch.setenv("QUADPROP_THREADS", "x")
    with pytest.raises(ValidationError):
        K.threads()
