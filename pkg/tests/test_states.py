import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import hermite as npherm

from quadprop import classical as C
from quadprop import oracle as O
from quadprop import scenario as S
from quadprop import states as St
from quadprop.errors import ValidationError
from quadprop.grid import ComplexGridFunction

TIGHT = dict(rtol=1e-12, atol=1e-14)


def _const(v):
    return lambda t: v + 0 * np.asarray(t, float)


def test_hermite_values():
    assert St.hermite(0, 0.3) == 1.0
    assert St.hermite(1, 2.0) == 4.0
    assert St.hermite(2, 1.0) == 2.0
    assert St.hermite(3, 0.5) == pytest.approx(-5.0, rel=1e-14)


def test_hermite_10_against_coefficients():
    ref = npherm.hermval(3.7, [0] * 10 + [1])
    assert St.hermite(10, 3.7) == pytest.approx(ref, rel=1e-10)


def test_hermite_functions_high_order_finite():
    rows = St.hermite_functions(512, np.linspace(-40, 40, 101))
    assert np.all(np.isfinite(rows))
    x = np.linspace(-45, 45, 9001)
    phi = St.hermite_functions(512, x)[512]
    assert np.trapezoid(phi**2, x) == pytest.approx(1.0, rel=1e-8)


def test_stationary_ground_state(sho_basis):
    spec = St.StateSpec("S", 0, sho_basis)
    x = np.linspace(-5, 5, 41)
    for t in (0.0, 0.7, 5.0):
        ref = math.pi ** -0.25 * np.exp(-x * x / 2) * np.exp(-0.5j * t)
        assert np.max(np.abs(St.psi(spec, x, t) - ref)) <= 1e-9


def test_pulsating_width(sho):
    b = C.standard_basis(sho, 0.0, v0=(0.0, 2.0))
    spec = St.StateSpec("S", 0, b)
    ts = np.linspace(0, math.pi, 201)
    w = np.array([St.width(spec, t) for t in ts])
    assert w.max() / w.min() == pytest.approx(2.0, rel=1e-6)
    assert St.width(spec, 0.3) == pytest.approx(St.width(spec, 0.3 + math.pi), rel=1e-8)
    g = St.sample(spec, 1.1, -10, 10, 2001)
    assert g.norm() == pytest.approx(1.0, abs=1e-9)


def test_gauge_free_G_is_S(sho_basis):
    xp = C.solve_particular(sho_basis.scenario, 0.0)
    x = np.linspace(-4, 4, 17)
    for n in (0, 3):
        g = St.psi(St.StateSpec("G", n, sho_basis, xp), x, 1.3)
        s = St.psi(St.StateSpec("S", n, sho_basis), x, 1.3)
        assert np.max(np.abs(g - s)) <= 1e-14


def test_gaussian_params(sho, sho_basis):
    g = St.gaussian_params(St.StateSpec("S", 0, sho_basis), 0.9)
    assert g.gamma1 == pytest.approx(1.0, rel=1e-9)
    assert abs(g.gamma2) <= 1e-9
    b2 = C.standard_basis(sho, 0.0, v0=(0.0, 2.0), **TIGHT)
    assert St.gaussian_params(St.StateSpec("S", 0, b2), math.pi / 4).gamma1 == pytest.approx(0.8, rel=1e-9)
    sc = S.Scenario(M=_const(1.5), w2=_const(1.0), a=_const(0.3), dM=_const(0.0), da=_const(0.0), db=_const(0.0))
    b = C.standard_basis(sc, 0.0, u0=(1.0, 0.0), v0=(0.0, 1.0), **TIGHT)
    spec = St.StateSpec("G", 0, b, C.solve_particular(sc, 0.0))
    assert St.gaussian_params(spec, 1.0).gamma2p == pytest.approx(-0.6 * 1.5, rel=1e-9)


def test_classical_momentum(sho, full):
    assert St.classical_momentum(C.solve_particular(sho, 0.0), sho, 1.0) == 0.0
    drv = S.driven_sho()
    xp = C.solve_particular(drv, 0.0)
    assert St.classical_momentum(xp, drv, 1.4) == pytest.approx(float(xp.deriv(1.4)), rel=1e-14)
    xp = C.solve_particular(full, 0.0)
    t = 1.0
    ref = (float(full.M(t)) * float(xp.deriv(t)) + 2 * float(full.M(t) * full.a(t)) * float(xp(t))
           + float(full.b(t)))
    assert float(St.classical_momentum(xp, full, t)) == pytest.approx(ref, rel=1e-14)


def test_unitary_identity_and_modulus(sho, full):
    x = np.linspace(-3, 3, 31)
    g = ComplexGridFunction(-3, 3, np.exp(-x * x) * (1 + 0.3j * x))
    assert np.array_equal(St.apply_unitary_U(sho, g, 1.0, 0.0).values, g.values)
    out = St.apply_unitary_U(full, g, 1.7, 0.0)
    assert np.max(np.abs(np.abs(out.values) - np.abs(g.values))) <= 1e-15


def test_unitary_maps_F_to_G(full):
    b = C.standard_basis(full, 0.0).oriented()
    xp = C.solve_particular(full, 0.0)
    for n in (0, 4):
        for t in (0.0, 2.3):
            f = St.sample(St.StateSpec("F", n, b, xp), t, -8, 8, 401)
            g = St.psi(St.StateSpec("G", n, b, xp), f.x, t)
            assert np.max(np.abs(St.apply_unitary_U(full, f, t, 0.0).values - g)) <= 1e-8


def test_errors(sho_basis):
    with pytest.raises(ValidationError):
        St.StateSpec("X", 0, sho_basis)
    with pytest.raises(ValidationError):
        St.StateSpec("S", 513, sho_basis)
    with pytest.raises(ValidationError):
        St.StateSpec("F", 0, sho_basis)
    neg = C.ClassicalBasis(sho_basis.u, -sho_basis.v, -1.0, 0.0, sho_basis.scenario)
    with pytest.raises(ValidationError):
        St.StateSpec("S", 0, neg)
    assert neg.oriented().Omega == 1.0


@pytest.fixture(scope="module")
def specs():
    out = []
    for name in ("caldirola-kanai", "paul-trap", "full-quadratic"):
        sc = S.preset(name)
        b = C.standard_basis(sc, 0.0, v0=(0.2, 1.3)).oriented()
        xp = C.solve_particular(sc, 0.0, slope=0.3)
        out += [St.StateSpec(v, 0, b, xp) for v in St.VARIANTS]
    return out


@settings(max_examples=15, deadline=None)
@given(i=st.integers(0, 8), t=st.floats(0, 9.5))
def test_orthonormal(specs, i, t):
    spec = specs[i]
    lo, hi = St.window(spec, t, 14)
    x = np.linspace(lo, hi, 2048)
    rows = St.wavefunctions(spec, 10, x, t)
    gram = np.trapezoid(np.conj(rows)[:, None] * rows[None], dx=x[1] - x[0], axis=2)
    assert np.max(np.abs(gram - np.eye(11))) <= 1e-6


@settings(max_examples=10, deadline=None)
@given(i=st.integers(0, 8), t=st.floats(0.5, 4), n=st.sampled_from([0, 1, 3]))
def test_residual(specs, i, t, n):
    spec = specs[i].with_n(n)
    lo, hi = St.window(spec, t)
    rep = O.schrodinger_residual(lambda x, s: St.psi(spec, x, s), spec.scenario, (lo, hi, 1024), t,
                                 1e-4, spec.variant)
    assert rep.l2_residual <= O.TOL_PDE


def test_basis_dependence(sho):
    a = St.StateSpec("S", 0, C.standard_basis(sho, 0.0))
    b = St.StateSpec("S", 0, C.standard_basis(sho, 0.0, v0=(0.0, 2.0)))
    ga, gb = St.sample(a, 1.0, -10, 10, 2001), St.sample(b, 1.0, -10, 10, 2001)
    assert ga.l2_distance(gb) > 0.1
    for spec in (a, b):
        rep = O.schrodinger_residual(lambda x, t: St.psi(spec, x, t), sho, (-8, 8, 1024), 1.0, 1e-4, "S")
        assert rep.l2_residual <= O.TOL_PDE


@pytest.mark.parametrize("variant", St.VARIANTS)
def test_gaussian_form_up_to_phase(full, variant):
    b = C.standard_basis(full, 0.0).oriented()
    spec = St.StateSpec(variant, 0, b, C.solve_particular(full, 0.0, slope=0.2))
    x = np.linspace(-4, 4, 81)
    for t in (0.4, 3.3):
        ratio = St.psi(spec, x, t) / St.gaussian_form(spec, x, t)
        assert np.max(np.abs(ratio - ratio[40])) <= 1e-9
        assert abs(abs(ratio[40]) - 1) <= 1e-9


def test_phase_delta_continuous(full):
    b = C.standard_basis(full, 0.0).oriented()
    spec = St.StateSpec("G", 0, b, C.solve_particular(full, 0.0))
    ts = np.linspace(0, 3, 301)
    d = np.unwrap([St.phase_delta(spec, t) for t in ts])
    assert np.max(np.abs(np.diff(d))) <= 0.05


def test_verbatim_phase_agrees_where_defined():
    sc = S.driven_sho()
    b = C.standard_basis(sc, 0.0, v0=(1.0, 0.5)).oriented()  # v(0) != 0
    xp = C.solve_particular(sc, 0.0)
    x = np.linspace(-3, 3, 13)
    reg = St.psi(St.StateSpec("F", 1, b, xp), x, 0.6)
    ver = St.psi(St.StateSpec("F", 1, b, xp, phase_form="verbatim"), x, 0.6)
    assert np.max(np.abs(reg - ver)) <= 1e-8
