import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadprop import classical as C
from quadprop import observables as Ob
from quadprop import scenario as S
from quadprop import states as St
from quadprop.errors import ValidationError

TIGHT = dict(rtol=1e-12, atol=1e-14)


def _diag_moments(spec, t, n_points=2048):
    lo, hi, n = Ob.moment_window(spec, spec.n, t, n_points)
    g = St.sample(spec, t, lo, hi, n)
    return Ob.moments(g, g, spec.scenario, spec.n, spec.n)


def test_sho_ground_moments(sho_basis):
    m = _diag_moments(St.StateSpec("S", 0, sho_basis), 0.7)
    assert abs(m.mean_x) <= 1e-10
    assert m.mean_x2.real == pytest.approx(0.5, rel=1e-8)
    assert m.mean_p2.real == pytest.approx(0.5, rel=1e-8)
    m1 = _diag_moments(St.StateSpec("S", 1, sho_basis), 0.7)
    assert m1.mean_x2.real == pytest.approx(1.5, rel=1e-8)


def test_displaced_mean(full):
    b = C.standard_basis(full, 0.0).oriented()
    xp = C.solve_particular(full, 0.0, slope=0.5)
    spec = St.StateSpec("G", 0, b, xp)
    for t in (1.0, 3.5):
        m = _diag_moments(spec, t)
        assert m.mean_x.real == pytest.approx(float(xp(t)), abs=1e-6)
        assert m.mean_p.real == pytest.approx(float(St.classical_momentum(xp, full, t)), abs=1e-6)


def test_minimum_uncertainty(sho_basis):
    spec = St.StateSpec("S", 0, sho_basis)
    assert Ob.uncertainty_diagonal(0, spec, 1.0) == pytest.approx(0.25, rel=1e-12)
    assert Ob.uncertainty_diagonal(1, spec, 1.0) == pytest.approx(2.25, rel=1e-12)


def test_pulsating_product_vs_quadrature(sho):
    spec = St.StateSpec("S", 0, C.standard_basis(sho, 0.0, v0=(0.0, 2.0), **TIGHT))
    t = math.pi / 8
    for m in (0, 2):
        closed = Ob.uncertainty_diagonal(m, spec, t)
        assert closed > (m + 0.5) ** 2
        assert Ob.uncertainty_quadrature(m, 0, spec, t).real == pytest.approx(closed, rel=1e-5)


def test_offset_two_sho(sho_basis):
    spec = St.StateSpec("S", 0, sho_basis)
    t = 0.6
    ref = -0.5 * cmath.exp(4j * t)
    for form in Ob.FORMS:
        assert abs(Ob.uncertainty_offdiag(0, 2, spec, t, form) - ref) <= 1e-9


def test_offset_one_without_drive(sho_basis):
    # with x_p = p_p = 0 the drive terms drop out of both bracketed factors
    spec = St.StateSpec("S", 0, sho_basis)
    t, m = 0.9, 1
    w = cmath.exp(1j * t)
    g = 1j
    ref = (1 / math.sqrt(2) * (m + 1) ** 1.5 * w**3 * (-1) * g
           * (-0.5 * math.sqrt((m + 1) / 2) * w * g))
    assert abs(Ob.uncertainty_offdiag(m, 1, spec, t, "uv") - ref) <= 1e-9
    rt = Ob.uncertainty_offdiag(m, 1, spec, t, "rho_theta")
    assert abs(rt - ref) <= 1e-9 * abs(ref)


def test_matrix_convention_offset_one(sho):
    spec = St.StateSpec("S", 0, C.standard_basis(sho, 0.0, v0=(0.0, 2.0), **TIGHT))
    t = 1.2
    closed = Ob.uncertainty_offdiag(0, 1, spec, t)
    quad = Ob.uncertainty_quadrature(0, 1, spec, t, "matrix")
    assert abs(quad - closed) <= 1e-6 * abs(closed)


def test_report_rows(sho_basis):
    spec = St.StateSpec("S", 0, sho_basis)
    rows = Ob.uncertainty_report(spec, [0, 1], [0, 2], [0.0, 1.0])
    assert [(r.t, r.m, r.offset) for r in rows][:3] == [(0.0, 0, 0), (0.0, 0, 2), (0.0, 1, 0)]
    assert max(r.rel_err for r in rows) <= 1e-5


def test_errors(sho_basis):
    spec = St.StateSpec("S", 0, sho_basis)
    with pytest.raises(ValidationError):
        Ob.uncertainty_offdiag(0, 3, spec, 1.0)
    with pytest.raises(ValidationError):
        Ob.uncertainty_diagonal(0, spec, 1.0, form="polar")
    with pytest.raises(ValidationError):
        Ob.uncertainty_quadrature(0, 1, spec, 1.0, convention="bra")


@pytest.fixture(scope="module")
def ck_spec():
    sc = S.caldirola_kanai()
    return St.StateSpec("S", 0, C.standard_basis(sc, 0.0, v0=(0.4, 1.2), **TIGHT).oriented())


@settings(max_examples=25, deadline=None)
@given(t=st.floats(0, 10), m=st.integers(0, 20))
def test_heisenberg_bound(ck_spec, t, m):
    assert Ob.uncertainty_diagonal(m, ck_spec, t) >= (m + 0.5) ** 2 * (1 - 1e-12)


@settings(max_examples=25, deadline=None)
@given(t=st.floats(0, 10), m=st.integers(0, 6), offset=st.sampled_from([0, 2]))
def test_parametrizations_agree(ck_spec, t, m, offset):
    if offset == 0:
        a, b = (Ob.uncertainty_diagonal(m, ck_spec, t, f) for f in Ob.FORMS)
    else:
        a, b = (Ob.uncertainty_offdiag(m, offset, ck_spec, t, f) for f in Ob.FORMS)
    assert abs(a - b) <= 1e-10 * abs(a)
