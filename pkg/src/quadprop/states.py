"""Exact wave functions of the undriven (S), driven (F) and general (G) systems.

Every state is built from a homogeneous basis {u, v} with positive
Wronskian and, for F and G, a particular solution x_p:

    psi_n = (Omega/pi hbar)^(1/4) / sqrt(2^n n! rho) * exp(-i (n + 1/2) theta)
            * exp[(x - x_p)^2/(2 hbar) (-Omega/rho^2 + i M rhodot/rho)]
            * H_n(sqrt(Omega/hbar) (x - x_p)/rho) * (drive and gauge phases)

The Gaussian-Hermite part is evaluated with normalized Hermite functions,
so no factorials are formed and n up to 512 is safe.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from . import _accel
from .action import integrate
from .classical import ClassicalBasis, ParticularSolution
from .errors import NumericalError, ValidationError
from .grid import ComplexGridFunction
from .scenario import Scenario, evaluate

N_MAX_SUPPORTED = 512
VARIANTS = ("S", "F", "G")


def hermite_scaled(n: int, y: float) -> tuple[float, int]:
    """Physicists' H_n(y) as (mantissa, exponent): value = mantissa * 2**exponent."""
    if n < 0 or n > N_MAX_SUPPORTED:
        raise ValidationError(f"Hermite order must be in [0, {N_MAX_SUPPORTED}], got {n}")
    y = float(y)
    if n == 0:
        return 1.0, 0
    prev, cur, expo = 1.0, 2.0 * y, 0
    for k in range(1, n):
        prev, cur = cur, 2.0 * y * cur - 2.0 * k * prev
        if abs(cur) > 2.0**200:
            _, e = math.frexp(cur)
            prev, cur, expo = math.ldexp(prev, -e), math.ldexp(cur, -e), expo + e
    return cur, expo


def hermite(n: int, y: float) -> float:
    """Physicists' Hermite polynomial H_n(y) by the three-term recurrence.

    Raises OverflowError when the value is not representable as a float.
    """
    m, e = hermite_scaled(n, y)
    return math.ldexp(m, e)


def hermite_functions(n_max: int, y) -> np.ndarray:
    """phi_n(y) = H_n(y) exp(-y^2/2) / sqrt(2^n n! sqrt(pi)) for n = 0..n_max."""
    if n_max < 0 or n_max > N_MAX_SUPPORTED:
        raise ValidationError(f"n_max must be in [0, {N_MAX_SUPPORTED}]")
    y = np.asarray(y, dtype=float)
    return _accel.hermite_functions(int(n_max), y.ravel()).reshape((n_max + 1,) + y.shape)


@dataclass(frozen=True)
class StateSpec:
    variant: str
    n: int
    basis: ClassicalBasis
    particular: Optional[ParticularSolution] = None
    t0: Optional[float] = None
    phase_form: str = "regular"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}")
        if not 0 <= self.n <= N_MAX_SUPPORTED:
            raise ValidationError(f"n must be in [0, {N_MAX_SUPPORTED}]")
        if self.basis.Omega <= 0:
            raise ValidationError("states need Omega > 0; use basis.oriented()")
        if self.variant != "S" and self.particular is None:
            raise ValidationError(f"variant {self.variant} needs a particular solution")
        if self.phase_form not in ("regular", "verbatim"):
            raise ValidationError("phase_form must be 'regular' or 'verbatim'")

    @property
    def scenario(self) -> Scenario:
        return self.basis.scenario

    @property
    def ref_time(self) -> float:
        return self.basis.t_a if self.t0 is None else self.t0

    def with_n(self, n: int) -> "StateSpec":
        return replace(self, n=n)


class GaussianParams(NamedTuple):
    gamma1: float
    gamma2: float
    gamma1p: float
    gamma2p: float


def _x_p(spec: StateSpec, t):
    if spec.variant == "S":
        return 0.0, 0.0
    return float(spec.particular(t)), float(spec.particular.deriv(t))


def _drive_tail(spec: StateSpec, t: float) -> float:
    """-(M/2)(vdot/v) x_p^2 - 1/2 int_{t0}^t M (x_p vdot/v - xdot_p)^2 dz.

    The 'regular' form uses the identity
        tail = -M xdot_p x_p + int_{t0}^t L_F(x_p) dz + C0,
        C0 = [M xdot_p x_p - (M/2)(vdot/v) x_p^2] at t0,
    which stays finite where v vanishes.  C0 is dropped when v(t0) = 0 and
    x_p(t0) != 0, where the printed form has no finite value.
    """
    xp, sc, v = spec.particular, spec.scenario, spec.basis.v
    t0 = spec.ref_time
    if spec.phase_form == "verbatim":
        return _drive_tail_verbatim(spec, t)
    M = float(sc.M(t))
    tail = -M * float(xp.deriv(t)) * float(xp(t)) + float(xp.lagrangian_integral(t0, t))
    x0 = float(xp(t0))
    if x0 != 0.0:
        M0, v0 = float(sc.M(t0)), float(v(t0))
        c0 = M0 * float(xp.deriv(t0)) * x0
        if v0 != 0.0:
            c0 -= 0.5 * M0 * float(v.deriv(t0)) / v0 * x0 * x0
        tail += c0
    return tail


def _drive_tail_verbatim(spec: StateSpec, t: float) -> float:
    xp, sc, v = spec.particular, spec.scenario, spec.basis.v
    t0 = spec.ref_time
    lo, hi = min(t0, t), max(t0, t)
    ts = np.linspace(lo, hi, 513)
    vs = v(ts)
    if np.any(np.sign(vs[1:]) * np.sign(vs[:-1]) < 0) or float(v(t)) == 0:
        raise NumericalError(f"v vanishes between t0={t0} and t={t}; printed phase is singular "
                             "there (use phase_form='regular')", t=t)

    def integrand(z):
        return float(sc.M(z)) * (float(xp(z)) * float(v.deriv(z)) / float(v(z)) - float(xp.deriv(z))) ** 2

    M = float(sc.M(t))
    return (-0.5 * M * float(v.deriv(t)) / float(v(t)) * float(xp(t)) ** 2
            - 0.5 * integrate(integrand, t0, t, epsabs=1e-13))


def _core(spec: StateSpec, n_max: int, x, t):
    """Hermite-Gaussian part in the moving frame, all orders up to n_max.

    Returns (rows, xi, M) where rows[n] carries prefactor, theta phase,
    Gaussian with chirp and Hermite factor.
    """
    b = spec.basis
    sc = b.scenario
    sc.check_time(t)
    rt = b.polar
    rho, rhod, th = float(rt.rho(t)), float(rt.rho_dot(t)), float(rt.theta(t))
    M = float(sc.M(t))
    hb = sc.hbar
    x = np.asarray(x, dtype=float)
    xp, _ = _x_p(spec, t)
    xi = x - xp
    y = math.sqrt(b.Omega / hb) * xi / rho
    phi = hermite_functions(n_max, y)
    amp = (b.Omega / hb) ** 0.25 / math.sqrt(rho)
    chirp = np.exp(1j * M * rhod / (2 * hb * rho) * xi * xi)
    theta_phase = np.exp(-1j * (np.arange(n_max + 1) + 0.5) * th)
    shape = (n_max + 1,) + (1,) * x.ndim
    rows = amp * theta_phase.reshape(shape) * phi * chirp
    return rows, xi, M


def wavefunctions(spec: StateSpec, n_max: int, x, t) -> np.ndarray:
    """psi_0 .. psi_{n_max} of the spec's variant at (x, t); shape (n_max+1, *x.shape)."""
    rows, xi, M = _core(spec, n_max, x, t)
    if spec.variant == "S":
        return rows
    x = np.asarray(x, dtype=float)
    hb = spec.scenario.hbar
    xp, dxp = _x_p(spec, t)
    tail = _drive_tail(spec, t)
    if spec.variant == "F":
        return rows * np.exp(1j / hb * (M * dxp * x + tail))
    k = evaluate(spec.scenario, t)
    gauge = np.exp(1j / hb * (float(k.M * k.a) * x * x + (M * dxp + float(k.b)) * x))
    f_int = float(spec.particular.f_integral(spec.ref_time, t))
    return rows * gauge * np.exp(1j / hb * (tail + f_int))


def psi(spec: StateSpec, x, t) -> np.ndarray:
    """psi_n(x, t) for the spec's variant and order."""
    return wavefunctions(spec, spec.n, x, t)[spec.n]


def width(spec: StateSpec, t: float) -> float:
    """Standard deviation of |psi_0|^2: rho sqrt(hbar / (2 Omega))."""
    return float(spec.basis.polar.rho(t)) * math.sqrt(spec.scenario.hbar / (2 * spec.basis.Omega))


def center(spec: StateSpec, t: float) -> float:
    return _x_p(spec, t)[0]


def window(spec: StateSpec, t: float, n_sigma: float = 8.0) -> tuple[float, float]:
    """(x_min, x_max) covering n_sigma ground-state widths around x_p(t)."""
    c, s = center(spec, t), width(spec, t)
    return c - n_sigma * s, c + n_sigma * s


def sample(spec: StateSpec, t: float, x_min: float, x_max: float, n_points: int) -> ComplexGridFunction:
    x = np.linspace(x_min, x_max, n_points)
    return ComplexGridFunction(x_min, x_max, psi(spec, x, t), t)


def gaussian_params(spec: StateSpec, t: float) -> GaussianParams:
    """Complex width parameters gamma = gamma1 + i gamma2 and gamma'."""
    b, sc = spec.basis, spec.scenario
    rt = b.polar
    rho, rhod = float(rt.rho(t)), float(rt.rho_dot(t))
    M, hb = float(sc.M(t)), sc.hbar
    a = float(sc.a(t)) if spec.variant == "G" else 0.0
    g1 = b.Omega / (hb * rho**2)
    g2 = -M * rhod / (hb * rho)
    return GaussianParams(g1, g2, g1, -(M / hb) * (2 * a + rhod / rho))


def classical_momentum(x_p, scenario: Scenario, t) -> float:
    """p_p = M xdot_p + 2 M a x_p + b."""
    k = evaluate(scenario, t)
    return k.M * x_p.deriv(t) + 2 * k.M * k.a * x_p(t) + k.b


def gaussian_form(spec: StateSpec, x, t) -> np.ndarray:
    """Displaced squeezed Gaussian times H_n, without the real phase exp(i delta)."""
    g = gaussian_params(spec, t)
    hb = spec.scenario.hbar
    x = np.asarray(x, dtype=float)
    xp, _ = _x_p(spec, t)
    if spec.variant == "S":
        pp = 0.0
    elif spec.variant == "F":
        pp = float(spec.scenario.M(t)) * float(spec.particular.deriv(t))
    else:
        pp = float(classical_momentum(spec.particular, spec.scenario, t))
    gp = complex(g.gamma1p, g.gamma2p)
    xi = x - xp
    phi = hermite_functions(spec.n, math.sqrt(g.gamma1) * xi)[spec.n]
    # phi_n already carries (1/sqrt(pi))^(1/2)/sqrt(2^n n!) and exp(-gamma1 xi^2/2)
    return (g.gamma1 ** 0.25 * phi * np.exp(-0.5j * gp.imag * xi * xi)
            * np.exp(1j * x * pp / hb))


def phase_delta(spec: StateSpec, t: float) -> float:
    """Real phase delta(t) with psi_n = exp(i delta) * gaussian_form."""
    xp = center(spec, t)
    x_star = xp + 0.37 * width(spec, t)  # off the Hermite nodes at x_p
    ratio = psi(spec, np.array([x_star]), t)[0] / gaussian_form(spec, np.array([x_star]), t)[0]
    return float(np.angle(ratio))


def apply_unitary_U(scenario: Scenario, psi_F: ComplexGridFunction, t: float,
                    t0: float) -> ComplexGridFunction:
    """Multiply by exp[(i/hbar)(M a x^2 + b x + int_{t0}^t f)]."""
    k = evaluate(scenario, t)
    x = psi_F.x
    f_int = integrate(scenario.f, t0, t, epsabs=1e-13)
    phase = float(k.M * k.a) * x * x + float(k.b) * x + f_int
    return psi_F.with_values(psi_F.values * np.exp(1j / scenario.hbar * phase), t)
