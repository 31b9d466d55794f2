"""Classical actions in closed form and a quadrature oracle."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .classical import ParticularSolution, ShiftedBasis, Trajectory
from .errors import NumericalError, ValidationError
from .scenario import Scenario, evaluate

TOL_QUAD = 1e-10


def integrate(fn, a: float, b: float, epsabs: float = TOL_QUAD, epsrel: float = 1e-12,
              points=None) -> float:
    """Adaptive Gauss-Kronrod quadrature that raises instead of warning."""
    if a == b:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, err = quad(lambda s: float(fn(s)), a, b, epsabs=epsabs, epsrel=epsrel,
                            limit=400, points=points)
        except IntegrationWarning as exc:
            raise NumericalError(f"quadrature on [{a}, {b}] did not converge: {exc}")
    return val


@dataclass(frozen=True)
class Endpoints:
    t_a: float
    t_b: float
    x_a: float
    x_b: float

    def __post_init__(self):
        if not self.t_b > self.t_a:
            raise ValidationError(f"need t_b > t_a, got {self.t_a}, {self.t_b}")


def _ratios(shifted: ShiftedBasis, t_a, t_b):
    """Quadratic-form pieces shared by every action and kernel.

    Returns (P, Q, R) with
      P = M_a (-udot_a/u_a + u_b vdot_s(t_a) / (u_a v_s(t_b)))
      Q = M_b vdot_s(t_b) / v_s(t_b)
      R = M_a vdot_s(t_a) / v_s(t_b)
    """
    shifted.check_caustic(t_b)
    sc = shifted.scenario
    u, vs = shifted.u, shifted.v_s
    Ma, Mb = float(sc.M(t_a)), float(sc.M(t_b))
    ua, dua, ub = float(u(t_a)), float(u.deriv(t_a)), float(u(t_b))
    dvsa, vsb, dvsb = float(vs.deriv(t_a)), float(vs(t_b)), float(vs.deriv(t_b))
    P = Ma * (-dua / ua + ub * dvsa / (ua * vsb))
    Q = Mb * dvsb / vsb
    R = Ma * dvsa / vsb
    return P, Q, R


def action_S(shifted: ShiftedBasis, ep: Endpoints, scenario: Scenario | None = None) -> float:
    """Classical action of the undriven oscillator as a quadratic form."""
    sc = scenario or shifted.scenario
    t_a, t_b, x_a, x_b = ep.t_a, ep.t_b, ep.x_a, ep.x_b
    shifted.check_caustic(t_b)
    u, vs = shifted.u, shifted.v_s
    Ma, Mb = float(sc.M(t_a)), float(sc.M(t_b))
    ua, dua, ub, dub = float(u(t_a)), float(u.deriv(t_a)), float(u(t_b)), float(u.deriv(t_b))
    dvsa, vsb, dvsb = float(vs.deriv(t_a)), float(vs(t_b)), float(vs.deriv(t_b))
    return (x_a**2 / 2 * Ma * (-dua / ua + ub / ua * dvsa / vsb)
            + x_b**2 / 2 * Mb * dvsb / vsb
            + x_a * x_b / 2 * (Mb * (dub / ua - ub * dvsb / (ua * vsb)) - Ma * dvsa / vsb))


def phase_integral_Y(x_p, scenario: Scenario, t0: float, t: float) -> float:
    """Y(t) = integral from t0 to t of x_p F / 2."""
    scenario.check_time([t0, t])
    return integrate(lambda s: 0.5 * x_p(s) * scenario.F(s), t0, t)


def delta_S1(x_p, scenario: Scenario, t: float, t0: float) -> float:
    """Boundary function M xdot_p x_p / 2 + Y(t) split off the driven action."""
    return 0.5 * float(scenario.M(t)) * float(x_p.deriv(t)) * float(x_p(t)) + phase_integral_Y(x_p, scenario, t0, t)


def action_F_tilde(shifted: ShiftedBasis, x_p, ep: Endpoints, scenario: Scenario | None = None) -> float:
    """End-point dependent part of the driven action, printed form."""
    sc = scenario or shifted.scenario
    P, Q, R = _ratios(shifted, ep.t_a, ep.t_b)
    ya = ep.x_a - float(x_p(ep.t_a))
    yb = ep.x_b - float(x_p(ep.t_b))
    Ma, Mb = float(sc.M(ep.t_a)), float(sc.M(ep.t_b))
    return (P * ya**2 / 2 + Q * yb**2 / 2 - R * ya * yb
            + Mb * float(x_p.deriv(ep.t_b)) * ep.x_b - Ma * float(x_p.deriv(ep.t_a)) * ep.x_a)


def action_G_tilde(shifted: ShiftedBasis, x_p, ep: Endpoints, scenario: Scenario | None = None) -> float:
    """Driven part plus the gauge terms M a x^2 + b x at both ends."""
    sc = scenario or shifted.scenario
    ka, kb = evaluate(sc, ep.t_a), evaluate(sc, ep.t_b)
    return (action_F_tilde(shifted, x_p, ep, sc)
            + float(kb.M * kb.a) * ep.x_b**2 - float(ka.M * ka.a) * ep.x_a**2
            + float(kb.b) * ep.x_b - float(ka.b) * ep.x_a)


def classical_action(variant: str, shifted: ShiftedBasis, x_p, ep: Endpoints,
                     scenario: Scenario | None = None, t0: float | None = None) -> float:
    """Full classical action rebuilt from the closed-form pieces.

    The printed tilde action keeps ``M xdot_p x`` at both ends, which differs
    from the bracket definition by ``M xdot_p x_p`` at the ends; that term is
    removed before adding the boundary function back.
    """
    sc = scenario or shifted.scenario
    if variant == "S":
        return action_S(shifted, ep, sc)
    if variant not in ("F", "G"):
        raise ValidationError(f"unknown variant {variant!r}")
    t0 = ep.t_a if t0 is None else t0
    tilde = (action_F_tilde if variant == "F" else action_G_tilde)(shifted, x_p, ep, sc)
    out = tilde
    for sign, t in ((1.0, ep.t_b), (-1.0, ep.t_a)):
        out += sign * (delta_S1(x_p, sc, t, t0) - float(sc.M(t)) * float(x_p.deriv(t)) * float(x_p(t)))
    if variant == "G":
        out += integrate(sc.f, ep.t_a, ep.t_b)
    return out


def lagrangian(variant: str, scenario: Scenario, x, xdot, t):
    """Lagrangian density of the S, F or G system along a path."""
    k = evaluate(scenario, t)
    L = 0.5 * k.M * xdot**2 - 0.5 * k.M * k.w2 * x**2
    if variant == "S":
        return L
    L = L + k.F * x
    if variant == "F":
        return L
    if variant != "G":
        raise ValidationError(f"unknown variant {variant!r}")
    # d/dt(M a x^2) + d/dt(b x) + f, expanded
    return (L + (k.dM * k.a + k.M * k.da) * x**2 + 2 * k.M * k.a * x * xdot
            + k.db * x + k.b * xdot + k.f)


def action_numeric(scenario: Scenario, path: Trajectory, t_a: float, t_b: float,
                   lagrangian_variant: str = "S", epsabs: float = TOL_QUAD) -> float:
    """Quadrature of the chosen Lagrangian along ``path``."""
    scenario.check_time([t_a, t_b])
    return integrate(lambda s: lagrangian(lagrangian_variant, scenario, path(s), path.deriv(s), s),
                     t_a, t_b, epsabs=epsabs)
