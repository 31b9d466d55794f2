"""Independent verification: finite-difference residuals and Crank-Nicolson.

Nothing here knows about the closed-form kernels or states; the oracle
only sees the Hamiltonian

    H = p^2/2M - a (p x + x p) + M c x^2/2 - (b/M) p + d x + (b^2/2M - f)

with p = -i hbar d/dx.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _accel
from .errors import ValidationError
from .grid import ComplexGridFunction, TruncationWarning
from .scenario import Scenario, derived_coefficients, evaluate

TOL_PDE = 1e-5


@dataclass(frozen=True)
class HamiltonianTerms:
    """Scalar coefficients of H at one time for the S, F or G system."""

    M: float
    a: float
    b_over_M: float
    half_Mc: float
    d: float
    e0: float

    def as_row(self):
        return (self.M, self.a, self.b_over_M, self.half_Mc, self.d, self.e0)


def hamiltonian_terms(scenario: Scenario, t: float, variant: str = "G") -> HamiltonianTerms:
    k = evaluate(scenario, t)
    M = float(k.M)
    if variant == "S":
        return HamiltonianTerms(M, 0.0, 0.0, 0.5 * M * float(k.w2), 0.0, 0.0)
    if variant == "F":
        return HamiltonianTerms(M, 0.0, 0.0, 0.5 * M * float(k.w2), -float(k.F), 0.0)
    if variant != "G":
        raise ValidationError(f"unknown variant {variant!r}")
    dc = derived_coefficients(scenario, t)
    b = float(k.b)
    return HamiltonianTerms(M, float(k.a), b / M, 0.5 * M * float(dc.c), float(dc.d),
                            b * b / (2 * M) - float(k.f))


def _d1(v, dx):
    return (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * dx)


def _d2(v, dx):
    return (-v[4:] + 16 * v[3:-1] - 30 * v[2:-2] + 16 * v[1:-3] - v[:-4]) / (12 * dx * dx)


def _apply_padded(values, x, dx, hbar, h: HamiltonianTerms):
    """H on interior points of a grid carrying two ghost points per side."""
    core = values[2:-2]
    xc = x[2:-2]
    dpsi = _d1(values, dx)
    dxpsi = _d1(x * values, dx)
    return (-(hbar**2) / (2 * h.M) * _d2(values, dx)
            + 1j * hbar * h.a * (xc * dpsi + dxpsi)
            + h.half_Mc * xc * xc * core
            + 1j * hbar * h.b_over_M * dpsi
            + h.d * xc * core
            + h.e0 * core)


def hamiltonian_apply(scenario: Scenario, psi: ComplexGridFunction, t: float,
                      variant: str = "G") -> ComplexGridFunction:
    """Apply H with 4th-order central stencils and zero (Dirichlet) padding."""
    h = hamiltonian_terms(scenario, t, variant)
    dx = psi.dx
    x = psi.x
    xp = np.concatenate([x[0] - dx * np.array([2, 1]), x, x[-1] + dx * np.array([1, 2])])
    vals = np.concatenate([[0, 0], psi.values, [0, 0]])
    return psi.with_values(_apply_padded(vals, xp, dx, scenario.hbar, h), t)


@dataclass(frozen=True)
class ResidualReport:
    l2_residual: float
    linf_residual: float
    edge_mass: float
    norm: float
    dt: float
    dx: float
    stencil: str = "4th-order central (x and t)"


def schrodinger_residual(evaluator: Callable, scenario: Scenario, grid, t: float,
                         dt: float = 1e-4, variant: str = "G") -> ResidualReport:
    """Residual i hbar dpsi/dt - H psi of an evaluable state ``evaluator(x, t)``.

    ``grid`` is (x_min, x_max, n_points).  Spatial stencils use the evaluator
    at two ghost points beyond each edge, so no boundary condition enters.
    Norms are relative: l2 to ||psi||, linf to max|psi|.
    """
    x_min, x_max, n = grid
    if n < 16:
        raise ValidationError("grid needs at least 16 points")
    x = np.linspace(x_min, x_max, n)
    dx = x[1] - x[0]
    xg = np.concatenate([x[0] - dx * np.array([2, 1]), x, x[-1] + dx * np.array([1, 2])])
    hb = scenario.hbar
    p0 = np.asarray(evaluator(xg, t))
    dpdt = (-evaluator(x, t + 2 * dt) + 8 * evaluator(x, t + dt)
            - 8 * evaluator(x, t - dt) + evaluator(x, t - 2 * dt)) / (12 * dt)
    h = hamiltonian_terms(scenario, t, variant)
    r = 1j * hb * dpdt - _apply_padded(p0, xg, dx, hb, h)
    core = p0[2:-2]
    norm = float(np.sqrt(np.trapezoid(np.abs(core) ** 2, dx=dx)))
    l2 = float(np.sqrt(np.trapezoid(np.abs(r) ** 2, dx=dx))) / norm
    linf = float(np.max(np.abs(r)) / np.max(np.abs(core)))
    edge = ComplexGridFunction(x_min, x_max, core, t).edge_mass()
    return ResidualReport(l2, linf, edge, norm, dt, dx)


def crank_nicolson_evolve(scenario: Scenario, psi0: ComplexGridFunction, t_a: float, t_b: float,
                          n_steps: int, variant: str = "G") -> ComplexGridFunction:
    """Evolve with implicit-midpoint (Crank-Nicolson) steps.

    Second-order central differences give a Hermitian tridiagonal H (the
    x p + p x and p terms use symmetric bond averages), so each step is
    unitary up to round-off.  Coefficients are frozen at step midpoints.
    """
    if n_steps < 1:
        raise ValidationError("n_steps must be >= 1")
    scenario.check_time([t_a, t_b])
    dt = (t_b - t_a) / n_steps
    mids = t_a + (np.arange(n_steps) + 0.5) * dt
    coefs = np.array([hamiltonian_terms(scenario, tm, variant).as_row() for tm in mids])
    x = psi0.x
    dx = psi0.dx
    # rough spectral radius: kinetic cutoff plus potential extremes
    hmax = scenario.hbar**2 * 2 / (np.min(coefs[:, 0]) * dx * dx) + np.max(
        np.abs(coefs[:, 3:4] * x * x + coefs[:, 4:5] * x + coefs[:, 5:6]))
    if abs(dt) * hmax / scenario.hbar > 1e4:
        warnings.warn(f"dt*|H|/hbar ~ {abs(dt) * hmax / scenario.hbar:.1e}: time step too coarse "
                      "for accurate Crank-Nicolson", RuntimeWarning, stacklevel=2)
    try:
        out = _accel.cn_evolve(psi0.values, x, dx, scenario.hbar, dt, coefs)
    except (np.linalg.LinAlgError, ZeroDivisionError) as exc:
        raise ValidationError(f"Crank-Nicolson linear solve failed: {exc}")
    result = ComplexGridFunction(psi0.x_min, psi0.x_max, out, t_b)
    mass = result.edge_mass()
    if mass > 1e-6:
        warnings.warn(f"Crank-Nicolson edge mass {mass:.2e}; Dirichlet walls are reflecting",
                      TruncationWarning, stacklevel=2)
    return result
