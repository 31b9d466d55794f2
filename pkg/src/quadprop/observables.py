"""Quadrature moments and closed-form uncertainty products.

Matrix elements follow  _n<O>_m = int conj(psi_n) O psi_m dx  with
p = -i hbar d/dx.  Closed forms exist in two parametrizations: through
(u, v, rho, Omega) and through (rho, theta).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ValidationError
from .grid import ComplexGridFunction
from .scenario import Scenario, evaluate
from .states import StateSpec, classical_momentum, wavefunctions

FORMS = ("uv", "rho_theta")
CONVENTIONS = ("ket", "matrix")


@dataclass(frozen=True)
class MomentSet:
    mean_x: complex
    mean_x2: complex
    mean_p: complex
    mean_p2: complex
    bra_index: int = 0
    ket_index: int = 0


def _d1(v, dx):
    p = np.concatenate([[0, 0], v, [0, 0]])
    return (-p[4:] + 8 * p[3:-1] - 8 * p[1:-3] + p[:-4]) / (12 * dx)


def _d2(v, dx):
    p = np.concatenate([[0, 0], v, [0, 0]])
    return (-p[4:] + 16 * p[3:-1] - 30 * p[2:-2] + 16 * p[1:-3] - p[:-4]) / (12 * dx * dx)


def moments(bra: ComplexGridFunction, ket: ComplexGridFunction, scenario: Scenario,
            bra_index: int = 0, ket_index: int = 0, tail_tol: float = 1e-8) -> MomentSet:
    """<x>, <x^2>, <p>, <p^2> between two grid states (4th-order stencils)."""
    if not bra.aligned(ket):
        raise ValidationError("grids are not aligned")
    bra.warn_edges(tail_tol, "bra state")
    ket.warn_edges(tail_tol, "ket state")
    x, dx, hb = ket.x, ket.dx, scenario.hbar
    b = np.conj(bra.values)
    k = ket.values
    return MomentSet(
        ket.integrate(b * x * k),
        ket.integrate(b * x * x * k),
        ket.integrate(b * (-1j * hb) * _d1(k, dx)),
        ket.integrate(b * (-hb * hb) * _d2(k, dx)),
        bra_index, ket_index)


def _context(spec: StateSpec, t: float):
    b, sc = spec.basis, spec.scenario
    rt = b.polar
    k = evaluate(sc, t)
    a = float(k.a) if spec.variant == "G" else 0.0
    out = dict(M=float(k.M), a=a, hbar=sc.hbar, Omega=b.Omega,
               u=float(b.u(t)), v=float(b.v(t)), rho=float(rt.rho(t)),
               rho_dot=float(rt.rho_dot(t)), theta=float(rt.theta(t)),
               theta_dot=float(rt.theta_dot(t)), x_p=0.0, p_p=0.0)
    if spec.variant != "S":
        out["x_p"] = float(spec.particular(t))
        if spec.variant == "F":
            out["p_p"] = out["M"] * float(spec.particular.deriv(t))
        else:
            out["p_p"] = float(classical_momentum(spec.particular, sc, t))
    return out


def uncertainty_diagonal(m: int, spec: StateSpec, t: float, form: str = "uv") -> float:
    """_m<(dx)^2>_m _m<(dp)^2>_m in closed form."""
    c = _context(spec, t)
    hb, M = c["hbar"], c["M"]
    if form == "uv":
        extra = (2 * M * c["a"] * c["rho"] ** 2 + M * c["rho"] * c["rho_dot"]) ** 2 / c["Omega"] ** 2
    elif form == "rho_theta":
        extra = (2 * c["a"] + c["rho_dot"] / c["rho"]) ** 2 / c["theta_dot"] ** 2
    else:
        raise ValidationError(f"form must be one of {FORMS}")
    return (m + 0.5) ** 2 * hb * hb * (1 + extra)


def uncertainty_offdiag(m: int, offset: int, spec: StateSpec, t: float, form: str = "uv") -> complex:
    """_{m+offset}<(dx)^2>_m _{m+offset}<(dp)^2>_m in closed form (offset 1 or 2)."""
    if offset not in (1, 2):
        raise ValidationError("offset must be 1 or 2")
    if form not in FORMS:
        raise ValidationError(f"form must be one of {FORMS}")
    c = _context(spec, t)
    hb, M, a, Om = c["hbar"], c["M"], c["a"], c["Omega"]
    rho, rhod, th, thd = c["rho"], c["rho_dot"], c["theta"], c["theta_dot"]
    xp, pp = c["x_p"], c["p_p"]
    if form == "uv":
        w = complex(c["u"], c["v"])
        g = complex(2 * M * a + M * rhod / rho, Om / rho**2)
        if offset == 2:
            return (m + 2) * (m + 1) * (hb / (2 * Om)) ** 2 * w**4 * g**2
        k = math.sqrt((m + 1) * hb)
        return (1 / math.sqrt(2) * ((m + 1) * hb / Om) ** 1.5 * w**3
                * (2 * math.sqrt(2 * Om) * xp / (k * w) - 1) * g
                * (pp - 0.5 * math.sqrt((m + 1) * hb / (2 * Om)) * w * g))
    W = complex(2 * a + rhod / rho, thd)
    e4 = cmath.exp(4j * th)
    if offset == 2:
        return (m + 1) * (m + 2) / 4 * hb * hb * e4 / thd**2 * W * W
    e1 = cmath.exp(-1j * th)
    return ((m + 1) ** 2 / 4 * hb * hb * e4 / thd**2
            * (1 - 2 * math.sqrt(2 * M * thd) / math.sqrt((m + 1) * hb) * xp * e1) * W
            * (W - 2 * math.sqrt(2 * thd) / math.sqrt((m + 1) * M * hb) * pp * e1))


def moment_window(spec: StateSpec, n_max: int, t: float, n_points: int = 2048):
    """Grid wide enough for psi_0 .. psi_{n_max}: x_p +- (sqrt(2n+1) + 6) / sqrt(gamma1)."""
    c = _context(spec, t)
    g1 = c["Omega"] / (c["hbar"] * c["rho"] ** 2)
    half = (math.sqrt(2 * n_max + 1) + 6) / math.sqrt(g1)
    return c["x_p"] - half, c["x_p"] + half, n_points


def uncertainty_quadrature(m: int, offset: int, spec: StateSpec, t: float,
                           convention: str = "ket", n_points: int = 2048) -> complex:
    """Quadrature value of the same products.

    ``ket``: dx = x - _m<x>_m and dp = p - _m<p>_m (means of the ket state).
    ``matrix``: _n<(dO)^2>_m := _n<O^2>_m - (_n<O>_m)^2.
    For offset 0 the two agree.
    """
    if convention not in CONVENTIONS:
        raise ValidationError(f"convention must be one of {CONVENTIONS}")
    n = m + offset
    lo, hi, npts = moment_window(spec, n, t, n_points)
    x = np.linspace(lo, hi, npts)
    rows = wavefunctions(spec, n, x, t)
    bra = ComplexGridFunction(lo, hi, rows[n], t)
    ket = ComplexGridFunction(lo, hi, rows[m], t)
    sc = spec.scenario
    mo = moments(bra, ket, sc, n, m)
    if convention == "matrix" or offset == 0:
        dx2 = mo.mean_x2 - mo.mean_x**2
        dp2 = mo.mean_p2 - mo.mean_p**2
    else:
        diag = moments(ket, ket, sc, m, m)
        mx, mp = diag.mean_x.real, diag.mean_p.real
        dx2 = mo.mean_x2 - 2 * mx * mo.mean_x
        dp2 = mo.mean_p2 - 2 * mp * mo.mean_p
    return complex(dx2 * dp2)


@dataclass(frozen=True)
class UncertaintyRow:
    t: float
    m: int
    offset: int
    closed: complex
    quad: complex

    @property
    def rel_err(self) -> float:
        scale = max(abs(self.closed), abs(self.quad))
        return abs(self.closed - self.quad) / scale if scale > 0 else 0.0


def uncertainty_report(spec: StateSpec, ms: Iterable[int], offsets: Iterable[int],
                       ts: Iterable[float], convention: str = "ket",
                       form: str = "uv") -> list[UncertaintyRow]:
    """Closed form vs quadrature for every (t, m, offset)."""
    rows = []
    for t in ts:
        for m in ms:
            for off in offsets:
                closed = (complex(uncertainty_diagonal(m, spec, t, form)) if off == 0
                          else uncertainty_offdiag(m, off, spec, t, form))
                quad = uncertainty_quadrature(m, off, spec, t, convention)
                rows.append(UncertaintyRow(float(t), int(m), int(off), closed, quad))
    return rows
