"""Classical layer: equation of motion, homogeneous bases, particular solutions.

The equation of motion ``d/dt(M xdot) + M w^2 x = F`` is integrated in the
canonical-like variables ``(x, M xdot)`` with an adaptive 8th-order
Runge-Kutta scheme and dense output.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import AnchorError, CausticError, DegenerateBasisError, NumericalError, ValidationError
from .scenario import Scenario, evaluate

RTOL = 1e-10
ATOL = 1e-12
TOL_WRONSKIAN = 1e-8
TOL_DEGENERATE = 1e-12


class Trajectory:
    """A real function of time with first and second derivatives.

    Trajectories combine linearly (``2 * u + v``) which is how shifted and
    rescaled bases are built.
    """

    def __call__(self, t):
        raise NotImplementedError

    def deriv(self, t):
        raise NotImplementedError

    def accel(self, t):
        raise NotImplementedError

    def _terms(self):
        return ((1.0, self),)

    def __add__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return Combination(self._terms() + other._terms())

    def __sub__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self + (-1.0) * other

    def __mul__(self, c):
        if isinstance(c, Trajectory):
            return NotImplemented
        return Combination(tuple((float(c) * k, tr) for k, tr in self._terms()))

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self


class Combination(Trajectory):
    def __init__(self, terms):
        self.terms = tuple(terms)

    def _terms(self):
        return self.terms

    def _sum(self, method, t):
        out = 0.0
        for c, tr in self.terms:
            out = out + c * getattr(tr, method)(t)
        return out

    def __call__(self, t):
        return self._sum("__call__", t)

    def deriv(self, t):
        return self._sum("deriv", t)

    def accel(self, t):
        return self._sum("accel", t)


class Analytic(Trajectory):
    """Closed-form trajectory, mostly for tests and textbook cases."""

    def __init__(self, fn, dfn, ddfn=None):
        self.fn, self.dfn, self.ddfn = fn, dfn, ddfn

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))

    def deriv(self, t):
        return self.dfn(np.asarray(t, dtype=float))

    def accel(self, t):
        if self.ddfn is None:
            h = 1e-5
            return (self.dfn(np.asarray(t) + h) - self.dfn(np.asarray(t) - h)) / (2 * h)
        return self.ddfn(np.asarray(t, dtype=float))


class OdeTrajectory(Trajectory):
    """Dense-output solution; component 0 is x, component 1 is M xdot.

    Extra components (running integrals) are available through
    :meth:`component`.
    """

    def __init__(self, scenario: Scenario, t0: float, forward, backward, forced: bool):
        self.scenario = scenario
        self.t0 = float(t0)
        self._fwd = forward
        self._bwd = backward
        self.forced = forced

    def component(self, t, k=None):
        t = np.asarray(t, dtype=float)
        self.scenario.check_time(t)
        flat = np.atleast_1d(t)
        y = np.empty((self._fwd.n if self._fwd else self._bwd.n, flat.size))
        up = flat >= self.t0
        if np.any(up):
            y[:, up] = self._fwd(flat[up])
        if np.any(~up):
            y[:, ~up] = self._bwd(flat[~up])
        if k is not None:
            y = y[k]
            return y.reshape(t.shape) if t.ndim else y[0]
        return y.reshape((-1,) + t.shape)

    def __call__(self, t):
        return self.component(t, 0)

    def deriv(self, t):
        return self.component(t, 1) / self.scenario.M(t)

    def accel(self, t):
        k = evaluate(self.scenario, t)
        x, p = self.component(t, 0), self.component(t, 1)
        force = k.F if self.forced else 0.0
        return (force - k.M * k.w2 * x - k.dM * p / k.M) / k.M


class _DenseSpan:
    """Wraps an OdeSolution so it is callable on arrays and reports its size."""

    def __init__(self, sol):
        self.sol = sol
        self.n = sol(sol.ts[0]).size

    def __call__(self, t):
        return self.sol(t)


def _integrate(scenario, rhs, t0, y0, interval, rtol, atol):
    t_lo, t_hi = interval if interval is not None else scenario.interval
    scenario.check_time([t_lo, t_hi, t0])
    if not t_lo <= t0 <= t_hi:
        raise ValidationError(f"t0={t0} not in [{t_lo}, {t_hi}]")
    spans = []
    for end in (t_hi, t_lo):
        if end == t0:
            spans.append(None)
            continue
        res = solve_ivp(rhs, (t0, end), y0, method="DOP853", dense_output=True,
                        rtol=rtol, atol=atol)
        if res.status != 0:
            raise NumericalError(f"integration failed near t={res.t[-1]}: {res.message}", t=res.t[-1])
        spans.append(_DenseSpan(res.sol))
    fwd, bwd = spans
    if fwd is None and bwd is None:
        raise ValidationError("degenerate integration interval")
    # points exactly at t0 are served by whichever span exists
    return fwd or bwd, bwd or fwd


def solve_homogeneous(scenario: Scenario, t0: float, x0: float, xdot0: float,
                      interval=None, rtol=RTOL, atol=ATOL) -> OdeTrajectory:
    """Solve ``d/dt(M xdot) + M w^2 x = 0`` with dense output."""
    if x0 == 0 and xdot0 == 0:
        raise ValidationError("trivial initial data (0, 0)")

    def rhs(t, y):
        k = evaluate(scenario, t)
        return [y[1] / k.M, -k.M * k.w2 * y[0]]

    m0 = float(scenario.M(t0))
    fwd, bwd = _integrate(scenario, rhs, t0, [x0, m0 * xdot0], interval, rtol, atol)
    return OdeTrajectory(scenario, t0, fwd, bwd, forced=False)


@dataclass(frozen=True)
class ClassicalBasis:
    """Two independent homogeneous solutions and their Wronskian."""

    u: Trajectory
    v: Trajectory
    Omega: float
    t_a: float
    scenario: Scenario
    drift: float = 0.0

    def wronskian(self, t):
        return self.scenario.M(t) * (self.v.deriv(t) * self.u(t) - self.u.deriv(t) * self.v(t))

    @cached_property
    def polar(self) -> "RhoTheta":
        return rho_theta(self)

    def oriented(self) -> "ClassicalBasis":
        """Same basis with v negated when needed so that Omega > 0."""
        if self.Omega > 0:
            return self
        return ClassicalBasis(self.u, -self.v, -self.Omega, self.t_a, self.scenario, self.drift)


@dataclass(frozen=True)
class ShiftedBasis:
    """Basis (u, v_s) with v_s(t_a) = 0."""

    u: Trajectory
    v_s: Trajectory
    Omega_s: float
    t_a: float
    scenario: Scenario

    def wronskian(self, t):
        return self.scenario.M(t) * (self.v_s.deriv(t) * self.u(t) - self.u.deriv(t) * self.v_s(t))

    def check_caustic(self, t_b: float) -> None:
        """Raise :class:`CausticError` if v_s(t_b) vanishes."""
        ts = np.linspace(self.t_a, t_b, 129)[1:]
        vs = self.v_s(ts)
        scale = np.max(np.abs(vs)) if ts.size else 0.0
        if scale == 0 or abs(vs[-1]) <= 1e-8 * scale:
            tc = t_b
            lo = ts[-2] if ts.size > 1 else self.t_a
            hi = min(t_b + (t_b - self.t_a) / 128, self.scenario.interval[1])
            try:
                if np.sign(self.v_s(lo)) != np.sign(self.v_s(hi)):
                    tc = brentq(lambda s: float(self.v_s(s)), lo, hi, xtol=1e-14)
            except (ValueError, NumericalError):
                pass
            raise CausticError(
                f"v_s(t_b) = 0: t_b={t_b} is a conjugate point of t_a={self.t_a} "
                f"(caustic at t={tc:.12g})", t_caustic=tc)

    @cached_property
    def polar(self) -> "RhoTheta":
        return rho_theta(self)

    def caustics_before(self, t_b: float) -> int:
        """Number of zeros of v_s in (t_a, t_b)."""
        rt = self.polar
        return int(np.floor(abs(rt.theta(t_b) - rt.theta(self.t_a)) / np.pi + 1e-12))


class _Shifted(Trajectory):
    """v - (v(t_a)/u(t_a)) u, rescaled; exactly zero at t_a."""

    def __init__(self, combo: Trajectory, t_a: float):
        self.combo, self.t_a = combo, t_a

    def _terms(self):
        return ((1.0, self),)

    def __call__(self, t):
        return np.where(np.asarray(t) == self.t_a, 0.0, self.combo(t))[()]

    def deriv(self, t):
        return self.combo.deriv(t)

    def accel(self, t):
        return self.combo.accel(t)


def _sample_times(scenario, n=257):
    t0, t1 = scenario.interval
    return np.linspace(t0, t1, n)


def make_basis(u: Trajectory, v: Trajectory, scenario: Scenario, t_a: float,
               tol_wronskian: float = TOL_WRONSKIAN, ts=None) -> ClassicalBasis:
    """Validate (u, v) as a basis: constant nonzero Wronskian, u(t_a) != 0."""
    scenario.check_time(t_a)
    m = float(scenario.M(t_a))
    ua, va, dua, dva = float(u(t_a)), float(v(t_a)), float(u.deriv(t_a)), float(v.deriv(t_a))
    omega = m * (dva * ua - dua * va)
    scale = m * (abs(dva * ua) + abs(dua * va))
    if scale == 0 or abs(omega) <= TOL_DEGENERATE * scale:
        raise DegenerateBasisError(f"dependent solutions: Wronskian {omega:g} at t_a={t_a}")
    if ua == 0:
        raise AnchorError(f"u(t_a) = 0 at t_a={t_a}")
    ts = _sample_times(scenario) if ts is None else ts
    w = scenario.M(ts) * (v.deriv(ts) * u(ts) - u.deriv(ts) * v(ts))
    drift = float(np.max(np.abs(w - omega)) / abs(omega))
    if drift > tol_wronskian:
        raise NumericalError(f"Wronskian drifts by {drift:.3g} (tolerance {tol_wronskian:g})")
    return ClassicalBasis(u, v, omega, float(t_a), scenario, drift)


def standard_basis(scenario: Scenario, t_a: float, u0=(1.0, 0.0), v0=(0.0, 1.0),
                   rtol=RTOL, atol=ATOL) -> ClassicalBasis:
    """Basis from initial data (x, xdot) at t_a for u and v."""
    u = solve_homogeneous(scenario, t_a, *u0, rtol=rtol, atol=atol)
    v = solve_homogeneous(scenario, t_a, *v0, rtol=rtol, atol=atol)
    return make_basis(u, v, scenario, t_a)


def shift_basis(basis, t_a: Optional[float] = None, normalize: bool = True) -> ShiftedBasis:
    """Replace v by the combination vanishing at t_a (scaled to vdot_s(t_a)=1)."""
    t_a = basis.t_a if t_a is None else float(t_a)
    u = basis.u
    v = basis.v if isinstance(basis, ClassicalBasis) else basis.v_s
    ua = float(u(t_a))
    if ua == 0:
        raise AnchorError(f"u(t_a) = 0 at t_a={t_a}")
    combo = v - (float(v(t_a)) / ua) * u
    if normalize:
        slope = float(combo.deriv(t_a))
        if slope == 0:
            raise DegenerateBasisError("shifted solution has zero slope at t_a")
        combo = (1.0 / slope) * combo
    v_s = _Shifted(combo, t_a)
    m = float(basis.scenario.M(t_a))
    omega_s = m * float(v_s.deriv(t_a)) * ua
    return ShiftedBasis(u, v_s, omega_s, t_a, basis.scenario)


@dataclass(frozen=True)
class ParticularSolution:
    """Driven solution x_p with running integrals of L_F(x_p) and f."""

    traj: OdeTrajectory
    t_a: float
    scenario: Scenario

    def __call__(self, t):
        return self.traj(t)

    def deriv(self, t):
        return self.traj.deriv(t)

    def accel(self, t):
        return self.traj.accel(t)

    def lagrangian_integral(self, t0, t):
        """Integral of M xdot_p^2/2 - M w^2 x_p^2/2 + F x_p from t0 to t."""
        return self.traj.component(t, 2) - self.traj.component(t0, 2)

    def f_integral(self, t0, t):
        return self.traj.component(t, 3) - self.traj.component(t0, 3)


def solve_particular(scenario: Scenario, t_a: float, interval=None, slope: float = 0.0,
                     x0: float = 0.0, rtol=RTOL, atol=ATOL) -> ParticularSolution:
    """Driven solution with x_p(t_a) = x0 (default 0) and xdot_p(t_a) = slope."""

    def rhs(t, y):
        k = evaluate(scenario, t)
        xd = y[1] / k.M
        return [xd, -k.M * k.w2 * y[0] + k.F,
                0.5 * k.M * xd * xd - 0.5 * k.M * k.w2 * y[0] ** 2 + k.F * y[0], k.f]

    m0 = float(scenario.M(t_a))
    fwd, bwd = _integrate(scenario, rhs, t_a, [x0, m0 * slope, 0.0, 0.0], interval, rtol, atol)
    return ParticularSolution(OdeTrajectory(scenario, t_a, fwd, bwd, forced=True), float(t_a), scenario)


class ClassicalPath(Trajectory):
    """Classical trajectory through (t_a, x_a) and (t_b, x_b)."""

    def __init__(self, shifted: ShiftedBasis, x_a, x_b, t_a, t_b):
        self.x_a, self.x_b, self.t_a, self.t_b = float(x_a), float(x_b), float(t_a), float(t_b)
        ua, ub, vb = float(shifted.u(t_a)), float(shifted.u(t_b)), float(shifted.v_s(t_b))
        self._c_u = self.x_a / ua
        self._c_v = (self.x_b - self.x_a * ub / ua) / vb
        self.shifted = shifted

    def _pin(self, t, val):
        t = np.asarray(t)
        val = np.where(t == self.t_a, self.x_a, val)
        return np.where(t == self.t_b, self.x_b, val)

    def __call__(self, t):
        s = self.shifted
        val = self._c_u * s.u(t) + self._c_v * s.v_s(t)
        return self._pin(t, val)[()]

    def deriv(self, t):
        s = self.shifted
        return self._c_u * s.u.deriv(t) + self._c_v * s.v_s.deriv(t)

    def accel(self, t):
        s = self.shifted
        return self._c_u * s.u.accel(t) + self._c_v * s.v_s.accel(t)


def classical_path(shifted: ShiftedBasis, x_a, x_b, t_a, t_b) -> ClassicalPath:
    if not t_b > t_a:
        raise ValidationError("classical path needs t_b > t_a")
    shifted.check_caustic(t_b)
    return ClassicalPath(shifted, x_a, x_b, t_a, t_b)


@dataclass
class RhoTheta:
    """Polar form u = rho cos(theta), v = rho sin(theta) with continuous theta."""

    u: Trajectory
    v: Trajectory
    scenario: Scenario
    _ts: np.ndarray = field(repr=False, default=None)
    _th: np.ndarray = field(repr=False, default=None)

    def rho(self, t):
        return np.hypot(self.u(t), self.v(t))

    def rho_dot(self, t):
        u, v = self.u(t), self.v(t)
        return (u * self.u.deriv(t) + v * self.v.deriv(t)) / np.hypot(u, v)

    def theta_dot(self, t):
        u, v = self.u(t), self.v(t)
        return (u * self.v.deriv(t) - self.u.deriv(t) * v) / (u * u + v * v)

    def theta(self, t):
        t = np.asarray(t, dtype=float)
        raw = np.arctan2(self.v(t), self.u(t))
        k = np.clip(np.searchsorted(self._ts, t), 0, self._ts.size - 1)
        left = np.clip(k - 1, 0, None)
        k = np.where(np.abs(self._ts[left] - t) < np.abs(self._ts[k] - t), left, k)
        ref = self._th[k]
        out = ref + (raw - ref + np.pi) % (2 * np.pi) - np.pi
        return out if out.ndim else float(out)


def rho_theta(basis, anchor: Optional[float] = None) -> RhoTheta:
    """Continuous polar parametrization of a basis (v or v_s).

    theta is unwrapped on a sample grid fine enough that consecutive samples
    differ by less than pi/4, and anchored to its principal value at
    ``anchor`` (default: the basis anchor time).
    """
    v = basis.v if isinstance(basis, ClassicalBasis) else basis.v_s
    sc = basis.scenario
    t0, t1 = sc.interval
    rt = RhoTheta(basis.u, v, sc)
    coarse = np.linspace(t0, t1, 1025)
    rho = rt.rho(coarse)
    if np.any(rho == 0):
        raise DegenerateBasisError("u and v vanish simultaneously")
    rate = float(np.max(np.abs(rt.theta_dot(coarse))))
    n = int(min(2_000_000, max(1025, np.ceil((t1 - t0) * rate / 0.25) + 1)))
    ts = np.linspace(t0, t1, n)
    th = np.unwrap(np.arctan2(v(ts), basis.u(ts)))
    anchor = basis.t_a if anchor is None else anchor
    j = int(np.argmin(np.abs(ts - anchor)))
    raw_anchor = float(np.arctan2(v(anchor), basis.u(anchor)))
    # value at anchor: unwrapped neighbour corrected to the exact point
    th_anchor = th[j] + ((raw_anchor - th[j] + np.pi) % (2 * np.pi) - np.pi)
    th += raw_anchor - th_anchor
    rt._ts, rt._th = ts, th
    return rt


@dataclass(frozen=True)
class PolarResiduals:
    """Worst residuals of the polar identities over a time sample."""

    omega_identity: float
    theta_equation: float
    rho_equation: float


def rho_theta_residuals(rt: RhoTheta, Omega: float, ts, h: float = 1e-4) -> PolarResiduals:
    """Check Omega = M rho^2 thetadot and the two polar equations of motion.

    Second derivatives come from 4-point central differences of rho_dot and
    theta_dot with step h.  The identity is relative to |Omega|; each
    equation residual is scaled by max(1, largest term).
    """
    sc = rt.scenario
    ts = np.asarray(ts, dtype=float)
    t0, t1 = sc.interval
    ts = ts[(ts - 2 * h >= t0) & (ts + 2 * h <= t1)]
    M, dM = sc.M(ts), sc.mass_rate(ts)
    rho, rhod, thd = rt.rho(ts), rt.rho_dot(ts), rt.theta_dot(ts)

    def d1(fn):
        return (-fn(ts + 2 * h) + 8 * fn(ts + h) - 8 * fn(ts - h) + fn(ts - 2 * h)) / (12 * h)

    thdd, rhodd = d1(rt.theta_dot), d1(rt.rho_dot)
    ident = np.max(np.abs(M * rho**2 * thd - Omega)) / abs(Omega)
    th_terms = np.abs(np.stack([thdd, 2 * rhod / rho * thd, dM / M * thd]))
    th_res = np.abs(thdd + 2 * rhod / rho * thd + dM / M * thd) / np.maximum(1, th_terms.max(axis=0))
    rho_terms = np.abs(np.stack([rhodd, dM / M * rhod, rho * thd**2, sc.w2(ts) * rho]))
    rho_res = (np.abs(rhodd + dM / M * rhod - rho * thd**2 + sc.w2(ts) * rho)
               / np.maximum(1, rho_terms.max(axis=0)))
    return PolarResiduals(float(ident), float(th_res.max()), float(rho_res.max()))
