"""Time-dependent coefficients of the quadratic Lagrangian.

A :class:`Scenario` bundles the six coefficient functions

    L = M xdot^2/2 - M w^2 x^2/2 + F x + d/dt(M a x^2) + d/dt(b x) + f

together with hbar and the working interval.  All callables accept floats
or numpy arrays.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, ValidationError

Func = Callable[[np.ndarray], np.ndarray]

# step used for central-difference derivatives when no analytic one is given
H_T = 1e-5


def _const(value: float) -> Func:
    return lambda t: np.full_like(np.asarray(t, dtype=float), value)


def _central(fn: Func, h: float = H_T) -> Func:
    return lambda t: (fn(np.asarray(t, dtype=float) + h) - fn(np.asarray(t, dtype=float) - h)) / (2 * h)


@dataclass(frozen=True)
class Scenario:
    """Coefficient functions M, w^2, F, a, b, f plus hbar.

    ``dM``, ``da`` and ``db`` are the time derivatives needed by the
    Hamiltonian; when omitted they are estimated by central differences.
    """

    M: Func
    w2: Func
    F: Func = field(default_factory=lambda: _const(0.0))
    a: Func = field(default_factory=lambda: _const(0.0))
    b: Func = field(default_factory=lambda: _const(0.0))
    f: Func = field(default_factory=lambda: _const(0.0))
    dM: Optional[Func] = None
    da: Optional[Func] = None
    db: Optional[Func] = None
    hbar: float = 1.0
    interval: tuple[float, float] = (0.0, 10.0)
    name: str = "custom"
    params: dict = field(default_factory=dict)
    # cheap structural flags used to skip work (x_p == 0, U == 1, ...)
    driven: bool = True
    gauged: bool = True

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValidationError(f"hbar must be positive, got {self.hbar}")
        t0, t1 = self.interval
        if not t1 > t0:
            raise ValidationError(f"empty interval {self.interval}")
        ts = np.linspace(t0, t1, 257)
        m = np.asarray(self.M(ts), dtype=float)
        if not np.all(np.isfinite(m)) or np.any(m <= 0):
            raise ValidationError(f"mass must be positive on {self.interval} ({self.name})")

    def check_time(self, t) -> None:
        t0, t1 = self.interval
        slack = 1e-9 * max(1.0, t1 - t0)
        tt = np.asarray(t, dtype=float)
        if np.any(tt < t0 - slack) or np.any(tt > t1 + slack):
            raise DomainError(f"t={t} outside working interval [{t0}, {t1}]")

    def mass_rate(self, t):
        return (self.dM or _central(self.M))(t)

    def a_rate(self, t):
        return (self.da or _central(self.a))(t)

    def b_rate(self, t):
        return (self.db or _central(self.b))(t)


class Coefficients(NamedTuple):
    M: np.ndarray
    w2: np.ndarray
    F: np.ndarray
    a: np.ndarray
    b: np.ndarray
    f: np.ndarray
    dM: np.ndarray
    da: np.ndarray
    db: np.ndarray


class DerivedCoefficients(NamedTuple):
    c: np.ndarray
    d: np.ndarray


def evaluate(scenario: Scenario, t) -> Coefficients:
    """Coefficient values and the first derivatives of M, a and b at ``t``."""
    scenario.check_time(t)
    t = np.asarray(t, dtype=float)
    M = np.asarray(scenario.M(t), dtype=float)
    if np.any(M <= 0):
        raise ValidationError(f"non-positive mass at t={t}")
    return Coefficients(
        M,
        np.asarray(scenario.w2(t), dtype=float),
        np.asarray(scenario.F(t), dtype=float),
        np.asarray(scenario.a(t), dtype=float),
        np.asarray(scenario.b(t), dtype=float),
        np.asarray(scenario.f(t), dtype=float),
        np.asarray(scenario.mass_rate(t), dtype=float),
        np.asarray(scenario.a_rate(t), dtype=float),
        np.asarray(scenario.b_rate(t), dtype=float),
    )


def derived_coefficients(scenario: Scenario, t) -> DerivedCoefficients:
    """c(t) and d(t) of the quantum Hamiltonian."""
    k = evaluate(scenario, t)
    c = k.w2 + 4 * k.a**2 - 2 * k.da - 2 * (k.dM / k.M) * k.a
    d = 2 * k.a * k.b - k.db - k.F
    return DerivedCoefficients(c, d)


# ---------------------------------------------------------------- presets

def sho(m0=1.0, w0=1.0, hbar=1.0, interval=(0.0, 10.0)) -> Scenario:
    return Scenario(
        M=_const(m0), w2=_const(w0**2), dM=_const(0.0), da=_const(0.0), db=_const(0.0),
        hbar=hbar, interval=tuple(interval), name="sho", params=dict(m0=m0, w0=w0),
        driven=False, gauged=False,
    )


def free(m0=1.0, hbar=1.0, interval=(0.0, 10.0)) -> Scenario:
    return Scenario(
        M=_const(m0), w2=_const(0.0), dM=_const(0.0), da=_const(0.0), db=_const(0.0),
        hbar=hbar, interval=tuple(interval), name="free", params=dict(m0=m0),
        driven=False, gauged=False,
    )


def caldirola_kanai(m0=1.0, gamma=0.2, w0=1.0, hbar=1.0, interval=(0.0, 10.0)) -> Scenario:
    return Scenario(
        M=lambda t: m0 * np.exp(gamma * np.asarray(t, dtype=float)),
        dM=lambda t: m0 * gamma * np.exp(gamma * np.asarray(t, dtype=float)),
        w2=_const(w0**2), da=_const(0.0), db=_const(0.0),
        hbar=hbar, interval=tuple(interval), name="caldirola-kanai",
        params=dict(m0=m0, gamma=gamma, w0=w0), driven=False, gauged=False,
    )


def paul_trap(m0=1.0, w0=1.0, eps=0.3, nu=3.0, hbar=1.0, interval=(0.0, 10.0)) -> Scenario:
    return Scenario(
        M=_const(m0),
        w2=lambda t: w0**2 * (1 + eps * np.cos(nu * np.asarray(t, dtype=float))),
        dM=_const(0.0), da=_const(0.0), db=_const(0.0),
        hbar=hbar, interval=tuple(interval), name="paul-trap",
        params=dict(m0=m0, w0=w0, eps=eps, nu=nu), driven=False, gauged=False,
    )


def driven_sho(m0=1.0, w0=1.0, F0=0.5, nu=2.0, hbar=1.0, interval=(0.0, 10.0)) -> Scenario:
    return Scenario(
        M=_const(m0), w2=_const(w0**2),
        F=lambda t: F0 * np.sin(nu * np.asarray(t, dtype=float)),
        dM=_const(0.0), da=_const(0.0), db=_const(0.0),
        hbar=hbar, interval=tuple(interval), name="driven-sho",
        params=dict(m0=m0, w0=w0, F0=F0, nu=nu), gauged=False,
    )


def full_quadratic(m0=1.0, kappa=0.2, w0=1.0, eps=0.2, nu=1.3, F0=0.5, nu_F=0.9,
                   a0=0.15, nu_a=0.6, b0=0.3, nu_b=0.8, f0=0.1, nu_f=0.5,
                   hbar=1.0, interval=(0.0, 10.0)) -> Scenario:
    """All six coefficients nonzero and smooth."""
    arr = lambda t: np.asarray(t, dtype=float)  # noqa: E731
    return Scenario(
        M=lambda t: m0 * np.exp(kappa * np.sin(arr(t))),
        dM=lambda t: m0 * kappa * np.cos(arr(t)) * np.exp(kappa * np.sin(arr(t))),
        w2=lambda t: w0**2 * (1 + eps * np.cos(nu * arr(t))),
        F=lambda t: F0 * np.sin(nu_F * arr(t)),
        a=lambda t: a0 * np.cos(nu_a * arr(t)),
        da=lambda t: -a0 * nu_a * np.sin(nu_a * arr(t)),
        b=lambda t: b0 * np.sin(nu_b * arr(t)),
        db=lambda t: b0 * nu_b * np.cos(nu_b * arr(t)),
        f=lambda t: f0 * np.cos(nu_f * arr(t)),
        hbar=hbar, interval=tuple(interval), name="full-quadratic",
        params=dict(m0=m0, kappa=kappa, w0=w0, eps=eps, nu=nu, F0=F0, nu_F=nu_F,
                    a0=a0, nu_a=nu_a, b0=b0, nu_b=nu_b, f0=f0, nu_f=nu_f),
    )


COLUMNS = ("M", "w2", "F", "a", "b", "f")


def tabulated(t, columns: dict, hbar=1.0, interval=None, name="tabulated") -> Scenario:
    """Scenario from sampled coefficients on an ascending time grid.

    Values between samples come from cubic splines.  Derivatives of M, a, b
    are second-order central differences at the samples (one-sided
    second-order stencils at the ends), then splined.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 4:
        raise ValidationError("table needs at least 4 time samples")
    if np.any(np.diff(t) <= 0):
        raise ValidationError("table times must be strictly ascending")
    missing = [c for c in ("M", "w2") if c not in columns]
    if missing:
        raise ValidationError(f"table lacks columns {missing}")
    splines = {}
    for key in COLUMNS:
        y = np.asarray(columns.get(key, np.zeros_like(t)), dtype=float)
        if y.shape != t.shape or not np.all(np.isfinite(y)):
            raise ValidationError(f"column {key} malformed")
        splines[key] = CubicSpline(t, y)
        if key in ("M", "a", "b"):
            splines["d" + key] = CubicSpline(t, np.gradient(y, t, edge_order=2))
    if np.any(np.asarray(columns["M"]) <= 0):
        raise ValidationError("tabulated mass must be positive")
    interval = tuple(interval) if interval is not None else (float(t[0]), float(t[-1]))
    if interval[0] < t[0] or interval[1] > t[-1]:
        raise ValidationError("interval exceeds table range")

    def wrap(s):
        return lambda tt: s(np.asarray(tt, dtype=float))

    return Scenario(
        M=wrap(splines["M"]), w2=wrap(splines["w2"]), F=wrap(splines["F"]),
        a=wrap(splines["a"]), b=wrap(splines["b"]), f=wrap(splines["f"]),
        dM=wrap(splines["dM"]), da=wrap(splines["da"]), db=wrap(splines["db"]),
        hbar=hbar, interval=interval, name=name, params={"samples": t.size},
    )


def read_table(path) -> tuple[np.ndarray, dict]:
    """Read a coefficient CSV: t, M, w2, F, a, b, f (header row optional)."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if rows:
                    raise ValidationError(f"non-numeric row in {path}: {row}")
                continue  # header
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != 7:
        raise ValidationError(f"{path}: expected 7 columns (t, M, w2, F, a, b, f)")
    return data[:, 0], {k: data[:, i + 1] for i, k in enumerate(COLUMNS)}


def sample_table(scenario: Scenario, step: float = 1e-3) -> tuple[np.ndarray, dict]:
    """Sample a scenario's six coefficients on a uniform grid over its interval."""
    t0, t1 = scenario.interval
    n = int(round((t1 - t0) / step)) + 1
    t = np.linspace(t0, t1, n)
    return t, {k: np.asarray(getattr(scenario, k)(t), dtype=float) for k in COLUMNS}


def write_table(path, t, columns: dict) -> None:
    """Write the 7-column coefficient CSV read by :func:`read_table`."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t",) + COLUMNS)
        for i, ti in enumerate(t):
            w.writerow([repr(float(ti))] + [repr(float(columns[k][i])) for k in COLUMNS])


PRESETS = {
    "sho": sho,
    "free": free,
    "caldirola-kanai": caldirola_kanai,
    "paul-trap": paul_trap,
    "driven-sho": driven_sho,
    "full-quadratic": full_quadratic,
}


def preset(name: str, **params) -> Scenario:
    """Build a named preset; ``tabulated`` needs ``table_path``."""
    if name == "tabulated":
        path = params.pop("table_path", None)
        if path is None:
            raise ValidationError("tabulated preset requires table_path")
        t, cols = read_table(Path(path))
        return tabulated(t, cols, **params)
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS) + ['tabulated']}")
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for preset {name!r}: {exc}")
