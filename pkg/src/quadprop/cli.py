"""Command-line front end.

    quadprop solve|kernel|state|verify|uncertainty --config <path> [--out <dir>] [--suite <name,...>]

The config is a TOML file.  Top-level keys describe the scenario
(``preset``, ``hbar``, ``interval``, ``table_path`` and any preset
parameter such as ``w0``); optional tables ``[basis]``, ``[tolerances]``
and one table per command hold the rest.  Every CSV has a one-line header
and floats written with ``repr`` (shortest round-trip form).

Exit codes: 0 success, 2 config error, 3 caustic or domain error,
4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import classical as C
from . import kernel as K
from . import observables as Ob
from . import scenario as S
from . import states as St
from . import verify as V
from .errors import (AnchorError, CausticError, DegenerateBasisError, DomainError,
                     NumericalError, ValidationError)

COMMANDS = ("solve", "kernel", "state", "verify", "uncertainty")
EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_VERIFY = 0, 2, 3, 4

SCENARIO_KEYS = {"preset", "hbar", "interval", "table_path", "params"}
SECTIONS = {
    "basis": {"t_a", "u0", "v0", "slope"},
    "tolerances": {"rtol", "atol"},
    "solve": {"times", "n_times"},
    "kernel": {"t_b", "x_a", "x_b", "variant", "branch"},
    "state": {"n", "variant", "times", "grid", "phase_form"},
    "uncertainty": {"m", "offsets", "times", "convention", "form"},
    "verify": {"suites", "corrupt"},
}


class ConfigError(ValidationError):
    """Malformed or inconsistent configuration."""


@dataclass
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass
class RunConfig:
    """Everything one command needs, validated."""

    path: Path
    command: str
    scenario: S.Scenario
    t_a: float
    u0: tuple
    v0: tuple
    slope: float
    rtol: float
    atol: float
    out: Path
    section: dict = field(default_factory=dict)
    table_times: Optional[np.ndarray] = None

    def basis(self) -> C.ClassicalBasis:
        return C.standard_basis(self.scenario, self.t_a, self.u0, self.v0,
                                rtol=self.rtol, atol=self.atol)

    def particular(self) -> C.ParticularSolution:
        return C.solve_particular(self.scenario, self.t_a, slope=self.slope,
                                  rtol=self.rtol, atol=self.atol)


def _num(value, key, positive=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or (positive and value <= 0):
        raise ConfigError(f"{key}: expected a {'positive ' if positive else ''}finite number, got {value}")
    return value


def _pair(value, key) -> tuple:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{key}: expected [value, value], got {value!r}")
    return tuple(_num(v, key) for v in value)


def _grid(value, key) -> Grid:
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError(f"{key}: expected [x_min, x_max, n_points], got {value!r}")
    lo, hi = _num(value[0], key), _num(value[1], key)
    n = value[2]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError(f"{key}: n_points must be a positive integer, got {n!r}")
    if n > 1 and not hi > lo:
        raise ConfigError(f"{key}: need x_max > x_min")
    return Grid(lo, hi, n)


def _times(value, key) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key}: expected a non-empty list of times")
    return np.array([_num(v, key) for v in value])


def _ints(value, key) -> list:
    vals = value if isinstance(value, list) else [value]
    if not vals or any(isinstance(v, bool) or not isinstance(v, int) or v < 0 for v in vals):
        raise ConfigError(f"{key}: expected non-negative integers, got {value!r}")
    return [int(v) for v in vals]


def _choice(value, key, options) -> str:
    if value not in options:
        raise ConfigError(f"{key}: expected one of {list(options)}, got {value!r}")
    return value


def load_config(path, command: str, out=".") -> RunConfig:
    """Parse and validate a TOML config for ``command``."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}")
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: not valid TOML: {exc}")
    for name, body in raw.items():
        if name in SECTIONS:
            if not isinstance(body, dict):
                raise ConfigError(f"[{name}] must be a table")
            extra = set(body) - SECTIONS[name]
            if extra:
                raise ConfigError(f"[{name}]: unknown keys {sorted(extra)}; allowed {sorted(SECTIONS[name])}")
        elif isinstance(body, dict) and name != "params":
            raise ConfigError(f"unknown table [{name}]; allowed {sorted(SECTIONS)}")

    name = raw.get("preset")
    if command != "verify" or name is not None:
        if not isinstance(name, str):
            raise ConfigError("missing string field 'preset'")
    params = dict(raw.get("params", {}))
    params.update({k: v for k, v in raw.items() if k not in SCENARIO_KEYS and k not in SECTIONS})
    for k, v in params.items():
        params[k] = _num(v, k)
    if "hbar" in raw:
        params["hbar"] = _num(raw["hbar"], "hbar", positive=True)
    if "interval" in raw:
        params["interval"] = _pair(raw["interval"], "interval")
    table_times = None
    if name == "tabulated":
        if "table_path" not in raw:
            raise ConfigError("tabulated preset requires table_path")
        tp = Path(raw["table_path"])
        if not tp.is_absolute():
            tp = path.parent / tp
        params["table_path"] = tp
        if not tp.is_file():
            raise ConfigError(f"table_path {tp} is not readable")
        table_times = S.read_table(tp)[0]
    sc = S.preset(name, **params) if name is not None else S.sho()

    basis = raw.get("basis", {})
    tol = raw.get("tolerances", {})
    cfg = RunConfig(
        path=path, command=command, scenario=sc,
        t_a=_num(basis.get("t_a", sc.interval[0]), "basis.t_a"),
        u0=_pair(basis.get("u0", [1.0, 0.0]), "basis.u0"),
        v0=_pair(basis.get("v0", [0.0, 1.0]), "basis.v0"),
        slope=_num(basis.get("slope", 0.0), "basis.slope"),
        rtol=_num(tol.get("rtol", C.RTOL), "tolerances.rtol", positive=True),
        atol=_num(tol.get("atol", C.ATOL), "tolerances.atol", positive=True),
        out=Path(out), section=dict(raw.get(command, {})), table_times=table_times)
    try:
        sc.check_time(cfg.t_a)
    except DomainError as exc:
        raise ConfigError(f"basis.t_a: {exc}")
    return cfg


# ------------------------------------------------------------------ output

def fmt(v) -> str:
    """Shortest round-trip text of a float (ints stay ints)."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list, np.ndarray]:
    """Header and float data of a numeric CSV written by :func:`write_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)


def _pmap(fn, items):
    """Ordered map over at most QUADPROP_THREADS workers."""
    n = K.threads()
    if n == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------- commands

SOLVE_HEADER = ("t", "u", "u_dot", "v", "v_dot", "v_s", "x_p", "x_p_dot", "omega_drift")
KERNEL_HEADER = ("x_a", "x_b", "re_K", "im_K")
STATE_HEADER = ("t", "x", "re_psi", "im_psi", "abs_psi_sq")
UNCERTAINTY_HEADER = ("t", "m", "offset", "re_closed", "im_closed", "re_quad", "im_quad", "rel_err")
VERIFY_HEADER = ("suite", "criterion", "check", "value", "tol", "status")


def cmd_solve(cfg: RunConfig) -> Path:
    """Classical solutions sampled in time; omega_drift is W(t)/Omega - 1."""
    sec = cfg.section
    sc = cfg.scenario
    if "times" in sec:
        ts = _times(sec["times"], "solve.times")
    elif cfg.table_times is not None:
        ts = cfg.table_times[(cfg.table_times >= sc.interval[0]) & (cfg.table_times <= sc.interval[1])]
    else:
        n = sec.get("n_times", 201)
        if isinstance(n, bool) or not isinstance(n, int) or n < 2:
            raise ConfigError("solve.n_times must be an integer >= 2")
        ts = np.linspace(*sc.interval, n)
    sc.check_time(ts)
    b = cfg.basis()
    sh = C.shift_basis(b)
    xp = cfg.particular()
    drift = b.wronskian(ts) / b.Omega - 1.0
    cols = (ts, b.u(ts), b.u.deriv(ts), b.v(ts), b.v.deriv(ts), sh.v_s(ts),
            xp(ts), xp.deriv(ts), drift)
    rows = zip(*[np.broadcast_to(np.asarray(c, dtype=float), ts.shape) for c in cols])
    return write_csv(cfg.out / "solve.csv", SOLVE_HEADER, rows)


def cmd_kernel(cfg: RunConfig) -> Path:
    """K(x_b, t_b; x_a, t_a) on the endpoint grid, x_a outer, x_b inner."""
    sec = cfg.section
    if "t_b" not in sec:
        raise ConfigError("[kernel] needs t_b")
    t_b = _num(sec["t_b"], "kernel.t_b")
    xa = _grid(sec.get("x_a", [-4.0, 4.0, 41]), "kernel.x_a").points()
    xb = _grid(sec.get("x_b", [-4.0, 4.0, 41]), "kernel.x_b").points()
    variant = _choice(sec.get("variant", "G"), "kernel.variant", K.VARIANTS)
    branch = _choice(sec.get("branch", "continuous"), "kernel.branch", K.BRANCHES)
    xp = cfg.particular() if variant != "S" else None
    prop = K.Propagator(variant, cfg.basis(), xp, branch=branch)
    prop.coefficients(t_b)  # surface caustics and domain errors before the sweep
    vals = _pmap(lambda x: np.asarray(prop(x, xb, t_b), dtype=complex), xa)

    def rows():
        for x, row in zip(xa, vals):
            for y, k in zip(xb, row):
                yield x, y, k.real, k.imag

    return write_csv(cfg.out / "kernel.csv", KERNEL_HEADER, rows())


def _state_spec(cfg: RunConfig, variant: str, n: int, phase_form="regular") -> St.StateSpec:
    xp = cfg.particular() if variant != "S" else None
    return St.StateSpec(variant, n, cfg.basis().oriented(), xp, phase_form=phase_form)


def cmd_state(cfg: RunConfig) -> Path:
    """psi_n on an (x, t) grid; the x grid defaults to a window around the packet."""
    sec = cfg.section
    n = _ints(sec.get("n", 0), "state.n")
    if len(n) != 1:
        raise ConfigError("state.n must be a single integer")
    variant = _choice(sec.get("variant", "S"), "state.variant", St.VARIANTS)
    phase_form = _choice(sec.get("phase_form", "regular"), "state.phase_form", ("regular", "verbatim"))
    ts = _times(sec.get("times", [cfg.t_a]), "state.times")
    cfg.scenario.check_time(ts)
    spec = _state_spec(cfg, variant, n[0], phase_form)
    grid = _grid(sec["grid"], "state.grid") if "grid" in sec else None

    def at(t):
        if grid is None:
            lo, hi = St.window(spec, t)
            x = np.linspace(lo, hi, 201)
        else:
            x = grid.points()
        return x, np.asarray(St.psi(spec, x, t), dtype=complex)

    vals = _pmap(at, ts)

    def rows():
        for t, (x, p) in zip(ts, vals):
            for xi, pi in zip(x, p):
                yield t, xi, pi.real, pi.imag, abs(pi) ** 2

    return write_csv(cfg.out / "state.csv", STATE_HEADER, rows())


def cmd_uncertainty(cfg: RunConfig) -> Path:
    """Closed-form uncertainty products against quadrature."""
    sec = cfg.section
    ms = _ints(sec.get("m", [0, 1, 2]), "uncertainty.m")
    offs = _ints(sec.get("offsets", [0, 1, 2]), "uncertainty.offsets")
    if any(o > 2 for o in offs):
        raise ConfigError("uncertainty.offsets must be 0, 1 or 2")
    ts = _times(sec.get("times", [cfg.t_a]), "uncertainty.times")
    cfg.scenario.check_time(ts)
    conv = _choice(sec.get("convention", "ket"), "uncertainty.convention", Ob.CONVENTIONS)
    form = _choice(sec.get("form", "uv"), "uncertainty.form", Ob.FORMS)
    variant = "G" if cfg.scenario.gauged else ("F" if cfg.scenario.driven else "S")
    spec = _state_spec(cfg, variant, 0)
    per_t = _pmap(lambda t: Ob.uncertainty_report(spec, ms, offs, [t], conv, form), ts)
    rows = ((r.t, r.m, r.offset, r.closed.real, r.closed.imag, r.quad.real, r.quad.imag, r.rel_err)
            for block in per_t for r in block)
    return write_csv(cfg.out / "uncertainty.csv", UNCERTAINTY_HEADER, rows)


def _suite_names(cfg: RunConfig, cli_suites: Optional[str]) -> list:
    if cli_suites is not None:
        names = [s.strip() for s in cli_suites.split(",") if s.strip()]
    else:
        names = cfg.section.get("suites", list(V.SUITES))
        if not isinstance(names, list) or not all(isinstance(s, str) for s in names):
            raise ConfigError("verify.suites must be a list of suite names")
    if not names:
        raise UsageError("empty suite selection")
    unknown = [s for s in names if s not in V.SUITES]
    if unknown:
        raise UsageError(f"unknown suites {unknown}; choose from {list(V.SUITES)}")
    return names


class UsageError(ConfigError):
    """Bad command-line usage (mapped to exit code 2)."""


def cmd_verify(cfg: RunConfig, suites: Optional[str] = None, corrupt: bool = False):
    """Run suites; returns (results, paths).  Runtime checks go to the text report only."""
    names = _suite_names(cfg, suites)
    corrupt = corrupt or bool(cfg.section.get("corrupt", False))
    results = []
    lines = []
    for name in names:
        res = V.run([name], corrupt=corrupt)[0]
        results.append(res)
        head = f"[{'PASS' if res.passed else 'FAIL'}] criterion {res.criterion} {res.key}: {res.title} ({res.seconds:.1f} s)"
        print(head, flush=True)
        lines.append(head)
        for c in res.checks:
            line = f"    {c.status:6s} {c.name}: {c.value:.3e} (tol {c.tol:g})"
            lines.append(line)
            if c.passed is False:
                print(line, flush=True)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    txt = out / "verify.txt"
    txt.write_text("\n".join(lines) + "\n")
    rows = ((r.key, r.criterion, c.name, c.value, c.tol, c.status)
            for r in results for c in r.checks if not c.name.startswith("runtime"))
    paths = [txt, write_csv(out / "verify.csv", VERIFY_HEADER, rows)]
    extra = [(r.key, row) for r in results for row in r.rows]
    if extra:
        paths.append(write_csv(
            out / "verify_offdiag.csv", ("suite", "case", "convention") + UNCERTAINTY_HEADER,
            ((key, label, conv, u.t, u.m, u.offset, u.closed.real, u.closed.imag,
              u.quad.real, u.quad.imag, u.rel_err) for key, (label, conv, u) in extra)))
    return results, paths


# --------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadprop", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--suite", default=None, help="comma-separated verify suites")
    p.add_argument("--corrupt", action="store_true",
                   help="verify: perturb closed forms so every suite must fail (negative control)")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = load_config(args.config, args.command, args.out)
        if args.command == "verify":
            results, paths = cmd_verify(cfg, args.suite, args.corrupt)
            for p in paths:
                print(f"wrote {p}")
            return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY
        if args.suite is not None:
            raise UsageError("--suite only applies to verify")
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            path = {"solve": cmd_solve, "kernel": cmd_kernel, "state": cmd_state,
                    "uncertainty": cmd_uncertainty}[args.command](cfg)
        print(f"wrote {path}")
        return EXIT_OK
    except CausticError as exc:
        print(f"quadprop: caustic: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (DomainError, NumericalError) as exc:
        print(f"quadprop: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValidationError, DegenerateBasisError, AnchorError) as exc:
        print(f"quadprop: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
