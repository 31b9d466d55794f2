"""Uniform complex grid functions shared by states, kernel and oracle."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

MIN_POINTS = 16
# fraction of the grid at each end treated as "edge" for mass monitoring
EDGE_FRACTION = 0.025


class TruncationWarning(UserWarning):
    """Probability mass near the grid edges is not negligible."""


@dataclass(frozen=True)
class ComplexGridFunction:
    x_min: float
    x_max: float
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < MIN_POINTS:
            raise ValidationError(f"grid needs at least {MIN_POINTS} points")
        if not self.x_max > self.x_min:
            raise ValidationError("x_max must exceed x_min")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("grid values must be finite")

    @classmethod
    def sample(cls, fn, x_min, x_max, n_points, t=0.0):
        x = np.linspace(x_min, x_max, n_points)
        return cls(x_min, x_max, fn(x), t)

    @property
    def n_points(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def with_values(self, values, t=None):
        return ComplexGridFunction(self.x_min, self.x_max, values, self.t if t is None else t)

    def aligned(self, other: "ComplexGridFunction") -> bool:
        return (self.n_points == other.n_points and np.isclose(self.x_min, other.x_min)
                and np.isclose(self.x_max, other.x_max))

    def integrate(self, density) -> complex:
        """Trapezoidal rule on the grid."""
        return np.trapezoid(density, dx=self.dx)

    def inner(self, other: "ComplexGridFunction") -> complex:
        if not self.aligned(other):
            raise ValidationError("grids are not aligned")
        return self.integrate(np.conj(self.values) * other.values)

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self).real))

    def l2_distance(self, other: "ComplexGridFunction") -> float:
        if not self.aligned(other):
            raise ValidationError("grids are not aligned")
        return float(np.sqrt(self.integrate(np.abs(self.values - other.values) ** 2)))

    def edge_mass(self) -> float:
        k = max(2, int(np.ceil(EDGE_FRACTION * self.n_points)))
        p = np.abs(self.values) ** 2 * self.dx
        total = p.sum()
        if total == 0:
            return 0.0
        return float((p[:k].sum() + p[-k:].sum()) / total)

    def warn_edges(self, tol: float = 1e-8, what: str = "state") -> float:
        mass = self.edge_mass()
        if mass > tol:
            warnings.warn(f"{what}: edge mass {mass:.2e} exceeds {tol:g}; widen the grid",
                          TruncationWarning, stacklevel=3)
        return mass
