"""Uniform 1-d grids and sampled fields."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """n nodes x_i = i*h spanning [0, L] inclusive, h = L/(n-1)."""

    n: int
    L: float

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 nodes")
        if self.L <= 0.0:
            raise ValueError("L must be positive")

    @property
    def h(self) -> float:
        return self.L / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.n)


@dataclass
class Field:
    """Values sampled at the nodes of a Grid1D."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValueError(
                f"field length {self.values.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def discrete_mass(self) -> float:
        """h * sum(values): the quantity conserved exactly by flux-form schemes."""
        return self.grid.h * float(np.sum(self.values))

    def trapezoid_mass(self) -> float:
        return float(np.trapezoid(self.values, dx=self.grid.h))


def uniform_field(grid: Grid1D, value: float) -> Field:
    return Field(grid, np.full(grid.n, float(value)))
