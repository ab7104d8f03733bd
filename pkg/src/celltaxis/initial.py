"""Initial-condition generators for the simulation presets and CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import Field, Grid1D

KINDS = (
    "uniform",
    "bell",
    "cosine-perturbation",
    "two-plateau",
    "spike-on-flat",
    "samples",
)


@dataclass(frozen=True)
class InitialCondition:
    """Declarative initial-profile spec; build() realises it on a grid."""

    kind: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown initial-condition kind {self.kind!r}")

    def build(self, grid: Grid1D) -> Field:
        values = _BUILDERS[self.kind](grid, **self.options)
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise ValueError(
                f"initial condition {self.kind!r} leaves [0, 1]: "
                f"range [{values.min():.4g}, {values.max():.4g}]"
            )
        return Field(grid, values)


def _uniform(grid: Grid1D, value: float) -> np.ndarray:
    return np.full(grid.n, float(value))


def _bell(
    grid: Grid1D,
    baseline: float,
    amplitude: float,
    width: float,
    center: float | None = None,
    shape: float = 2.0,
) -> np.ndarray:
    """baseline + amplitude * exp(-((x - center)/width)^shape).

    shape=2 is a Gaussian bump; larger even shapes flatten the top while
    keeping smooth flanks.
    """
    if width <= 0.0:
        raise ValueError("bell width must be positive")
    if shape < 2.0 or shape != round(shape) or round(shape) % 2:
        raise ValueError("bell shape must be an even integer >= 2")
    c = 0.5 * grid.L if center is None else float(center)
    x = grid.x
    return baseline + amplitude * np.exp(-(((x - c) / width) ** shape))


def _cosine(grid: Grid1D, mean: float, amplitude: float, k: int = 1) -> np.ndarray:
    x = grid.x
    return mean + amplitude * np.cos(k * math.pi * x / grid.L)


def _smooth_block(x: np.ndarray, center: float, width: float, edge: float):
    """Unit-height block of the given width with tanh edges of scale edge."""
    lo = center - 0.5 * width
    hi = center + 0.5 * width
    return 0.5 * (np.tanh((x - lo) / edge) - np.tanh((x - hi) / edge))


def _two_plateau(
    grid: Grid1D,
    baseline: float,
    height: float,
    centers: tuple[float, float],
    widths: tuple[float, float],
    edge: float = 0.05,
) -> np.ndarray:
    x = grid.x
    out = np.full(grid.n, float(baseline))
    for c, w in zip(centers, widths):
        out = out + (height - baseline) * _smooth_block(x, float(c), float(w), edge)
    return np.clip(out, 0.0, min(1.0, height))


def _spike_on_flat(
    grid: Grid1D,
    baseline: float,
    height: float,
    width: float,
    center: float | None = None,
    edge: float = 0.04,
) -> np.ndarray:
    x = grid.x
    c = 0.5 * grid.L if center is None else float(center)
    return baseline + (height - baseline) * _smooth_block(x, c, width, edge)


def _samples(grid: Grid1D, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (grid.n,):
        raise ValueError(
            f"samples initial condition has {arr.shape[0]} values, grid has {grid.n}"
        )
    return arr


_BUILDERS = {
    "uniform": _uniform,
    "bell": _bell,
    "cosine-perturbation": _cosine,
    "two-plateau": _two_plateau,
    "spike-on-flat": _spike_on_flat,
    "samples": _samples,
}
