"""Uniform discretization of L2([0, 1]) by step functions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GridMismatch


@dataclass(frozen=True)
class Grid:
    """Uniform partition of [0, 1] into ``n_cells`` cells."""

    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValueError(f"n_cells must be an integer >= 2, got {self.n_cells!r}")

    @property
    def width(self) -> float:
        return 1.0 / self.n_cells

    @property
    def endpoints(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) / self.n_cells

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) / self.n_cells


def make_uniform_grid(n_cells: int) -> Grid:
    return Grid(n_cells)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Step function on a grid; ``values[i]`` is the value on cell ``i``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_cells,):
            raise ValueError(
                f"expected {self.grid.n_cells} cell values, got shape {values.shape}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def coords(self) -> np.ndarray:
        """Coordinates in the orthonormal basis sqrt(1/width) * 1_cell."""
        return self.values * np.sqrt(self.grid.width)

    @classmethod
    def from_coords(cls, grid: Grid, coords) -> "GridFunction":
        return cls(grid, np.asarray(coords, dtype=float) / np.sqrt(grid.width))

    def norm(self) -> float:
        return float(np.sqrt(inner_product(self, self)))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


def _check_same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.grid != g.grid:
        raise GridMismatch(f"grid mismatch: {f.grid.n_cells} vs {g.grid.n_cells} cells")


def indicator(grid: Grid, t: float) -> GridFunction:
    """L2 projection of 1_[0, t] onto step functions (fractional cell coverage)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    left = grid.endpoints[:-1]
    covered = np.clip(t - left, 0.0, grid.width) / grid.width
    return GridFunction(grid, covered)


def indicator_matrix(grid: Grid) -> np.ndarray:
    """Rows are the step values of 1_[0, t_i] for every grid endpoint t_i."""
    n = grid.n_cells
    return np.tril(np.ones((n + 1, n)), k=-1)


def inner_product(f: GridFunction, g: GridFunction) -> float:
    _check_same_grid(f, g)
    return float(np.dot(f.values, g.values) * f.grid.width)


def project_continuous(fn: Callable[[np.ndarray], np.ndarray], grid: Grid) -> GridFunction:
    """Midpoint sampling of ``fn``; O(width**2) L2 error for C2 functions."""
    mids = grid.midpoints
    try:
        values = np.broadcast_to(np.asarray(fn(mids), dtype=float), mids.shape)
    except (TypeError, ValueError):
        values = np.array([float(fn(t)) for t in mids])
    return GridFunction(grid, values)
