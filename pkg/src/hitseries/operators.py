"""Continuous linear operators on discretized L2([0, 1]).

Every operator is eventually turned into a :class:`DenseOperator`, an
``n x n`` array in the orthonormal cell basis ``chi_i = 1_cell_i / sqrt(width)``.
Because ``chi`` is orthonormal, adjoints are transposes and operator norms are
spectral norms, independent of the grid size.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import BetaOutOfRange, GridMismatch, NonOrthonormalBasis, NotAContraction
from .grid import Grid, GridFunction, project_continuous

ORTHONORMAL_TOL = 1e-8
CLAMP_TOL = 1e-10


@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True, eq=False)
class IntegralKernel:
    """``(Ah)(t) = h(t) + int q(t, s) h(s) ds`` with ``q`` sampled at cell midpoints."""

    grid: Grid
    samples: np.ndarray

    @classmethod
    def from_function(cls, q: Callable, grid: Grid) -> "IntegralKernel":
        t = grid.midpoints
        return cls(grid, np.asarray(q(t[:, None], t[None, :]), dtype=float))

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        n = self.grid.n_cells
        if samples.shape != (n, n):
            raise ValueError(f"kernel samples must be {n}x{n}, got {samples.shape}")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.samples).max())


@dataclass(frozen=True, eq=False)
class FiniteRank:
    """``R = sum_k beta_k e_k (x) e_k`` for an orthonormal family ``e_k``."""

    betas: tuple
    basis: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "basis", tuple(self.basis))
        if len(self.betas) != len(self.basis):
            raise ValueError("betas and basis must have the same length")
        grids = {e.grid for e in self.basis}
        if len(grids) > 1:
            raise GridMismatch("finite-rank basis functions live on different grids")

    @property
    def rank(self) -> int:
        return len(self.betas)

    def basis_matrix(self) -> np.ndarray:
        """Basis vectors in chi coordinates, one per column."""
        if not self.basis:
            return np.zeros((0, 0))
        return np.column_stack([e.coords() for e in self.basis])

    def check_orthonormal(self, tol: float = ORTHONORMAL_TOL) -> None:
        if not self.basis:
            return
        v = self.basis_matrix()
        gram = v.T @ v
        dev = float(np.abs(gram - np.eye(len(self.basis))).max())
        if dev > tol:
            raise NonOrthonormalBasis(f"basis Gram matrix deviates from identity by {dev:.3e}")


@dataclass(frozen=True, eq=False)
class DenseOperator:
    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self):
        a = np.array(self.coefficients, dtype=float)
        n = self.grid.n_cells
        if a.shape != (n, n):
            raise ValueError(f"coefficients must be {n}x{n}, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("operator coefficients must be finite")
        a.flags.writeable = False
        object.__setattr__(self, "coefficients", a)

    def apply(self, f: GridFunction) -> GridFunction:
        if f.grid != self.grid:
            raise GridMismatch("operator and function live on different grids")
        return GridFunction.from_coords(self.grid, self.coefficients @ f.coords())

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        return compose(self, other)


OperatorRep = Union[Identity, IntegralKernel, FiniteRank, DenseOperator]


def identity(grid: Grid) -> DenseOperator:
    return DenseOperator(grid, np.eye(grid.n_cells))


def zero(grid: Grid) -> DenseOperator:
    return DenseOperator(grid, np.zeros((grid.n_cells, grid.n_cells)))


def scaled(op: DenseOperator, c: float) -> DenseOperator:
    return DenseOperator(op.grid, op.coefficients * c)


def to_dense(op: OperatorRep, grid: Grid) -> DenseOperator:
    n = grid.n_cells
    if isinstance(op, Identity):
        return identity(grid)
    if isinstance(op, DenseOperator):
        if op.grid != grid:
            raise GridMismatch("dense operator lives on a different grid")
        return DenseOperator(grid, op.coefficients.copy())
    if isinstance(op, IntegralKernel):
        if op.grid != grid:
            raise GridMismatch("kernel samples live on a different grid")
        return DenseOperator(grid, np.eye(n) + grid.width * op.samples)
    if isinstance(op, FiniteRank):
        if op.rank == 0:
            return zero(grid)
        if op.basis[0].grid != grid:
            raise GridMismatch("finite-rank basis lives on a different grid")
        v = op.basis_matrix()
        return DenseOperator(grid, (v * np.asarray(op.betas)) @ v.T)
    raise TypeError(f"unsupported operator representation {type(op).__name__}")


def _same_grid(a: DenseOperator, b: DenseOperator) -> None:
    if a.grid != b.grid:
        raise GridMismatch(f"grid mismatch: {a.grid.n_cells} vs {b.grid.n_cells} cells")


def adjoint(op: DenseOperator) -> DenseOperator:
    return DenseOperator(op.grid, op.coefficients.T)


def compose(a: DenseOperator, b: DenseOperator) -> DenseOperator:
    """The operator ``a b`` (apply ``b`` first)."""
    _same_grid(a, b)
    return DenseOperator(a.grid, a.coefficients @ b.coefficients)


def operator_norm(op: DenseOperator) -> float:
    return float(np.linalg.norm(op.coefficients, 2))


def defect_sqrt(a: DenseOperator, tol: float = CLAMP_TOL) -> DenseOperator:
    """Symmetric PSD root ``Q = (I - A*A)^(1/2)``.

    Eigenvalues of ``I - A*A`` in ``[-tol, 0)`` are clamped to zero; anything
    more negative means ``||A|| > 1`` and raises :class:`NotAContraction`.
    """
    n = a.grid.n_cells
    m = np.eye(n) - a.coefficients.T @ a.coefficients
    m = 0.5 * (m + m.T)
    lam, vec = np.linalg.eigh(m)
    if lam[0] < -tol:
        raise NotAContraction(
            f"I - A*A has eigenvalue {lam[0]:.3e}; operator norm exceeds 1"
        )
    root = np.sqrt(np.clip(lam, 0.0, None))
    q = (vec * root) @ vec.T
    return DenseOperator(a.grid, 0.5 * (q + q.T))


def complement_from_R(r: FiniteRank, grid: Grid) -> DenseOperator:
    """The symmetric ``A = (I - R*R)^(1/2) = I + sum_k (sqrt(1 - b_k^2) - 1) e_k (x) e_k``."""
    for b in r.betas:
        if not abs(b) < 1.0:
            raise BetaOutOfRange(f"|beta| must be < 1, got {b}")
    n = grid.n_cells
    if r.rank == 0:
        return identity(grid)
    if r.basis[0].grid != grid:
        raise GridMismatch("finite-rank basis lives on a different grid")
    r.check_orthonormal()
    v = r.basis_matrix()
    shrink = np.sqrt(1.0 - np.asarray(r.betas) ** 2) - 1.0
    return DenseOperator(grid, np.eye(n) + (v * shrink) @ v.T)


def finite_rank_from_functions(
    betas: Sequence[float], functions: Sequence[Callable], grid: Grid
) -> FiniteRank:
    return FiniteRank(tuple(betas), tuple(project_continuous(f, grid) for f in functions))
