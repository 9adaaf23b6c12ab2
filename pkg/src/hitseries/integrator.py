"""Integrator processes ``eta(t) = int A(1_[0,t])(s) dw(s)`` on a uniform grid."""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import NotAContraction
from .grid import Grid, indicator, indicator_matrix
from .operators import DenseOperator, defect_sqrt, operator_norm

# Paths are generated in fixed blocks; block b draws from the Philox stream
# keyed by (seed, b), so path p is a function of (seed, p) alone.
BLOCK_PATHS = 1024
NORM_TOL = 1e-8
# Above this rank the perturbation A - I is applied densely.
MAX_FACTOR_RANK = 64


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


def default_workers() -> int:
    return os.cpu_count() or 1


@dataclass(frozen=True, eq=False)
class IntegratorModel:
    """Integrator driven by ``operator_a``, acting identically on ``dimension`` coordinates.

    ``smooth_perturbation`` declares that ``A - I`` is a smoothing operator
    (finite-rank with C1 range or a continuous integral kernel), so paths
    differ from Brownian motion by a C1 process and the Brownian-bridge
    crossing correction is asymptotically exact.
    """

    operator_a: DenseOperator
    dimension: int = 1
    smooth_perturbation: bool = False
    _transform: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        norm = operator_norm(self.operator_a)
        if norm > 1.0 + NORM_TOL:
            raise NotAContraction(f"operator norm {norm:.6f} exceeds 1")
        object.__setattr__(self, "_transform", _increment_transform(self.operator_a))

    @property
    def grid(self) -> Grid:
        return self.operator_a.grid

    @property
    def is_identity(self) -> bool:
        return self._transform[0] == "identity"

    def transform_increments(self, g: np.ndarray) -> np.ndarray:
        """Map white-noise cell increments (last axis) to increments of ``eta``."""
        kind, *data = self._transform
        if kind == "identity":
            return g
        if kind == "lowrank":
            u, v = data
            return g + (g @ v) @ u.T
        (mat,) = data
        return g @ mat.T

    def path_values(self, g: np.ndarray) -> np.ndarray:
        """Values at all grid endpoints, starting with 0 at t = 0."""
        inc = self.transform_increments(g)
        out = np.zeros(inc.shape[:-1] + (inc.shape[-1] + 1,))
        np.cumsum(inc, axis=-1, out=out[..., 1:])
        return out


def _increment_transform(a: DenseOperator) -> tuple:
    # eta(t_i) = sum_j (A 1_[0,t_i])_j g_j = cumsum(A^T g)_i in step-value coordinates
    at = a.coefficients.T
    n = at.shape[0]
    pert = at - np.eye(n)
    if not np.any(pert):
        return ("identity",)
    u, s, vt = np.linalg.svd(pert)
    rank = int(np.sum(s > s[0] * 1e-13))
    if rank <= MAX_FACTOR_RANK:
        # A^T g = g + U diag(s) V^T g
        return ("lowrank", u[:, :rank] * s[:rank], vt[:rank].T)
    return ("dense", at)


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    model: IntegratorModel
    n_paths: int
    seed: int
    values: np.ndarray  # (n_paths, n_cells + 1, dimension)

    @property
    def times(self) -> np.ndarray:
        return self.model.grid.endpoints

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path", "t", "coord", "value"])
        t = self.times
        for p in range(self.n_paths):
            for i, ti in enumerate(t):
                for c in range(self.model.dimension):
                    w.writerow([p, repr(float(ti)), c, repr(float(self.values[p, i, c]))])
        return buf.getvalue()


def covariance(model: IntegratorModel, s: float, t: float) -> float:
    """``<A 1_[0,s], A 1_[0,t]>`` per coordinate."""
    a = model.operator_a
    return float(a.apply(indicator(model.grid, s)).coords() @ a.apply(indicator(model.grid, t)).coords())


def covariance_matrix(model: IntegratorModel) -> np.ndarray:
    """Covariances at all pairs of grid endpoints."""
    grid = model.grid
    ind = indicator_matrix(grid) * np.sqrt(grid.width)
    img = ind @ model.operator_a.coefficients.T
    return img @ img.T


def _block_increments(model: IntegratorModel, seed: int, block: int) -> np.ndarray:
    n = model.grid.n_cells
    rng = block_rng(seed, block)
    return rng.standard_normal((BLOCK_PATHS, model.dimension, n)) * np.sqrt(model.grid.width)


def iter_blocks(n_paths: int) -> Iterator[tuple[int, int]]:
    """(block index, number of paths used from it)."""
    n_blocks = -(-n_paths // BLOCK_PATHS)
    for b in range(n_blocks):
        yield b, min(BLOCK_PATHS, n_paths - b * BLOCK_PATHS)


def sample_paths(
    model: IntegratorModel, n_paths: int, seed: int, workers: int | None = None
) -> PathEnsemble:
    """Draw ``n_paths`` realizations of ``eta`` at every grid endpoint.

    Deterministic in ``(seed, n_paths)`` and independent of ``workers``; the
    first ``k`` paths of a larger ensemble coincide with a ``k``-path ensemble.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")

    def one(block):
        b, used = block
        g = _block_increments(model, seed, b)[:used]
        return np.moveaxis(model.path_values(g), 1, 2)

    with ThreadPoolExecutor(max_workers=workers or default_workers()) as ex:
        parts = list(ex.map(one, iter_blocks(n_paths)))
    return PathEnsemble(model, n_paths, seed, np.concatenate(parts, axis=0))


@dataclass(frozen=True)
class IntegratorConditionReport:
    max_ratio: float
    bound_constant: float
    n_trials: int

    @property
    def satisfied(self) -> bool:
        return self.max_ratio <= self.bound_constant + 1e-8


def check_integrator_condition(
    model: IntegratorModel, n_trials: int = 1000, seed: int = 0
) -> IntegratorConditionReport:
    """Exact check of ``E(sum a_k (eta(t_{k+1}) - eta(t_k)))^2 <= C sum a_k^2 dt_k``.

    The expectation equals ``||A u||^2`` for the step function
    ``u = sum a_k 1_[t_k, t_{k+1})``, so no sampling of ``eta`` is involved.
    Partitions are random subsets of the grid endpoints.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    grid = model.grid
    n = grid.n_cells
    a = model.operator_a.coefficients
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_trials):
        n_inner = rng.integers(0, n)
        inner = np.sort(rng.choice(np.arange(1, n), size=n_inner, replace=False))
        cuts = np.concatenate([[0], inner, [n]])
        coef = rng.standard_normal(len(cuts) - 1)
        u = np.repeat(coef, np.diff(cuts))
        dt = np.diff(cuts) * grid.width
        au = a @ (u * np.sqrt(grid.width))
        ratio = float(au @ au) / float(np.sum(coef**2 * dt))
        worst = max(worst, ratio)
    return IntegratorConditionReport(worst, operator_norm(model.operator_a) ** 2, n_trials)


@dataclass(frozen=True)
class DecompositionReport:
    max_abs_deviation: float


def decomposition_check(a: DenseOperator) -> DecompositionReport:
    """Max over grid endpoints of ``|<A1_s,A1_t> + <Q1_s,Q1_t> - min(s,t)|`` with ``Q = (I - A*A)^(1/2)``."""
    q = defect_sqrt(a)
    grid = a.grid
    ind = indicator_matrix(grid) * np.sqrt(grid.width)
    ia = ind @ a.coefficients.T
    iq = ind @ q.coefficients.T
    t = grid.endpoints
    dev = ia @ ia.T + iq @ iq.T - np.minimum.outer(t, t)
    return DecompositionReport(float(np.abs(dev).max()))
