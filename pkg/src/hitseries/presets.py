"""Catalog of integrator operators with their finite-rank complements."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BetaOutOfRange, NotAContraction
from .grid import Grid
from .integrator import IntegratorModel
from .operators import (
    DenseOperator,
    FiniteRank,
    IntegralKernel,
    complement_from_R,
    finite_rank_from_functions,
    identity,
    to_dense,
)


def fourier_function(k: int) -> Callable[[np.ndarray], np.ndarray]:
    """``1`` for ``k = 0``, ``sqrt2 cos(k pi t)`` for ``k > 0``, ``sqrt2 sin(|k| pi t)`` for ``k < 0``."""
    if k == 0:
        return lambda t: np.ones_like(np.asarray(t, dtype=float))
    if k > 0:
        return lambda t: math.sqrt(2.0) * np.cos(k * math.pi * np.asarray(t, dtype=float))
    return lambda t: math.sqrt(2.0) * np.sin(-k * math.pi * np.asarray(t, dtype=float))


@dataclass(frozen=True, eq=False)
class Preset:
    """An operator ``A`` together with ``R`` such that ``A*A + R*R = I``.

    ``betas`` and ``basis`` describe ``R = sum beta_k e_k (x) e_k`` for the
    series evaluator. ``smooth`` is True when ``A - I`` is a smoothing
    (finite-rank or continuous-kernel) operator.
    """

    name: str
    grid: Grid
    operator: DenseOperator
    r: FiniteRank
    betas: tuple
    basis: tuple
    smooth: bool = True

    def model(self, dimension: int = 1) -> IntegratorModel:
        return IntegratorModel(self.operator, dimension, smooth_perturbation=self.smooth)

    @property
    def complement(self) -> DenseOperator:
        return complement_from_R(self.r, self.grid)


def identity_preset(grid: Grid) -> Preset:
    return Preset("identity", grid, identity(grid), FiniteRank((), ()), (), ())


def partial_bridge(grid: Grid, beta: float = 0.5) -> Preset:
    """``R = beta 1 (x) 1``: ``eta(t) = w(t) - (1 - sqrt(1 - beta^2)) t w(1)``."""
    if not abs(beta) < 1.0:
        raise BetaOutOfRange(f"|beta| must be < 1, got {beta}")
    basis = (fourier_function(0),)
    r = finite_rank_from_functions([beta], basis, grid)
    return Preset("partial_bridge", grid, complement_from_R(r, grid), r, (float(beta),), basis)


def fourier_rank(grid: Grid, betas: Sequence[float] = (0.5, 0.3), frequencies: Sequence[int] = (0, 1)) -> Preset:
    """``R = sum beta_k f_k (x) f_k`` over the Fourier functions of the given frequencies."""
    if len(betas) != len(frequencies):
        raise ValueError("betas and frequencies must have equal length")
    if len(set(frequencies)) != len(frequencies):
        raise ValueError("frequencies must be distinct")
    basis = tuple(fourier_function(int(k)) for k in frequencies)
    r = finite_rank_from_functions(betas, basis, grid)
    return Preset("fourier_rank", grid, complement_from_R(r, grid), r, tuple(float(b) for b in betas), basis)


def kernel_preset(grid: Grid, amplitude: float = -0.5, name: str = "cosine") -> Preset:
    """``A = I + q`` with ``q(t, s) = a cos(pi (t - s))``.

    ``q = (a/2)(c (x) c + s (x) s)`` with ``c = sqrt2 cos(pi t)``, ``s = sqrt2 sin(pi t)``,
    so ``A`` is a contraction exactly for ``-1 < a <= 0`` and its complement has
    ``beta = sqrt(1 - (1 + a/2)^2)`` on both functions.
    """
    if name != "cosine":
        raise ValueError(f"unknown kernel preset {name!r}")
    if not abs(amplitude) < 1.0:
        raise ValueError("|amplitude| must be < 1")
    if amplitude > 0:
        raise NotAContraction("a positive cosine kernel makes I + q expand")
    a = float(amplitude)
    kernel = IntegralKernel.from_function(lambda t, s: a * np.cos(np.pi * (t - s)), grid)
    op = to_dense(kernel, grid)
    beta = math.sqrt(1.0 - (1.0 + 0.5 * a) ** 2)
    basis = (fourier_function(1), fourier_function(-1))
    r = finite_rank_from_functions([beta, beta], basis, grid)
    return Preset("kernel_preset", grid, op, r, (beta, beta), basis)


def all_presets(grid: Grid) -> list[Preset]:
    """One instance of every preset with default parameters."""
    return [identity_preset(grid), partial_bridge(grid), fourier_rank(grid), kernel_preset(grid)]
