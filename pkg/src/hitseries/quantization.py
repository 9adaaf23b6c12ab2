"""Second quantization on chaos coefficients and evaluation at zero noise.

For ``A = complement_from_R(R)`` with ``R = sum beta_k e_k (x) e_k`` the
hitting probability of ``x + eta`` equals ``Gamma(R)`` applied to the hitting
indicator of the Wiener path, evaluated at zero noise. ``Gamma(R)`` scales the
coefficient of multi-index ``r`` by ``prod beta_k^{r_k}``, and evaluation at
zero replaces each Hermite polynomial by its value at 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chaos import (
    DEFAULT_N_MAX,
    ChaosCoefficients,
    SpaceQuadrature,
    chaos_coefficients,
    convergence_diagnostic,
    multi_indices,
    multinomial_weight,
)
from .errors import BetaOutOfRange, NonOrthonormalBasis
from .grid import Grid, GridFunction, make_uniform_grid, project_continuous
from .hermite import calibrated_constant, hermite_at_zero, hermite_eval
from .hitting import HitEstimate
from .operators import ORTHONORMAL_TOL


def _check_betas(betas) -> tuple:
    betas = tuple(float(b) for b in betas)
    for b in betas:
        if not abs(b) < 1.0:
            raise BetaOutOfRange(f"|beta| must be < 1, got {b}")
    return betas


def gamma_transform(coeffs: ChaosCoefficients, betas: Sequence[float]) -> ChaosCoefficients:
    """Multiply the coefficient of ``r`` by ``prod beta_k^{r_k}``."""
    betas = _check_betas(betas)
    if len(betas) != coeffs.m:
        raise ValueError(f"{len(betas)} betas for a basis of size {coeffs.m}")
    orders = {
        n: {r: a * math.prod(b**k for b, k in zip(betas, r)) for r, a in coefs.items()}
        for n, coefs in coeffs.orders.items()
    }
    return ChaosCoefficients(coeffs.basis, orders)


def geometric_tail(abs_betas: Sequence[float], n_max: int) -> float:
    """``sum_{n > n_max} sum_{|r| = n} prod |beta_k|^{r_k}``.

    The full sum is ``prod 1/(1 - |beta_k|)``; the partial sums are the
    complete homogeneous polynomials, read off a truncated power series.
    """
    full = math.prod(1.0 / (1.0 - b) for b in abs_betas)
    series = np.zeros(n_max + 1)
    series[0] = 1.0
    powers = np.arange(n_max + 1)
    for b in abs_betas:
        series = np.convolve(series, b**powers)[: n_max + 1]
    return max(full - float(series.sum()), 0.0)


@dataclass(frozen=True)
class ZeroEvaluation:
    value: float
    tail_bound: float
    per_order: dict
    hermite_constant: float


def _evaluate(coeffs: ChaosCoefficients) -> dict:
    per_order = {}
    for n in sorted(coeffs.orders):
        total = 0.0
        for r, a in coeffs.orders[n].items():
            total += multinomial_weight(r) * a * math.prod(hermite_at_zero(k) for k in r)
        per_order[n] = total
    return per_order


def evaluate_at_zero(coeffs: ChaosCoefficients, betas: Sequence[float], d: int = 1) -> ZeroEvaluation:
    """``Gamma(R)`` applied to the coefficients, then evaluated at zero noise.

    For ``d > 1`` the coefficient basis is the ``m`` basis functions repeated
    for each coordinate (coordinate-major), and ``betas`` are tiled ``d``
    times. The tail bound is ``c^{m d} sum_{n > N} sum_r prod |beta|^r`` with
    the calibrated Hermite constant ``c`` and ``E alpha^2 <= 1``; it is an
    empirical bound since ``c`` is sampled.
    """
    betas = _check_betas(betas)
    if d < 1:
        raise ValueError("dimension must be >= 1")
    tiled = betas * d
    transformed = gamma_transform(coeffs, tiled)
    per_order = _evaluate(transformed)
    c = calibrated_constant()
    tail = c ** len(tiled) * geometric_tail([abs(b) for b in tiled], coeffs.max_order)
    return ZeroEvaluation(sum(per_order.values()), tail, per_order, c)


def embed_half_space(coeffs: ChaosCoefficients, d: int, normal: int = 0) -> ChaosCoefficients:
    """Lift one-dimensional coefficients to ``d`` coordinates.

    The half-space indicator depends on the normal coordinate only, so every
    multi-index with a nonzero entry outside the normal block gets 0.
    """
    if not 0 <= normal < d:
        raise ValueError("normal coordinate index out of range")
    m = coeffs.m
    basis = coeffs.basis * d
    orders = {}
    for n, coefs in coeffs.orders.items():
        block = {}
        for r in multi_indices(n, m * d):
            outside = sum(r) - sum(r[normal * m : (normal + 1) * m])
            block[r] = 0.0 if outside else coefs[r[normal * m : (normal + 1) * m]]
        orders[n] = block
    return ChaosCoefficients(basis, orders)


@dataclass(frozen=True)
class SeriesSettings:
    n_max: int = DEFAULT_N_MAX
    time_cells: int = 64
    L_trunc: float = 8.0
    n_space: int = 400
    check_convergence: bool = True

    @property
    def time_grid(self) -> Grid:
        return make_uniform_grid(self.time_cells)

    @property
    def space(self) -> SpaceQuadrature:
        return SpaceQuadrature(self.L_trunc, self.n_space)


def _basis_on(basis: Sequence, grid: Grid) -> tuple:
    out = []
    for e in basis:
        if isinstance(e, GridFunction):
            if e.grid == grid:
                out.append(e)
                continue
            # resample a step function onto another uniform grid
            src = e.values[np.minimum((grid.midpoints * e.grid.n_cells).astype(int), e.grid.n_cells - 1)]
            out.append(GridFunction(grid, src))
        else:
            out.append(project_continuous(e, grid))
    gram = np.array([[np.dot(a.values, b.values) * grid.width for b in out] for a in out]).reshape(len(out), len(out))
    if len(out) and np.abs(gram - np.eye(len(out))).max() > ORTHONORMAL_TOL:
        raise NonOrthonormalBasis("basis is not orthonormal on the series time grid")
    return tuple(out)


def hitting_probability_series(
    x: float,
    betas: Sequence[float],
    basis: Sequence,
    settings: SeriesSettings | None = None,
) -> HitEstimate:
    """Hitting probability of ``x + eta`` for ``A = complement_from_R(sum beta_k e_k (x) e_k)``.

    ``x`` is the distance to the boundary. The estimate carries the tail
    bound in ``stderr`` and a per-order breakdown plus a time-grid
    convergence diagnostic in ``details``.
    """
    settings = settings or SeriesSettings()
    betas = _check_betas(betas)
    if len(betas) != len(basis):
        raise ValueError("betas and basis must have the same length")
    if not x > 0:
        raise ValueError("series evaluation needs a start point strictly inside")
    grid = settings.time_grid
    fns = _basis_on(basis, grid)
    coeffs = chaos_coefficients(x, fns, settings.n_max, grid, settings.space)
    ev = evaluate_at_zero(coeffs, betas)
    details = {
        "x": float(x),
        "betas": list(betas),
        "N_max": settings.n_max,
        "per_order": {str(n): v for n, v in ev.per_order.items()},
        "tail_bound": ev.tail_bound,
        "tail_bound_kind": "empirical",
        "hermite_constant": ev.hermite_constant,
        "second_moment": coeffs.second_moment(),
    }
    if settings.check_convergence and fns and settings.time_cells >= 8:
        coarse_grid = make_uniform_grid(settings.time_cells // 2)
        coarse = chaos_coefficients(x, _basis_on(basis, coarse_grid), settings.n_max, coarse_grid, settings.space)
        conv = convergence_diagnostic(coeffs, coarse, settings.time_cells)
        details["convergence"] = {
            "time_cells": conv.n_cells,
            "coarse_time_cells": conv.coarse_cells,
            "max_relative_change": conv.max_relative_change,
            "passed": conv.passed,
        }
    return HitEstimate("series", ev.value, ev.tail_bound, 0, settings.time_cells, None, details)


def example1_expectation(c: float, k: int) -> float:
    """``E H_{2k}(c xi)`` for standard normal ``xi``: ``(-1)^k (2k-1)!! (1 - c^2)^k``.

    Conditioning on a second independent normal gives ``(c')^{2k} H_{2k}(0)``
    with ``c' = sqrt(1 - c^2)``; the sign ``(-1)^k`` comes from ``H_{2k}(0)``.
    """
    if abs(c) > 1.0:
        raise ValueError("|c| must be <= 1")
    if k < 0:
        raise ValueError("k must be >= 0")
    return hermite_at_zero(2 * k) * (1.0 - c * c) ** k


def gamma_1d(c: float, coefficients: Sequence[float], xi: float) -> float:
    """``sum_n c^n a_n H_n(xi)`` for a single Gaussian coordinate."""
    if abs(c) > 1.0:
        raise ValueError("|c| must be <= 1")
    total = 0.0
    for n, a in enumerate(coefficients):
        total += 1.0 * (a * math.prod([c**n])) * float(hermite_eval(n, xi))
    return total
