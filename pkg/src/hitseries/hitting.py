"""Boundary-hitting probabilities of integrator paths: Monte Carlo and a quadrature oracle."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr, roots_legendre

from .errors import BetaOutOfRange, StartOutsideDomain
from .grid import GridFunction
from .integrator import (
    BLOCK_PATHS,
    IntegratorModel,
    block_rng,
    default_workers,
    iter_blocks,
)


@dataclass(frozen=True)
class DomainSpec:
    """Half-line ``{y > b}``; for ``dimension > 1`` the half-space ``{y[normal] > b}``."""

    b: float = 0.0
    dimension: int = 1
    normal: int = 0

    def __post_init__(self):
        if not 0 <= self.normal < self.dimension:
            raise ValueError("normal coordinate index out of range")

    def distance(self, x) -> float:
        """Signed distance of the start point to the boundary (positive inside)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dimension,):
            raise ValueError(f"start point must have {self.dimension} coordinates")
        return float(x[self.normal] - self.b)


@dataclass(frozen=True)
class HitEstimate:
    method: str
    p_hat: float
    stderr: float
    n_paths: int = 0
    n_cells: int | None = None
    seed: int | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("mc_raw", "mc_bridge", "oracle", "series"):
            raise ValueError(f"unknown method tag {self.method!r}")
        if self.stderr < 0:
            raise ValueError("stderr must be non-negative")
        if self.method != "series" and not 0.0 <= self.p_hat <= 1.0:
            raise ValueError("probability outside [0, 1]")

    def record(self) -> dict:
        return {
            "method": self.method,
            "p_hat": self.p_hat,
            "stderr": self.stderr,
            "n_paths": self.n_paths,
            "n_cells": self.n_cells,
            "seed": self.seed,
        }


def _drift_integral(drift, grid) -> np.ndarray:
    """``int_0^{t_i} h`` at every grid endpoint."""
    if drift is None:
        return np.zeros(grid.n_cells + 1)
    if isinstance(drift, GridFunction):
        if drift.grid != grid:
            raise ValueError("drift must live on the model grid")
        vals = drift.values
    else:
        vals = np.full(grid.n_cells, float(drift))
    return np.concatenate([[0.0], np.cumsum(vals) * grid.width])


def _count_block(model, seed, block, used, dist, shift, bridge):
    n = model.grid.n_cells
    rng = block_rng(seed, block)
    g = rng.standard_normal((BLOCK_PATHS, model.dimension, n))[:used, 0, :] * math.sqrt(model.grid.width)
    d = model.path_values(g)
    d += dist
    d += shift
    hit = d.min(axis=1) <= 0.0
    if bridge:
        u = rng.random(BLOCK_PATHS)[:used]
        alive = ~hit
        da = d[alive]
        with np.errstate(under="ignore"):
            cross = np.exp(-2.0 / model.grid.width * da[:, :-1] * da[:, 1:])
        log_survive = np.log1p(-cross).sum(axis=1)
        hit[alive] = u[alive] < -np.expm1(log_survive)
    return int(hit.sum())


def mc_hit_probability(
    model: IntegratorModel,
    domain: DomainSpec,
    x,
    n_paths: int = 1_000_000,
    seed: int = 0,
    bridge_correction: bool = True,
    allow_biased_bridge: bool = False,
    drift=None,
    workers: int | None = None,
) -> HitEstimate:
    """Fraction of paths ``x + eta`` that reach the boundary before time 1.

    Hits are detected on grid endpoints (touching counts). With
    ``bridge_correction`` a path that stays inside on the grid is still
    counted as a hit with probability ``1 - prod(1 - exp(-2 d_i d_{i+1} / dt))``,
    the Brownian-bridge crossing law between consecutive endpoints. That law
    is exact for the Wiener case and for ``A = I + smoothing`` operators
    (``model.smooth_perturbation``); for other operators it is only applied
    with ``allow_biased_bridge`` and the estimate is flagged as biased.

    ``drift`` adds ``int_0^t h`` to every path (constant or a GridFunction on
    the model grid). For ``dimension > 1`` the half-space problem is reduced
    to the normal coordinate, which alone decides the hit.
    """
    if n_paths < 100:
        raise ValueError("n_paths must be >= 100")
    dist = domain.distance(x)
    if dist < 0:
        raise StartOutsideDomain(f"start point lies {-dist:.3g} outside the domain")
    details = {}
    biased = False
    if bridge_correction and not (model.is_identity or model.smooth_perturbation):
        if not allow_biased_bridge:
            raise ValueError(
                "bridge correction for a general operator needs allow_biased_bridge=True"
            )
        biased = True
    if domain.dimension > 1:
        details["reduction"] = f"half-space normal coordinate {domain.normal}"
    if model.dimension != 1:
        model = IntegratorModel(model.operator_a, 1, model.smooth_perturbation)
    method = "mc_bridge" if bridge_correction else "mc_raw"
    details["biased"] = biased
    n_cells = model.grid.n_cells
    if dist == 0.0:
        return HitEstimate(method, 1.0, 0.0, n_paths, n_cells, seed, details)
    shift = _drift_integral(drift, model.grid)

    def run(block):
        b, used = block
        return _count_block(model, seed, b, used, dist, shift, bridge_correction)

    with ThreadPoolExecutor(max_workers=workers or default_workers()) as ex:
        hits = sum(ex.map(run, iter_blocks(n_paths)))
    p = hits / n_paths
    details["hits"] = hits
    return HitEstimate(method, p, math.sqrt(p * (1.0 - p) / n_paths), n_paths, n_cells, seed, details)


def _bridge_hit_given_endpoint(x: float, gamma: float, g: np.ndarray) -> np.ndarray:
    end = x + gamma * g
    with np.errstate(over="ignore"):
        return np.where(end <= 0.0, 1.0, np.exp(-2.0 * x * np.maximum(end, 0.0)))


def _split_legendre(x: float, gamma: float, order: int, reach: float = 12.0) -> float:
    """``E_g[hit(g)]`` over ``g ~ N(0,1)`` by Gauss-Legendre on each smooth piece of ``[-reach, reach]``."""
    nodes, weights = roots_legendre(order)
    kink = -x / gamma
    cuts = [-reach] + ([kink] if -reach < kink < reach else []) + [reach]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        g = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        dens = np.exp(-0.5 * g * g) / math.sqrt(2.0 * math.pi)
        total += 0.5 * (hi - lo) * float(weights @ (dens * _bridge_hit_given_endpoint(x, gamma, g)))
    return total


def partial_bridge_oracle(x_minus_b: float, beta: float, quad_order: int = 64) -> HitEstimate:
    """Hitting probability for ``eta(t) = w(t) - (1 - sqrt(1 - beta^2)) t w(1)``.

    Given ``w(1) = g`` the path is a Brownian bridge from ``x`` to
    ``x + gamma g`` (``gamma = sqrt(1 - beta^2)``), which reaches 0 with
    probability ``exp(-2 x (x + gamma g))`` or surely if it ends below 0.
    The Gaussian average is taken by quadrature split at the kink
    ``g = -x / gamma``; ``stderr`` is the change from half the order.
    """
    if not abs(beta) < 1.0:
        raise BetaOutOfRange(f"|beta| must be < 1, got {beta}")
    if quad_order < 20:
        raise ValueError("quad_order must be >= 20")
    x = float(x_minus_b)
    if x < 0:
        raise StartOutsideDomain("start point below the boundary")
    gamma = math.sqrt(1.0 - beta * beta)
    if x == 0.0:
        return HitEstimate("oracle", 1.0, 0.0, details={"x": x, "beta": beta})
    fine = _split_legendre(x, gamma, quad_order)
    coarse = _split_legendre(x, gamma, quad_order // 2)
    p = min(max(fine, 0.0), 1.0)
    return HitEstimate(
        "oracle", p, abs(fine - coarse), details={"x": x, "beta": beta, "quad_order": quad_order}
    )


def partial_bridge_closed_form(x: float, beta: float) -> float:
    """``Phi(-x/gamma) + exp(-2 x^2 beta^2) Phi(x/gamma - 2 x gamma)``."""
    gamma = math.sqrt(1.0 - beta * beta)
    return float(ndtr(-x / gamma) + math.exp(-2.0 * x * x * beta * beta) * ndtr(x / gamma - 2.0 * x * gamma))


def wiener_hit_probability(x: float) -> float:
    """Reflection principle: ``2 (1 - Phi(x))``."""
    return float(2.0 * ndtr(-x))
