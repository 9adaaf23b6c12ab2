"""Chaos kernels of the hitting indicator by iterated Duhamel quadrature.

The probability ``U^h(x, 0)`` that a path ``x + w(t) + int_0^t h`` reaches 0
before time 1 is expanded in powers of the drift ``h``. The ``n``-th term is
``int_{r_1 <= ... <= r_n} K_n(r) h(r_1) ... h(r_n) dr`` with

    K_n(r) = [P_{r_1} D_{r_2 - r_1} ... D_{r_n - r_{n-1}} g_{r_n}](x),

where ``P_s`` is the absorbing heat semigroup on the half-line,
``D_s = d/dz o P_s`` and ``g_r = d/dz u0(., r)``. These are the simplex
kernels; ``symmetrize`` turns them into the symmetric chaos kernels of the
functional, and ``project_to_basis`` gives the coefficients consumed by the
second-quantization evaluator.
"""
from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .errors import (
    GridMismatch,
    LadderConditioningError,
    OrderTooLarge,
    QuadratureBlowUp,
)
from .grid import Grid, GridFunction, make_uniform_grid
from .heat import SchemeParams, gauss_density, solve_drifted, u0

DEFAULT_N_MAX = 3
MAX_KERNEL_ORDER = 4
SECOND_MOMENT_SLACK = 1e-6


@dataclass(frozen=True)
class SpaceQuadrature:
    """Uniform nodes on ``[0, L_trunc]`` carrying piecewise-linear fields."""

    L_trunc: float = 8.0
    n_space: int = 400

    def __post_init__(self):
        if self.L_trunc < 6.0:
            raise ValueError("L_trunc must be >= 6")
        if self.n_space < 10:
            raise ValueError("n_space must be >= 10")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.L_trunc, self.n_space + 1)

    def derivative_matrix(self, s: float) -> np.ndarray:
        """Matrix of ``f -> (d/dz P_s f)(z_i)`` for the linear interpolant of ``f``.

        Integrating by parts against the image kernel gives boundary terms at
        0 and ``L_trunc`` plus one Gaussian cell integral per slope. At
        ``s = 0`` the boundary terms drop and the result is the central
        difference (one-sided at 0).
        """
        z = self.nodes
        zi = z[:, None]
        a, b = z[None, :-1], z[None, 1:]
        if s > 0:
            r = math.sqrt(s)
            cell = ndtr((b - zi) / r) - ndtr((a - zi) / r) + ndtr((b + zi) / r) - ndtr((a + zi) / r)
        else:
            cell = 0.5 * (np.sign(b - zi) - np.sign(a - zi) + np.sign(b + zi) - np.sign(a + zi))
        dz = np.diff(z)
        n = len(dz)
        slope = np.zeros((n, n + 1))
        slope[np.arange(n), np.arange(n)] = -1.0 / dz
        slope[np.arange(n), np.arange(1, n + 1)] = 1.0 / dz
        out = cell @ slope
        if s > 0:
            length = z[-1]
            out[:, 0] += 2.0 * gauss_density(z, s)
            out[:, -1] -= gauss_density(length - z, s) + gauss_density(length + z, s)
        return out

    def hat_weights(self, mean: float, var: float) -> np.ndarray:
        """``int N(mean, var)(y) hat_i(y) dy`` for every node ``i``."""
        z = self.nodes
        r = math.sqrt(var)
        a, b = z[:-1], z[1:]
        lo, hi = (a - mean) / r, (b - mean) / r
        i0 = ndtr(hi) - ndtr(lo)
        i1 = mean * i0 + r * (gauss_density(lo, 1.0) - gauss_density(hi, 1.0))
        w = np.zeros(len(z))
        w[:-1] += (b * i0 - i1) / (b - a)
        w[1:] += (i1 - a * i0) / (b - a)
        return w

    def green_weights(self, x: float, var: float) -> np.ndarray:
        """Hat weights of the absorbing kernel ``G(x, .)`` after time ``var``."""
        return self.hat_weights(x, var) - self.hat_weights(-x, var)


@dataclass(frozen=True, eq=False)
class ChaosKernel:
    """Kernel of order ``n`` sampled at time-cell midpoints.

    ``symmetric=False`` marks a simplex kernel (zero off ``r_1 <= ... <= r_n``);
    ``symmetric=True`` marks a kernel invariant under argument permutation.
    """

    order: int
    time_grid: Grid
    values: np.ndarray
    x: float
    symmetric: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        expected = (self.time_grid.n_cells,) * self.order
        if vals.shape != expected:
            raise GridMismatch(f"kernel of order {self.order} needs shape {expected}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise QuadratureBlowUp("non-finite kernel values")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def to_csv(self) -> str:
        """Rows ``n,r1,...,rn,value`` over the simplex points."""
        n = self.order
        buf = io.StringIO()
        buf.write(",".join(["n"] + [f"r{k + 1}" for k in range(n)] + ["value"]) + "\n")
        mid = self.time_grid.midpoints
        for idx in itertools.combinations_with_replacement(range(self.time_grid.n_cells), n):
            cols = [str(n)] + [repr(float(mid[i])) for i in idx] + [repr(float(self.values[idx]))]
            buf.write(",".join(cols) + "\n")
        return buf.getvalue()


def _chain_kernels(x: float, n_max: int, time_grid: Grid, space: SpaceQuadrature) -> list[np.ndarray]:
    m = time_grid.n_cells
    tau = time_grid.midpoints
    z = space.nodes
    # g_r = d/dz u0(z, r), psi_r = weights of G(0, r, x, .) against hats
    g = np.array([-2.0 * gauss_density(z, 1.0 - r) for r in tau])
    psi = np.array([space.green_weights(x, r) for r in tau])
    out = [np.array(u0(x, 0.0))]
    if n_max == 0:
        return out
    out.append(np.einsum("iz,iz->i", psi, g))
    if n_max == 1:
        return out
    dmats = [space.derivative_matrix(k * time_grid.width) for k in range(m)]
    # chains[j][i_1..i_j] = D_{i_2-i_1} ... D_{i_j-i_{j-1}} g_{i_j}
    chains = {1: g}
    for j in range(2, n_max):
        prev = chains[j - 1]
        cur = np.zeros((m,) * j + (len(z),))
        for k in range(m):
            i1 = np.arange(m - k)
            cur[i1, i1 + k] = prev[i1 + k] @ dmats[k].T
        chains[j] = cur
    kernels = {n: np.zeros((m,) * n) for n in range(2, n_max + 1)}
    for k in range(m):
        i1 = np.arange(m - k)
        rho = psi[i1] @ dmats[k]
        for n in range(2, n_max + 1):
            kernels[n][i1, i1 + k] = np.einsum("az,a...z->a...", rho, chains[n - 1][i1 + k])
    out.extend(kernels[n] for n in range(2, n_max + 1))
    return out


def duhamel_kernels(
    x: float,
    n_max: int = DEFAULT_N_MAX,
    time_grid: Grid | None = None,
    space: SpaceQuadrature | None = None,
) -> list[ChaosKernel]:
    """Simplex kernels of orders ``0..n_max`` at start point ``x``."""
    if n_max > MAX_KERNEL_ORDER:
        raise OrderTooLarge(f"orders above {MAX_KERNEL_ORDER} are not supported")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if not x > 0:
        raise ValueError("start point must be > 0")
    time_grid = time_grid or make_uniform_grid(64)
    space = space or SpaceQuadrature()
    vals = _chain_kernels(float(x), n_max, time_grid, space)
    return [ChaosKernel(n, time_grid, v, float(x)) for n, v in enumerate(vals)]


def duhamel_kernel(
    n: int,
    x: float,
    time_grid: Grid | None = None,
    space: SpaceQuadrature | None = None,
    n_max: int = DEFAULT_N_MAX,
) -> ChaosKernel:
    """Simplex kernel ``K_n``; raises ``OrderTooLarge`` when ``n > n_max``."""
    if n > n_max:
        raise OrderTooLarge(f"order {n} exceeds n_max={n_max}")
    if n < 0:
        raise ValueError("order must be >= 0")
    return duhamel_kernels(x, n, time_grid, space)[n]


def symmetrize(kernel: ChaosKernel) -> ChaosKernel:
    """Symmetric kernel ``f(r) = K(sorted r) / n!``.

    Cube integrals of ``f`` against ``h^{(x)n}`` equal simplex integrals of ``K``.
    """
    n = kernel.order
    if kernel.symmetric or n <= 1:
        return ChaosKernel(n, kernel.time_grid, kernel.values, kernel.x, symmetric=True)
    shape = kernel.values.shape
    idx = np.sort(np.indices(shape).reshape(n, -1), axis=0)
    vals = kernel.values[tuple(idx)].reshape(shape) / math.factorial(n)
    return ChaosKernel(n, kernel.time_grid, vals, kernel.x, symmetric=True)


def _samples(h, grid: Grid) -> np.ndarray:
    if isinstance(h, GridFunction):
        if h.grid != grid:
            raise GridMismatch("function and kernel live on different grids")
        return h.values
    if callable(h):
        return np.asarray([float(h(t)) for t in grid.midpoints])
    return np.full(grid.n_cells, float(h))


def _tie_weights(n: int, m: int) -> np.ndarray:
    """Simplex midpoint-rule weights: ``1/prod(multiplicity!)`` on ``i_1 <= ... <= i_n``."""
    w = np.zeros((m,) * n)
    for idx in itertools.combinations_with_replacement(range(m), n):
        mult = np.unique(idx, return_counts=True)[1]
        w[idx] = 1.0 / math.prod(math.factorial(int(c)) for c in mult)
    return w


def _contract(values: np.ndarray, vectors: Sequence[np.ndarray], width: float) -> float:
    out = values
    for v in vectors:
        out = np.tensordot(out, v, axes=([0], [0]))
    return float(out) * width ** len(vectors)


def pair_with(kernel: ChaosKernel, h) -> float:
    """``int K h^{(x)n}`` over the simplex (simplex kernel) or the cube (symmetric kernel)."""
    n = kernel.order
    if n == 0:
        return float(kernel.values)
    hv = _samples(h, kernel.time_grid)
    vals = kernel.values
    if not kernel.symmetric and n > 1:
        vals = vals * _tie_weights(n, kernel.time_grid.n_cells)
    return _contract(vals, [hv] * n, kernel.time_grid.width)


def multi_indices(n: int, m: int) -> list[tuple[int, ...]]:
    """All ``(r_1, ..., r_m)`` with sum ``n``, in lexicographic order."""
    if m == 0:
        return [()] if n == 0 else []
    out = []
    for combo in itertools.combinations_with_replacement(range(m), n):
        r = [0] * m
        for k in combo:
            r[k] += 1
        out.append(tuple(r))
    return sorted(out)


def multinomial_weight(r: Sequence[int]) -> float:
    """``n! / (r_1! ... r_m!)``."""
    return math.factorial(sum(r)) / math.prod(math.factorial(k) for k in r)


@dataclass(frozen=True, eq=False)
class ChaosCoefficients:
    """Coefficients ``a^n_r`` of the symmetric kernels in an orthonormal basis."""

    basis: tuple
    orders: dict = field(default_factory=dict)

    def __post_init__(self):
        m = len(self.basis)
        for n, coefs in self.orders.items():
            expected = math.comb(n + m - 1, m - 1) if m else int(n == 0)
            if len(coefs) != expected:
                raise ValueError(f"order {n} needs {expected} coefficients, got {len(coefs)}")
            for r in coefs:
                if len(r) != m or sum(r) != n:
                    raise ValueError(f"multi-index {r} does not match order {n}")

    @property
    def m(self) -> int:
        return len(self.basis)

    @property
    def max_order(self) -> int:
        return max(self.orders)

    def second_moment(self) -> float:
        """``sum_n sum_r (n!^2 / r!) a_r^2``, a lower bound for ``E alpha^2``."""
        total = 0.0
        for n, coefs in self.orders.items():
            for r, a in coefs.items():
                total += math.factorial(n) * multinomial_weight(r) * a * a
        return total

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,multi_index,value\n")
        for n in sorted(self.orders):
            for r, a in self.orders[n].items():
                buf.write(f"{n},{';'.join(map(str, r))},{float(a)!r}\n")
        return buf.getvalue()


def _basis_matrix(basis: Sequence, grid: Grid) -> np.ndarray:
    return np.array([_samples(e, grid) for e in basis]).reshape(len(basis), grid.n_cells)


def project_to_basis(kernel: ChaosKernel, basis: Sequence) -> dict:
    """Order-``n`` coefficients ``a_r = int f e_{i_1} ... e_{i_n}``.

    ``i_1..i_n`` is any index sequence in which basis function ``k`` appears
    ``r_k`` times; the value does not depend on which one since ``f`` is symmetric.
    """
    n = kernel.order
    if n > 1 and not kernel.symmetric:
        raise ValueError("project_to_basis needs a symmetrized kernel")
    basis = tuple(basis)
    if n == 0:
        return {(0,) * len(basis): float(kernel.values)}
    mat = _basis_matrix(basis, kernel.time_grid)
    out = {}
    for r in multi_indices(n, len(basis)):
        seq = [mat[k] for k, cnt in enumerate(r) for _ in range(cnt)]
        out[r] = _contract(kernel.values, seq, kernel.time_grid.width)
    return out


def check_second_moment(coeffs: ChaosCoefficients) -> float:
    """Return the weighted square sum; raise ``QuadratureBlowUp`` above 1."""
    total = coeffs.second_moment()
    if total > 1.0 + SECOND_MOMENT_SLACK:
        raise QuadratureBlowUp(f"second moment {total:.6g} exceeds the indicator bound 1")
    return total


def chaos_coefficients(
    x: float,
    basis: Sequence,
    n_max: int = DEFAULT_N_MAX,
    time_grid: Grid | None = None,
    space: SpaceQuadrature | None = None,
) -> ChaosCoefficients:
    """Kernels, symmetrization and projection for orders ``0..n_max``."""
    basis = tuple(basis)
    if not basis:
        n_max = 0
    kernels = duhamel_kernels(x, n_max, time_grid, space)
    orders = {k.order: project_to_basis(symmetrize(k), basis) for k in kernels}
    coeffs = ChaosCoefficients(basis, orders)
    check_second_moment(coeffs)
    return coeffs


@dataclass(frozen=True)
class ConvergenceReport:
    n_cells: int
    coarse_cells: int
    max_relative_change: float
    per_coefficient: dict
    floor: float

    @property
    def passed(self) -> bool:
        return self.max_relative_change < 0.05


def convergence_diagnostic(
    fine: ChaosCoefficients, coarse: ChaosCoefficients, n_cells: int, floor: float = 1e-4
) -> ConvergenceReport:
    """Relative change of each coefficient between two time grids.

    Coefficients smaller than ``floor`` are compared in absolute terms.
    """
    changes = {}
    for n, coefs in fine.orders.items():
        for r, a in coefs.items():
            b = coarse.orders[n][r]
            changes[(n, r)] = abs(a - b) / max(abs(a), floor)
    worst = max(changes.values(), default=0.0)
    return ConvergenceReport(n_cells, n_cells // 2, worst, changes, floor)


@dataclass(frozen=True)
class OrderComparison:
    order: int
    pde: float
    kernel: float

    @property
    def abs_error(self) -> float:
        return abs(self.pde - self.kernel)

    @property
    def rel_error(self) -> float:
        return self.abs_error / abs(self.pde) if self.pde else math.inf


@dataclass(frozen=True)
class FourierWienerReport:
    x: float
    epsilons: tuple
    taylor: tuple
    comparisons: tuple

    def comparison(self, order: int) -> OrderComparison:
        return self.comparisons[order]


def ladder_taylor(values_pos: Sequence[float], values_neg: Sequence[float], center: float, epsilons: Sequence[float]):
    """Taylor coefficients ``c_0..c_{2K}`` of ``U(eps)`` from a symmetric ladder.

    Even and odd parts are fitted separately, so negating the drift (which
    swaps ``values_pos`` and ``values_neg``) negates every odd coefficient
    exactly.
    """
    eps = np.asarray(epsilons, dtype=float)
    pos = np.asarray(values_pos, dtype=float)
    neg = np.asarray(values_neg, dtype=float)
    k = len(eps)
    even = np.concatenate([[center], 0.5 * (pos + neg)])
    odd = 0.5 * (pos - neg)
    ev_mat = np.vander(np.concatenate([[0.0], eps]) ** 2, k + 1, increasing=True)
    od_mat = eps[:, None] * np.vander(eps**2, k, increasing=True)
    for mat in (ev_mat, od_mat):
        if np.linalg.cond(mat) > 1e10:
            raise LadderConditioningError("epsilon ladder is ill-conditioned")
    ce = np.linalg.solve(ev_mat, even)
    co = np.linalg.solve(od_mat, odd)
    coefs = np.zeros(2 * k + 1)
    coefs[0::2] = ce
    coefs[1::2] = co
    return coefs


def fourier_wiener_check(
    x: float,
    h=1.0,
    orders: int = 1,
    epsilon0: float = 0.1,
    n_rungs: int = 3,
    time_grid: Grid | None = None,
    space: SpaceQuadrature | None = None,
    scheme: SchemeParams | None = None,
) -> FourierWienerReport:
    """Compare Duhamel pairings with the Taylor expansion of the drifted PDE solution.

    The PDE is solved at drift ``eps h`` for ``eps = +-epsilon0 * (1..n_rungs)``
    and 0; ``orders`` may not exceed ``2 n_rungs``.
    """
    if not x > 0:
        raise ValueError("start point must be > 0")
    if orders > 2 * n_rungs or orders > MAX_KERNEL_ORDER:
        raise OrderTooLarge("not enough ladder rungs for the requested orders")
    scheme = scheme or SchemeParams()
    time_grid = time_grid or make_uniform_grid(64)
    hv = _samples(h, time_grid)
    if epsilon0 * n_rungs * np.abs(hv).max() > 1.0:
        raise LadderConditioningError("largest rung leaves the Taylor regime")
    if epsilon0 < 1e-3:
        raise LadderConditioningError("epsilon0 below the PDE discretization noise")
    drift_grid = GridFunction(time_grid, hv)
    eps = epsilon0 * np.arange(1, n_rungs + 1)

    def value(e):
        return solve_drifted(drift_grid * e, scheme).at_start(x)

    center = value(0.0)
    pos = [value(e) for e in eps]
    neg = [value(-e) for e in eps]
    taylor = ladder_taylor(pos, neg, center, eps)
    kernels = duhamel_kernels(x, orders, time_grid, space)
    comps = tuple(OrderComparison(k.order, float(taylor[k.order]), pair_with(k, drift_grid)) for k in kernels)
    return FourierWienerReport(float(x), tuple(float(e) for e in eps), tuple(float(c) for c in taylor), comps)
