"""Heat-equation objects on the half-line ``(0, inf)`` with absorbing boundary at 0.

The generator is ``(1/2) d^2/dx^2`` throughout, so the free kernel at elapsed
time ``s`` is the Gaussian density with variance ``s``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded
from scipy.special import erfc, lambertw, ndtr

from .errors import PecletViolation
from .grid import GridFunction

SQRT_2PI = np.sqrt(2.0 * np.pi)


def gauss_density(u, var):
    u = np.asarray(u, dtype=float)
    return np.exp(-0.5 * u * u / var) / np.sqrt(2.0 * np.pi * var)


def _check_times(s, t):
    if not np.all(np.asarray(s) < np.asarray(t)):
        raise ValueError("Green function needs s < t")


def green(s, t, x, y):
    """Absorbing Green function by images: ``phi_{t-s}(y - x) - phi_{t-s}(y + x)``."""
    _check_times(s, t)
    var = np.asarray(t, dtype=float) - s
    out = gauss_density(np.asarray(y) - x, var) - gauss_density(np.asarray(y) + x, var)
    return out if np.ndim(out) else float(out)


def green_normal_derivative(s, t, x):
    """``d/dy G(s, t, x, y)`` at ``y = 0``, i.e. ``2x/(t-s) phi_{t-s}(x)``.

    Half of it is the first-passage density of Brownian motion from ``x`` to 0.
    """
    _check_times(s, t)
    var = np.asarray(t, dtype=float) - s
    out = 2.0 * np.asarray(x) / var * gauss_density(x, var)
    return out if np.ndim(out) else float(out)


def u0(x, t):
    """Drift-free hitting probability ``2(1 - Phi(x / sqrt(1 - t)))``.

    ``u0(0, t) = 1`` for every t (touching counts); ``u0(x, 1) = 0`` for x > 0.
    """
    x = np.asarray(x, dtype=float)
    rem = 1.0 - np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = erfc(x / np.sqrt(2.0 * rem))
    val = np.where(x <= 0.0, 1.0, np.where(rem <= 0.0, 0.0, val))
    return val if val.ndim else float(val)


def u0_gradient(x, t):
    """``d/dx u0 = -2 phi(x / sqrt(1-t)) / sqrt(1-t)``."""
    rem = 1.0 - np.asarray(t, dtype=float)
    out = -2.0 * gauss_density(x, rem)
    return out if np.ndim(out) else float(out)


def drifted_hit_probability(x, mu: float, duration: float = 1.0):
    """Probability that ``x + w(r) + mu r`` reaches 0 for some ``r <= duration`` (x >= 0)."""
    x = np.asarray(x, dtype=float)
    sd = np.sqrt(duration)
    tail = ndtr((-x + mu * duration) / sd)
    with np.errstate(over="ignore", invalid="ignore"):
        val = ndtr(-(x + mu * duration) / sd) + np.where(tail > 0.0, np.exp(-2.0 * mu * x) * tail, 0.0)
    val = np.where(x <= 0.0, 1.0, val)
    return val if val.ndim else float(val)


def graded_nodes(n: int, smallest: float, crossover: float, largest: float) -> np.ndarray:
    """``n + 1`` nodes ``0, smallest, ..., largest``.

    Spacing is proportional to the node position below ``crossover``
    (geometric) and roughly constant above it; the map is smooth, solving
    ``log(x) + x / crossover = linear`` through the Lambert W function.
    """
    y0 = np.log(smallest) + smallest / crossover
    y1 = np.log(largest) + largest / crossover
    y = y0 + (y1 - y0) * np.linspace(0.0, 1.0, n)
    x = crossover * np.real(lambertw(np.exp(y - np.log(crossover))))
    x[0], x[-1] = smallest, largest
    return np.concatenate([[0.0], x])


@dataclass(frozen=True)
class SchemeParams:
    """Grid and startup settings for :func:`solve_drifted`.

    Time runs backwards from the terminal time: ``tau = 1 - t``. Reported
    levels are ``tau = 0`` followed by ``n_t`` graded levels from
    ``tau_first`` to 1; the interval ``(0, tau_first]`` is crossed with
    ``n_startup`` geometric sub-steps starting at ``tau_start`` to resolve the
    corner where the boundary value 1 meets the terminal value 0.
    """

    n_x: int = 400
    n_t: int = 400
    L_trunc: float = 8.0
    x_smallest: float = 1e-4
    x_crossover: float = 0.5
    tau_first: float = 1e-4
    tau_crossover: float = 0.1
    tau_start: float = 1e-14
    n_startup: int | None = None

    def __post_init__(self):
        if self.L_trunc < 6.0:
            raise ValueError("L_trunc must be >= 6 (six standard deviations)")
        if self.n_x < 10 or self.n_t < 10:
            raise ValueError("grids need at least 10 intervals")

    def refined(self, factor: int = 2) -> "SchemeParams":
        return replace(
            self,
            n_x=self.n_x * factor,
            n_t=self.n_t * factor,
            n_startup=self.startup_steps * factor,
        )

    @property
    def startup_steps(self) -> int:
        return self.n_startup if self.n_startup is not None else max(self.n_t // 2, 10)

    def space_nodes(self) -> np.ndarray:
        return graded_nodes(self.n_x, self.x_smallest, self.x_crossover, self.L_trunc)

    def tau_levels(self) -> np.ndarray:
        return graded_nodes(self.n_t, self.tau_first, self.tau_crossover, 1.0)

    def startup_taus(self) -> np.ndarray:
        return np.geomspace(self.tau_start, self.tau_first, self.startup_steps)[:-1]


@dataclass(frozen=True, eq=False)
class HeatField:
    """``values[j, i] = U(x[i], t[j])`` with ``t`` ascending from 0 to 1."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray

    def at_start(self, x) -> float:
        """``U(x, 0)`` by cubic-spline interpolation of the ``t = 0`` row."""
        spline = CubicSpline(self.x, self.values[0])
        out = spline(x)
        return out if np.ndim(out) else float(out)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "t", "U"])
        for j, tj in enumerate(self.t):
            for i, xi in enumerate(self.x):
                w.writerow([repr(float(xi)), repr(float(tj)), repr(float(self.values[j, i]))])
        return buf.getvalue()


Drift = Union[float, GridFunction, Callable[[float], float]]


def drift_function(h: Drift) -> Callable[[float], float]:
    if isinstance(h, GridFunction):
        vals, n = h.values, h.grid.n_cells

        def f(t):
            return float(vals[min(int(t * n), n - 1)])

        return f
    if callable(h):
        return lambda t: float(h(t))
    c = float(h)
    return lambda t: c


def drift_sup(h: Drift, n_samples: int = 2001) -> float:
    if isinstance(h, GridFunction):
        return float(np.abs(h.values).max())
    f = drift_function(h)
    return max(abs(f(t)) for t in np.linspace(0.0, 1.0, n_samples))


class _Stencil:
    """Three-point stencils for ``(1/2) U_xx`` and ``U_x`` on a nonuniform grid."""

    def __init__(self, x: np.ndarray):
        hm = np.diff(x)[:-1]
        hp = np.diff(x)[1:]
        s = hm + hp
        self.d2 = (1.0 / (hm * s), -(1.0 / (hm * s) + 1.0 / (hp * s)), 1.0 / (hp * s))
        self.d1 = (-hp / (hm * s), (hp - hm) / (hm * hp), hm / (hp * s))
        self.n = len(x)

    def coefs(self, drift: float):
        return tuple(a + drift * b for a, b in zip(self.d2, self.d1))

    def apply(self, u: np.ndarray, drift: float) -> np.ndarray:
        lo, mid, hi = self.coefs(drift)
        out = np.zeros_like(u)
        out[1:-1] = lo * u[:-2] + mid * u[1:-1] + hi * u[2:]
        return out

    def solve(self, rhs: np.ndarray, weight: float, drift: float, left: float, right: float):
        """Solve ``(I - weight * L) u = rhs`` with Dirichlet values at both ends."""
        lo, mid, hi = self.coefs(drift)
        ab = np.zeros((3, self.n))
        ab[1] = 1.0
        ab[1, 1:-1] -= weight * mid
        ab[0, 2:] = -weight * hi
        ab[2, :-2] = -weight * lo
        b = rhs.copy()
        b[0], b[-1] = left, right
        u = solve_banded((1, 1), ab, b, overwrite_ab=True, overwrite_b=True, check_finite=False)
        # partial pivoting can perturb the Dirichlet rows at roundoff level
        u[0], u[-1] = left, right
        return u


def solve_drifted(h: Drift = 0.0, params: SchemeParams | None = None) -> HeatField:
    """Solve ``U_t = -(1/2) U_xx - h(t) U_x`` on ``(0, L) x [0, 1)``.

    ``U(0, t) = 1``, ``U(x, 1) = 0`` and ``U(L, t) = u0(L, t)``. Time stepping is
    TR-BDF2 (second order, L-stable) backwards from ``t = 1``, with centered
    differences in space. ``U(x, t)`` is the probability that
    ``x + w(r) - w(t) + int_t^r h`` reaches 0 before time 1.
    """
    p = params or SchemeParams()
    x = p.space_nodes()
    dx_max = float(np.diff(x).max())
    peclet = drift_sup(h) * dx_max
    if peclet > 1.0:
        raise PecletViolation(
            f"cell Peclet number {peclet:.3f} > 1 (sup|h|={drift_sup(h):.3g}, dx={dx_max:.3g}); refine n_x"
        )
    drift = drift_function(h)
    st = _Stencil(x)
    gamma = 2.0 - np.sqrt(2.0)
    w_bdf = (1.0 - gamma) / (2.0 - gamma)
    c_star = 1.0 / (gamma * (2.0 - gamma))
    c_old = (1.0 - gamma) ** 2 / (gamma * (2.0 - gamma))
    far = lambda tau: float(u0(x[-1], 1.0 - tau))

    def step(u, tau0, tau1):
        dt = tau1 - tau0
        tg = tau0 + gamma * dt
        rhs = u + 0.5 * gamma * dt * st.apply(u, drift(1.0 - tau0))
        ug = st.solve(rhs, 0.5 * gamma * dt, drift(1.0 - tg), 1.0, far(tg))
        return st.solve(c_star * ug - c_old * u, w_bdf * dt, drift(1.0 - tau1), 1.0, far(tau1))

    u = np.zeros_like(x)
    u[0] = 1.0
    levels = p.tau_levels()
    rows = [u.copy()]
    ladder = np.concatenate([[0.0], p.startup_taus(), levels[1:2]])
    for a, b in zip(ladder[:-1], ladder[1:]):
        u = step(u, a, b)
    rows.append(u.copy())
    for a, b in zip(levels[1:-1], levels[2:]):
        u = step(u, a, b)
        rows.append(u.copy())
    values = np.array(rows[::-1])
    return HeatField(x=x, t=(1.0 - levels)[::-1], values=values)


def wiener_sup_error(params: SchemeParams | None = None) -> float:
    """Max over the whole space-time mesh of ``|U - u0|`` for zero drift."""
    field_ = solve_drifted(0.0, params)
    exact = u0(field_.x[None, :], field_.t[:, None])
    return float(np.abs(field_.values - exact).max())
