"""Probabilists' Hermite polynomials ``H_n`` (``H_2(u) = u^2 - 1``)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# 33!! = 6332659870762850625 is the largest odd double factorial below 2**63.
INT64_DOUBLE_FACTORIAL_MAX = 33


def hermite_eval(n: int, x):
    """``H_n(x)`` by the recurrence ``H_{k+1} = x H_k - k H_{k-1}``."""
    if n < 0:
        raise ValueError("order must be non-negative")
    x = np.asarray(x, dtype=float)
    h_prev, h = np.ones_like(x), x.copy()
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    for k in range(1, n):
        h_prev, h = h, x * h - k * h_prev
    return h if h.ndim else float(h)


def hermite_all(n_max: int, x) -> np.ndarray:
    """Stack ``[H_0(x), ..., H_{n_max}(x)]`` along a new leading axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = x
    for k in range(1, n_max):
        out[k + 1] = x * out[k] - k * out[k - 1]
    return out


def double_factorial(n: int):
    """``n!!`` with ``(-1)!! = 0!! = 1``.

    Exact integer up to ``n = 33`` (the int64 range), a correctly rounded
    float beyond that.
    """
    if n < -1:
        raise ValueError(f"double factorial undefined for n={n}")
    if n <= INT64_DOUBLE_FACTORIAL_MAX:
        return math.prod(range(n, 0, -2))
    return float(math.prod(range(n, 0, -2)))


def hermite_at_zero(n: int) -> float:
    if n < 0:
        raise ValueError("order must be non-negative")
    if n % 2:
        return 0.0
    return float((-1) ** (n // 2) * double_factorial(n - 1))


@dataclass(frozen=True)
class HermiteTable:
    max_order: int
    values_at_zero: tuple

    @classmethod
    def build(cls, max_order: int) -> "HermiteTable":
        return cls(max_order, tuple(hermite_at_zero(n) for n in range(max_order + 1)))

    def __getitem__(self, n: int) -> float:
        return self.values_at_zero[n]


def hermite_sup_bound(n: int) -> float:
    """``n^(-1/4) sqrt(n!)``: the sup-norm envelope of ``H_n`` on [-1, 1] without its constant."""
    if n < 1:
        raise ValueError("bound is stated for n >= 1")
    return math.exp(-0.25 * math.log(n) + 0.5 * math.lgamma(n + 1))


def sup_ratio(n: int, n_samples: int = 20001) -> float:
    """``max_{[-1,1]} |H_n| / hermite_sup_bound(n)`` by dense sampling."""
    x = np.linspace(-1.0, 1.0, n_samples)
    return float(np.abs(hermite_eval(n, x)).max() / hermite_sup_bound(n))


@lru_cache(maxsize=None)
def calibrated_constant(max_order: int = 40) -> float:
    """Empirical constant ``c`` with ``|H_n| <= c n^(-1/4) sqrt(n!)`` on [-1, 1], n <= max_order.

    At least 1 so that ``|H_0| = 1`` is covered too.
    """
    return max(1.0, max(sup_ratio(n) for n in range(1, max_order + 1)))


def generating_function_residual(x: float, y: float, n_terms: int = 40) -> float:
    """``|exp(xy - x^2/2) - sum_{n<=n_terms} x^n/n! H_n(y)|``."""
    h = hermite_all(n_terms, y)
    coef = np.array([x**n / math.factorial(n) for n in range(n_terms + 1)])
    return abs(math.exp(x * y - 0.5 * x * x) - float(coef @ h))
