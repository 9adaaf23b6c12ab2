"""Invariant suite behind ``hitseries validate``: fast checks of every layer."""
from __future__ import annotations

import math

import numpy as np

from .grid import make_uniform_grid
from .heat import SchemeParams, u0, wiener_sup_error
from .hermite import generating_function_residual, hermite_at_zero, hermite_eval
from .hitting import partial_bridge_closed_form, partial_bridge_oracle, wiener_hit_probability
from .integrator import check_integrator_condition, decomposition_check
from .operators import defect_sqrt
from .presets import all_presets
from .quantization import example1_expectation, hitting_probability_series, SeriesSettings
from .chaos import fourier_wiener_check


def _check(name: str, value: float, tolerance: float) -> dict:
    return {"name": name, "value": float(value), "tolerance": float(tolerance), "passed": bool(value <= tolerance)}


def hermite_checks() -> list[dict]:
    exact = max(abs(hermite_at_zero(n) - float(hermite_eval(n, 0.0))) for n in range(31))
    resid = max(
        generating_function_residual(x, y) for x in (0.1, 0.5, 1.0) for y in (0.0, 0.5, -0.5, 1.0, -1.0)
    )
    return [_check("hermite_at_zero_exact", exact, 0.0), _check("hermite_generating_function", resid, 1e-10)]


def energy_identity_error(preset, n_vectors: int = 1000, seed: int = 0) -> float:
    """Max of ``|‖Ah‖² + ‖Rh‖² - ‖h‖²| / ‖h‖²`` over random step functions ``h``."""
    n = preset.grid.n_cells
    h = np.random.default_rng(seed).standard_normal((n, n_vectors))
    a = preset.complement.coefficients
    if preset.r.rank:
        v = preset.r.basis_matrix()
        rh = (v * np.asarray(preset.r.betas)) @ (v.T @ h)
    else:
        rh = np.zeros_like(h)
    hn = (h * h).sum(axis=0)
    return float(np.max(np.abs(((a @ h) ** 2).sum(axis=0) + (rh * rh).sum(axis=0) - hn) / hn))


def defect_identity_error(preset) -> float:
    a = preset.operator.coefficients
    q = defect_sqrt(preset.operator).coefficients
    return float(np.linalg.norm(a.T @ a + q.T @ q - np.eye(len(a)), 2))


def operator_checks(n_cells: int = 256, n_vectors: int = 1000, n_trials: int = 1000) -> list[dict]:
    out = []
    for p in all_presets(make_uniform_grid(n_cells)):
        out.append(_check(f"energy_identity[{p.name}]", energy_identity_error(p, n_vectors), 1e-8))
        out.append(_check(f"defect_identity[{p.name}]", defect_identity_error(p), 1e-8))
        out.append(_check(f"decomposition[{p.name}]", decomposition_check(p.operator).max_abs_deviation, 1e-8))
        rep = check_integrator_condition(p.model(), n_trials=n_trials)
        out.append(_check(f"integrator_condition[{p.name}]", rep.max_ratio - rep.bound_constant, 1e-8))
    return out


def example1_error() -> float:
    nodes, weights = np.polynomial.hermite_e.hermegauss(40)
    weights = weights / math.sqrt(2.0 * math.pi)
    worst = 0.0
    for k in range(6):
        for c in np.linspace(0.0, 1.0, 6):
            quad = float(weights @ hermite_eval(2 * k, c * nodes))
            worst = max(worst, abs(example1_expectation(float(c), k) - quad))
    return worst


def run_suite(quick: bool = True) -> list[dict]:
    """All checks; ``quick`` uses fewer random trials for the operator layer."""
    n_vec, n_trials = (200, 200) if quick else (1000, 1000)
    out = hermite_checks()
    out += operator_checks(256, n_vec, n_trials)
    out.append(_check("example1_vs_quadrature", example1_error(), 1e-10))
    params = SchemeParams()
    e1, e2 = wiener_sup_error(params), wiener_sup_error(params.refined())
    out.append(_check("pde_sup_error", e1, 1e-3))
    out.append(_check("pde_refinement_ratio_shortfall", 3.0 - e1 / e2, 0.0))
    out.append(
        _check("oracle_wiener_limit", abs(partial_bridge_oracle(1.0, 0.0).p_hat - wiener_hit_probability(1.0)), 1e-6)
    )
    out.append(
        _check("oracle_closed_form", abs(partial_bridge_oracle(1.0, 0.5).p_hat - partial_bridge_closed_form(1.0, 0.5)), 1e-10)
    )
    series0 = hitting_probability_series(1.0, [], [])
    out.append(_check("series_wiener_reduction", abs(series0.p_hat - u0(1.0, 0.0)), 1e-12))
    ones = lambda t: np.ones_like(t)
    est = hitting_probability_series(1.0, [0.5], [ones], SeriesSettings(check_convergence=False))
    oracle = partial_bridge_oracle(1.0, 0.5).p_hat
    out.append(_check("series_vs_oracle", abs(est.p_hat - oracle), max(est.stderr, 5e-3)))
    fw = fourier_wiener_check(1.0, 1.0, orders=1)
    out.append(_check("fourier_wiener_order0_abs", fw.comparison(0).abs_error, 1e-3))
    out.append(_check("fourier_wiener_order1_rel", fw.comparison(1).rel_error, 1e-2))
    return out
