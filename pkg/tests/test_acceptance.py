"""The ten acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line, printed in the pytest terminal summary.
"""
import json
import math
import time

import numpy as np
import pytest

from hitseries.chaos import fourier_wiener_check
from hitseries.cli import main
from hitseries.grid import make_uniform_grid
from hitseries.heat import SchemeParams, wiener_sup_error
from hitseries.hermite import generating_function_residual, hermite_at_zero, hermite_eval
from hitseries.hitting import partial_bridge_oracle, wiener_hit_probability
from hitseries.integrator import check_integrator_condition, decomposition_check
from hitseries.presets import all_presets, partial_bridge
from hitseries.quantization import example1_expectation, hitting_probability_series
from hitseries.validation import defect_identity_error, energy_identity_error

from conftest import cached_mc, record_criterion

PRESETS_256 = None


def presets_256():
    global PRESETS_256
    if PRESETS_256 is None:
        g = make_uniform_grid(256)
        # the default catalog plus a second partial-bridge strength
        PRESETS_256 = all_presets(g) + [partial_bridge(g, 0.3)]
    return PRESETS_256


def cli_json(tmp_path, *args):
    out = tmp_path / "out.json"
    assert main([*args, "--output", str(out)]) == 0
    return json.loads(out.read_text())


def test_criterion_01_hermite_exactness():
    t0 = time.perf_counter()
    exact = all(hermite_at_zero(n) == float(hermite_eval(n, 0.0)) for n in range(31))
    resid = max(generating_function_residual(x, y) for x in (0.1, 0.5, 1.0) for y in (0.0, 0.5, -0.5, 1.0, -1.0))
    elapsed = time.perf_counter() - t0
    ok = exact and resid < 1e-10 and elapsed < 1.0
    record_criterion(1, ok, f"H_n(0) exact n<=30: {exact}; generating residual {resid:.1e} (<1e-10); {elapsed:.2f}s")
    assert ok


def test_criterion_02_operator_identities():
    t0 = time.perf_counter()
    energy = {p.name + str(p.betas[:1]): energy_identity_error(p, 1000) for p in presets_256()}
    defect = {p.name + str(p.betas[:1]): defect_identity_error(p) for p in presets_256()}
    elapsed = time.perf_counter() - t0
    ok = max(energy.values()) <= 1e-8 and max(defect.values()) < 1e-8 and elapsed < 10
    record_criterion(
        2, ok, f"energy identity max {max(energy.values()):.1e} (<=1e-8); defect {max(defect.values()):.1e} (<1e-8); {elapsed:.1f}s"
    )
    assert ok


def test_criterion_03_decomposition_to_wiener():
    t0 = time.perf_counter()
    dev = max(decomposition_check(p.operator).max_abs_deviation for p in presets_256())
    elapsed = time.perf_counter() - t0
    ok = dev < 1e-8 and elapsed < 10
    record_criterion(3, ok, f"max covariance deviation {dev:.1e} (<1e-8) over {len(presets_256())} presets; {elapsed:.1f}s")
    assert ok


def test_criterion_04_wiener_baseline(tmp_path):
    t0 = time.perf_counter()
    series_err, mc_z = [], []
    for x in (0.25, 0.5, 1.0, 2.0):
        exact = wiener_hit_probability(x)
        s = cli_json(tmp_path, "series-hit", "--preset", "identity", "--x", str(x))
        series_err.append(abs(s["value"] - exact))
        m = cli_json(tmp_path, "mc-hit", "--preset", "identity", "--x", str(x), "--n-paths", "1000000", "--n-cells", "256")
        mc_z.append(abs(m["p_hat"] - exact) / m["stderr"])
    elapsed = time.perf_counter() - t0
    ok = max(series_err) <= 2e-3 and max(mc_z) <= 3 and elapsed < 120
    record_criterion(
        4, ok, f"series max err {max(series_err):.1e} (<=2e-3); mc max |z| {max(mc_z):.2f} (<=3); {elapsed:.0f}s"
    )
    assert ok


def test_criterion_05_partial_bridge_triangle():
    t0 = time.perf_counter()
    ok, worst_series, worst_mc = True, 0.0, 0.0
    ones = lambda t: np.ones_like(t)
    for beta in (0.3, 0.5):
        for x in (0.5, 1.0):
            oracle = partial_bridge_oracle(x, beta).p_hat
            s = hitting_probability_series(x, [beta], [ones])
            tol_s = max(s.stderr, 5e-3)
            mc = cached_mc("partial_bridge", beta, x, 1024, 1_000_000)
            tol_m = 3 * mc.stderr + 2e-3
            ok &= abs(s.p_hat - oracle) <= tol_s and abs(mc.p_hat - oracle) <= tol_m
            worst_series = max(worst_series, abs(s.p_hat - oracle) / tol_s)
            worst_mc = max(worst_mc, abs(mc.p_hat - oracle) / tol_m)
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 600
    record_criterion(
        5, ok, f"worst |series-oracle|/tol {worst_series:.2f}, |mc-oracle|/tol {worst_mc:.2f} (<=1); {elapsed:.0f}s"
    )
    assert ok


def test_criterion_06_example1():
    t0 = time.perf_counter()
    nodes, weights = np.polynomial.hermite_e.hermegauss(40)
    weights = weights / math.sqrt(2 * math.pi)
    worst, signs = 0.0, True
    for k in range(6):
        for c in np.linspace(0.0, 1.0, 6):
            val = example1_expectation(float(c), k)
            worst = max(worst, abs(val - float(weights @ hermite_eval(2 * k, c * nodes))))
            if c < 1:
                signs &= np.sign(val) == (-1) ** k
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and signs and elapsed < 1
    record_criterion(6, ok, f"max |closed form - quadrature| {worst:.1e} (<1e-10); sign (-1)^k: {signs}; {elapsed:.2f}s")
    assert ok


def test_criterion_07_pde_oracle():
    t0 = time.perf_counter()
    p = SchemeParams(n_x=400, n_t=400)
    e1 = wiener_sup_error(p)
    e2 = wiener_sup_error(p.refined())
    elapsed = time.perf_counter() - t0
    ok = e1 < 1e-3 and e1 / e2 >= 3 and elapsed < 60
    record_criterion(7, ok, f"sup error {e1:.2e} (<1e-3); refinement ratio {e1 / e2:.2f} (>=3); {elapsed:.1f}s")
    assert ok


def test_criterion_08_fourier_wiener():
    t0 = time.perf_counter()
    rep = fourier_wiener_check(1.0, 1.0, orders=1)
    a0, r1 = rep.comparison(0).abs_error, rep.comparison(1).rel_error
    elapsed = time.perf_counter() - t0
    ok = a0 < 1e-3 and r1 < 1e-2 and elapsed < 300
    record_criterion(8, ok, f"order 0 abs err {a0:.1e} (<1e-3); order 1 rel err {r1:.1e} (<1e-2); {elapsed:.1f}s")
    assert ok


def test_criterion_09_integrator_condition():
    t0 = time.perf_counter()
    excess = []
    for p in presets_256():
        rep = check_integrator_condition(p.model(), n_trials=1000)
        excess.append(rep.max_ratio - rep.bound_constant)
    elapsed = time.perf_counter() - t0
    ok = max(excess) <= 1e-8 and elapsed < 30
    record_criterion(9, ok, f"max(ratio - ||A||^2) {max(excess):.1e} (<=1e-8); {elapsed:.1f}s")
    assert ok


def test_criterion_10_determinism(tmp_path):
    runs = [
        ["mc-hit", "--preset", "partial_bridge", "--n-paths", "50000", "--n-cells", "256", "--seed", "17"],
        ["sample", "--preset", "kernel_preset", "--n-cells", "32", "--sample-paths", "2100", "--seed", "3"],
        ["series-hit", "--preset", "fourier_rank", "--time-grid", "16", "--n-max", "2"],
        ["kernels", "--preset", "partial_bridge", "--time-grid", "16", "--format", "csv"],
    ]
    identical = True
    for i, args in enumerate(runs):
        outputs = []
        for rep, workers in [(0, 1), (1, 1), (2, 4)]:
            out = tmp_path / f"r{i}_{rep}.out"
            assert main([*args, "--workers", str(workers), "--output", str(out)]) == 0
            outputs.append(out.read_bytes())
            if out.with_name(out.name + ".meta.json").exists():
                outputs[-1] += out.with_name(out.name + ".meta.json").read_bytes()
        identical &= len(set(outputs)) == 1
    record_criterion(10, identical, f"byte-identical outputs over 2 runs and workers {{1, 4}} for {len(runs)} subcommands")
    assert identical
