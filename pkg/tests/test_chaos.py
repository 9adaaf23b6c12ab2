import numpy as np
import pytest
from scipy.special import ndtr

from hitseries.chaos import (
    ChaosCoefficients,
    ChaosKernel,
    SpaceQuadrature,
    chaos_coefficients,
    check_second_moment,
    convergence_diagnostic,
    duhamel_kernel,
    duhamel_kernels,
    fourier_wiener_check,
    ladder_taylor,
    multi_indices,
    pair_with,
    project_to_basis,
    symmetrize,
)
from hitseries.errors import GridMismatch, LadderConditioningError, OrderTooLarge, QuadratureBlowUp
from hitseries.grid import GridFunction, make_uniform_grid
from hitseries.heat import u0

# Taylor coefficients in eps of P(x + w(t) + eps t hits 0 before 1), from the
# closed form Phi(-x-eps) + exp(-2 eps x) Phi(-x+eps) differentiated symbolically.
TAYLOR = {
    0.5: [0.61707507745197379, -0.30853753872598690, -0.021763894019156291, 0.036593408570077053],
    1.0: [0.31731050786291410, -0.31731050786291410, 0.075339783343770753, 0.030430385943867281],
}


@pytest.fixture(scope="module")
def kernels_x1():
    return duhamel_kernels(1.0)


@pytest.fixture(scope="module")
def kernels_x05():
    return duhamel_kernels(0.5)


def test_order_zero_is_u0(kernels_x1):
    k0 = kernels_x1[0]
    assert k0.order == 0 and float(k0.values) == u0(1.0, 0.0)
    assert float(k0.values) == pytest.approx(0.31731, abs=1e-5)


@pytest.mark.parametrize("x", [0.5, 1.0])
def test_constant_drift_pairings_match_taylor(x, kernels_x1, kernels_x05):
    ks = kernels_x1 if x == 1.0 else kernels_x05
    ref = TAYLOR[x]
    got = [pair_with(k, 1.0) for k in ks]
    assert got[0] == pytest.approx(ref[0], abs=1e-12)
    assert got[1] == pytest.approx(ref[1], rel=1e-3)
    assert got[2] == pytest.approx(ref[2], rel=2e-2, abs=5e-4)
    assert got[3] == pytest.approx(ref[3], rel=2e-2, abs=5e-4)


def test_time_refinement_improves_second_order():
    fine = duhamel_kernels(1.0, 2, make_uniform_grid(128))
    coarse = duhamel_kernels(1.0, 2, make_uniform_grid(32))
    ref = TAYLOR[1.0][2]
    assert abs(pair_with(fine[2], 1.0) - ref) < abs(pair_with(coarse[2], 1.0) - ref)


def test_far_start_kernels_vanish():
    ks = duhamel_kernels(12.0, 3, make_uniform_grid(16))
    for k in ks:
        assert np.abs(k.values).max() < 1e-12


def test_order_limits():
    with pytest.raises(OrderTooLarge):
        duhamel_kernel(4, 1.0)
    with pytest.raises(OrderTooLarge):
        duhamel_kernels(1.0, 5)
    k1 = duhamel_kernel(1, 1.0, make_uniform_grid(8))
    assert k1.values.shape == (8,)
    with pytest.raises(ValueError):
        duhamel_kernels(0.0, 1)


def test_simplex_support(kernels_x1):
    k2, k3 = kernels_x1[2].values, kernels_x1[3].values
    i, j = np.indices(k2.shape)
    assert np.all(k2[i > j] == 0.0)
    a, b, c = np.indices(k3.shape)
    assert np.all(k3[(a > b) | (b > c)] == 0.0)


def test_symmetrize(kernels_x1):
    k1 = kernels_x1[1]
    assert np.array_equal(symmetrize(k1).values, k1.values)
    s2 = symmetrize(kernels_x1[2]).values
    assert np.array_equal(s2, s2.T)
    s3 = symmetrize(kernels_x1[3]).values
    for perm in [(1, 0, 2), (2, 1, 0), (1, 2, 0)]:
        assert np.array_equal(s3, s3.transpose(perm))
    g = kernels_x1[1].time_grid
    h = GridFunction(g, np.sin(3 * g.midpoints) + 0.5)
    for k in kernels_x1[1:]:
        assert pair_with(symmetrize(k), h) == pytest.approx(pair_with(k, h), abs=1e-12)


def test_derivative_matrix_against_closed_form():
    # Dirichlet evolution of z exp(-z^2/2): the odd extension stays Gaussian-weighted
    sq = SpaceQuadrature(8.0, 800)
    z = sq.nodes
    f = z * np.exp(-0.5 * z * z)
    for s in (0.05, 0.3, 1.0):
        c = 1.0 / (1.0 + s)
        exact = c**1.5 * np.exp(-0.5 * c * z * z) * (1.0 - c * z * z)
        assert np.abs(sq.derivative_matrix(s) @ f - exact).max() < 1e-4
    d0 = sq.derivative_matrix(0.0) @ (z * z)
    assert np.allclose(d0[1:-1], 2 * z[1:-1])
    assert d0[0] == pytest.approx(z[1])


def test_green_weights_mass():
    sq = SpaceQuadrature()
    w = sq.green_weights(1.0, 0.5)
    # hats sum to 1 on [0, L], so the weights integrate G exactly
    assert w.sum() == pytest.approx(1 - 2 * ndtr(-1.0 / np.sqrt(0.5)), abs=1e-12)


def test_projection_examples(kernels_x1):
    g = kernels_x1[1].time_grid
    one = GridFunction(g, np.ones(g.n_cells))
    zero2 = ChaosKernel(2, g, np.zeros((g.n_cells,) * 2), 1.0, symmetric=True)
    assert all(v == 0.0 for v in project_to_basis(zero2, [one]).values())
    c = project_to_basis(kernels_x1[1], [one])
    assert c[(1,)] == pytest.approx(kernels_x1[1].values.sum() * g.width, abs=1e-15)


def test_parseval_for_separable_kernel():
    g = make_uniform_grid(64)
    e1 = GridFunction(g, np.ones(64))
    e2 = GridFunction(g, np.sqrt(2) * np.cos(np.pi * g.midpoints))
    k = ChaosKernel(2, g, np.outer(e1.values, e1.values), np.nan, symmetric=True)
    coefs = project_to_basis(k, [e1, e2])
    assert coefs[(2, 0)] == pytest.approx(1.0, abs=1e-8)
    assert abs(coefs[(1, 1)]) < 1e-8 and abs(coefs[(0, 2)]) < 1e-8


def test_projection_independent_of_index_order(kernels_x1):
    g = kernels_x1[2].time_grid
    e1 = GridFunction(g, np.ones(g.n_cells))
    e2 = GridFunction(g, np.sqrt(2) * np.cos(np.pi * g.midpoints))
    s = symmetrize(kernels_x1[2])
    a = np.einsum("ij,i,j->", s.values, e1.values, e2.values)
    b = np.einsum("ij,i,j->", s.values, e2.values, e1.values)
    assert a == pytest.approx(b, rel=1e-13)
    assert project_to_basis(s, [e1, e2])[(1, 1)] == pytest.approx(a * g.width**2, rel=1e-12)
    with pytest.raises(ValueError):
        project_to_basis(kernels_x1[2], [e1])
    with pytest.raises(GridMismatch):
        project_to_basis(s, [GridFunction(make_uniform_grid(8), np.ones(8))])


def test_multi_indices_counts():
    assert multi_indices(2, 2) == [(0, 2), (1, 1), (2, 0)]
    assert len(multi_indices(3, 4)) == 20
    assert multi_indices(0, 0) == [()] and multi_indices(2, 0) == []


def test_coefficients_and_second_moment():
    g = make_uniform_grid(64)
    e = GridFunction(g, np.ones(64))
    coefs = chaos_coefficients(1.0, [e])
    assert set(coefs.orders) == {0, 1, 2, 3}
    sm = check_second_moment(coefs)
    assert u0(1.0, 0.0) ** 2 < sm <= u0(1.0, 0.0)
    with pytest.raises(ValueError):
        ChaosCoefficients((e,), {1: {(1,): 0.1, (2,): 0.0}})
    big = ChaosCoefficients((e,), {0: {(0,): 0.5}, 1: {(1,): 1.0}})
    with pytest.raises(QuadratureBlowUp):
        check_second_moment(big)
    text = coefs.to_csv()
    assert text.splitlines()[0] == "n,multi_index,value" and len(text.splitlines()) == 5


def test_convergence_diagnostic():
    fine_g, coarse_g = make_uniform_grid(64), make_uniform_grid(32)
    fine = chaos_coefficients(1.0, [GridFunction(fine_g, np.ones(64))], 3, fine_g)
    coarse = chaos_coefficients(1.0, [GridFunction(coarse_g, np.ones(32))], 3, coarse_g)
    rep = convergence_diagnostic(fine, coarse, 64)
    assert rep.passed and rep.max_relative_change < 0.05


def test_fourier_wiener_orders_zero_and_one():
    rep = fourier_wiener_check(1.0, 1.0, orders=1)
    assert rep.comparison(0).abs_error < 1e-3
    assert rep.comparison(1).rel_error < 1e-2


def test_fourier_wiener_time_dependent_drift():
    g = make_uniform_grid(64)
    h = GridFunction(g, np.cos(np.pi * g.midpoints))
    rep = fourier_wiener_check(0.7, h, orders=2, time_grid=g)
    assert rep.comparison(1).rel_error < 1e-2
    assert rep.comparison(2).abs_error < 2e-3


def test_ladder_parity_is_exact():
    g = make_uniform_grid(64)
    h = GridFunction(g, 1.0 + 0.5 * g.midpoints)
    a = fourier_wiener_check(1.0, h, orders=1, time_grid=g).taylor
    b = fourier_wiener_check(1.0, h * -1.0, orders=1, time_grid=g).taylor
    for n, (p, q) in enumerate(zip(a, b)):
        assert p == (-q if n % 2 else q)


def test_ladder_taylor_recovers_polynomial():
    eps = np.array([0.1, 0.2, 0.3])
    poly = lambda e: 1 - 2 * e + 3 * e**2 + 0.5 * e**3 - e**5
    c = ladder_taylor(poly(eps), poly(-eps), poly(0.0), eps)
    assert np.allclose(c[:6], [1, -2, 3, 0.5, 0, -1], atol=1e-9)


def test_ladder_conditioning_guard():
    with pytest.raises(LadderConditioningError):
        fourier_wiener_check(1.0, 1.0, epsilon0=1e-5)
    with pytest.raises(LadderConditioningError):
        fourier_wiener_check(1.0, 10.0, epsilon0=0.1)
    with pytest.raises(LadderConditioningError):
        ladder_taylor([1.0, 1.0], [1.0, 1.0], 1.0, [1e-4, 2e-4])


def test_kernel_csv(kernels_x1):
    k = duhamel_kernel(2, 1.0, make_uniform_grid(4))
    lines = k.to_csv().splitlines()
    assert lines[0] == "n,r1,r2,value"
    assert len(lines) == 1 + 10
    assert lines[1].startswith("2,0.125,0.125,")
    assert ChaosKernel(0, make_uniform_grid(4), np.array(0.3), 1.0).to_csv().splitlines() == ["n,value", "0,0.3"]
