import math

import numpy as np
import pytest
from scipy.special import erf

from fourier_pairs import frames, spectral
from fourier_pairs.errors import (ConfigurationError, DegenerateFrameError, InputError,
                                  InsufficientDataError, ParameterError)
from fourier_pairs.nodes import NodeSequence, gen_power_nodes
from fourier_pairs.spectral import GridFunction, SpaceParams

HALF = SpaceParams(0.5, 2, 2)


@pytest.fixture(scope="module")
def super_op(grid):
    lam = gen_power_nodes(2, 0.8, 400)
    return frames.build_sampling_operator(lam, lam, HALF, grid)


@pytest.fixture(scope="module")
def super_model(super_op):
    return frames.estimate_frame_bounds(super_op, 40)


@pytest.fixture(scope="module")
def super_basis(super_model):
    return frames.build_interpolation_basis(super_model)


def h_norm2(f, params=HALF):
    return spectral.hspq_norm(f, params)


# --- sampling operator -----------------------------------------------------------

def test_apply_zero(super_op, grid):
    assert not np.any(super_op.apply(GridFunction.zero(grid)))


def test_weights_half(super_op):
    assert np.allclose(super_op.lambda_weights ** 2, 1 + np.abs(super_op.lam.points))
    assert np.allclose(super_op.mu_weights ** 2, 1 + np.abs(super_op.mu.points))


def test_weight_exponent_example(grid):
    lam = NodeSequence(np.array([-3.0, 3.0]))
    op = frames.build_sampling_operator(lam, lam, SpaceParams(1.0, 2, 2), grid)
    assert op.lambda_weights[1] ** 2 == pytest.approx(64.0, rel=1e-14)


def test_clipping_reported(super_op, grid):
    assert np.max(np.abs(super_op.lam.points)) <= 0.8 * grid.half_width
    assert super_op.clipped_lambda == 800 - len(super_op.lam)
    assert super_op.clipped_lambda > 0


def test_empty_after_clipping(grid):
    far = NodeSequence(np.array([-50.0, 50.0]))
    with pytest.raises(ConfigurationError):
        frames.build_sampling_operator(far, far, HALF, grid)


def test_requires_embedding(grid):
    lam = gen_power_nodes(2, 0.8, 10)
    with pytest.raises(ParameterError):
        frames.build_sampling_operator(lam, lam, SpaceParams(0.4, 2, 2), grid)


# --- frame bounds --------------------------------------------------------------------

def test_supercritical_lower_bound_positive(super_model):
    assert super_model.A_est >= 1e-8
    assert super_model.A_est <= super_model.B_est
    assert max(super_model.pencil_residual()) <= 1e-10


def test_subcritical_trend(grid):
    lam = gen_power_nodes(2, 1.2, 400)
    trend = frames.frame_bound_trend(lam, lam, HALF, grid, [10, 20, 30, 40])
    A = [a for _, a in trend]
    assert all(x > y for x, y in zip(A, A[1:]))


def test_single_function_pencil(super_op, grid):
    model = frames.estimate_frame_bounds(super_op, 1)
    h0 = spectral.hermite_basis(0, grid)[0]
    samples = super_op.apply(h0)
    expect = float(np.sum(np.abs(samples) ** 2)) / h_norm2(h0)
    assert model.A_est == pytest.approx(expect, rel=1e-12)
    assert model.B_est == pytest.approx(expect, rel=1e-12)


def test_frame_sandwich(super_model, super_op, grid):
    A, B = super_model.A_est, super_model.B_est
    for h in spectral.hermite_basis(39, grid):
        s = float(np.sum(np.abs(super_op.apply(h)) ** 2))
        n = h_norm2(h)
        assert A * n * (1 - 1e-9) <= s <= B * n * (1 + 1e-9)


def test_adding_nodes_never_lowers_bound(grid):
    full = gen_power_nodes(2, 0.8, 400)
    chain = [full.clipped(r) for r in (5.0, 7.0, 9.6)]
    A = [frames.estimate_frame_bounds(frames.build_sampling_operator(s, s, HALF, grid), 30).A_est
         for s in chain]
    assert all(x <= y * (1 + 1e-9) for x, y in zip(A, A[1:]))


def test_basis_size_limit(super_op):
    with pytest.raises(ParameterError):
        frames.estimate_frame_bounds(super_op, 61)


def test_upper_constant_for_separated_nodes(grid):
    lam = gen_power_nodes(2, 0.8, 400)
    op = frames.build_sampling_operator(lam, lam, HALF, grid)
    B = frames.separated_upper_constant(op.lam, op.mu)
    for h in spectral.hermite_basis(20, grid):
        s = float(np.sum(np.abs(op.apply(h)) ** 2))
        assert s <= B * h_norm2(h)


# --- interpolation basis ---------------------------------------------------------------

def test_orthonormal_toy():
    m = 5
    model = frames.model_from_matrices(np.eye(m), np.eye(m), np.eye(m), np.eye(m))
    basis = frames.build_interpolation_basis(model)
    assert np.allclose(basis.coeffs, np.eye(m), atol=1e-14)


def test_degenerate_frame():
    S = np.zeros((3, 3))
    S[0, 0] = 1
    model = frames.model_from_matrices(S, np.eye(3), np.eye(3), np.eye(3))
    with pytest.raises(DegenerateFrameError):
        frames.build_interpolation_basis(model)


def test_reconstruct_h0(super_basis, grid):
    h0 = spectral.hermite_basis(0, grid)[0]
    sl, sm = frames.sample_function(super_basis, h0)
    rec = frames.reconstruct(super_basis, sl, sm)
    err = math.sqrt(h_norm2(rec - h0) / h_norm2(h0))
    assert err <= 1e-6


def test_reconstruct_zero(super_basis):
    zl = {float(k): 0.0 for k in super_basis.lambda_nodes}
    zm = {float(k): 0.0 for k in super_basis.mu_nodes}
    rec = frames.reconstruct(super_basis, zl, zm)
    assert not np.any(rec.space_values)


def test_reconstruct_linear(super_basis, grid):
    h = spectral.hermite_basis(2, grid)
    x = frames.sample_function(super_basis, h[0])
    y = frames.sample_function(super_basis, h[2])
    xy = ({k: x[0][k] + y[0][k] for k in x[0]}, {k: x[1][k] + y[1][k] for k in x[1]})
    a = frames.reconstruct_coefficients(super_basis, *xy)
    b = (frames.reconstruct_coefficients(super_basis, *x)
         + frames.reconstruct_coefficients(super_basis, *y))
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))


def test_reconstruct_idempotent(super_basis, grid):
    f = spectral.hermite_basis(7, grid)[7] + spectral.hermite_basis(3, grid)[3] * 0.5j
    once = frames.reconstruct(super_basis, *frames.sample_function(super_basis, f))
    twice = frames.reconstruct(super_basis, *frames.sample_function(super_basis, once))
    assert math.sqrt(h_norm2(twice - once) / h_norm2(once)) <= 1e-9


def test_reconstruct_key_mismatch(super_basis):
    with pytest.raises(InputError):
        frames.reconstruct(super_basis, {1.0: 0.0}, {})


def test_norm_bounds_and_growth(super_basis):
    assert super_basis.bound_ok()
    slope = frames.norm_growth_slope(super_basis, 2.0, 8.0)
    assert slope <= (0.5 - 0.5) * 2 + 0.5 + 0.1


# --- point removal ---------------------------------------------------------------------

def test_remove_nothing(super_model):
    out = frames.duffin_schaeffer_demo(super_model, [])
    assert out["A_after"] == pytest.approx(out["A_before"], rel=1e-12)


def test_remove_two_nearest(super_model):
    near = frames.nearest_to_origin(super_model.op.lam, 2)
    out = frames.duffin_schaeffer_demo(super_model, near)
    assert out["complete"] and out["A_after"] > 0
    assert out["A_after"] <= out["A_before"] * (1 + 1e-12)


def test_remove_to_rank_collapse(grid):
    few = NodeSequence(np.array([-2.0, -1.0, 1.0, 2.0]))
    model = frames.estimate_frame_bounds(frames.build_sampling_operator(few, few, HALF, grid), 6)
    out = frames.duffin_schaeffer_demo(model, [-2.0, -1.0, 1.0])
    assert not out["complete"]
    assert "completeness violated" in out["report"]


def test_remove_too_many(super_model):
    with pytest.raises(ParameterError):
        frames.duffin_schaeffer_demo(super_model, super_model.op.lam.points[:6])


# --- decay vs Schwartz ------------------------------------------------------------------

def test_decay_gaussian(grid):
    lam = gen_power_nodes(2, 1, 400)
    rep = frames.decay_to_schwartz_check(spectral.hermite_basis(0, grid)[0], lam, lam)
    assert all(e["decay_ok"] and e["norm_finite"] for e in rep["per_r"])
    assert rep["consistent"]


def test_decay_compact_spectrum(grid):
    xi = grid.xi
    fh = 0.5 * (erf((xi + 2) / 0.01) - erf((xi - 2) / 0.01))
    f = GridFunction.from_freq(grid, fh)
    lam = gen_power_nodes(2, 1, 400)
    rep = frames.decay_to_schwartz_check(f, lam, lam)
    assert -1.5 <= rep["slope_lambda"] <= -0.8
    r2 = next(e for e in rep["per_r"] if e["r"] == 2)
    assert not r2["decay_ok"]
    assert not rep["schwartz_by_decay"] and not rep["schwartz_by_norms"]


def test_decay_zero(grid):
    lam = gen_power_nodes(2, 1, 400)
    rep = frames.decay_to_schwartz_check(GridFunction.zero(grid), lam, lam)
    assert rep["degenerate"] and rep["consistent"]


def test_decay_too_few_nodes(grid):
    lam = NodeSequence(np.array([-3.0, -2.0, 2.0, 3.0]))
    with pytest.raises(InsufficientDataError):
        frames.decay_to_schwartz_check(spectral.hermite_basis(0, grid)[0], lam, lam)
