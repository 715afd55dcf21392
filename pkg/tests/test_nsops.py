from __future__ import annotations

import dataclasses
import math
from collections.abc import Callable

import numpy as np
import pytest

from velomap.field import FlowSnapshot, Grid3, ScalarGridField, VectorGridField, abc_snapshot
from velomap.nsops import (
    continuity_residual,
    convective_term,
    curl,
    divergence,
    gradient,
    laplacian,
    local_re_feature,
    momentum_residual,
    vorticity,
)


def _scalar(grid: Grid3, values: np.ndarray) -> ScalarGridField:
    return ScalarGridField(grid, values)


def _random_vector(grid: Grid3, seed: int) -> VectorGridField:
    rng = np.random.default_rng(seed)
    return VectorGridField(grid, *(rng.normal(size=grid.shape) for _ in range(3)))


def test_gradient_of_constant_is_zero(grid16: Grid3) -> None:
    result = gradient(_scalar(grid16, np.full(grid16.shape, 3.5)))
    assert result.max_norm() == 0.0


def test_gradient_of_sine_matches_closed_form(grid16: Grid3) -> None:
    x, _, _ = grid16.coordinates()
    h = grid16.spacing[0]
    result = gradient(_scalar(grid16, np.sin(x)))
    assert result.u[0, 0, 0] == pytest.approx(math.sin(h) / h, abs=1e-14)
    assert result.u[0, 0, 0] == pytest.approx(0.974495, abs=1e-6)


def test_operators_are_linear(grid16: Grid3) -> None:
    f, g = _random_vector(grid16, 1), _random_vector(grid16, 2)
    alpha, beta = 1.7, -0.3
    combined = VectorGridField(grid16, *(alpha * a + beta * b for a, b in zip(f.components, g.components, strict=True)))
    for operator in (curl, laplacian):
        lhs = operator(combined)
        rhs = [alpha * a + beta * b for a, b in zip(operator(f).components, operator(g).components, strict=True)]
        for left, right in zip(lhs.components, rhs, strict=True):
            assert np.allclose(left, right, rtol=1e-13, atol=1e-12)
    div = divergence(combined).data
    assert np.allclose(div, alpha * divergence(f).data + beta * divergence(g).data, rtol=1e-13, atol=1e-12)


def test_gradient_is_linear(grid16: Grid3) -> None:
    rng = np.random.default_rng(11)
    a, b = rng.normal(size=grid16.shape), rng.normal(size=grid16.shape)
    lhs = gradient(_scalar(grid16, 2.5 * a - 4.0 * b))
    grad_a, grad_b = gradient(_scalar(grid16, a)).components, gradient(_scalar(grid16, b)).components
    rhs = [2.5 * p - 4.0 * q for p, q in zip(grad_a, grad_b, strict=True)]
    for left, right in zip(lhs.components, rhs, strict=True):
        assert np.allclose(left, right, rtol=1e-13, atol=1e-12)


_SHIFT = (3, -2, 5)


def _roll(values: np.ndarray) -> np.ndarray:
    return np.roll(values, _SHIFT, axis=(0, 1, 2))


def _roll_vector(field: VectorGridField) -> VectorGridField:
    return VectorGridField(field.grid, *(_roll(c) for c in field.components))


@pytest.mark.parametrize("operator", [curl, laplacian, convective_term], ids=["curl", "laplacian", "convective_term"])
def test_vector_operators_commute_with_index_shift(grid16: Grid3, operator: Callable[[VectorGridField], VectorGridField]) -> None:
    field = _random_vector(grid16, 5)
    shifted = operator(_roll_vector(field))
    for left, right in zip(shifted.components, _roll_vector(operator(field)).components, strict=True):
        assert np.allclose(left, right, rtol=0.0, atol=1e-12)


def test_scalar_operators_commute_with_index_shift(grid16: Grid3) -> None:
    field = _random_vector(grid16, 5)
    assert np.allclose(divergence(_roll_vector(field)).data, _roll(divergence(field).data), rtol=0.0, atol=1e-12)
    scalar = _scalar(grid16, field.u)
    rolled = _scalar(grid16, _roll(field.u))
    for left, right in zip(gradient(rolled).components, _roll_vector(gradient(scalar)).components, strict=True):
        assert np.allclose(left, right, rtol=0.0, atol=1e-12)
    assert np.allclose(laplacian(rolled).data, _roll(laplacian(scalar).data), rtol=0.0, atol=1e-12)


def test_divergence_of_constant_field_is_zero(grid16: Grid3) -> None:
    ones = np.ones(grid16.shape)
    assert divergence(VectorGridField(grid16, ones, 2 * ones, 3 * ones)).max_norm() == 0.0


@pytest.mark.parametrize("seed", range(20))
def test_divergence_of_curl_vanishes(seed: int) -> None:
    grid = Grid3.cube(16)
    potential = _random_vector(grid, seed)
    velocity = curl(potential)
    assert divergence(velocity).max_norm() <= 1e-12 * max(velocity.max_norm(), 1.0)


def test_curl_of_abc_is_beltrami(abc16: FlowSnapshot) -> None:
    rotation = vorticity(abc16)
    scale = abc16.velocity.max_norm()
    for omega, v in zip(rotation.components, abc16.velocity.components, strict=True):
        assert np.max(np.abs(omega - v)) / scale <= 0.03


def test_laplacian_discrete_eigenvalue(grid16: Grid3) -> None:
    _, _, z = grid16.coordinates()
    h = grid16.spacing[2]
    eigenvalue = (2.0 - 2.0 * math.cos(h)) / (h * h)
    assert eigenvalue == pytest.approx(0.9872148, abs=1e-7)
    result = laplacian(_scalar(grid16, np.sin(z)))
    assert np.allclose(result.data, -eigenvalue * np.sin(z), atol=1e-13)


def _max_error_ratio(error_coarse: float, error_fine: float) -> float:
    return math.log2(error_coarse / error_fine)


def test_second_order_convergence() -> None:
    gradient_errors, laplacian_errors, divergence_errors = [], [], []
    for n in (16, 32):
        grid = Grid3.cube(n)
        x, y, z = grid.coordinates()
        f = np.sin(x) * np.cos(y)
        gradient_errors.append(np.max(np.abs(gradient(_scalar(grid, f)).u - np.cos(x) * np.cos(y))))
        laplacian_errors.append(np.max(np.abs(laplacian(_scalar(grid, f)).data + 2.0 * f)))
        field = VectorGridField(grid, np.sin(x), np.sin(y), np.sin(z))
        divergence_errors.append(np.max(np.abs(divergence(field).data - (np.cos(x) + np.cos(y) + np.cos(z)))))
    for errors in (gradient_errors, laplacian_errors, divergence_errors):
        assert _max_error_ratio(errors[0], errors[1]) == pytest.approx(2.0, abs=0.2)


def test_convective_term_of_shear_mode_is_zero(grid16: Grid3) -> None:
    _, y, _ = grid16.coordinates()
    zeros = np.zeros(grid16.shape)
    assert convective_term(VectorGridField(grid16, np.sin(y), zeros, zeros)).max_norm() == 0.0


def test_momentum_residual_zero_flow() -> None:
    grid = Grid3.cube(8)
    zeros = np.zeros(grid.shape)
    still = FlowSnapshot(grid, zeros, zeros, zeros, np.full(grid.shape, 2.0), zeros, re=10.0, pr=1.0)
    assert momentum_residual(still).max_norm() == 0.0
    assert continuity_residual(still).max_norm() == 0.0


def test_momentum_residual_of_abc_is_viscous_only() -> None:
    grid = Grid3.cube(32)
    snapshot = abc_snapshot(grid, 1.0, 1.0, 1.0, re=1.0, pr=0.7)
    h = grid.spacing[0]
    eigenvalue = (2.0 - 2.0 * math.cos(h)) / (h * h)
    residual = momentum_residual(snapshot)
    for r, v in zip(residual.components, snapshot.velocity.components, strict=True):
        assert np.max(np.abs(r - eigenvalue * v)) <= 0.02


def test_momentum_residual_scales_viscous_term(abc16: FlowSnapshot) -> None:
    convective, pressure = convective_term(abc16.velocity).components, gradient(abc16.pressure).components
    inviscid = [c + g for c, g in zip(convective, pressure, strict=True)]
    viscous_1 = [r - i for r, i in zip(momentum_residual(abc16, re=1.0).components, inviscid, strict=True)]
    viscous_2 = [r - i for r, i in zip(momentum_residual(abc16, re=2.0).components, inviscid, strict=True)]
    for one, two in zip(viscous_1, viscous_2, strict=True):
        assert np.allclose(two, 0.5 * one, rtol=0.0, atol=1e-13)


def test_momentum_residual_rejects_non_positive_re(abc16: FlowSnapshot) -> None:
    with pytest.raises(ValueError, match="must be positive"):
        momentum_residual(abc16, re=0.0)


def test_local_re_feature_formula() -> None:
    grid = Grid3.cube(16)
    ones = np.ones(grid.shape)
    zeros = np.zeros(grid.shape)
    snapshot = FlowSnapshot(grid, ones, zeros, zeros, zeros, zeros, re=100.0, pr=1.0)
    assert np.allclose(local_re_feature(snapshot).data, 6.25, rtol=1e-14)
    still = FlowSnapshot(grid, zeros, zeros, zeros, zeros, zeros, re=100.0, pr=1.0)
    assert local_re_feature(still).max_norm() == 0.0


def test_local_re_feature_argmax_is_scale_invariant(random8: FlowSnapshot) -> None:
    scaled = dataclasses.replace(random8, u=3 * random8.u, v=3 * random8.v, w=3 * random8.w)
    assert np.argmax(local_re_feature(scaled).data) == np.argmax(local_re_feature(random8).data)
