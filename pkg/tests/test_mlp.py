from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pytest

from tests.conftest import make_set
from velomap.const import ALPHA_MAX
from velomap.dataset import Normalizer
from velomap.mlp import (
    IndefiniteSystemError,
    MlpConfigError,
    MlpFormatError,
    MlpModel,
    MlpShapeError,
    TrainConfig,
    batch_jacobian,
    count_weights,
    forward,
    init_mlp,
    lm_br_step,
    load_mlp,
    predict,
    save_mlp,
    solve_damped_step,
    train_mlp,
    update_evidence_hyperparams,
)


def _random_inputs(n: int, dim: int = 7, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).normal(size=(n, dim))


def test_init_mlp_counts_and_bounds() -> None:
    model = init_mlp((7, 10, 3), seed=4)
    assert model.n_weights == count_weights((7, 10, 3)) == 113
    assert model.parameters().shape == (113,)
    assert np.all(np.abs(model.weights[0]) <= 1 / np.sqrt(7))
    assert np.all(np.abs(model.weights[1]) <= 1 / np.sqrt(10))
    assert all(np.all(bias == 0.0) for bias in model.biases)


def test_init_mlp_is_deterministic() -> None:
    first, second = init_mlp((7, 10, 3), seed=9), init_mlp((7, 10, 3), seed=9)
    assert np.array_equal(first.parameters(), second.parameters())


@pytest.mark.parametrize("sizes", [(), (7,), (7, 0, 3)])
def test_init_mlp_rejects_bad_sizes(sizes: tuple[int, ...]) -> None:
    with pytest.raises(MlpShapeError):
        init_mlp(sizes, seed=0)


def test_forward_zero_model_outputs_zero() -> None:
    model = init_mlp((7, 5, 3), seed=0).with_parameters(np.zeros(count_weights((7, 5, 3))))
    assert forward(model, [1.0] * 7) == (0.0, 0.0, 0.0)


def test_forward_single_linear_path() -> None:
    model = MlpModel((1, 1), (np.array([[2.5]]),), (np.array([-1.0]),))
    assert forward(model, [4.0]) == (9.0,)


def test_forward_rejects_wrong_dimension() -> None:
    with pytest.raises(MlpShapeError, match="expected 7"):
        forward(init_mlp((7, 3), seed=0), [1.0, 2.0])


def test_forward_output_is_bounded() -> None:
    model = init_mlp((7, 6, 3), seed=2)
    bound = 6 * np.max(np.abs(model.weights[1])) + np.max(np.abs(model.biases[1]))
    outputs = predict(model, _random_inputs(200, seed=3) * 50)
    assert np.all(np.abs(outputs) <= bound)


def test_parameters_round_trip_through_layers() -> None:
    model = init_mlp((7, 4, 3), seed=1)
    rebuilt = model.with_parameters(model.parameters())
    assert all(np.array_equal(a, b) for a, b in zip(model.weights, rebuilt.weights, strict=True))


@pytest.mark.parametrize("seed", range(5))
def test_batch_jacobian_matches_finite_differences(seed: int) -> None:
    model = init_mlp((7, 10, 3), seed=seed)
    inputs = _random_inputs(32, seed=seed + 100)
    targets = np.zeros((32, 3))
    jacobian, residuals = batch_jacobian(model, inputs, targets)
    assert jacobian.shape == (96, model.n_weights)
    assert np.allclose(residuals, -predict(model, inputs).reshape(-1))

    weights = model.parameters()
    step = 1e-6
    numeric = np.empty_like(jacobian)
    for column in range(model.n_weights):
        bumped = weights.copy()
        bumped[column] += step
        upper = predict(model.with_parameters(bumped), inputs).reshape(-1)
        bumped[column] -= 2 * step
        lower = predict(model.with_parameters(bumped), inputs).reshape(-1)
        numeric[:, column] = (upper - lower) / (2 * step)
    assert np.allclose(jacobian, numeric, rtol=1e-6, atol=1e-8)


def test_batch_jacobian_of_linear_model_is_input() -> None:
    model = MlpModel((2, 1), (np.array([[0.3, -0.7]]),), (np.array([0.0]),))
    inputs = np.array([[1.0, 2.0], [3.0, 4.0]])
    jacobian, _ = batch_jacobian(model, inputs, np.zeros((2, 1)))
    assert np.array_equal(jacobian, np.array([[1.0, 2.0, 1.0], [3.0, 4.0, 1.0]]))


def test_solve_damped_step_scalar_normal_equations() -> None:
    delta = solve_damped_step(np.array([[5.0]]), np.array([10.0]), np.array([0.0]), mu=1e-12, alpha=0.0, beta=1.0)
    assert delta[0] == pytest.approx(2.0, abs=1e-10)


def test_solve_damped_step_limits() -> None:
    jtj, weights = np.array([[5.0]]), np.array([3.0])
    shrink = solve_damped_step(jtj, np.array([0.0]), weights, mu=1e-3, alpha=1e12, beta=1.0)
    assert shrink[0] == pytest.approx(-3.0, rel=1e-9)
    frozen = solve_damped_step(jtj, np.array([10.0]), weights, mu=1e15, alpha=0.0, beta=1.0)
    assert abs(frozen[0]) < 1e-13


def test_solve_damped_step_reports_indefinite_system() -> None:
    with pytest.raises(IndefiniteSystemError, match="raise mu"):
        solve_damped_step(np.array([[-5.0]]), np.array([1.0]), np.array([0.0]), mu=1e-3, alpha=0.0, beta=1.0)


def test_lm_br_step_fits_line_exactly() -> None:
    model = MlpModel((1, 1), (np.array([[0.0]]),), (np.array([0.0]),))
    inputs, targets = np.array([[1.0], [2.0]]), np.array([[2.0], [4.0]])
    jacobian, residuals = batch_jacobian(model, inputs, targets)
    step = lm_br_step(model, jacobian, residuals, mu=1e-12, alpha=0.0, beta=1.0, inputs=inputs, targets=targets)
    assert step.model.weights[0][0, 0] == pytest.approx(2.0, abs=1e-9)
    assert step.model.biases[0][0] == pytest.approx(0.0, abs=1e-9)
    assert step.data_error < 1e-16


def test_train_linear_fixture_reaches_least_squares_solution() -> None:
    inputs = np.arange(1.0, 11.0).reshape(10, 1)
    config = TrainConfig(max_epochs=2, mu0=1e-9, hidden_layers=(), bayesian=False, grad_tol=0.0)
    model, trace = train_mlp(make_set(inputs, 2.0 * inputs), config)
    assert trace.epochs_run <= 2
    assert model.weights[0][0, 0] == pytest.approx(2.0, abs=1e-8)
    assert model.biases[0][0] == pytest.approx(0.0, abs=1e-8)


def test_evidence_update_alpha_zero_keeps_all_parameters() -> None:
    jacobian = np.random.default_rng(0).normal(size=(6, 3))
    update = update_evidence_hyperparams(jacobian, np.ones(3), 1.0, 1.5, 0.0, 1.0, 6, 3)
    assert update.gamma == 3.0


def test_evidence_update_scalar_oracle() -> None:
    update = update_evidence_hyperparams(np.array([[1.0]]), np.array([2.0]), 1.0, 2.0, 1.0, 1.0, 1, 1)
    assert update.gamma == pytest.approx(0.5, abs=1e-12)
    assert update.alpha == pytest.approx(0.125, abs=1e-12)


def test_evidence_gamma_non_increasing_in_alpha() -> None:
    jacobian = np.random.default_rng(3).normal(size=(9, 3))
    weights = np.array([0.5, -1.0, 2.0])
    gammas = [update_evidence_hyperparams(jacobian, weights, 1.0, 2.625, alpha, 1.0, 9, 3).gamma for alpha in (0.0, 1.0, 10.0)]
    assert gammas[0] >= gammas[1] >= gammas[2]
    assert all(0.0 <= gamma <= 3.0 for gamma in gammas)


def test_evidence_update_clamps() -> None:
    update = update_evidence_hyperparams(np.array([[1.0]]), np.array([0.0]), 0.0, 0.0, 1.0, 1.0, 4, 1)
    assert update.alpha == 1e10
    assert update.beta == 1e10


def test_train_config_validates_schedule() -> None:
    with pytest.raises(MlpConfigError, match="mu_inc > 1 > mu_dec"):
        TrainConfig(mu_inc=0.5)
    with pytest.raises(MlpConfigError, match="at most 10"):
        TrainConfig(hidden_layers=(2,) * 11)


def test_train_constant_targets_converges_fast() -> None:
    inputs = _random_inputs(40, seed=5)
    sample_set = make_set(inputs, np.tile([0.5, -1.0, 2.0], (40, 1)))
    model, trace = train_mlp(sample_set, TrainConfig(max_epochs=5, hidden_layers=(), bayesian=False))
    assert trace.epochs_run <= 5
    assert trace.records[-1].data_error <= 1e-10
    assert np.allclose(predict(model, inputs), [0.5, -1.0, 2.0], atol=1e-5)


def test_train_zero_targets_ends_with_mu_exceeded() -> None:
    sample_set = make_set(_random_inputs(30, seed=6), np.zeros((30, 3)))
    config = TrainConfig(max_epochs=500, hidden_layers=(), grad_tol=0.0)
    _, trace = train_mlp(sample_set, config)
    assert trace.stop_reason == "MuExceeded"
    assert trace.epochs_run < 500
    assert not trace.records[-1].accepted
    assert config.mu_max < trace.final_mu <= config.mu_max * config.mu_inc


def test_train_warns_once_when_alpha_reaches_cap(caplog: pytest.LogCaptureFixture) -> None:
    sample_set = make_set(_random_inputs(30, seed=6), np.zeros((30, 3)))
    with caplog.at_level(logging.WARNING, logger="velomap.mlp"):
        _, trace = train_mlp(sample_set, TrainConfig(max_epochs=50, hidden_layers=(), grad_tol=0.0))
    assert any(record.alpha == ALPHA_MAX for record in trace.records)
    warnings = [record for record in caplog.records if "cap" in record.getMessage()]
    assert len(warnings) == 1


def test_train_trace_invariants() -> None:
    rng = np.random.default_rng(7)
    inputs = rng.normal(size=(60, 7))
    targets = np.column_stack([np.sin(inputs[:, 0]), np.cos(inputs[:, 1]), inputs[:, 2] * 0.5])
    config = TrainConfig(max_epochs=15, hidden_layers=(5,))
    model, trace = train_mlp(make_set(inputs, targets), config)
    assert 1 <= trace.epochs_run <= 15
    for record in trace.records:
        assert record.mu > 0
        assert 0.0 <= record.gamma <= model.n_weights
        if record.accepted:
            assert record.objective < record.objective_start
        assert record.validation_error is not None
    assert [record.epoch for record in trace.records] == list(range(1, trace.epochs_run + 1))


def test_train_is_deterministic() -> None:
    inputs = _random_inputs(40, seed=8)
    targets = np.tanh(inputs[:, :3])
    config = TrainConfig(max_epochs=6, hidden_layers=(3,))
    first_model, first_trace = train_mlp(make_set(inputs, targets), config)
    second_model, second_trace = train_mlp(make_set(inputs, targets), config)
    assert first_trace == second_trace
    assert np.array_equal(first_model.parameters(), second_model.parameters())


def test_gradient_tolerance_stop() -> None:
    sample_set = make_set(_random_inputs(20, seed=9), np.zeros((20, 3)))
    _, trace = train_mlp(sample_set, TrainConfig(max_epochs=50, hidden_layers=(), grad_tol=1e6))
    assert trace.stop_reason == "GradientTol"
    assert trace.epochs_run == 0


def test_save_and_load_model_with_normalizer(tmp_path: Path) -> None:
    model = init_mlp((7, 4, 3), seed=3)
    normalizer = Normalizer(mean=np.arange(7.0), std=np.full(7, 2.0))
    path = tmp_path / "model.mlp"
    save_mlp(path, model, normalizer=normalizer)
    loaded, loaded_normalizer = load_mlp(path)
    assert loaded.layer_sizes == (7, 4, 3)
    assert np.array_equal(loaded.parameters(), model.parameters())
    assert loaded_normalizer is not None
    assert np.array_equal(loaded_normalizer.mean, normalizer.mean)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "#mlp 1"


def test_save_and_load_model_without_normalizer(tmp_path: Path) -> None:
    path = tmp_path / "plain.mlp"
    save_mlp(path, init_mlp((7, 3), seed=0))
    _, normalizer = load_mlp(path)
    assert normalizer is None


def test_load_model_reports_bad_line(tmp_path: Path) -> None:
    path = tmp_path / "broken.mlp"
    save_mlp(path, init_mlp((7, 2, 3), seed=0))
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[2] = "1 2 3"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(MlpFormatError, match="expected 14 values") as excinfo:
        load_mlp(path)
    assert excinfo.value.line == 3


def test_load_model_rejects_missing_magic(tmp_path: Path) -> None:
    path = tmp_path / "nomagic.mlp"
    path.write_text("7 3\n", encoding="utf-8")
    with pytest.raises(MlpFormatError, match="line 1"):
        load_mlp(path)
