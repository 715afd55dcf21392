"""Tier-1 network: dense tanh MLP trained by Levenberg-Marquardt with Bayesian evidence regularization.

The regularized objective is ``F = beta * E_D + alpha * E_W`` with ``E_D = sum(e**2) / 2``
over every (sample, output component) residual and ``E_W = sum(w**2) / 2`` over all
weights and biases. After each accepted step ``alpha`` and ``beta`` are re-estimated
from the Gauss-Newton Hessian; ``gamma`` is the effective number of well-determined
parameters.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, NamedTuple

import numpy as np

from .const import (
    ALPHA_MAX,
    BETA_MAX,
    BETA_MIN,
    DEFAULT_ALPHA0,
    DEFAULT_BETA0,
    DEFAULT_GRAD_TOL,
    DEFAULT_HIDDEN_LAYERS,
    DEFAULT_MAX_EPOCHS,
    DEFAULT_MLP_SEED,
    DEFAULT_MU0,
    DEFAULT_MU_DEC,
    DEFAULT_MU_INC,
    DEFAULT_MU_MAX,
    FLOAT_FORMAT,
    MAX_HIDDEN_LAYERS,
    MODEL_FILE_MAGIC,
    MU_FLOOR,
    STOP_GRADIENT_TOL,
    STOP_MAX_EPOCHS,
    STOP_MU_EXCEEDED,
)
from .dataset import Normalizer, SampleSet
from .field import FloatArray

type StopReason = Literal["MaxEpochs", "MuExceeded", "GradientTol"]

LOGGER = logging.getLogger(__name__)


class MlpShapeError(ValueError):
    """Raised when layer sizes or input dimensions are inconsistent."""


class MlpConfigError(ValueError):
    """Raised when a training configuration violates its invariants."""


class MlpFormatError(ValueError):
    """Raised when a model file cannot be parsed."""

    def __init__(self, message: str, *, line: int) -> None:
        """Attach the offending 1-based line number to the message."""
        super().__init__(f"line {line}: {message}")
        self.line = line


class IndefiniteSystemError(ArithmeticError):
    """Raised when a damped normal-equation matrix is not numerically positive definite; raise mu and retry."""


class NonFiniteObjectiveError(ArithmeticError):
    """Raised when the training objective stops being finite."""

    def __init__(self, message: str, *, records: tuple[TrainRecord, ...]) -> None:
        """Keep the epochs recorded before the failure for diagnosis."""
        super().__init__(message)
        self.records = records


@dataclass(frozen=True, slots=True, eq=False)
class MlpModel:
    """Dense feed-forward network: tanh hidden layers, identity output layer.

    ``weights[l]`` has shape ``(fan_out, fan_in)``; parameters flatten layer by
    layer as the row-major weight matrix followed by the bias vector.
    """

    layer_sizes: tuple[int, ...]
    weights: tuple[FloatArray, ...]
    biases: tuple[FloatArray, ...]

    def __post_init__(self) -> None:
        """Freeze parameters and check they match ``layer_sizes``."""
        _check_layer_sizes(self.layer_sizes)
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise MlpShapeError(f"Expected {len(self.layer_sizes) - 1} weight/bias pairs for sizes {self.layer_sizes}.")
        frozen_weights: list[FloatArray] = []
        frozen_biases: list[FloatArray] = []
        for fan_in, fan_out, weight, bias in zip(
            self.layer_sizes[:-1], self.layer_sizes[1:], self.weights, self.biases, strict=True
        ):
            weight_array = np.array(weight, dtype=np.float64).reshape(fan_out, fan_in)
            bias_array = np.array(bias, dtype=np.float64).reshape(fan_out)
            weight_array.flags.writeable = False
            bias_array.flags.writeable = False
            frozen_weights.append(weight_array)
            frozen_biases.append(bias_array)
        object.__setattr__(self, "weights", tuple(frozen_weights))
        object.__setattr__(self, "biases", tuple(frozen_biases))

    @property
    def n_weights(self) -> int:
        """Total parameter count ``sum((fan_in + 1) * fan_out)``."""
        return count_weights(self.layer_sizes)

    def parameters(self) -> FloatArray:
        """Flat parameter vector."""
        parts = [part for weight, bias in zip(self.weights, self.biases, strict=True) for part in (weight.ravel(), bias)]
        return np.concatenate(parts)

    def with_parameters(self, values: FloatArray) -> MlpModel:
        """Return a model with the same architecture and parameters ``values``."""
        if values.shape != (self.n_weights,):
            raise MlpShapeError(f"Expected {self.n_weights} parameters, got shape {values.shape}.")
        weights: list[FloatArray] = []
        biases: list[FloatArray] = []
        offset = 0
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:], strict=True):
            weights.append(values[offset : offset + fan_in * fan_out].reshape(fan_out, fan_in))
            offset += fan_in * fan_out
            biases.append(values[offset : offset + fan_out])
            offset += fan_out
        return MlpModel(self.layer_sizes, tuple(weights), tuple(biases))


def count_weights(layer_sizes: Sequence[int]) -> int:
    """Number of weights and biases for ``layer_sizes``."""
    return sum((fan_in + 1) * fan_out for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:], strict=True))


def _check_layer_sizes(layer_sizes: Sequence[int]) -> None:
    if len(layer_sizes) < 2:
        raise MlpShapeError(f"Layer sizes {tuple(layer_sizes)} need at least an input and an output layer.")
    if any(isinstance(size, bool) or not isinstance(size, int) or size < 1 for size in layer_sizes):
        raise MlpShapeError(f"Layer sizes {tuple(layer_sizes)} must be positive integers.")


def init_mlp(layer_sizes: Sequence[int], seed: int) -> MlpModel:
    """Draw weights uniformly in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``; biases start at zero."""
    sizes = tuple(layer_sizes)
    _check_layer_sizes(sizes)
    rng = np.random.default_rng(seed)
    weights: list[FloatArray] = []
    biases: list[FloatArray] = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:], strict=True):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, tuple(weights), tuple(biases))


def _activations(model: MlpModel, inputs: FloatArray) -> list[FloatArray]:
    if inputs.ndim != 2 or inputs.shape[1] != model.layer_sizes[0]:
        raise MlpShapeError(f"Inputs of shape {inputs.shape} do not match input size {model.layer_sizes[0]}.")
    activations = [inputs]
    last = len(model.weights) - 1
    for layer, (weight, bias) in enumerate(zip(model.weights, model.biases, strict=True)):
        z = activations[-1] @ weight.T + bias
        activations.append(z if layer == last else np.tanh(z))
    return activations


def predict(model: MlpModel, inputs: FloatArray) -> FloatArray:
    """Batch forward pass; ``inputs`` has one sample per row."""
    return _activations(model, np.asarray(inputs, dtype=np.float64))[-1]


def forward(model: MlpModel, sample_input: Sequence[float]) -> tuple[float, ...]:
    """Forward pass for a single input vector."""
    if len(sample_input) != model.layer_sizes[0]:
        raise MlpShapeError(f"Input has {len(sample_input)} entries, expected {model.layer_sizes[0]}.")
    output = predict(model, np.asarray(sample_input, dtype=np.float64).reshape(1, -1))
    return tuple(float(value) for value in output[0])


def _residuals(model: MlpModel, inputs: FloatArray, targets: FloatArray) -> FloatArray:
    return np.asarray((targets - predict(model, inputs)).reshape(-1))


def batch_jacobian(model: MlpModel, inputs: FloatArray, targets: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Jacobian of every output component with respect to every parameter, plus residuals.

    Rows are sample-major, component-minor; columns follow :meth:`MlpModel.parameters`.
    Residuals are ``target - output`` stacked in the same row order.
    """
    activations = _activations(model, np.asarray(inputs, dtype=np.float64))
    outputs = activations[-1]
    n, k = outputs.shape
    if targets.shape != (n, k):
        raise MlpShapeError(f"Targets of shape {targets.shape} do not match outputs {outputs.shape}.")

    # delta[s, c, j]: derivative of output component c of sample s w.r.t. pre-activation j of the current layer
    delta = np.broadcast_to(np.eye(k), (n, k, k)).copy()
    blocks: list[FloatArray] = [np.empty((n, k, 0))] * len(model.weights)
    for layer in range(len(model.weights) - 1, -1, -1):
        previous = activations[layer]
        grad_weight = delta[:, :, :, None] * previous[:, None, None, :]
        blocks[layer] = np.concatenate([grad_weight.reshape(n, k, -1), delta], axis=2)
        if layer > 0:
            delta = (delta @ model.weights[layer]) * (1.0 - previous**2)[:, None, :]
    jacobian = np.concatenate(blocks, axis=2).reshape(n * k, model.n_weights)
    residuals = np.asarray((targets - outputs).reshape(-1))
    return jacobian, residuals


def solve_damped_step(
    jtj: FloatArray,
    jte: FloatArray,
    weights: FloatArray,
    *,
    mu: float,
    alpha: float,
    beta: float,
) -> FloatArray:
    """Solve ``(beta*JtJ + (mu + alpha)*I) delta = beta*Jte - alpha*w`` by Cholesky factorisation.

    Raises:
        IndefiniteSystemError: When the matrix is not numerically positive definite.
    """
    system = beta * jtj + (mu + alpha) * np.eye(len(weights))
    rhs = beta * jte - alpha * weights
    if not (np.all(np.isfinite(system)) and np.all(np.isfinite(rhs))):
        raise IndefiniteSystemError("Damped normal equations contain non-finite entries.")
    try:
        lower = np.linalg.cholesky(system)
    except np.linalg.LinAlgError as err:
        raise IndefiniteSystemError(f"Cholesky factorisation failed at mu={mu:g}; raise mu and retry.") from err
    return np.asarray(np.linalg.solve(lower.T, np.linalg.solve(lower, rhs)))


class LmStep(NamedTuple):
    """Candidate produced by one damped step."""

    model: MlpModel
    data_error: float
    weight_error: float


def lm_br_step(
    model: MlpModel,
    jacobian: FloatArray,
    residuals: FloatArray,
    *,
    mu: float,
    alpha: float,
    beta: float,
    inputs: FloatArray,
    targets: FloatArray,
    normal_equations: tuple[FloatArray, FloatArray] | None = None,
) -> LmStep:
    """Propose ``w + delta`` and evaluate its data error on ``(inputs, targets)``.

    ``normal_equations`` may carry precomputed ``(JtJ, Jte)`` so retries within an
    epoch do not rebuild them.
    """
    if mu <= 0:
        raise MlpConfigError(f"mu={mu!r} must be positive.")
    jtj, jte = normal_equations if normal_equations is not None else (jacobian.T @ jacobian, jacobian.T @ residuals)
    weights = model.parameters()
    delta = solve_damped_step(jtj, jte, weights, mu=mu, alpha=alpha, beta=beta)
    candidate = model.with_parameters(weights + delta)
    new_residuals = _residuals(candidate, inputs, targets)
    new_weights = candidate.parameters()
    return LmStep(candidate, 0.5 * float(new_residuals @ new_residuals), 0.5 * float(new_weights @ new_weights))


class EvidenceUpdate(NamedTuple):
    """Re-estimated regularization hyperparameters."""

    alpha: float
    beta: float
    gamma: float


def update_evidence_hyperparams(
    jacobian: FloatArray,
    weights: FloatArray,
    data_error: float,
    weight_error: float,
    alpha: float,
    beta: float,
    n_rows: int,
    n_weights: int,
    *,
    jtj: FloatArray | None = None,
) -> EvidenceUpdate:
    """Gauss-Newton evidence update of ``alpha`` and ``beta``.

    ``gamma = N_w - 2*alpha*trace(H^-1)`` with ``H = 2*beta*JtJ + 2*alpha*I``;
    ``alpha' = gamma / (2*E_W)`` and ``beta' = (n_rows - gamma) / (2*E_D)``, clamped
    to ``alpha' <= 1e10`` and ``1e-10 <= beta' <= 1e10``.

    Raises:
        IndefiniteSystemError: When ``H`` is singular; the caller should raise mu first.
    """
    if data_error < 0 or weight_error < 0:
        raise MlpConfigError("Data and weight errors must be non-negative.")
    if weights.shape != (n_weights,):
        raise MlpShapeError(f"Expected {n_weights} weights, got shape {weights.shape}.")
    if alpha == 0:
        gamma = float(n_weights)
    else:
        products = jacobian.T @ jacobian if jtj is None else jtj
        hessian = 2.0 * beta * products + 2.0 * alpha * np.eye(n_weights)
        try:
            lower = np.linalg.cholesky(hessian)
        except np.linalg.LinAlgError as err:
            raise IndefiniteSystemError("Evidence Hessian is singular; raise mu before updating alpha and beta.") from err
        lower_inverse = np.linalg.solve(lower, np.eye(n_weights))
        trace_inverse = float(np.sum(lower_inverse**2))
        gamma = min(max(n_weights - 2.0 * alpha * trace_inverse, 0.0), float(n_weights))

    new_alpha = ALPHA_MAX if weight_error == 0 else min(gamma / (2.0 * weight_error), ALPHA_MAX)
    new_beta = BETA_MAX if data_error == 0 else min(max((n_rows - gamma) / (2.0 * data_error), BETA_MIN), BETA_MAX)
    return EvidenceUpdate(new_alpha, new_beta, gamma)


@dataclass(frozen=True, slots=True)
class TrainConfig:
    """Trainer settings; defaults follow the toolbox the method was first run with."""

    max_epochs: int = DEFAULT_MAX_EPOCHS
    mu0: float = DEFAULT_MU0
    mu_inc: float = DEFAULT_MU_INC
    mu_dec: float = DEFAULT_MU_DEC
    mu_max: float = DEFAULT_MU_MAX
    grad_tol: float = DEFAULT_GRAD_TOL
    seed: int = DEFAULT_MLP_SEED
    alpha0: float = DEFAULT_ALPHA0
    beta0: float = DEFAULT_BETA0
    hidden_layers: tuple[int, ...] = DEFAULT_HIDDEN_LAYERS
    bayesian: bool = True

    def __post_init__(self) -> None:
        """Validate schedule ordering and architecture."""
        if not self.mu_inc > 1 > self.mu_dec > 0:
            raise MlpConfigError(f"Need mu_inc > 1 > mu_dec > 0, got mu_inc={self.mu_inc}, mu_dec={self.mu_dec}.")
        if not self.mu_max > self.mu0 > 0:
            raise MlpConfigError(f"Need mu_max > mu0 > 0, got mu_max={self.mu_max}, mu0={self.mu0}.")
        if self.max_epochs < 1:
            raise MlpConfigError(f"max_epochs={self.max_epochs} must be at least 1.")
        if self.grad_tol < 0 or self.alpha0 < 0 or self.beta0 <= 0:
            raise MlpConfigError("Need grad_tol >= 0, alpha0 >= 0 and beta0 > 0.")
        if len(self.hidden_layers) > MAX_HIDDEN_LAYERS or any(size < 1 for size in self.hidden_layers):
            raise MlpConfigError(f"hidden_layers={self.hidden_layers} must hold at most {MAX_HIDDEN_LAYERS} positive sizes.")


@dataclass(frozen=True, slots=True)
class TrainRecord:
    """One epoch of the trainer.

    ``objective_start`` and ``objective`` are evaluated with the hyperparameters in
    force during the epoch; ``alpha``, ``beta`` and ``gamma`` are the values after the
    epoch's evidence update, used from the next epoch on.
    """

    epoch: int
    mu: float
    data_error: float
    weight_error: float
    objective: float
    objective_start: float
    alpha: float
    beta: float
    gamma: float
    gradient_norm: float
    validation_error: float | None
    accepted: bool


@dataclass(frozen=True, slots=True)
class TrainTrace:
    """Per-epoch records plus the reason training stopped."""

    records: tuple[TrainRecord, ...]
    stop_reason: StopReason
    final_mu: float

    @property
    def epochs_run(self) -> int:
        """Number of recorded epochs."""
        return len(self.records)


def train_mlp(sample_set: SampleSet, cfg: TrainConfig) -> tuple[MlpModel, TrainTrace]:
    """Train on the training partition until mu explodes, the gradient vanishes or epochs run out.

    Validation error is recorded per epoch for reporting only; it never stops training.

    Raises:
        MlpShapeError: When the training partition is empty.
        NonFiniteObjectiveError: When the objective or its gradient is no longer finite.
    """
    inputs, targets = sample_set.partition_arrays("train")
    if len(inputs) == 0:
        raise MlpShapeError("Training partition is empty.")
    validation_inputs, validation_targets = sample_set.partition_arrays("validation")
    model = init_mlp((inputs.shape[1], *cfg.hidden_layers, targets.shape[1]), cfg.seed)
    n_weights = model.n_weights

    started = time.monotonic()
    mu, alpha, beta = cfg.mu0, cfg.alpha0, cfg.beta0
    gamma = float(n_weights)
    jacobian, residuals = batch_jacobian(model, inputs, targets)
    weights = model.parameters()
    data_error = 0.5 * float(residuals @ residuals)
    weight_error = 0.5 * float(weights @ weights)
    records: list[TrainRecord] = []
    stop_reason: StopReason = STOP_MAX_EPOCHS
    alpha_clamped = False

    for epoch in range(1, cfg.max_epochs + 1):
        objective = beta * data_error + alpha * weight_error
        jte = jacobian.T @ residuals
        gradient_norm = float(np.linalg.norm(alpha * weights - beta * jte))
        if not (math.isfinite(objective) and math.isfinite(gradient_norm)):
            raise NonFiniteObjectiveError(f"Objective became non-finite at epoch {epoch}.", records=tuple(records))
        if gradient_norm < cfg.grad_tol:
            stop_reason = STOP_GRADIENT_TOL
            break

        jtj = jacobian.T @ jacobian
        step: LmStep | None = None
        while step is None:
            try:
                candidate = lm_br_step(
                    model,
                    jacobian,
                    residuals,
                    mu=mu,
                    alpha=alpha,
                    beta=beta,
                    inputs=inputs,
                    targets=targets,
                    normal_equations=(jtj, jte),
                )
            except IndefiniteSystemError:
                LOGGER.debug("Epoch %s: indefinite system at mu=%g", epoch, mu)
            else:
                if beta * candidate.data_error + alpha * candidate.weight_error < objective:
                    step = candidate
                    mu = max(mu * cfg.mu_dec, MU_FLOOR)
                    break
            mu *= cfg.mu_inc
            if mu > cfg.mu_max:
                break

        if step is None:
            records.append(
                TrainRecord(
                    epoch=epoch,
                    mu=mu,
                    data_error=data_error,
                    weight_error=weight_error,
                    objective=objective,
                    objective_start=objective,
                    alpha=alpha,
                    beta=beta,
                    gamma=gamma,
                    gradient_norm=gradient_norm,
                    validation_error=_validation_error(model, validation_inputs, validation_targets),
                    accepted=False,
                )
            )
            stop_reason = STOP_MU_EXCEEDED
            break

        model = step.model
        jacobian, residuals = batch_jacobian(model, inputs, targets)
        weights = model.parameters()
        data_error = 0.5 * float(residuals @ residuals)
        weight_error = 0.5 * float(weights @ weights)
        accepted_objective = beta * data_error + alpha * weight_error
        if cfg.bayesian:
            try:
                alpha, beta, gamma = update_evidence_hyperparams(
                    jacobian, weights, data_error, weight_error, alpha, beta, len(residuals), n_weights
                )
            except IndefiniteSystemError:
                LOGGER.debug("Epoch %s: evidence Hessian singular, raising mu to %g", epoch, mu * cfg.mu_inc)
                mu *= cfg.mu_inc
            if alpha >= ALPHA_MAX and not alpha_clamped:
                alpha_clamped = True
                LOGGER.warning(
                    "Epoch %s: alpha reached its %g cap (gamma=%.3g, E_W=%.3g); the weight prior is collapsing the network",
                    epoch,
                    ALPHA_MAX,
                    gamma,
                    weight_error,
                )
        records.append(
            TrainRecord(
                epoch=epoch,
                mu=mu,
                data_error=data_error,
                weight_error=weight_error,
                objective=accepted_objective,
                objective_start=objective,
                alpha=alpha,
                beta=beta,
                gamma=gamma,
                gradient_norm=gradient_norm,
                validation_error=_validation_error(model, validation_inputs, validation_targets),
                accepted=True,
            )
        )
        LOGGER.debug(
            "Epoch %s: mu=%g E_D=%.6g E_W=%.6g alpha=%.4g beta=%.4g gamma=%.3f",
            epoch,
            mu,
            data_error,
            weight_error,
            alpha,
            beta,
            gamma,
        )

    trace = TrainTrace(records=tuple(records), stop_reason=stop_reason, final_mu=mu)
    LOGGER.info(
        "Trained MLP %s in %.3fs (epochs=%s, stop_reason=%s, final_mu=%g)",
        model.layer_sizes,
        time.monotonic() - started,
        trace.epochs_run,
        stop_reason,
        mu,
    )
    return model, trace


def _validation_error(model: MlpModel, inputs: FloatArray, targets: FloatArray) -> float | None:
    if len(inputs) == 0:
        return None
    residuals = _residuals(model, inputs, targets)
    return 0.5 * float(residuals @ residuals)


def _format_row(values: FloatArray) -> str:
    return " ".join(FLOAT_FORMAT.format(float(value)) for value in np.ravel(values))


def save_mlp(path: str | Path, model: MlpModel, *, normalizer: Normalizer | None = None) -> None:
    """Write ``model`` (and optionally the input normalizer) as ``#mlp 1`` text."""
    lines = [MODEL_FILE_MAGIC, " ".join(str(size) for size in model.layer_sizes)]
    if normalizer is not None:
        lines.append(f"#input_mean {_format_row(normalizer.mean)}")
        lines.append(f"#input_std {_format_row(normalizer.std)}")
    for weight, bias in zip(model.weights, model.biases, strict=True):
        lines.append(_format_row(weight))
        lines.append(_format_row(bias))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_row(text: str, *, count: int, line: int) -> FloatArray:
    parts = text.split()
    if len(parts) != count:
        raise MlpFormatError(f"expected {count} values, found {len(parts)}", line=line)
    try:
        values = np.array([float(part) for part in parts])
    except ValueError as err:
        raise MlpFormatError(f"not a number: {err}", line=line) from err
    if not np.all(np.isfinite(values)):
        raise MlpFormatError("non-finite value", line=line)
    return values


def load_mlp(path: str | Path) -> tuple[MlpModel, Normalizer | None]:
    """Parse a model file written by :func:`save_mlp`."""
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines or lines[0].strip() != MODEL_FILE_MAGIC:
        raise MlpFormatError(f"missing '{MODEL_FILE_MAGIC}' header", line=1)
    if len(lines) < 2:
        raise MlpFormatError("missing layer sizes", line=2)
    try:
        sizes = tuple(int(part) for part in lines[1].split())
        _check_layer_sizes(sizes)
    except (ValueError, MlpShapeError) as err:
        raise MlpFormatError(f"invalid layer sizes: {err}", line=2) from err

    cursor = 2
    normalizer: Normalizer | None = None
    if cursor < len(lines) and lines[cursor].startswith("#input_mean"):
        if cursor + 1 >= len(lines) or not lines[cursor + 1].startswith("#input_std"):
            raise MlpFormatError("'#input_mean' must be followed by '#input_std'", line=cursor + 2)
        mean = _parse_row(lines[cursor].removeprefix("#input_mean"), count=sizes[0], line=cursor + 1)
        std = _parse_row(lines[cursor + 1].removeprefix("#input_std"), count=sizes[0], line=cursor + 2)
        try:
            normalizer = Normalizer(mean=mean, std=std)
        except ValueError as err:
            raise MlpFormatError(str(err), line=cursor + 2) from err
        cursor += 2

    weights: list[FloatArray] = []
    biases: list[FloatArray] = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:], strict=True):
        if cursor + 1 >= len(lines):
            raise MlpFormatError(f"missing parameter lines for layer {fan_in}->{fan_out}", line=cursor + 1)
        weights.append(_parse_row(lines[cursor], count=fan_in * fan_out, line=cursor + 1).reshape(fan_out, fan_in))
        biases.append(_parse_row(lines[cursor + 1], count=fan_out, line=cursor + 2))
        cursor += 2
    if cursor != len(lines):
        raise MlpFormatError("unexpected trailing lines", line=cursor + 1)
    return MlpModel(sizes, tuple(weights), tuple(biases)), normalizer
