"""Two-tier orchestration: per-snapshot MLP training feeding a Kohonen map, plus reports and outputs."""

from __future__ import annotations

import json
import logging
import math
import time
from collections.abc import Iterator, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TypedDict, cast

import numpy as np
import voluptuous as vol

from .const import (
    ACCURACY_FLOOR,
    DEFAULT_ALPHA0,
    DEFAULT_BETA0,
    DEFAULT_DATASET_SEED,
    DEFAULT_ETA0,
    DEFAULT_ETA_F,
    DEFAULT_GRAD_TOL,
    DEFAULT_GRID_NODES,
    DEFAULT_HIDDEN_LAYERS,
    DEFAULT_KEEP_FRACTION,
    DEFAULT_MAX_EPOCHS,
    DEFAULT_MLP_SEED,
    DEFAULT_MU0,
    DEFAULT_MU_DEC,
    DEFAULT_MU_INC,
    DEFAULT_MU_MAX,
    DEFAULT_PEAKS,
    DEFAULT_SIGMA_F,
    DEFAULT_SOM_COLS,
    DEFAULT_SOM_EPOCHS,
    DEFAULT_SOM_ROWS,
    DEFAULT_SOM_SEED,
    DEFAULT_TAU,
    DEFAULT_TAU_BRACKET,
    HITMAP_STEM,
    MAX_HIDDEN_LAYERS,
    MIN_NODES_PER_AXIS,
    MODEL_FILE,
    PLANE_AXES,
    PLANE_STEM,
    REFERENCE_ACCURACY,
    REPORT_FILE,
    REPORT_SCHEMA_VERSION,
    REPRODUCTION_SNAPSHOTS,
    SNAPSHOT_KIND_RANDOM,
    SNAPSHOT_KINDS,
    STOP_GRADIENT_TOL,
    STOP_MAX_EPOCHS,
    STOP_MU_EXCEEDED,
)
from .dataset import Normalizer, filter_high_re, fit_and_apply_normalizer, sample_set_from_snapshot
from .diagnostics import SnapshotDiagnostics, payload_fingerprint, snapshot_diagnostics
from .field import FloatArray, FlowSnapshot, SnapshotSpec, generate_snapshot, load_snapshot
from .mlp import MlpModel, StopReason, TrainConfig, TrainRecord, TrainTrace, predict, save_mlp, train_mlp
from .nsops import local_re_feature
from .render import render_pgm, write_matrix_csv
from .som import SomConfig, component_plane, feature_peaks, hit_map, init_som, quantization_error, train_som

__all__ = [
    "CONFIG_SCHEMA",
    "AccuracyPoint",
    "ConfigError",
    "DatasetOptions",
    "PipelineConfig",
    "PipelineReport",
    "PipelineRun",
    "PipelineStageError",
    "ReportFormatError",
    "SnapshotReport",
    "accuracy_within_tol",
    "config_from_mapping",
    "default_reproduction_config",
    "load_pipeline_config",
    "read_report",
    "run_pipeline",
    "run_two_tier",
    "write_outputs",
    "write_report",
]

LOGGER = logging.getLogger(__name__)

type Matrix = tuple[tuple[float, ...], ...]
type SnapshotSource = SnapshotSpec | Path

_STOP_REASONS: tuple[StopReason, ...] = (STOP_MAX_EPOCHS, STOP_MU_EXCEEDED, STOP_GRADIENT_TOL)


class ConfigError(ValueError):
    """Raised when a pipeline configuration file is unreadable or invalid."""


class ReportFormatError(ValueError):
    """Raised when a report file does not match the report schema."""


class PipelineStageError(RuntimeError):
    """A stage failed for one snapshot; the original error is chained as ``__cause__``."""

    def __init__(self, stage: str, snapshot: str, cause: BaseException) -> None:
        """Name the failing stage and snapshot in the message."""
        super().__init__(f"Stage '{stage}' failed for snapshot '{snapshot}': {cause}")
        self.stage = stage
        self.snapshot = snapshot


# ---------------- configuration ----------------


def _positive(value: float) -> float:
    if not value > 0:
        raise vol.Invalid(f"expected a positive number, got {value}")
    return value


_POSITIVE_FLOAT = vol.All(vol.Coerce(float), _positive)
_NON_NEGATIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0))
_SEED = vol.All(int, vol.Range(min=0))


def _som_schedule(section: dict[str, Any]) -> dict[str, Any]:
    if section["eta_f"] > section["eta0"]:
        raise vol.Invalid(f"eta_f={section['eta_f']} exceeds eta0={section['eta0']}", path=["eta_f"])
    if section["sigma0"] is not None and section["sigma0"] < section["sigma_f"]:
        raise vol.Invalid(f"sigma0={section['sigma0']} is below sigma_f={section['sigma_f']}", path=["sigma0"])
    return section


_SNAPSHOT_SPEC_SCHEMA = vol.Schema(
    {
        vol.Required("kind"): vol.In(SNAPSHOT_KINDS),
        vol.Optional("n", default=DEFAULT_GRID_NODES): vol.All(int, vol.Range(min=MIN_NODES_PER_AXIS)),
        vol.Optional("re", default=100.0): _POSITIVE_FLOAT,
        vol.Optional("pr", default=0.7): _POSITIVE_FLOAT,
        vol.Optional("seed", default=0): _SEED,
        vol.Optional("amplitude", default=1.0): _NON_NEGATIVE_FLOAT,
        vol.Optional("a", default=1.0): vol.Coerce(float),
        vol.Optional("b", default=1.0): vol.Coerce(float),
        vol.Optional("c", default=1.0): vol.Coerce(float),
    }
)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required("snapshots"): vol.All([vol.Any(str, _SNAPSHOT_SPEC_SCHEMA)], vol.Length(min=1)),
        vol.Optional("dataset", default={}): {
            vol.Optional("seed", default=DEFAULT_DATASET_SEED): _SEED,
            vol.Optional("keep_fraction", default=DEFAULT_KEEP_FRACTION): vol.All(
                vol.Coerce(float), _positive, vol.Range(max=1)
            ),
        },
        vol.Optional("mlp", default={}): {
            vol.Optional("layers", default=list(DEFAULT_HIDDEN_LAYERS)): vol.All(
                [vol.All(int, vol.Range(min=1))], vol.Length(max=MAX_HIDDEN_LAYERS)
            ),
            vol.Optional("max_epochs", default=DEFAULT_MAX_EPOCHS): vol.All(int, vol.Range(min=1)),
            vol.Optional("mu0", default=DEFAULT_MU0): _POSITIVE_FLOAT,
            vol.Optional("mu_inc", default=DEFAULT_MU_INC): _POSITIVE_FLOAT,
            vol.Optional("mu_dec", default=DEFAULT_MU_DEC): _POSITIVE_FLOAT,
            vol.Optional("mu_max", default=DEFAULT_MU_MAX): _POSITIVE_FLOAT,
            vol.Optional("grad_tol", default=DEFAULT_GRAD_TOL): _NON_NEGATIVE_FLOAT,
            vol.Optional("seed", default=DEFAULT_MLP_SEED): _SEED,
            vol.Optional("bayesian", default=True): bool,
            vol.Optional("alpha0", default=DEFAULT_ALPHA0): _NON_NEGATIVE_FLOAT,
            vol.Optional("beta0", default=DEFAULT_BETA0): _POSITIVE_FLOAT,
        },
        vol.Optional("som", default={}): vol.All(
            {
                vol.Optional("rows", default=DEFAULT_SOM_ROWS): vol.All(int, vol.Range(min=1)),
                vol.Optional("cols", default=DEFAULT_SOM_COLS): vol.All(int, vol.Range(min=1)),
                vol.Optional("epochs", default=DEFAULT_SOM_EPOCHS): vol.All(int, vol.Range(min=1)),
                vol.Optional("eta0", default=DEFAULT_ETA0): vol.All(_POSITIVE_FLOAT, vol.Range(max=1)),
                vol.Optional("eta_f", default=DEFAULT_ETA_F): _POSITIVE_FLOAT,
                vol.Optional("sigma0", default=None): vol.Any(None, _POSITIVE_FLOAT),
                vol.Optional("sigma_f", default=DEFAULT_SIGMA_F): _POSITIVE_FLOAT,
                vol.Optional("seed", default=DEFAULT_SOM_SEED): _SEED,
                vol.Optional("peaks", default=DEFAULT_PEAKS): vol.All(int, vol.Range(min=1)),
            },
            _som_schedule,
        ),
        vol.Optional("accuracy", default={}): {
            vol.Optional("tau", default=DEFAULT_TAU): _POSITIVE_FLOAT,
            vol.Optional("bracket", default=list(DEFAULT_TAU_BRACKET)): vol.All([_POSITIVE_FLOAT], vol.Length(min=1)),
        },
        vol.Optional("workers", default=1): vol.All(int, vol.Range(min=1)),
    }
)


@dataclass(frozen=True, slots=True)
class DatasetOptions:
    """Sample-set options shared by every snapshot."""

    seed: int = DEFAULT_DATASET_SEED
    keep_fraction: float = DEFAULT_KEEP_FRACTION

    def __post_init__(self) -> None:
        """Check the filter fraction."""
        if not 0 < self.keep_fraction <= 1:
            raise ConfigError(f"keep_fraction={self.keep_fraction} must lie in (0, 1].")


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    """Everything :func:`run_two_tier` needs; output location is chosen by the caller."""

    snapshots: tuple[SnapshotSource, ...]
    dataset: DatasetOptions = field(default_factory=DatasetOptions)
    mlp: TrainConfig = field(default_factory=TrainConfig)
    som: SomConfig = field(default_factory=SomConfig)
    som_rows: int = DEFAULT_SOM_ROWS
    som_cols: int = DEFAULT_SOM_COLS
    peaks: int = DEFAULT_PEAKS
    tau: float = DEFAULT_TAU
    bracket: tuple[float, ...] = DEFAULT_TAU_BRACKET
    workers: int = 1

    def __post_init__(self) -> None:
        """Validate invariants that the schema cannot express for programmatic configs."""
        if not self.snapshots:
            raise ConfigError("At least one snapshot source is required.")
        if not self.tau > 0 or any(not tau > 0 for tau in self.bracket):
            raise ConfigError(f"Tolerances must be positive (tau={self.tau}, bracket={self.bracket}).")
        if self.som_rows < 1 or self.som_cols < 1 or self.peaks < 1 or self.workers < 1:
            raise ConfigError("som_rows, som_cols, peaks and workers must all be at least 1.")


def config_from_mapping(data: Mapping[str, Any], *, base_dir: Path | None = None) -> PipelineConfig:
    """Validate a config mapping against :data:`CONFIG_SCHEMA` and build a :class:`PipelineConfig`.

    String snapshot entries are paths, resolved against ``base_dir`` when relative.
    """
    try:
        validated = CONFIG_SCHEMA(dict(data))
    except vol.Invalid as err:
        raise ConfigError(f"Invalid pipeline config: {err}") from err

    sources: list[SnapshotSource] = []
    for entry in validated["snapshots"]:
        if isinstance(entry, str):
            path = Path(entry)
            sources.append(path if path.is_absolute() or base_dir is None else base_dir / path)
        else:
            sources.append(SnapshotSpec(**entry))

    mlp_section = validated["mlp"]
    som_section = validated["som"]
    try:
        return PipelineConfig(
            snapshots=tuple(sources),
            dataset=DatasetOptions(**validated["dataset"]),
            mlp=TrainConfig(
                max_epochs=mlp_section["max_epochs"],
                mu0=mlp_section["mu0"],
                mu_inc=mlp_section["mu_inc"],
                mu_dec=mlp_section["mu_dec"],
                mu_max=mlp_section["mu_max"],
                grad_tol=mlp_section["grad_tol"],
                seed=mlp_section["seed"],
                alpha0=mlp_section["alpha0"],
                beta0=mlp_section["beta0"],
                hidden_layers=tuple(mlp_section["layers"]),
                bayesian=mlp_section["bayesian"],
            ),
            som=SomConfig(
                epochs=som_section["epochs"],
                eta0=som_section["eta0"],
                eta_f=som_section["eta_f"],
                sigma0=som_section["sigma0"],
                sigma_f=som_section["sigma_f"],
                seed=som_section["seed"],
            ),
            som_rows=som_section["rows"],
            som_cols=som_section["cols"],
            peaks=som_section["peaks"],
            tau=validated["accuracy"]["tau"],
            bracket=tuple(validated["accuracy"]["bracket"]),
            workers=validated["workers"],
        )
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(f"Invalid pipeline config: {err}") from err


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    """Read a JSON pipeline config; relative snapshot paths resolve against its directory."""
    source = Path(path)
    try:
        data = json.loads(source.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ConfigError(f"{source}: line {err.lineno} column {err.colno}: {err.msg}") from err
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top-level JSON value must be an object.")
    return config_from_mapping(data, base_dir=source.parent)


def default_reproduction_config() -> PipelineConfig:
    """Six seeded random solenoidal snapshots on the 16^3 cube with every other option at its default."""
    return PipelineConfig(
        snapshots=tuple(SnapshotSpec(kind=SNAPSHOT_KIND_RANDOM, seed=seed) for seed in range(REPRODUCTION_SNAPSHOTS))
    )


# ---------------- report types ----------------


@dataclass(frozen=True, slots=True)
class AccuracyPoint:
    """Validation and test accuracy at one tolerance."""

    tau: float
    validation: float
    test: float


@dataclass(frozen=True, slots=True)
class SnapshotReport:
    """Outcome of the two-tier run on one snapshot."""

    label: str
    sizes: tuple[int, int, int]
    stop_reason: StopReason
    final_mu: float
    epochs_run: int
    validation_accuracy: float
    test_accuracy: float
    bracket: tuple[AccuracyPoint, ...]
    hit_map: tuple[tuple[int, ...], ...]
    planes: tuple[Matrix, ...]
    peaks: tuple[int, ...]
    quantization_error: float
    diagnostics: SnapshotDiagnostics
    trace: TrainTrace


@dataclass(frozen=True, slots=True)
class PipelineReport:
    """Aggregate over every configured snapshot, in config order."""

    snapshots: tuple[SnapshotReport, ...]
    tau: float
    mean_validation_accuracy: float
    mean_test_accuracy: float
    bracket: tuple[AccuracyPoint, ...]
    reference_accuracy: float = REFERENCE_ACCURACY

    @property
    def fingerprint(self) -> str:
        """Hash of the serialised report body."""
        return payload_fingerprint(_report_body(self))


@dataclass(frozen=True, slots=True)
class TrainedSnapshot:
    """Network and input normaliser learned for one snapshot."""

    model: MlpModel
    normalizer: Normalizer | None


@dataclass(frozen=True, slots=True)
class PipelineRun:
    """Report plus the trained networks, index-aligned with ``report.snapshots``."""

    report: PipelineReport
    models: tuple[TrainedSnapshot, ...]


# ---------------- running ----------------


def accuracy_within_tol(predictions: FloatArray, targets: FloatArray, tau: float) -> float:
    """Fraction of samples with ``|pred - target| <= tau * (|target| + 1e-8)`` in the Euclidean norm.

    Raises:
        ValueError: When the inputs are empty or misaligned, or ``tau`` is not positive.
    """
    if not tau > 0:
        raise ValueError(f"tau={tau} must be positive.")
    pred = np.asarray(predictions, dtype=np.float64)
    true = np.asarray(targets, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError(f"Predictions {pred.shape} and targets {true.shape} differ in shape.")
    if len(pred) == 0:
        raise ValueError("Accuracy of an empty sample set is undefined.")
    pred = pred.reshape(len(pred), -1)
    true = true.reshape(len(true), -1)
    errors = np.linalg.norm(pred - true, axis=1)
    limits = tau * (np.linalg.norm(true, axis=1) + ACCURACY_FLOOR)
    return float(np.count_nonzero(errors <= limits) / len(pred))


@contextmanager
def _stage(stage: str, snapshot: str) -> Iterator[None]:
    try:
        yield
    except (ValueError, ArithmeticError, OSError) as err:
        raise PipelineStageError(stage, snapshot, err) from err


def _source_label(source: SnapshotSource) -> str:
    return source.label if isinstance(source, SnapshotSpec) else str(source)


def _load_source(source: SnapshotSource) -> FlowSnapshot:
    if isinstance(source, SnapshotSpec):
        return generate_snapshot(source)
    return load_snapshot(source)


def _as_matrix(values: FloatArray) -> Matrix:
    return tuple(tuple(float(x) for x in row) for row in values)


def _run_snapshot(source: SnapshotSource, cfg: PipelineConfig) -> tuple[SnapshotReport, TrainedSnapshot]:
    label = _source_label(source)
    started = time.monotonic()

    with _stage("load", label):
        snapshot = _load_source(source)
    with _stage("samples", label):
        samples = sample_set_from_snapshot(snapshot, seed=cfg.dataset.seed)
        feature = local_re_feature(snapshot)
    if cfg.dataset.keep_fraction < 1:
        with _stage("filter", label):
            samples = filter_high_re(samples, feature, cfg.dataset.keep_fraction)
    with _stage("normalize", label):
        samples = fit_and_apply_normalizer(samples)
    with _stage("train_mlp", label):
        model, trace = train_mlp(samples, cfg.mlp)

    with _stage("evaluate", label):
        predictions = predict(model, samples.inputs)
        validation_rows = samples.partition.validation
        test_rows = samples.partition.test
        bracket = tuple(
            AccuracyPoint(
                tau=tau,
                validation=accuracy_within_tol(predictions[validation_rows], samples.targets[validation_rows], tau),
                test=accuracy_within_tol(predictions[test_rows], samples.targets[test_rows], tau),
            )
            for tau in cfg.bracket
        )
        validation_accuracy = accuracy_within_tol(predictions[validation_rows], samples.targets[validation_rows], cfg.tau)
        test_accuracy = accuracy_within_tol(predictions[test_rows], samples.targets[test_rows], cfg.tau)

    with _stage("som", label):
        feature_values = feature.flat()[samples.node_index]
        som_inputs = np.column_stack([predictions, feature_values])
        lattice = init_som(cfg.som_rows, cfg.som_cols, som_inputs.shape[1], som_inputs, cfg.som.seed)
        lattice = train_som(lattice, som_inputs, cfg.som)
        hits = hit_map(lattice, som_inputs)
        planes = tuple(_as_matrix(component_plane(lattice, c)) for c in range(len(PLANE_AXES)))
        peaks = tuple(feature_peaks(lattice, som_inputs, feature_values, cfg.peaks))
        quantization = quantization_error(lattice, som_inputs)

    with _stage("diagnostics", label):
        diagnostics = snapshot_diagnostics(snapshot)

    LOGGER.info(
        "Snapshot %s completed in %.3fs (validation_accuracy=%.4f, stop_reason=%s)",
        label,
        time.monotonic() - started,
        validation_accuracy,
        trace.stop_reason,
    )
    report = SnapshotReport(
        label=label,
        sizes=samples.partition.sizes,
        stop_reason=trace.stop_reason,
        final_mu=trace.final_mu,
        epochs_run=trace.epochs_run,
        validation_accuracy=validation_accuracy,
        test_accuracy=test_accuracy,
        bracket=bracket,
        hit_map=tuple(tuple(int(x) for x in row) for row in hits),
        planes=planes,
        peaks=peaks,
        quantization_error=quantization,
        diagnostics=diagnostics,
        trace=trace,
    )
    return report, TrainedSnapshot(model=model, normalizer=samples.normalizer)


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def run_pipeline(cfg: PipelineConfig) -> PipelineRun:
    """Run every snapshot (on ``cfg.workers`` threads) and aggregate in config order.

    Raises:
        PipelineStageError: When any stage fails; names the stage and snapshot.
    """
    started = time.monotonic()
    if cfg.workers > 1 and len(cfg.snapshots) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
            results = list(executor.map(lambda source: _run_snapshot(source, cfg), cfg.snapshots))
    else:
        results = [_run_snapshot(source, cfg) for source in cfg.snapshots]

    snapshots = tuple(report for report, _ in results)
    bracket = tuple(
        AccuracyPoint(
            tau=tau,
            validation=_mean([snap.bracket[i].validation for snap in snapshots]),
            test=_mean([snap.bracket[i].test for snap in snapshots]),
        )
        for i, tau in enumerate(cfg.bracket)
    )
    report = PipelineReport(
        snapshots=snapshots,
        tau=cfg.tau,
        mean_validation_accuracy=_mean([snap.validation_accuracy for snap in snapshots]),
        mean_test_accuracy=_mean([snap.test_accuracy for snap in snapshots]),
        bracket=bracket,
    )
    LOGGER.info(
        "Pipeline over %s snapshot(s) completed in %.3fs (mean_validation_accuracy=%.4f)",
        len(snapshots),
        time.monotonic() - started,
        report.mean_validation_accuracy,
    )
    return PipelineRun(report=report, models=tuple(trained for _, trained in results))


def run_two_tier(cfg: PipelineConfig) -> PipelineReport:
    """Train both tiers on every snapshot in ``cfg`` and return the aggregate report."""
    return run_pipeline(cfg).report


# ---------------- serialisation ----------------


class AccuracyPayload(TypedDict):
    """Serialised :class:`AccuracyPoint`."""

    tau: float
    validation: float
    test: float


class RecordPayload(TypedDict):
    """Serialised :class:`TrainRecord`."""

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


class TracePayload(TypedDict):
    """Serialised :class:`TrainTrace`."""

    stop_reason: str
    final_mu: float
    records: list[RecordPayload]


class SnapshotPayload(TypedDict):
    """Serialised :class:`SnapshotReport`."""

    label: str
    sizes: dict[str, int]
    stop_reason: str
    final_mu: float
    epochs_run: int
    validation_accuracy: float
    test_accuracy: float
    bracket: list[AccuracyPayload]
    hit_map: list[list[int]]
    planes: dict[str, list[list[float]]]
    peaks: list[int]
    quantization_error: float
    diagnostics: SnapshotDiagnostics
    trace: TracePayload


class ReportPayload(TypedDict):
    """Top-level report document."""

    schema_version: int
    tau: float
    mean_validation_accuracy: float
    mean_test_accuracy: float
    bracket: list[AccuracyPayload]
    reference_accuracy: float
    snapshots: list[SnapshotPayload]


def _accuracy_payload(point: AccuracyPoint) -> AccuracyPayload:
    return AccuracyPayload(tau=point.tau, validation=point.validation, test=point.test)


def _record_payload(record: TrainRecord) -> RecordPayload:
    return RecordPayload(
        epoch=record.epoch,
        mu=record.mu,
        data_error=record.data_error,
        weight_error=record.weight_error,
        objective=record.objective,
        objective_start=record.objective_start,
        alpha=record.alpha,
        beta=record.beta,
        gamma=record.gamma,
        gradient_norm=record.gradient_norm,
        validation_error=record.validation_error,
        accepted=record.accepted,
    )


def _snapshot_payload(snap: SnapshotReport) -> SnapshotPayload:
    train, validation, test = snap.sizes
    return SnapshotPayload(
        label=snap.label,
        sizes={"train": train, "validation": validation, "test": test},
        stop_reason=snap.stop_reason,
        final_mu=snap.final_mu,
        epochs_run=snap.epochs_run,
        validation_accuracy=snap.validation_accuracy,
        test_accuracy=snap.test_accuracy,
        bracket=[_accuracy_payload(point) for point in snap.bracket],
        hit_map=[list(row) for row in snap.hit_map],
        planes={axis: [list(row) for row in plane] for axis, plane in zip(PLANE_AXES, snap.planes, strict=True)},
        peaks=list(snap.peaks),
        quantization_error=snap.quantization_error,
        diagnostics=snap.diagnostics,
        trace=TracePayload(
            stop_reason=snap.trace.stop_reason,
            final_mu=snap.trace.final_mu,
            records=[_record_payload(record) for record in snap.trace.records],
        ),
    )


def _report_body(report: PipelineReport) -> ReportPayload:
    return ReportPayload(
        schema_version=REPORT_SCHEMA_VERSION,
        tau=report.tau,
        mean_validation_accuracy=report.mean_validation_accuracy,
        mean_test_accuracy=report.mean_test_accuracy,
        bracket=[_accuracy_payload(point) for point in report.bracket],
        reference_accuracy=report.reference_accuracy,
        snapshots=[_snapshot_payload(snap) for snap in report.snapshots],
    )


def write_report(report: PipelineReport, path: str | Path) -> None:
    """Write ``report`` as sorted, indented JSON with a content fingerprint."""
    body: dict[str, object] = dict(_report_body(report))
    body["fingerprint"] = payload_fingerprint(body)
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _get(data: object, key: str, where: str) -> Any:
    if not isinstance(data, dict):
        raise ReportFormatError(f"'{where or 'report'}' must be a JSON object.")
    if key not in data:
        raise ReportFormatError(f"Missing required key '{f'{where}.{key}' if where else key}'.")
    return data[key]


def _float(data: object, key: str, where: str) -> float:
    value = _get(data, key, where)
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ReportFormatError(f"Key '{where}.{key}' must be a number, got {value!r}.")
    return float(value)


def _int(data: object, key: str, where: str) -> int:
    value = _get(data, key, where)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ReportFormatError(f"Key '{where}.{key}' must be an integer, got {value!r}.")
    return value


def _list(data: object, key: str, where: str) -> list[Any]:
    value = _get(data, key, where)
    if not isinstance(value, list):
        raise ReportFormatError(f"Key '{where}.{key}' must be a list.")
    return value


def _accuracy_from(data: object, where: str) -> AccuracyPoint:
    return AccuracyPoint(
        tau=_float(data, "tau", where),
        validation=_float(data, "validation", where),
        test=_float(data, "test", where),
    )


def _record_from(data: object, where: str) -> TrainRecord:
    validation_error = _get(data, "validation_error", where)
    accepted = _get(data, "accepted", where)
    if not isinstance(accepted, bool):
        raise ReportFormatError(f"Key '{where}.accepted' must be a boolean.")
    return TrainRecord(
        epoch=_int(data, "epoch", where),
        mu=_float(data, "mu", where),
        data_error=_float(data, "data_error", where),
        weight_error=_float(data, "weight_error", where),
        objective=_float(data, "objective", where),
        objective_start=_float(data, "objective_start", where),
        alpha=_float(data, "alpha", where),
        beta=_float(data, "beta", where),
        gamma=_float(data, "gamma", where),
        gradient_norm=_float(data, "gradient_norm", where),
        validation_error=None if validation_error is None else _float(data, "validation_error", where),
        accepted=accepted,
    )


def _stop_reason(value: object, where: str) -> StopReason:
    for reason in _STOP_REASONS:
        if value == reason:
            return reason
    raise ReportFormatError(f"Key '{where}' has unknown stop reason {value!r}.")


def _snapshot_from(data: object, where: str) -> SnapshotReport:
    sizes = _get(data, "sizes", where)
    trace_data = _get(data, "trace", where)
    planes_data = _get(data, "planes", where)
    diagnostics = _get(data, "diagnostics", where)
    for key in SnapshotDiagnostics.__required_keys__:
        _get(diagnostics, key, f"{where}.diagnostics")
    label = _get(data, "label", where)
    if not isinstance(label, str):
        raise ReportFormatError(f"Key '{where}.label' must be a string.")
    trace_where = f"{where}.trace"
    trace = TrainTrace(
        records=tuple(
            _record_from(record, f"{trace_where}.records[{i}]")
            for i, record in enumerate(_list(trace_data, "records", trace_where))
        ),
        stop_reason=_stop_reason(_get(trace_data, "stop_reason", trace_where), f"{trace_where}.stop_reason"),
        final_mu=_float(trace_data, "final_mu", trace_where),
    )
    return SnapshotReport(
        label=label,
        sizes=(
            _int(sizes, "train", f"{where}.sizes"),
            _int(sizes, "validation", f"{where}.sizes"),
            _int(sizes, "test", f"{where}.sizes"),
        ),
        stop_reason=_stop_reason(_get(data, "stop_reason", where), f"{where}.stop_reason"),
        final_mu=_float(data, "final_mu", where),
        epochs_run=_int(data, "epochs_run", where),
        validation_accuracy=_float(data, "validation_accuracy", where),
        test_accuracy=_float(data, "test_accuracy", where),
        bracket=tuple(_accuracy_from(point, f"{where}.bracket[{i}]") for i, point in enumerate(_list(data, "bracket", where))),
        hit_map=tuple(tuple(int(x) for x in row) for row in _list(data, "hit_map", where)),
        planes=tuple(
            tuple(tuple(float(x) for x in row) for row in _list(planes_data, axis, f"{where}.planes")) for axis in PLANE_AXES
        ),
        peaks=tuple(int(x) for x in _list(data, "peaks", where)),
        quantization_error=_float(data, "quantization_error", where),
        diagnostics=cast(SnapshotDiagnostics, diagnostics),
        trace=trace,
    )


def report_from_payload(data: object) -> PipelineReport:
    """Rebuild a report from its parsed JSON document."""
    version = _int(data, "schema_version", "")
    if version != REPORT_SCHEMA_VERSION:
        raise ReportFormatError(f"Unsupported report schema_version {version}; expected {REPORT_SCHEMA_VERSION}.")
    return PipelineReport(
        snapshots=tuple(_snapshot_from(snap, f"snapshots[{i}]") for i, snap in enumerate(_list(data, "snapshots", ""))),
        tau=_float(data, "tau", ""),
        mean_validation_accuracy=_float(data, "mean_validation_accuracy", ""),
        mean_test_accuracy=_float(data, "mean_test_accuracy", ""),
        bracket=tuple(_accuracy_from(point, f"bracket[{i}]") for i, point in enumerate(_list(data, "bracket", ""))),
        reference_accuracy=_float(data, "reference_accuracy", ""),
    )


def read_report(path: str | Path) -> PipelineReport:
    """Parse a report written by :func:`write_report`.

    Raises:
        ReportFormatError: On malformed JSON (with line and column), missing keys or a fingerprint mismatch.
    """
    source = Path(path)
    try:
        data = json.loads(source.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ReportFormatError(f"{source}: line {err.lineno} column {err.colno}: {err.msg}") from err
    report = report_from_payload(data)
    recorded = data.get("fingerprint") if isinstance(data, dict) else None
    if recorded is not None and recorded != report.fingerprint:
        raise ReportFormatError(f"{source}: fingerprint {recorded!r} does not match content ({report.fingerprint}).")
    return report


def write_outputs(report: PipelineReport, out_dir: str | Path, models: Sequence[TrainedSnapshot] = ()) -> Path:
    """Write ``report.json`` plus per-snapshot graymaps, CSV matrices and model files.

    A single snapshot writes directly into ``out_dir``; several write into ``snap_<i>/``
    subdirectories. Returns the report path.
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    single = len(report.snapshots) == 1
    for index, snap in enumerate(report.snapshots):
        target = root if single else root / f"snap_{index}"
        target.mkdir(parents=True, exist_ok=True)
        render_pgm(snap.hit_map, target / f"{HITMAP_STEM}.pgm")
        write_matrix_csv(snap.hit_map, target / f"{HITMAP_STEM}.csv")
        for axis, plane in zip(PLANE_AXES, snap.planes, strict=True):
            render_pgm(plane, target / f"{PLANE_STEM}_{axis}.pgm")
            write_matrix_csv(plane, target / f"{PLANE_STEM}_{axis}.csv")
        if index < len(models):
            save_mlp(target / MODEL_FILE, models[index].model, normalizer=models[index].normalizer)
    report_path = root / REPORT_FILE
    write_report(report, report_path)
    LOGGER.debug("Wrote outputs for %s snapshot(s) to %s", len(report.snapshots), root)
    return report_path
