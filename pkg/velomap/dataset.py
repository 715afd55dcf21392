"""Supervised samples built from snapshots: deterministic 70/15/15 split, z-score normalisation, high-Re focus."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from .const import (
    DEFAULT_SPLIT_RATIOS,
    INPUT_DIM,
    MIN_SPLIT_SAMPLES,
    SPLIT_FLOOR_EPSILON,
    TARGET_DIM,
)
from .field import FloatArray, FlowSnapshot, ScalarGridField

type IndexArray = NDArray[np.int64]
type PartitionName = Literal["train", "validation", "test"]

LOGGER = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


class DatasetError(ValueError):
    """Raised when samples, partitions or filters are inconsistent."""


def _readonly[T: np.generic](array: NDArray[T]) -> NDArray[T]:
    array = np.array(array, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, slots=True)
class Sample:
    """One grid node: ``input = (x, y, z, re, pr, T, p)``, ``target = (u, v, w)``."""

    input: tuple[float, ...]
    target: tuple[float, ...]


class SplitMix64:
    """64-bit SplitMix sequence; fully specified by its seed."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        """Start the sequence at ``seed`` (taken modulo 2**64)."""
        self._state = seed & _MASK64

    def next(self) -> int:
        """Return the next 64-bit output."""
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def shuffled_indices(n: int, seed: int) -> list[int]:
    """Fisher-Yates shuffle of ``0..n-1`` driven by :class:`SplitMix64`."""
    order = list(range(n))
    generator = SplitMix64(seed)
    for i in range(n - 1, 0, -1):
        j = generator.next() % (i + 1)
        order[i], order[j] = order[j], order[i]
    return order


@dataclass(frozen=True, slots=True, eq=False)
class Partition:
    """Disjoint train/validation/test index arrays."""

    train: IndexArray
    validation: IndexArray
    test: IndexArray

    def __post_init__(self) -> None:
        """Freeze the index arrays."""
        for name in ("train", "validation", "test"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name), dtype=np.int64)))

    @property
    def sizes(self) -> tuple[int, int, int]:
        """Partition sizes ``(train, validation, test)``."""
        return (len(self.train), len(self.validation), len(self.test))

    def indices(self, name: PartitionName) -> IndexArray:
        """Index array of one partition by name."""
        if name == "train":
            return self.train
        if name == "validation":
            return self.validation
        return self.test


def split_sizes(n: int, ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS) -> tuple[int, int, int]:
    """Return ``(floor(r0*n), floor(r1*n), remainder)``."""
    if n < MIN_SPLIT_SAMPLES:
        raise DatasetError(f"Cannot split {n} samples; at least {MIN_SPLIT_SAMPLES} are required.")
    if len(ratios) != 3 or any(ratio < 0 for ratio in ratios) or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise DatasetError(f"Split ratios {ratios!r} must be three non-negative values summing to 1.")
    train = math.floor(ratios[0] * n + SPLIT_FLOOR_EPSILON)
    validation = math.floor(ratios[1] * n + SPLIT_FLOOR_EPSILON)
    return train, validation, n - train - validation


def split(n: int, seed: int, ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS) -> Partition:
    """Deterministically shuffle ``0..n-1`` and cut it into train/validation/test."""
    n_train, n_validation, _ = split_sizes(n, ratios)
    order = shuffled_indices(n, seed)
    return Partition(
        train=np.array(order[:n_train], dtype=np.int64),
        validation=np.array(order[n_train : n_train + n_validation], dtype=np.int64),
        test=np.array(order[n_train + n_validation :], dtype=np.int64),
    )


@dataclass(frozen=True, slots=True, eq=False)
class Normalizer:
    """Per-input-dimension z-score statistics."""

    mean: FloatArray
    std: FloatArray

    def __post_init__(self) -> None:
        """Freeze the statistics and check deviations are positive."""
        object.__setattr__(self, "mean", _readonly(np.asarray(self.mean, dtype=np.float64)))
        object.__setattr__(self, "std", _readonly(np.asarray(self.std, dtype=np.float64)))
        if self.mean.shape != self.std.shape or not np.all(self.std > 0):
            raise DatasetError("Normalizer needs matching shapes and strictly positive deviations.")

    @classmethod
    def fit(cls, values: FloatArray) -> Normalizer:
        """Fit on rows of ``values``; constant columns get deviation 1 and their exact value as mean."""
        if len(values) == 0:
            raise DatasetError("Cannot fit a normalizer on zero samples.")
        mean = values.mean(axis=0)
        std = values.std(axis=0)
        constant = np.ptp(values, axis=0) == 0
        mean = np.where(constant, values[0], mean)
        std = np.where(constant | (std == 0), 1.0, std)
        return cls(mean=mean, std=std)

    def apply(self, values: FloatArray) -> FloatArray:
        """Map raw inputs to z-scores."""
        return np.asarray((values - self.mean) / self.std)

    def invert(self, values: FloatArray) -> FloatArray:
        """Map z-scores back to raw inputs."""
        return np.asarray(values * self.std + self.mean)


@dataclass(frozen=True, slots=True, eq=False)
class SampleSet:
    """Flattened samples with their partition and (once fitted) input normalizer.

    ``node_index`` maps each sample back to its grid node in canonical order, which
    is what the high-Re filter and the SOM feature lookup use.
    """

    inputs: FloatArray
    targets: FloatArray
    node_index: IndexArray
    partition: Partition
    seed: int
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS
    normalizer: Normalizer | None = None

    def __post_init__(self) -> None:
        """Freeze arrays and check the partition covers every sample exactly once."""
        object.__setattr__(self, "inputs", _readonly(np.asarray(self.inputs, dtype=np.float64)))
        object.__setattr__(self, "targets", _readonly(np.asarray(self.targets, dtype=np.float64)))
        object.__setattr__(self, "node_index", _readonly(np.asarray(self.node_index, dtype=np.int64)))
        n = len(self.inputs)
        if self.inputs.ndim != 2 or self.targets.ndim != 2 or len(self.targets) != n or self.node_index.shape != (n,):
            raise DatasetError(
                f"Sample arrays disagree: inputs {self.inputs.shape}, targets {self.targets.shape}, "
                f"nodes {self.node_index.shape}."
            )
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise DatasetError("Samples contain non-finite entries.")
        covered = np.concatenate([self.partition.train, self.partition.validation, self.partition.test])
        if len(covered) != n or not np.array_equal(np.sort(covered), np.arange(n)):
            raise DatasetError(f"Partition does not cover the {n} samples exactly once.")

    def __len__(self) -> int:
        """Number of retained samples."""
        return len(self.inputs)

    def __getitem__(self, index: int) -> Sample:
        """Sample ``index`` as a tuple pair."""
        return Sample(tuple(float(x) for x in self.inputs[index]), tuple(float(x) for x in self.targets[index]))

    def partition_arrays(self, name: PartitionName) -> tuple[FloatArray, FloatArray]:
        """Return ``(inputs, targets)`` restricted to one partition."""
        rows = self.partition.indices(name)
        return self.inputs[rows], self.targets[rows]


def sample_arrays(s: FlowSnapshot) -> tuple[FloatArray, FloatArray]:
    """Input ``(x, y, z, re, pr, T, p)`` and target ``(u, v, w)`` rows for every node, x fastest."""
    grid = s.grid
    x, y, z = (grid.flatten(axis) for axis in grid.coordinates())
    ones = np.ones(grid.size)
    inputs = np.column_stack([x, y, z, s.re * ones, s.pr * ones, grid.flatten(s.t_field), grid.flatten(s.p)])
    targets = np.column_stack([grid.flatten(s.u), grid.flatten(s.v), grid.flatten(s.w)])
    return inputs, targets


def build_samples(s: FlowSnapshot) -> list[Sample]:
    """One sample per node in canonical x-fastest order."""
    inputs, targets = sample_arrays(s)
    return [
        Sample(tuple(float(x) for x in row_in), tuple(float(x) for x in row_out))
        for row_in, row_out in zip(inputs, targets, strict=True)
    ]


def make_sample_set(
    samples: Sequence[Sample],
    *,
    seed: int,
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
) -> SampleSet:
    """Pack samples into a :class:`SampleSet` and split it with ``seed``."""
    n = len(samples)
    for index, sample in enumerate(samples):
        if len(sample.input) != INPUT_DIM or len(sample.target) != TARGET_DIM:
            raise DatasetError(
                f"Sample {index} has {len(sample.input)} inputs and {len(sample.target)} targets, "
                f"expected {INPUT_DIM} and {TARGET_DIM}."
            )
    return SampleSet(
        inputs=np.array([sample.input for sample in samples], dtype=np.float64).reshape(n, INPUT_DIM),
        targets=np.array([sample.target for sample in samples], dtype=np.float64).reshape(n, TARGET_DIM),
        node_index=np.arange(n, dtype=np.int64),
        partition=split(n, seed, ratios),
        seed=seed,
        ratios=ratios,
    )


def sample_set_from_snapshot(
    s: FlowSnapshot,
    *,
    seed: int,
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
) -> SampleSet:
    """Build the samples of ``s`` and their partition without per-sample objects."""
    inputs, targets = sample_arrays(s)
    partition = split(len(inputs), seed, ratios)
    LOGGER.debug("Built %s samples, partition sizes %s (seed=%s)", len(inputs), partition.sizes, seed)
    return SampleSet(
        inputs=inputs,
        targets=targets,
        node_index=np.arange(len(inputs), dtype=np.int64),
        partition=partition,
        seed=seed,
        ratios=ratios,
    )


def fit_and_apply_normalizer(sample_set: SampleSet) -> SampleSet:
    """Fit z-score statistics on the training partition only and apply them to every input."""
    if sample_set.normalizer is not None:
        raise DatasetError("Sample set is already normalized.")
    train_inputs, _ = sample_set.partition_arrays("train")
    if len(train_inputs) == 0:
        raise DatasetError("Training partition is empty; cannot fit normalizer.")
    normalizer = Normalizer.fit(train_inputs)
    return replace(sample_set, inputs=normalizer.apply(sample_set.inputs), normalizer=normalizer)


def filter_high_re(sample_set: SampleSet, feature: ScalarGridField, keep_fraction: float) -> SampleSet:
    """Keep the ``ceil(keep_fraction * n)`` samples with the largest feature values.

    Ties go to the lower sample index, retained samples keep their original order, and
    the partition is recomputed on the retained set with the original seed.
    """
    if not 0 < keep_fraction <= 1:
        raise DatasetError(f"keep_fraction={keep_fraction!r} must lie in (0, 1].")
    if sample_set.normalizer is not None:
        raise DatasetError("Filter before normalizing; the normalizer would be fitted on dropped samples.")
    values = feature.flat()
    if len(sample_set) and int(sample_set.node_index.max()) >= len(values):
        raise DatasetError("Feature field does not match the grid the samples were built from.")
    n = len(sample_set)
    keep = math.ceil(keep_fraction * n - SPLIT_FLOOR_EPSILON)
    if keep < MIN_SPLIT_SAMPLES:
        raise DatasetError(
            f"keep_fraction={keep_fraction!r} retains {keep} of {n} samples; at least {MIN_SPLIT_SAMPLES} are needed to split."
        )
    per_sample = values[sample_set.node_index]
    ranked = np.argsort(-per_sample, kind="stable")
    retained = np.sort(ranked[:keep])
    LOGGER.debug("High-Re filter kept %s of %s samples (keep_fraction=%s)", keep, n, keep_fraction)
    return SampleSet(
        inputs=sample_set.inputs[retained],
        targets=sample_set.targets[retained],
        node_index=sample_set.node_index[retained],
        partition=split(keep, sample_set.seed, sample_set.ratios),
        seed=sample_set.seed,
        ratios=sample_set.ratios,
    )
