"""Tier-2 Kohonen self-organizing map over predicted velocity plus a turbulence feature.

Nodes sit on a ``rows x cols`` lattice indexed row-major (``index = r * cols + c``).
Learning rate and neighbourhood width both decay exponentially from their initial
to their final values over the training epochs.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .const import DEFAULT_ETA0, DEFAULT_ETA_F, DEFAULT_PEAKS, DEFAULT_SIGMA_F, DEFAULT_SOM_EPOCHS, DEFAULT_SOM_SEED
from .field import FloatArray

LOGGER = logging.getLogger(__name__)


class SomError(ValueError):
    """Raised on invalid lattice dimensions, data shapes or component indices."""


@dataclass(frozen=True, slots=True, eq=False)
class SomLattice:
    """Node weight vectors of a rectangular map; ``weights`` has shape ``(rows * cols, dim)``."""

    rows: int
    cols: int
    dim: int
    weights: FloatArray

    def __post_init__(self) -> None:
        """Validate dimensions and freeze the weight matrix."""
        if self.rows < 1 or self.cols < 1 or self.dim < 1:
            raise SomError(f"Lattice {self.rows}x{self.cols} with dim={self.dim} needs positive sizes.")
        weights = np.array(self.weights, dtype=np.float64)
        if weights.shape != (self.rows * self.cols, self.dim):
            raise SomError(f"Weights of shape {weights.shape} do not fit a {self.rows}x{self.cols} lattice of dim {self.dim}.")
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)

    @property
    def n_nodes(self) -> int:
        """Number of lattice nodes."""
        return self.rows * self.cols

    def position(self, index: int) -> tuple[int, int]:
        """Lattice ``(row, col)`` of node ``index``."""
        return divmod(index, self.cols)

    def positions(self) -> NDArray[np.int64]:
        """``(n_nodes, 2)`` array of node lattice coordinates."""
        index = np.arange(self.n_nodes)
        return np.column_stack([index // self.cols, index % self.cols]).astype(np.int64)


@dataclass(frozen=True, slots=True)
class SomConfig:
    """Training schedule; ``sigma0=None`` means ``max(rows, cols) / 2``."""

    epochs: int = DEFAULT_SOM_EPOCHS
    eta0: float = DEFAULT_ETA0
    eta_f: float = DEFAULT_ETA_F
    sigma0: float | None = None
    sigma_f: float = DEFAULT_SIGMA_F
    seed: int = DEFAULT_SOM_SEED

    def __post_init__(self) -> None:
        """Check the decay schedule is well defined."""
        if self.epochs < 1:
            raise SomError(f"epochs={self.epochs} must be at least 1.")
        if not (self.eta0 > 0 and self.eta_f > 0 and self.sigma_f > 0):
            raise SomError("eta0, eta_f and sigma_f must be positive.")
        if not self.eta_f <= self.eta0 <= 1:
            raise SomError(f"Learning rates must satisfy eta_f <= eta0 <= 1, got eta0={self.eta0}, eta_f={self.eta_f}.")
        if self.sigma0 is not None and self.sigma0 < self.sigma_f:
            raise SomError(f"sigma0={self.sigma0} must be at least sigma_f={self.sigma_f}.")


def _as_data(data: FloatArray, dim: int | None = None) -> FloatArray:
    array = np.asarray(data, dtype=np.float64)
    if array.ndim != 2:
        raise SomError(f"Data must be a 2-D array of vectors, got shape {array.shape}.")
    if dim is not None and array.shape[1] != dim:
        raise SomError(f"Data vectors have dimension {array.shape[1]}, lattice expects {dim}.")
    return array


def init_som(rows: int, cols: int, dim: int, data: FloatArray, seed: int) -> SomLattice:
    """Draw every node uniformly inside the per-component bounding box of ``data``."""
    vectors = _as_data(data, dim)
    if len(vectors) == 0:
        raise SomError("Cannot initialise a map from empty data.")
    rng = np.random.default_rng(seed)
    low, high = vectors.min(axis=0), vectors.max(axis=0)
    weights = low + rng.random((rows * cols, dim)) * (high - low)
    return SomLattice(rows, cols, dim, weights)


def find_bmu(som: SomLattice, x: FloatArray) -> int:
    """Index of the node nearest to ``x``; ties go to the lowest index."""
    vector = np.asarray(x, dtype=np.float64)
    if vector.shape != (som.dim,):
        raise SomError(f"Vector of shape {vector.shape} does not match lattice dim {som.dim}.")
    return int(np.argmin(np.sum((som.weights - vector) ** 2, axis=1)))


def bmu_indices(som: SomLattice, data: FloatArray) -> NDArray[np.int64]:
    """Best-matching unit for each row of ``data``."""
    vectors = _as_data(data, som.dim)
    distances = np.sum((vectors[:, None, :] - som.weights[None, :, :]) ** 2, axis=2)
    return np.argmin(distances, axis=1).astype(np.int64)


def neighborhood_weight(d: float, sigma: float) -> float:
    """Gaussian neighbourhood ``exp(-d^2 / (2 sigma^2))``."""
    if sigma <= 0:
        raise SomError(f"sigma={sigma} must be positive.")
    return math.exp(-(d * d) / (2.0 * sigma * sigma))


def decay(initial: float, final: float, t: int, total: int) -> float:
    """Exponential schedule from ``initial`` at ``t=0`` towards ``final`` at ``t=total``."""
    return float(initial * (final / initial) ** (t / total))


def train_som(som: SomLattice, data: FloatArray, cfg: SomConfig) -> SomLattice:
    """Sequential Kohonen training; each epoch presents ``data`` in a seeded permutation."""
    vectors = _as_data(data, som.dim)
    if len(vectors) == 0:
        raise SomError("Cannot train a map on empty data.")
    sigma0 = cfg.sigma0 if cfg.sigma0 is not None else max(som.rows, som.cols) / 2.0
    if sigma0 < cfg.sigma_f:
        raise SomError(f"Lattice default sigma0={sigma0} is below sigma_f={cfg.sigma_f}; set sigma0 explicitly.")
    rng = np.random.default_rng(cfg.seed)
    positions = som.positions().astype(np.float64)
    weights = np.array(som.weights)

    started = time.monotonic()
    for epoch in range(cfg.epochs):
        eta = decay(cfg.eta0, cfg.eta_f, epoch, cfg.epochs)
        sigma = decay(sigma0, cfg.sigma_f, epoch, cfg.epochs)
        for sample in rng.permutation(len(vectors)):
            x = vectors[sample]
            bmu = int(np.argmin(np.sum((weights - x) ** 2, axis=1)))
            lattice_sq = np.sum((positions - positions[bmu]) ** 2, axis=1)
            influence = eta * np.exp(-lattice_sq / (2.0 * sigma * sigma))
            weights += influence[:, None] * (x - weights)
        LOGGER.debug("SOM epoch %s: eta=%.4g sigma=%.4g", epoch, eta, sigma)

    LOGGER.info(
        "Trained %sx%s SOM on %s vectors in %.3fs (epochs=%s)",
        som.rows,
        som.cols,
        len(vectors),
        time.monotonic() - started,
        cfg.epochs,
    )
    return SomLattice(som.rows, som.cols, som.dim, weights)


def hit_map(som: SomLattice, data: FloatArray) -> NDArray[np.int64]:
    """Count of data vectors won by each node, shaped ``(rows, cols)``."""
    hits = np.bincount(bmu_indices(som, data), minlength=som.n_nodes)
    return hits.reshape(som.rows, som.cols).astype(np.int64)


def component_plane(som: SomLattice, c: int) -> FloatArray:
    """Weight component ``c`` of every node, shaped ``(rows, cols)``."""
    if not 0 <= c < som.dim:
        raise SomError(f"Component {c} is out of range for dim {som.dim}.")
    return np.array(som.weights[:, c].reshape(som.rows, som.cols))


def feature_scores(som: SomLattice, data: FloatArray, feature: FloatArray) -> FloatArray:
    """Sum of the feature values of the vectors each node wins."""
    values = np.asarray(feature, dtype=np.float64).reshape(-1)
    winners = bmu_indices(som, data)
    if len(values) != len(winners):
        raise SomError(f"Got {len(values)} feature values for {len(winners)} data vectors.")
    return np.bincount(winners, weights=values, minlength=som.n_nodes).astype(np.float64)


def feature_peaks(som: SomLattice, data: FloatArray, feature: FloatArray, k: int = DEFAULT_PEAKS) -> list[int]:
    """Row-major indices of the ``k`` highest-scoring nodes, best first, ties by node index."""
    if k < 1:
        raise SomError(f"k={k} must be at least 1.")
    scores = feature_scores(som, data, feature)
    order = np.lexsort((np.arange(som.n_nodes), -scores))
    return [int(index) for index in order[: min(k, som.n_nodes)]]


def quantization_error(som: SomLattice, data: FloatArray) -> float:
    """Mean Euclidean distance from each vector to its best-matching unit."""
    vectors = _as_data(data, som.dim)
    if len(vectors) == 0:
        raise SomError("Quantization error of empty data is undefined.")
    winners = bmu_indices(som, vectors)
    return float(np.mean(np.linalg.norm(vectors - som.weights[winners], axis=1)))
