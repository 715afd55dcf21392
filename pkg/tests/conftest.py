from __future__ import annotations

import numpy as np
import pytest

from velomap.dataset import SampleSet, split
from velomap.field import FlowSnapshot, Grid3, SnapshotSpec, abc_snapshot, random_solenoidal_snapshot, taylor_green_snapshot
from velomap.mlp import TrainConfig
from velomap.pipeline import PipelineConfig
from velomap.som import SomConfig


@pytest.fixture
def grid16() -> Grid3:
    return Grid3.cube(16)


@pytest.fixture
def tg16(grid16: Grid3) -> FlowSnapshot:
    return taylor_green_snapshot(grid16, re=100.0, pr=0.7)


@pytest.fixture
def abc16(grid16: Grid3) -> FlowSnapshot:
    return abc_snapshot(grid16, 1.0, 1.0, 1.0, re=1.0, pr=0.7)


@pytest.fixture
def random8() -> FlowSnapshot:
    return random_solenoidal_snapshot(Grid3.cube(8), seed=3, amplitude=1.0, re=100.0, pr=0.7)


def make_set(inputs: np.ndarray, targets: np.ndarray, seed: int = 0) -> SampleSet:
    n = len(inputs)
    return SampleSet(
        inputs=inputs,
        targets=targets,
        node_index=np.arange(n, dtype=np.int64),
        partition=split(n, seed),
        seed=seed,
    )


@pytest.fixture
def tiny_pipeline_config() -> PipelineConfig:
    return PipelineConfig(
        snapshots=(SnapshotSpec(kind="tg", n=4),),
        mlp=TrainConfig(max_epochs=5, hidden_layers=(4,)),
        som=SomConfig(epochs=2),
        som_rows=3,
        som_cols=3,
    )
