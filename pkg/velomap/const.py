"""Constants for the velomap two-tier surrogate pipeline."""

from __future__ import annotations

import math
from typing import Final

TWO_PI: Final = 2.0 * math.pi

# Snapshot grids
MIN_NODES_PER_AXIS: Final = 4
DEFAULT_GRID_NODES: Final = 16
SNAPSHOT_FILE_MAGIC: Final = "#vfld 1"
FLOAT_FORMAT: Final = "{:.17g}"
MAX_POTENTIAL_MODES: Final = 8
MAX_POTENTIAL_WAVENUMBER: Final = 3

SNAPSHOT_KIND_TAYLOR_GREEN: Final = "tg"
SNAPSHOT_KIND_ABC: Final = "abc"
SNAPSHOT_KIND_RANDOM: Final = "rand"
SNAPSHOT_KINDS: Final[tuple[str, str, str]] = (SNAPSHOT_KIND_TAYLOR_GREEN, SNAPSHOT_KIND_ABC, SNAPSHOT_KIND_RANDOM)

# Samples: input (x, y, z, re, pr, T, p) -> target (u, v, w)
INPUT_NAMES: Final[tuple[str, ...]] = ("x", "y", "z", "re", "pr", "T", "p")
TARGET_NAMES: Final[tuple[str, ...]] = ("u", "v", "w")
INPUT_DIM: Final = len(INPUT_NAMES)
TARGET_DIM: Final = len(TARGET_NAMES)
DEFAULT_SPLIT_RATIOS: Final[tuple[float, float, float]] = (0.70, 0.15, 0.15)
SPLIT_FLOOR_EPSILON: Final = 1e-9
MIN_SPLIT_SAMPLES: Final = 3
DEFAULT_DATASET_SEED: Final = 0
DEFAULT_KEEP_FRACTION: Final = 1.0

# Levenberg-Marquardt with Bayesian regularization
MODEL_FILE_MAGIC: Final = "#mlp 1"
DEFAULT_HIDDEN_LAYERS: Final[tuple[int, ...]] = (10,)
MAX_HIDDEN_LAYERS: Final = 10
DEFAULT_MAX_EPOCHS: Final = 500
DEFAULT_MU0: Final = 1e-3
DEFAULT_MU_INC: Final = 10.0
DEFAULT_MU_DEC: Final = 0.1
DEFAULT_MU_MAX: Final = 1e10
MU_FLOOR: Final = 1e-20
DEFAULT_GRAD_TOL: Final = 1e-7
DEFAULT_ALPHA0: Final = 0.0
DEFAULT_BETA0: Final = 1.0
ALPHA_MAX: Final = 1e10
BETA_MIN: Final = 1e-10
BETA_MAX: Final = 1e10
DEFAULT_MLP_SEED: Final = 0

STOP_MAX_EPOCHS: Final = "MaxEpochs"
STOP_MU_EXCEEDED: Final = "MuExceeded"
STOP_GRADIENT_TOL: Final = "GradientTol"

# Self-organizing map
DEFAULT_SOM_ROWS: Final = 8
DEFAULT_SOM_COLS: Final = 8
DEFAULT_SOM_EPOCHS: Final = 20
DEFAULT_ETA0: Final = 0.5
DEFAULT_ETA_F: Final = 0.01
DEFAULT_SIGMA_F: Final = 0.5
DEFAULT_SOM_SEED: Final = 0
DEFAULT_PEAKS: Final = 3
PLANE_AXES: Final[tuple[str, str, str]] = ("x", "y", "z")

# Accuracy and reports
DEFAULT_TAU: Final = 0.10
DEFAULT_TAU_BRACKET: Final[tuple[float, ...]] = (0.05, 0.10, 0.25)
ACCURACY_FLOOR: Final = 1e-8
REFERENCE_ACCURACY: Final = 0.67
REPORT_SCHEMA_VERSION: Final = 1
REPRODUCTION_SNAPSHOTS: Final = 6
PGM_MAXVAL: Final = 255

REPORT_FILE: Final = "report.json"
MODEL_FILE: Final = "model.mlp"
HITMAP_STEM: Final = "hitmap"
PLANE_STEM: Final = "plane"

# CLI exit codes
EXIT_OK: Final = 0
EXIT_USAGE: Final = 1
EXIT_DATA: Final = 2
EXIT_NUMERICAL: Final = 3
