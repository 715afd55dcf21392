"""Matrix export: ASCII graymaps and comma-separated matrices."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .const import PGM_MAXVAL
from .field import FloatArray

LOGGER = logging.getLogger(__name__)

_CSV_FORMAT = "%.17g"


class RenderError(OSError):
    """Raised when an output or input file cannot be accessed."""

    def __init__(self, message: str, *, path: Path) -> None:
        """Attach the path that failed."""
        super().__init__(f"{path}: {message}")
        self.path = path


def _matrix(values: ArrayLike) -> FloatArray:
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim != 2 or matrix.size == 0:
        raise ValueError(f"Expected a non-empty 2-D matrix, got shape {matrix.shape}.")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("Matrix contains non-finite entries.")
    return matrix


def to_pixels(values: ArrayLike) -> NDArray[np.int64]:
    """Map ``min -> 0`` and ``max -> 255`` linearly with rounding; a constant matrix maps to all zeros."""
    matrix = _matrix(values)
    low, high = float(matrix.min()), float(matrix.max())
    if high == low:
        return np.zeros(matrix.shape, dtype=np.int64)
    return np.rint(PGM_MAXVAL * (matrix - low) / (high - low)).astype(np.int64)


def render_pgm(matrix: ArrayLike, path: str | Path) -> None:
    """Write ``matrix`` as a ``P2`` graymap, one matrix row per image row.

    Raises:
        ValueError: When the matrix is empty, not 2-D or not finite.
        RenderError: When the file cannot be written.
    """
    pixels = to_pixels(matrix)
    rows, cols = pixels.shape
    lines = ["P2", f"{cols} {rows}", str(PGM_MAXVAL)]
    lines.extend(" ".join(str(int(value)) for value in row) for row in pixels)
    target = Path(path)
    try:
        target.write_bytes(("\n".join(lines) + "\n").encode("ascii"))
    except OSError as err:
        raise RenderError(f"cannot write graymap: {err.strerror or err}", path=target) from err
    LOGGER.debug("Rendered %sx%s graymap to %s", rows, cols, target)


def write_matrix_csv(matrix: ArrayLike, path: str | Path) -> None:
    """Write ``matrix`` row-major, one row per line, full float precision."""
    values = _matrix(matrix)
    target = Path(path)
    try:
        np.savetxt(target, values, fmt=_CSV_FORMAT, delimiter=",")
    except OSError as err:
        raise RenderError(f"cannot write matrix: {err.strerror or err}", path=target) from err


def read_matrix_csv(path: str | Path) -> FloatArray:
    """Read a matrix written by :func:`write_matrix_csv` (or any rectangular numeric CSV)."""
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as err:
        raise RenderError(f"cannot read matrix: {err.strerror or err}", path=source) from err
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise ValueError(f"{source}: matrix file is empty.")
    width = len(rows[0].split(","))
    values: list[list[float]] = []
    for number, row in enumerate(rows, start=1):
        cells = row.split(",")
        if len(cells) != width:
            raise ValueError(f"{source}: line {number} has {len(cells)} columns, expected {width}.")
        try:
            values.append([float(cell) for cell in cells])
        except ValueError as err:
            raise ValueError(f"{source}: line {number}: {err}") from err
    return _matrix(values)
