"""Periodic 3-D flow snapshots: grids, analytic and random generators, and the ``.vfld`` file format."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .const import (
    FLOAT_FORMAT,
    MAX_POTENTIAL_MODES,
    MAX_POTENTIAL_WAVENUMBER,
    MIN_NODES_PER_AXIS,
    SNAPSHOT_FILE_MAGIC,
    SNAPSHOT_KIND_ABC,
    SNAPSHOT_KIND_RANDOM,
    SNAPSHOT_KIND_TAYLOR_GREEN,
    TWO_PI,
)
from .stencil import curl_arrays

type FloatArray = NDArray[np.float64]
type SnapshotKind = Literal["tg", "abc", "rand"]

LOGGER = logging.getLogger(__name__)


class GridError(ValueError):
    """Raised when grid dimensions or lengths are invalid."""


class SnapshotError(ValueError):
    """Raised when snapshot arrays or physical parameters are invalid."""


class SnapshotFormatError(ValueError):
    """Raised when a ``.vfld`` file cannot be parsed."""

    def __init__(self, message: str, *, line: int) -> None:
        """Attach the offending 1-based line number to the message."""
        super().__init__(f"line {line}: {message}")
        self.line = line


def _frozen(values: ArrayLike, shape: tuple[int, int, int], name: str) -> FloatArray:
    array = np.array(values, dtype=np.float64)
    if array.shape != shape:
        if array.size != math.prod(shape):
            raise SnapshotError(f"Array '{name}' has {array.size} entries, expected {math.prod(shape)}.")
        array = array.reshape(shape, order="F")
    if not np.all(np.isfinite(array)):
        raise SnapshotError(f"Array '{name}' contains non-finite entries.")
    array.flags.writeable = False
    return array


@dataclass(frozen=True, slots=True)
class Grid3:
    """Uniform, fully periodic grid; node ``x_i = i * hx`` for ``i in [0, nx)``."""

    nx: int
    ny: int
    nz: int
    lx: float = TWO_PI
    ly: float = TWO_PI
    lz: float = TWO_PI

    def __post_init__(self) -> None:
        """Validate node counts and lengths."""
        for axis, count in zip("xyz", (self.nx, self.ny, self.nz), strict=True):
            if isinstance(count, bool) or not isinstance(count, int) or count < MIN_NODES_PER_AXIS:
                raise GridError(f"n{axis}={count!r} must be an integer >= {MIN_NODES_PER_AXIS}.")
        for axis, length in zip("xyz", (self.lx, self.ly, self.lz), strict=True):
            if not math.isfinite(length) or length <= 0:
                raise GridError(f"l{axis}={length!r} must be a positive finite length.")

    @classmethod
    def cube(cls, n: int, length: float = TWO_PI) -> Grid3:
        """Return an ``n`` x ``n`` x ``n`` grid on a cube of side ``length``."""
        return cls(n, n, n, length, length, length)

    @property
    def shape(self) -> tuple[int, int, int]:
        """Array shape, indexed ``[i, j, k]`` along x, y, z."""
        return (self.nx, self.ny, self.nz)

    @property
    def size(self) -> int:
        """Total node count."""
        return self.nx * self.ny * self.nz

    @property
    def spacing(self) -> tuple[float, float, float]:
        """Node spacing ``(hx, hy, hz)``."""
        return (self.lx / self.nx, self.ly / self.ny, self.lz / self.nz)

    @property
    def lengths(self) -> tuple[float, float, float]:
        """Domain lengths ``(lx, ly, lz)``."""
        return (self.lx, self.ly, self.lz)

    def coordinates(self) -> tuple[FloatArray, FloatArray, FloatArray]:
        """Return node coordinate arrays ``(x, y, z)``, each of grid shape."""
        hx, hy, hz = self.spacing
        axes = (np.arange(self.nx) * hx, np.arange(self.ny) * hy, np.arange(self.nz) * hz)
        x, y, z = np.meshgrid(*axes, indexing="ij")
        return x, y, z

    def flatten(self, values: FloatArray) -> FloatArray:
        """Flatten a grid-shaped array in canonical order (index = i + nx*(j + ny*k))."""
        return np.ravel(values, order="F")


@dataclass(frozen=True, slots=True, eq=False)
class ScalarGridField:
    """One real value per grid node."""

    grid: Grid3
    data: FloatArray

    def __post_init__(self) -> None:
        """Freeze and validate the payload."""
        object.__setattr__(self, "data", _frozen(self.data, self.grid.shape, "data"))

    def max_norm(self) -> float:
        """Largest absolute entry."""
        return float(np.max(np.abs(self.data)))

    def flat(self) -> FloatArray:
        """Values in canonical node order."""
        return self.grid.flatten(self.data)


@dataclass(frozen=True, slots=True, eq=False)
class VectorGridField:
    """Three real components per grid node."""

    grid: Grid3
    u: FloatArray
    v: FloatArray
    w: FloatArray

    def __post_init__(self) -> None:
        """Freeze and validate the components."""
        for name in ("u", "v", "w"):
            object.__setattr__(self, name, _frozen(getattr(self, name), self.grid.shape, name))

    @property
    def components(self) -> tuple[FloatArray, FloatArray, FloatArray]:
        """Components as a tuple ``(u, v, w)``."""
        return (self.u, self.v, self.w)

    def magnitude(self) -> FloatArray:
        """Pointwise Euclidean norm."""
        return np.sqrt(self.u**2 + self.v**2 + self.w**2)

    def max_norm(self) -> float:
        """Largest absolute component over all nodes."""
        return float(max(np.max(np.abs(component)) for component in self.components))


@dataclass(frozen=True, slots=True, eq=False)
class FlowSnapshot:
    """Steady flow state on a periodic grid plus its global Reynolds and Prandtl numbers."""

    grid: Grid3
    u: FloatArray
    v: FloatArray
    w: FloatArray
    p: FloatArray
    t_field: FloatArray
    re: float
    pr: float

    def __post_init__(self) -> None:
        """Freeze arrays and validate physical parameters."""
        for name in ("u", "v", "w", "p", "t_field"):
            object.__setattr__(self, name, _frozen(getattr(self, name), self.grid.shape, name))
        if not math.isfinite(self.re) or self.re <= 0:
            raise SnapshotError(f"Reynolds number {self.re!r} must be positive.")
        if not math.isfinite(self.pr) or self.pr <= 0:
            raise SnapshotError(f"Prandtl number {self.pr!r} must be positive.")

    @property
    def velocity(self) -> VectorGridField:
        """Velocity as a vector field."""
        return VectorGridField(self.grid, self.u, self.v, self.w)

    @property
    def pressure(self) -> ScalarGridField:
        """Pressure as a scalar field."""
        return ScalarGridField(self.grid, self.p)

    @property
    def temperature(self) -> ScalarGridField:
        """Temperature as a scalar field."""
        return ScalarGridField(self.grid, self.t_field)

    def same_as(self, other: FlowSnapshot, *, atol: float = 0.0) -> bool:
        """Return whether two snapshots agree entrywise within ``atol``."""
        if self.grid != other.grid or self.re != other.re or self.pr != other.pr:
            return False
        return all(
            np.allclose(getattr(self, name), getattr(other, name), rtol=0.0, atol=atol)
            for name in ("u", "v", "w", "p", "t_field")
        )


def _check_physics(re: float, pr: float) -> None:
    if not re > 0 or not pr > 0:
        raise SnapshotError(f"Reynolds ({re!r}) and Prandtl ({pr!r}) numbers must be positive.")


def _wave_temperature(grid: Grid3) -> FloatArray:
    x, y, z = grid.coordinates()
    return np.cos(TWO_PI * x / grid.lx) * np.cos(TWO_PI * y / grid.ly) * np.cos(TWO_PI * z / grid.lz)


def taylor_green_snapshot(grid: Grid3, re: float, pr: float) -> FlowSnapshot:
    """Build the analytically divergence-free Taylor-Green vortex on ``grid``."""
    _check_physics(re, pr)
    x, y, z = grid.coordinates()
    kx, ky = TWO_PI * x / grid.lx, TWO_PI * y / grid.ly
    return FlowSnapshot(
        grid=grid,
        u=np.cos(kx) * np.sin(ky),
        v=-np.sin(kx) * np.cos(ky),
        w=np.zeros(grid.shape),
        p=-0.25 * (np.cos(2.0 * kx) + np.cos(2.0 * ky)),
        t_field=_wave_temperature(grid),
        re=re,
        pr=pr,
    )


def abc_snapshot(grid: Grid3, a: float, b: float, c: float, re: float, pr: float) -> FlowSnapshot:
    """Build the Arnold-Beltrami-Childress flow; requires a 2*pi periodic cube.

    The pressure ``-|u|^2 / 2`` balances the convective term exactly, so the steady
    momentum residual reduces to the viscous term.
    """
    _check_physics(re, pr)
    if not all(math.isclose(length, TWO_PI, rel_tol=1e-12) for length in grid.lengths):
        raise GridError(f"ABC flow needs a 2*pi domain on every axis, got {grid.lengths}.")
    x, y, z = grid.coordinates()
    u = a * np.sin(z) + c * np.cos(y)
    v = b * np.sin(x) + a * np.cos(z)
    w = c * np.sin(y) + b * np.cos(x)
    return FlowSnapshot(
        grid=grid,
        u=u,
        v=v,
        w=w,
        p=-0.5 * (u**2 + v**2 + w**2),
        t_field=_wave_temperature(grid),
        re=re,
        pr=pr,
    )


def _random_mode(rng: np.random.Generator, grid: Grid3) -> FloatArray:
    x, y, z = grid.coordinates()
    k = np.zeros(3, dtype=np.int64)
    while not k.any():
        k = rng.integers(-MAX_POTENTIAL_WAVENUMBER, MAX_POTENTIAL_WAVENUMBER + 1, size=3)
    coefficient = rng.normal()
    phase = rng.uniform(0.0, TWO_PI)
    argument = TWO_PI * (k[0] * x / grid.lx + k[1] * y / grid.ly + k[2] * z / grid.lz) + phase
    return np.asarray(coefficient * np.cos(argument), dtype=np.float64)


def random_solenoidal_snapshot(grid: Grid3, seed: int, amplitude: float, re: float, pr: float) -> FlowSnapshot:
    """Build a smooth random divergence-free velocity as the discrete curl of a random potential.

    Each potential component is a sum of one to eight seeded Fourier modes; pressure and
    temperature are one random mode each. Central-difference operators along different
    axes commute, so the discrete divergence vanishes up to rounding.
    """
    _check_physics(re, pr)
    if not math.isfinite(amplitude) or amplitude < 0:
        raise SnapshotError(f"Amplitude {amplitude!r} must be non-negative.")
    rng = np.random.default_rng(seed)
    potential: list[FloatArray] = []
    for _ in range(3):
        modes = int(rng.integers(1, MAX_POTENTIAL_MODES + 1))
        component = np.zeros(grid.shape)
        for _ in range(modes):
            component += _random_mode(rng, grid)
        potential.append(component)
    u, v, w = curl_arrays(potential[0], potential[1], potential[2], grid.spacing)
    LOGGER.debug("Random solenoidal snapshot seed=%s grid=%s amplitude=%s", seed, grid.shape, amplitude)
    return FlowSnapshot(
        grid=grid,
        u=amplitude * u,
        v=amplitude * v,
        w=amplitude * w,
        p=_random_mode(rng, grid),
        t_field=_random_mode(rng, grid),
        re=re,
        pr=pr,
    )


@dataclass(frozen=True, slots=True)
class SnapshotSpec:
    """Generator recipe for one snapshot, as used by the CLI and pipeline config."""

    kind: SnapshotKind
    n: int = 16
    re: float = 100.0
    pr: float = 0.7
    seed: int = 0
    amplitude: float = 1.0
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0

    @property
    def label(self) -> str:
        """Short human-readable identity used in logs and reports."""
        if self.kind == SNAPSHOT_KIND_RANDOM:
            return f"{self.kind}:n={self.n}:seed={self.seed}"
        return f"{self.kind}:n={self.n}"


def generate_snapshot(spec: SnapshotSpec) -> FlowSnapshot:
    """Dispatch a generator recipe to the matching generator on a 2*pi cube."""
    grid = Grid3.cube(spec.n)
    if spec.kind == SNAPSHOT_KIND_TAYLOR_GREEN:
        return taylor_green_snapshot(grid, spec.re, spec.pr)
    if spec.kind == SNAPSHOT_KIND_ABC:
        return abc_snapshot(grid, spec.a, spec.b, spec.c, spec.re, spec.pr)
    if spec.kind == SNAPSHOT_KIND_RANDOM:
        return random_solenoidal_snapshot(grid, spec.seed, spec.amplitude, spec.re, spec.pr)
    raise SnapshotError(f"Unknown snapshot kind '{spec.kind}'.")


def with_reynolds(snapshot: FlowSnapshot, re: float) -> FlowSnapshot:
    """Return a copy of ``snapshot`` carrying a different global Reynolds number."""
    return dataclasses.replace(snapshot, re=re)


def _format(value: float) -> str:
    return FLOAT_FORMAT.format(float(value))


def save_snapshot(snapshot: FlowSnapshot, path: str | Path) -> None:
    """Write ``snapshot`` as UTF-8 ``.vfld`` text (17 significant digits, x-fastest)."""
    grid = snapshot.grid
    columns = [grid.flatten(getattr(snapshot, name)) for name in ("u", "v", "w", "p", "t_field")]
    lines = [
        SNAPSHOT_FILE_MAGIC,
        f"#grid {grid.nx} {grid.ny} {grid.nz} {_format(grid.lx)} {_format(grid.ly)} {_format(grid.lz)}",
        f"#phys {_format(snapshot.re)} {_format(snapshot.pr)}",
    ]
    lines.extend(" ".join(_format(value) for value in row) for row in zip(*columns, strict=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    LOGGER.debug("Saved snapshot %s (%s nodes)", path, grid.size)


def _parse_floats(text: str, *, count: int, line: int) -> list[float]:
    parts = text.split()
    if len(parts) != count:
        raise SnapshotFormatError(f"expected {count} values, found {len(parts)}", line=line)
    try:
        values = [float(part) for part in parts]
    except ValueError as err:
        raise SnapshotFormatError(f"not a number: {err}", line=line) from err
    if not all(math.isfinite(value) for value in values):
        raise SnapshotFormatError("non-finite value", line=line)
    return values


def _parse_header(lines: list[str], index: int, tag: str, expected: int) -> list[str]:
    if len(lines) <= index:
        raise SnapshotFormatError(f"missing '{tag}' header", line=index + 1)
    parts = lines[index].split()
    if not parts or parts[0] != tag or len(parts) != expected + 1:
        raise SnapshotFormatError(f"malformed '{tag}' header: {lines[index]!r}", line=index + 1)
    return parts[1:]


def load_snapshot(path: str | Path) -> FlowSnapshot:
    """Parse a ``.vfld`` file; every failure names the offending line."""
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as err:
        raise SnapshotFormatError(f"not valid UTF-8: {err.reason}", line=raw.count(b"\n", 0, err.start) + 1) from err
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or lines[0].strip() != SNAPSHOT_FILE_MAGIC:
        raise SnapshotFormatError(f"missing '{SNAPSHOT_FILE_MAGIC}' header", line=1)

    grid_fields = _parse_header(lines, 1, "#grid", 6)
    try:
        counts = [int(value) for value in grid_fields[:3]]
    except ValueError as err:
        raise SnapshotFormatError(f"grid node counts must be integers: {err}", line=2) from err
    lengths = _parse_floats(" ".join(grid_fields[3:]), count=3, line=2)
    try:
        grid = Grid3(*counts, *lengths)
    except GridError as err:
        raise SnapshotFormatError(str(err), line=2) from err

    re, pr = _parse_floats(" ".join(_parse_header(lines, 2, "#phys", 2)), count=2, line=3)

    rows = lines[3:]
    if len(rows) != grid.size:
        raise SnapshotFormatError(
            f"expected {grid.size} data rows for a {grid.nx}x{grid.ny}x{grid.nz} grid, found {len(rows)}",
            line=3 + len(rows),
        )
    data = np.array([_parse_floats(row, count=5, line=offset + 4) for offset, row in enumerate(rows)])
    try:
        return FlowSnapshot(
            grid=grid,
            u=data[:, 0],
            v=data[:, 1],
            w=data[:, 2],
            p=data[:, 3],
            t_field=data[:, 4],
            re=re,
            pr=pr,
        )
    except SnapshotError as err:
        raise SnapshotFormatError(str(err), line=3) from err
