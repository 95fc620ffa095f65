"""Seismic volume, section, and boundary I/O.

A volume on disk is a directory holding ``header.json`` (geometry metadata)
plus ``samples.f32`` (raw little-endian float32, C order). The linear sample
offset is ``((il * crossline_count) + xl) * time_count + t``, i.e. axes are
ordered inline -> crossline -> time. Boundaries are CSV files with one point
per line. All loaders validate eagerly and raise DataError on anything
inconsistent; loaded values are treated as immutable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError

HEADER_NAME = "header.json"
SAMPLES_NAME = "samples.f32"
VALUE_ENCODING = "float32-le"

_HEADER_KEYS = (
    "inline_start",
    "inline_count",
    "crossline_start",
    "crossline_count",
    "time_start_ms",
    "time_step_ms",
    "time_count",
    "value_encoding",
)


@dataclass(frozen=True)
class VolumeHeader:
    """Geometry of a seismic volume; times are metadata only, never converted."""

    inline_start: int
    inline_count: int
    crossline_start: int
    crossline_count: int
    time_start_ms: int
    time_step_ms: int
    time_count: int
    value_encoding: str = VALUE_ENCODING

    def __post_init__(self):
        for name in ("inline_count", "crossline_count", "time_count"):
            if getattr(self, name) < 1:
                raise DataError(f"empty dimension: {name} = {getattr(self, name)}")
        if self.time_step_ms <= 0:
            raise DataError(f"time_step_ms must be > 0, got {self.time_step_ms}")
        if self.value_encoding != VALUE_ENCODING:
            raise DataError(f"unsupported value_encoding {self.value_encoding!r}")

    @property
    def sample_count(self) -> int:
        return self.inline_count * self.crossline_count * self.time_count

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.inline_count, self.crossline_count, self.time_count)

    def inline_numbers(self) -> range:
        return range(self.inline_start, self.inline_start + self.inline_count)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in _HEADER_KEYS}


@dataclass(frozen=True)
class SeismicVolume:
    """Dense amplitude grid with shape (inline, crossline, time), float32."""

    header: VolumeHeader
    samples: np.ndarray

    def __post_init__(self):
        if self.samples.shape != self.header.shape:
            raise DataError(
                f"sample grid shape {self.samples.shape} does not match "
                f"header shape {self.header.shape}"
            )

    def section(self, inline_no: int) -> "SeismicSection":
        """Extract the 2D inline slice, indexed (crossline, time)."""
        idx = inline_no - self.header.inline_start
        if not 0 <= idx < self.header.inline_count:
            raise DataError(f"inline {inline_no} outside volume range")
        return SeismicSection(inline_no=inline_no, grid=self.samples[idx])


@dataclass(frozen=True)
class SeismicSection:
    """One inline slice; grid[x, y] with x = crossline index, y = time index."""

    inline_no: int
    grid: np.ndarray
    normalized: bool = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape


@dataclass(frozen=True)
class BoundaryRecord:
    """Labeled boundary of one inline: ordered (crossline, time_index) points."""

    inline_no: int
    points: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.points) == 0:
            raise DataError("boundary record has no points")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.int64)

    def check_bounds(self, bounds: tuple[int, int]) -> "BoundaryRecord":
        nx, ny = bounds
        for x, y in self.points:
            if not (0 <= x < nx and 0 <= y < ny):
                raise DataError(
                    f"boundary point ({x}, {y}) outside section bounds {bounds}"
                )
        return self


def save_volume(volume: SeismicVolume, path) -> Path:
    """Write header.json + samples.f32 into directory `path` (created)."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / HEADER_NAME, "w", encoding="ascii") as fh:
        json.dump(volume.header.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    data = np.ascontiguousarray(volume.samples, dtype="<f4")
    (out / SAMPLES_NAME).write_bytes(data.tobytes())
    return out


def load_volume(path) -> SeismicVolume:
    """Load a volume directory written by save_volume; bit-exact round trip."""
    root = Path(path)
    header_path = root / HEADER_NAME
    samples_path = root / SAMPLES_NAME
    if not header_path.is_file():
        raise DataError(f"missing header file: {header_path}")
    if not samples_path.is_file():
        raise DataError(f"missing sample file: {samples_path}")
    try:
        raw = json.loads(header_path.read_text(encoding="ascii"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise DataError(f"malformed header: {exc}") from exc
    missing = [k for k in _HEADER_KEYS if k not in raw]
    if missing:
        raise DataError(f"malformed header: missing keys {missing}")
    for key in _HEADER_KEYS[:-1]:
        if not isinstance(raw[key], int):
            raise DataError(f"malformed header: {key} must be an integer")
    header = VolumeHeader(**{k: raw[k] for k in _HEADER_KEYS})

    blob = samples_path.read_bytes()
    expected = header.sample_count * 4
    if len(blob) != expected:
        raise DataError(
            f"sample-count mismatch: expected {expected} bytes "
            f"({header.sample_count} float32), found {len(blob)}"
        )
    samples = np.frombuffer(blob, dtype="<f4").reshape(header.shape)
    return SeismicVolume(header=header, samples=samples)


def normalize_section(section: SeismicSection) -> SeismicSection:
    """Min-max scale a section to [0, 1]; idempotent on normalized data."""
    grid = np.asarray(section.grid, dtype=np.float64)
    lo = float(grid.min())
    hi = float(grid.max())
    if hi == lo:
        raise DataError(
            f"degenerate range: section {section.inline_no} is constant ({lo})"
        )
    out = (grid - lo) / (hi - lo)
    return replace(section, grid=out, normalized=True)


BOUNDARY_CSV_HEADER = "inline,crossline,time"


def save_boundary(record: BoundaryRecord, path) -> Path:
    """Write the canonical boundary CSV (LF newlines, no trailing spaces)."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [BOUNDARY_CSV_HEADER]
    lines += [f"{record.inline_no},{x},{y}" for x, y in record.points]
    out.write_bytes(("\n".join(lines) + "\n").encode("ascii"))
    return out


def load_boundary(path, bounds: tuple[int, int] | None = None) -> BoundaryRecord:
    """Parse a boundary CSV; optionally bounds-check against (nx, ny)."""
    src = Path(path)
    if not src.is_file():
        raise DataError(f"missing boundary file: {src}")
    lines = src.read_text(encoding="ascii").splitlines()
    if not lines or lines[0].strip() != BOUNDARY_CSV_HEADER:
        raise DataError(f"boundary CSV must start with '{BOUNDARY_CSV_HEADER}'")
    points = []
    inline_no = None
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise DataError(f"{src}:{ln}: expected 3 fields, got {len(fields)}")
        try:
            il, x, y = (int(f) for f in fields)
        except ValueError as exc:
            raise DataError(f"{src}:{ln}: non-integer field") from exc
        if inline_no is None:
            inline_no = il
        elif il != inline_no:
            raise DataError(f"{src}:{ln}: mixed inline numbers {inline_no} and {il}")
        points.append((x, y))
    if inline_no is None:
        raise DataError(f"{src}: no boundary points")
    record = BoundaryRecord(inline_no=inline_no, points=tuple(points))
    if bounds is not None:
        record.check_bounds(bounds)
    return record


def write_f32_grid(path, grid: np.ndarray) -> None:
    """Raw little-endian float32 dump of a 2D grid (C order)."""
    data = np.ascontiguousarray(grid, dtype="<f4")
    Path(path).write_bytes(data.tobytes())


def read_f32_grid(path, shape: tuple[int, int]) -> np.ndarray:
    blob = Path(path).read_bytes()
    expected = int(np.prod(shape)) * 4
    if len(blob) != expected:
        raise DataError(
            f"sample-count mismatch: expected {expected} bytes, found {len(blob)}"
        )
    return np.frombuffer(blob, dtype="<f4").reshape(shape)
