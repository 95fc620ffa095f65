"""GLCM texture analysis and the contrast attribute map.

For every pixel, gray level co-occurrence matrices are tallied inside a
(2*radius+1)^2 analysis window for a set of direction/distance offsets, and
the contrast statistic sum((i-j)^2 * G[i,j]) is averaged over all offsets.
Offsets follow the screen convention with y growing downward:

    0 deg   -> ( d,  0)
    45 deg  -> ( d, -d)
    90 deg  -> ( 0, -d)
    135 deg -> (-d, -d)

GLCMs are ordered (not symmetrized); windows are clipped at section borders
and pairs whose second pixel leaves the window or the section are dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .volume_io import SeismicSection, read_f32_grid, write_f32_grid

_DIRECTION_STEPS = {0: (1, 0), 45: (1, -1), 90: (0, -1), 135: (-1, -1)}


@dataclass(frozen=True)
class GlcmConfig:
    """Window radius, quantization depth, and offset set for GLCM analysis."""

    radius: int = 4
    levels: int = 32
    directions: tuple = (0, 45, 90, 135)
    distances: tuple | None = None  # None means 1..radius

    def __post_init__(self):
        if self.radius < 1:
            raise DataError(f"GLCM radius must be >= 1, got {self.radius}")
        if self.levels < 2:
            raise DataError(f"GLCM levels must be >= 2, got {self.levels}")
        if not self.directions:
            raise DataError("GLCM direction set is empty")
        bad = [d for d in self.directions if d not in _DIRECTION_STEPS]
        if bad:
            raise DataError(f"unsupported GLCM directions: {bad}")
        if self.distances is None:
            object.__setattr__(self, "distances", tuple(range(1, self.radius + 1)))
        if not self.distances or any(
            d < 1 or d > self.radius for d in self.distances
        ):
            raise DataError(
                f"GLCM distances must lie in 1..{self.radius}, got {self.distances}"
            )

    @property
    def offsets(self) -> tuple:
        """All (dx, dy) offsets, direction-major then distance."""
        out = []
        for ang in self.directions:
            ux, uy = _DIRECTION_STEPS[ang]
            for d in self.distances:
                out.append((ux * d, uy * d))
        return tuple(out)

    @property
    def n_offsets(self) -> int:
        return len(self.directions) * len(self.distances)


@dataclass(frozen=True)
class Glcm:
    """One co-occurrence matrix: matrix[i, j] = Pr(level(p)=i, level(p+off)=j)."""

    matrix: np.ndarray
    offset: tuple


@dataclass(frozen=True)
class ContrastMap:
    """Per-pixel contrast attribute, congruent with its source section."""

    grid: np.ndarray
    normalized: bool
    degenerate: bool = False
    inline_no: int | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape


def quantize(section: SeismicSection, levels: int) -> np.ndarray:
    """Map [0,1] amplitudes onto integer gray levels 0..levels-1."""
    if not section.normalized:
        raise DataError("quantize requires a normalized section")
    grid = np.asarray(section.grid, dtype=np.float64)
    if grid.min() < 0.0 or grid.max() > 1.0:
        raise DataError("normalized section has values outside [0, 1]")
    q = np.floor(grid * levels).astype(np.int64)
    return np.minimum(q, levels - 1)


def glcm_at(
    levels: np.ndarray,
    center: tuple[int, int],
    offset: tuple[int, int],
    radius: int,
    n_levels: int,
) -> Glcm:
    """Tally the GLCM of the window around `center` for a single offset.

    The window is clipped to the level grid; a pair is counted only when both
    pixels sit inside the clipped window. With no valid pair the matrix is
    all-zero; otherwise entries sum to 1.
    """
    dx, dy = offset
    if dx == 0 and dy == 0:
        raise DataError("GLCM offset (0, 0) is not allowed")
    nx, ny = levels.shape
    cx, cy = center
    x0, x1 = max(0, cx - radius), min(nx - 1, cx + radius)
    y0, y1 = max(0, cy - radius), min(ny - 1, cy + radius)
    # first-pixel range such that the pair stays inside the clipped window
    px0 = x0 + max(0, -dx)
    px1 = x1 - max(0, dx)
    py0 = y0 + max(0, -dy)
    py1 = y1 - max(0, dy)
    matrix = np.zeros((n_levels, n_levels), dtype=np.float64)
    if px0 > px1 or py0 > py1:
        return Glcm(matrix=matrix, offset=(dx, dy))
    a = levels[px0 : px1 + 1, py0 : py1 + 1].ravel()
    b = levels[px0 + dx : px1 + dx + 1, py0 + dy : py1 + dy + 1].ravel()
    np.add.at(matrix, (a, b), 1.0)
    total = a.size
    return Glcm(matrix=matrix / total, offset=(dx, dy))


def glcm_contrast(glcm: Glcm) -> float:
    """Contrast statistic sum_ij (i-j)^2 * G[i,j]."""
    n = glcm.matrix.shape[0]
    idx = np.arange(n)
    weight = (idx[:, None] - idx[None, :]).astype(np.float64) ** 2
    return float(np.sum(weight * glcm.matrix))


def _offset_contrast_grid(levels: np.ndarray, offset: tuple, radius: int) -> np.ndarray:
    """Per-pixel contrast for one offset, via summed-area tables.

    For each window the pair sum of squared level differences and the pair
    count are rectangle sums over a static difference grid, so the whole
    section is computed with integer cumsums -- bit-for-bit the same tallies
    as the per-pixel loop.
    """
    dx, dy = offset
    nx, ny = levels.shape
    diff = np.zeros((nx, ny), dtype=np.int64)
    vx0, vx1 = max(0, -dx), nx - max(0, dx)  # first-pixel validity in section
    vy0, vy1 = max(0, -dy), ny - max(0, dy)
    if vx0 < vx1 and vy0 < vy1:
        a = levels[vx0:vx1, vy0:vy1]
        b = levels[vx0 + dx : vx1 + dx, vy0 + dy : vy1 + dy]
        diff[vx0:vx1, vy0:vy1] = (a - b) ** 2

    # summed-area table with a zero border row/column
    sat = np.zeros((nx + 1, ny + 1), dtype=np.int64)
    sat[1:, 1:] = np.cumsum(np.cumsum(diff, axis=0), axis=1)

    cx = np.arange(nx)[:, None]
    cy = np.arange(ny)[None, :]
    # clipped window, then shrunk so the offset partner stays inside it
    x_lo = np.maximum(np.maximum(0, cx - radius) + max(0, -dx), vx0)
    x_hi = np.minimum(np.minimum(nx - 1, cx + radius) - max(0, dx), vx1 - 1)
    y_lo = np.maximum(np.maximum(0, cy - radius) + max(0, -dy), vy0)
    y_hi = np.minimum(np.minimum(ny - 1, cy + radius) - max(0, dy), vy1 - 1)

    wx = np.maximum(x_hi - x_lo + 1, 0)
    wy = np.maximum(y_hi - y_lo + 1, 0)
    count = (wx * wy).astype(np.int64)

    xl = np.clip(x_lo, 0, nx)
    xh = np.clip(x_hi + 1, 0, nx)
    yl = np.clip(y_lo, 0, ny)
    yh = np.clip(y_hi + 1, 0, ny)
    rect = sat[xh, yh] - sat[xl, yh] - sat[xh, yl] + sat[xl, yl]

    out = np.zeros((nx, ny), dtype=np.float64)
    np.divide(rect, count, out=out, where=count > 0)
    return out


def contrast_map(
    section: SeismicSection, cfg: GlcmConfig, normalize: bool = True
) -> ContrastMap:
    """Offset-averaged per-pixel GLCM contrast; min-max scaled when requested.

    A constant contrast field (e.g. from a constant section) cannot be
    scaled; it is returned as an all-zero map with `degenerate` set.
    """
    levels = quantize(section, cfg.levels)
    acc = np.zeros(levels.shape, dtype=np.float64)
    for offset in cfg.offsets:
        acc += _offset_contrast_grid(levels, offset, cfg.radius)
    acc /= cfg.n_offsets

    lo = float(acc.min())
    hi = float(acc.max())
    if hi == lo:
        return ContrastMap(
            grid=np.zeros_like(acc),
            normalized=normalize,
            degenerate=True,
            inline_no=section.inline_no,
        )
    if normalize:
        acc = (acc - lo) / (hi - lo)
    return ContrastMap(grid=acc, normalized=normalize, inline_no=section.inline_no)


CONTRAST_HEADER_NAME = "header.json"
CONTRAST_SAMPLES_NAME = "samples.f32"


def save_contrast_map(cmap: ContrastMap, path) -> Path:
    """Persist a contrast map as header.json + raw float32 (2D variant)."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    header = {
        "kind": "contrast",
        "crossline_count": int(cmap.shape[0]),
        "time_count": int(cmap.shape[1]),
        "normalized": bool(cmap.normalized),
        "degenerate": bool(cmap.degenerate),
        "inline_no": cmap.inline_no,
        "value_encoding": "float32-le",
    }
    with open(out / CONTRAST_HEADER_NAME, "w", encoding="ascii") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_f32_grid(out / CONTRAST_SAMPLES_NAME, cmap.grid)
    return out


def load_contrast_map(path) -> ContrastMap:
    root = Path(path)
    header_path = root / CONTRAST_HEADER_NAME
    if not header_path.is_file():
        raise DataError(f"missing header file: {header_path}")
    try:
        header = json.loads(header_path.read_text(encoding="ascii"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise DataError(f"malformed header: {exc}") from exc
    if header.get("kind") != "contrast":
        raise DataError(f"not a contrast map directory: {root}")
    shape = (int(header["crossline_count"]), int(header["time_count"]))
    grid = read_f32_grid(root / CONTRAST_SAMPLES_NAME, shape).astype(np.float64)
    return ContrastMap(
        grid=grid,
        normalized=bool(header["normalized"]),
        degenerate=bool(header.get("degenerate", False)),
        inline_no=header.get("inline_no"),
    )
