"""Boundary curve ordering, normals, filtering, connection, and metrics.

Coordinates are (x, y) = (crossline, time) with y growing downward, so the
"bottom-left" point of a curve is the one with maximal y (ties broken by
minimal x). Curve tracing walks the 8-neighborhood clockwise starting from
12 o'clock:

    up, up-right, right, down-right, down, down-left, left, up-left

which traverses a dome-shaped boundary clockwise on screen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, TrackingUnstableError

# clockwise from 12 o'clock, screen coordinates (y down)
TRACE_PRIORITY = (
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
)


@dataclass(frozen=True)
class BoundaryCurve:
    """Ordered polyline of integer boundary points within one section."""

    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
            raise DataError(f"curve needs an (N, 2) point array, got {pts.shape}")
        if pts.shape[0] > 1 and np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise DataError("curve contains duplicate consecutive points")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def is_chain(self) -> bool:
        """True when every consecutive pair is 8-adjacent."""
        if len(self) < 2:
            return True
        steps = np.abs(np.diff(self.points, axis=0))
        return bool(np.all(steps.max(axis=1) == 1))


@dataclass(frozen=True)
class SimilarityReport:
    """Segment-wise Fréchet comparison of a tracked curve against truth."""

    mean_segment_frechet: float
    similarity_index: float
    per_segment: tuple

    def to_dict(self) -> dict:
        return {
            "mean_segment_frechet": self.mean_segment_frechet,
            "similarity_index": self.similarity_index,
            "per_segment": list(self.per_segment),
        }


def admissible_points(
    raw_points, patch_dims: tuple[int, int], section_dims: tuple[int, int]
) -> np.ndarray:
    """Subset of points whose centered patch fits fully inside the section."""
    pts = np.asarray(list(raw_points) if not isinstance(raw_points, np.ndarray) else raw_points)
    pts = pts.reshape(-1, 2).astype(np.int64)
    h1, h2 = patch_dims[0] // 2, patch_dims[1] // 2
    nx, ny = section_dims
    ok = (
        (pts[:, 0] >= h1)
        & (pts[:, 0] < nx - h1)
        & (pts[:, 1] >= h2)
        & (pts[:, 1] < ny - h2)
    )
    return pts[ok]


def order_boundary(
    raw_points, patch_dims: tuple[int, int], section_dims: tuple[int, int]
) -> BoundaryCurve:
    """Canonically order a 1-pixel-wide 8-connected point set.

    Starts at the bottom-left admissible point and repeatedly steps to the
    highest-priority unvisited neighbor. Every admissible point must be
    reached exactly once; anything left over means the input was not a
    single traceable curve.
    """
    pts = admissible_points(raw_points, patch_dims, section_dims)
    if pts.shape[0] == 0:
        raise DataError("no admissible start point (patch constraint)")
    order = np.lexsort((pts[:, 0], -pts[:, 1]))  # max y first, then min x
    start = tuple(pts[order[0]])
    remaining = {tuple(p) for p in pts}

    path = [start]
    remaining.discard(start)
    cur = start
    while remaining:
        for dx, dy in TRACE_PRIORITY:
            nxt = (cur[0] + dx, cur[1] + dy)
            if nxt in remaining:
                path.append(nxt)
                remaining.discard(nxt)
                cur = nxt
                break
        else:
            break
    if remaining:
        raise DataError(
            f"disconnected boundary: traced {len(path)} of "
            f"{len(path) + len(remaining)} admissible points"
        )
    arr = np.asarray(path, dtype=np.int64)
    closed = len(path) >= 3 and max(
        abs(arr[0, 0] - arr[-1, 0]), abs(arr[0, 1] - arr[-1, 1])
    ) == 1
    return BoundaryCurve(points=arr, closed=closed)


def normal_at(curve: BoundaryCurve, index: int, window: int = 5) -> np.ndarray:
    """Unit normal at a curve point, from a local least-squares tangent.

    The tangent is the principal direction of the +-window neighborhood
    (clipped at the ends), oriented along the traversal; the normal is its
    90-degree rotation, so along the curve all normals point to the same
    side and signed offsets along them are mutually comparable. The search
    window downstream is symmetric, so the side itself carries no meaning.
    """
    n = len(curve)
    if n < 2:
        raise DataError("normal needs a curve with at least 2 points")
    if not 0 <= index < n:
        raise DataError(f"index {index} outside curve of length {n}")
    lo = max(0, index - window)
    hi = min(n, index + window + 1)
    pts = curve.points[lo:hi].astype(np.float64)
    centered = pts - pts.mean(axis=0)
    if not np.any(centered):
        raise DataError(f"zero-length tangent at index {index}")
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    tangent = vt[0]
    chord = pts[-1] - pts[0]
    if tangent @ chord < 0:
        tangent = -tangent
    return np.array([-tangent[1], tangent[0]])


def filter_tracked_points(
    offsets, window: int = 5, threshold: float = 3.0
) -> np.ndarray:
    """Keep-mask for tracked points, rejecting sliding-median outliers.

    A point survives when its signed normal offset is within `threshold`
    pixels of the median over a centered `window`-point neighborhood.
    Rejecting more than half the points raises TrackingUnstableError.
    """
    off = np.asarray(offsets, dtype=np.float64).ravel()
    n = off.size
    if n < window:
        raise DataError(f"need at least {window} tracked points, got {n}")
    half = window // 2
    medians = np.empty(n)
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        medians[i] = np.median(off[lo:hi])
    keep = np.abs(off - medians) <= threshold
    removed = int(n - keep.sum())
    if removed * 2 > n:
        raise TrackingUnstableError(
            f"outlier filter rejected {removed} of {n} tracked points"
        )
    return keep


def rasterize_segment(p: tuple[int, int], q: tuple[int, int]) -> np.ndarray:
    """8-connected Bresenham pixels from p to q, both endpoints included."""
    x0, y0 = int(p[0]), int(p[1])
    x1, y1 = int(q[0]), int(q[1])
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    out = []
    while True:
        out.append((x0, y0))
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy
    return np.asarray(out, dtype=np.int64)


def connect_points(points) -> BoundaryCurve:
    """Bridge gaps between consecutive tracked points with straight segments."""
    pts = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise DataError("connecting a boundary needs at least 2 points")
    chain = [tuple(pts[0])]
    for nxt in pts[1:]:
        seg = rasterize_segment(chain[-1], tuple(nxt))
        for px in map(tuple, seg[1:]):
            if px != chain[-1]:
                chain.append(px)
    return BoundaryCurve(points=np.asarray(chain, dtype=np.int64))


def discrete_frechet(a, b) -> float:
    """Discrete Fréchet distance between two polylines (coupled min-max DP)."""
    pa = np.atleast_2d(np.asarray(a, dtype=np.float64))
    pb = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        raise DataError("Fréchet distance needs non-empty polylines")
    diff = pa[:, None, :] - pb[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=2))
    n, m = d.shape
    ca = np.empty((n, m))
    ca[0, 0] = d[0, 0]
    for j in range(1, m):
        ca[0, j] = max(ca[0, j - 1], d[0, j])
    for i in range(1, n):
        ca[i, 0] = max(ca[i - 1, 0], d[i, 0])
        row = ca[i]
        prev = ca[i - 1]
        for j in range(1, m):
            row[j] = max(min(prev[j], prev[j - 1], row[j - 1]), d[i, j])
    return float(ca[n - 1, m - 1])


def split_equal_arclength(points: np.ndarray, segments: int) -> list:
    """Cut a polyline at vertices nearest the equal-arc-length fractions."""
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n < segments:
        raise DataError(
            f"degenerate segmentation: {n} points cannot make {segments} segments"
        )
    steps = np.sqrt(np.sum(np.diff(pts, axis=0) ** 2, axis=1))
    cum = np.concatenate([[0.0], np.cumsum(steps)])
    total = cum[-1]
    if total == 0.0:
        raise DataError("degenerate segmentation: curve has zero length")
    cuts = [0]
    for k in range(1, segments):
        target = total * k / segments
        idx = int(np.searchsorted(cum, target))
        idx = min(max(idx, cuts[-1] + 1), n - (segments - k))
        cuts.append(idx)
    cuts.append(n - 1)
    return [pts[cuts[k] : cuts[k + 1] + 1] for k in range(segments)]


def similarity_index(
    tracked: BoundaryCurve, truth: BoundaryCurve, segments: int = 10
) -> SimilarityReport:
    """Mean segment-wise Fréchet distance mapped onto (0, 1].

    Both curves are cut into the same number of equal-arc-length segments;
    the averaged per-segment distance d is reported as 1 / (1 + d), which is
    exactly 1 only for a perfect match.
    """
    segs_a = split_equal_arclength(tracked.points, segments)
    segs_b = split_equal_arclength(truth.points, segments)
    per = tuple(discrete_frechet(sa, sb) for sa, sb in zip(segs_a, segs_b))
    mean = float(np.mean(per))
    return SimilarityReport(
        mean_segment_frechet=mean,
        similarity_index=1.0 / (1.0 + mean),
        per_segment=per,
    )
