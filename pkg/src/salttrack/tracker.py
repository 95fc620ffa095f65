"""Boundary tracking: texture-tensor classification and point localization.

The reference section's labeled boundary is walked once, grouping patch
pairs (amplitude + contrast) into texture tensors whenever the trial
extension keeps the reconstruction error under the threshold; a new tensor
starts otherwise. To track a predicted section, every reference point is
projected unchanged, candidates are sampled along the local normal within
a +-R_s window (R_s = inline offset), and the candidate whose weighted
reconstruction error against its trial-extended tensor is smallest wins;
the winner is folded into the tensor before moving on. A sliding-median
filter then drops unstable points and the survivors are reconnected.

Method variants: `full` uses both channels and all three modes,
`no_contrast` drops the contrast channel everywhere, and `vectorized`
keeps only the mode-3 (vectorized-patch) term of the error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryCurve, connect_points, filter_tracked_points, normal_at, order_boundary
from .errors import DataError
from .texture import ContrastMap, GlcmConfig, contrast_map
from .tensors import TensorPair
from .volume_io import BoundaryRecord, SeismicSection, SeismicVolume, normalize_section

VARIANTS = ("full", "no_contrast", "vectorized")


@dataclass(frozen=True)
class TrackerConfig:
    """Patch geometry, subspace dimensions, and matching thresholds."""

    patch_dims: tuple = (31, 31)
    subspace_dims: tuple = (15, 15, 5)
    error_threshold: float = 3.0
    glcm: GlcmConfig = GlcmConfig()
    variant: str = "full"
    contrast_floor: float = 1e-3
    median_window: int = 5
    rejection_px: float = 3.0
    normal_window: int = 5

    def __post_init__(self):
        i1, i2 = self.patch_dims
        if i1 < 3 or i2 < 3 or i1 % 2 == 0 or i2 % 2 == 0:
            raise DataError(f"patch dims must be odd and >= 3, got {self.patch_dims}")
        if self.error_threshold <= 0:
            raise DataError("error threshold must be > 0")
        if not 0.0 < self.contrast_floor < 1.0:
            raise DataError("contrast floor must lie in (0, 1)")
        if self.variant not in VARIANTS:
            raise DataError(f"unknown variant {self.variant!r}; pick from {VARIANTS}")
        if any(p < 1 for p in self.subspace_dims):
            raise DataError("subspace dims must be >= 1")

    @property
    def use_contrast(self) -> bool:
        return self.variant != "no_contrast"

    @property
    def modes(self) -> tuple:
        return (3,) if self.variant == "vectorized" else (1, 2, 3)


@dataclass
class PointDiagnostic:
    """Per-boundary-point tracking outcome for the diagnostics sidecar."""

    index: int
    x: int
    y: int
    status: str  # tracked | filtered | skipped_inadmissible | no_normal
    tensor_id: int = -1
    offset: int | None = None
    e_min: float | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "x": self.x,
            "y": self.y,
            "status": self.status,
            "tensor_id": self.tensor_id,
            "offset": self.offset,
            "e_min": self.e_min,
        }


@dataclass(frozen=True)
class ClassifiedModel:
    """Texture tensors learned on the reference plus the point assignment."""

    tensors: tuple
    assignment: np.ndarray  # tensor index per curve point, -1 for skipped
    reference_inline: int
    reference_curve: BoundaryCurve

    @property
    def tensor_count(self) -> int:
        return len(self.tensors)


@dataclass(frozen=True)
class TrackedBoundary:
    """Synthesized boundary of one predicted section."""

    inline_no: int
    curve: BoundaryCurve
    offsets: np.ndarray
    diagnostics: tuple

    def record(self) -> BoundaryRecord:
        return BoundaryRecord(
            inline_no=self.inline_no, points=tuple(map(tuple, self.curve.points))
        )


def _patch_window(grid: np.ndarray, center: tuple[int, int], dims: tuple[int, int]):
    h1, h2 = dims[0] // 2, dims[1] // 2
    x, y = center
    nx, ny = grid.shape
    if not (h1 <= x < nx - h1 and h2 <= y < ny - h2):
        raise DataError(f"patch at ({x}, {y}) overruns the section border")
    return grid[x - h1 : x + h1 + 1, y - h2 : y + h2 + 1]


def _is_admissible(center: tuple[int, int], dims: tuple[int, int], shape) -> bool:
    h1, h2 = dims[0] // 2, dims[1] // 2
    x, y = center
    return h1 <= x < shape[0] - h1 and h2 <= y < shape[1] - h2


def extract_patch_pair(
    section: SeismicSection,
    cmap: ContrastMap | None,
    center: tuple[int, int],
    dims: tuple[int, int],
):
    """Amplitude and contrast windows at a point, as I1 x I2 x 1 tensors.

    The contrast patch is None when no contrast map is supplied.
    """
    s = _patch_window(section.grid, center, dims)[:, :, None]
    c = None
    if cmap is not None:
        if cmap.shape != section.shape:
            raise DataError("contrast map shape differs from section shape")
        c = _patch_window(cmap.grid, center, dims)[:, :, None]
    return s, c


def classify_tensors(
    ref_section: SeismicSection,
    ref_contrast: ContrastMap | None,
    curve: BoundaryCurve,
    cfg: TrackerConfig,
) -> ClassifiedModel:
    """Group boundary patches into texture tensors along the traversal.

    Walks the ordered curve once; each point's patch pair either extends the
    current tensor (trial reconstruction error <= threshold, unweighted) or
    opens a new one. Points whose patch crosses the border are skipped and
    recorded with assignment -1.
    """
    if not ref_section.normalized:
        raise DataError("classification requires a normalized reference section")
    if cfg.use_contrast and ref_contrast is None:
        raise DataError("contrast map required unless variant is no_contrast")
    if len(curve) == 0:
        raise DataError("empty boundary curve")

    cmap = ref_contrast if cfg.use_contrast else None
    tensors: list[TensorPair] = []
    assignment = np.full(len(curve), -1, dtype=np.int64)
    current: TensorPair | None = None

    for i, (x, y) in enumerate(map(tuple, curve.points)):
        if not _is_admissible((x, y), cfg.patch_dims, ref_section.shape):
            continue
        s, c = extract_patch_pair(ref_section, cmap, (x, y), cfg.patch_dims)
        if current is None:
            current = TensorPair.start(
                s, c, cfg.subspace_dims, use_contrast=cfg.use_contrast
            )
            assignment[i] = len(tensors)
            continue
        trial = current.extended(s, c)
        e = trial.patch_error(s, c, lam_s=1.0, lam_c=1.0, modes=cfg.modes)
        if e <= cfg.error_threshold:
            current = trial
            assignment[i] = len(tensors)
        else:
            tensors.append(current)
            current = TensorPair.start(
                s, c, cfg.subspace_dims, use_contrast=cfg.use_contrast
            )
            assignment[i] = len(tensors)
    if current is None:
        raise DataError("no admissible boundary point to classify")
    tensors.append(current)
    return ClassifiedModel(
        tensors=tuple(tensors),
        assignment=assignment,
        reference_inline=ref_section.inline_no,
        reference_curve=curve,
    )


@dataclass(frozen=True)
class Candidate:
    """One search position along the normal: offset, patches, contrast value."""

    offset: int
    pixel: tuple
    s_patch: np.ndarray
    c_patch: np.ndarray | None
    contrast_value: float | None


@dataclass(frozen=True)
class LocalizeResult:
    offset: int
    pixel: tuple
    e_min: float
    pair: TensorPair


def contrast_weight(value: float | None, floor: float) -> float:
    """lambda_C = |log(C)| with C clamped into [floor, 1]."""
    if value is None:
        return 0.0
    return abs(math.log(min(max(value, floor), 1.0)))


def localize_tracked_point(
    pair: TensorPair, candidates, cfg: TrackerConfig
) -> LocalizeResult:
    """Pick the candidate with the smallest weighted trial error.

    Candidates are scanned in the given (ascending-offset) order and ties
    keep the later one. The winning patch pair is appended to the tensor;
    the returned pair carries the update.
    """
    if not candidates:
        raise DataError("all candidates inadmissible")
    best: LocalizeResult | None = None
    for cand in candidates:
        lam_c = contrast_weight(cand.contrast_value, cfg.contrast_floor)
        trial = pair.extended(cand.s_patch, cand.c_patch)
        e = trial.patch_error(
            cand.s_patch, cand.c_patch, lam_s=1.0, lam_c=lam_c, modes=cfg.modes
        )
        if best is None or e <= best.e_min:
            best = LocalizeResult(
                offset=cand.offset, pixel=cand.pixel, e_min=e, pair=trial
            )
    return best


def _normal_candidates(
    point: tuple,
    normal: np.ndarray,
    radius: int,
    section: SeismicSection,
    cmap: ContrastMap | None,
    cfg: TrackerConfig,
) -> list:
    """Deduplicated admissible candidates at integer offsets along the normal."""
    x, y = point
    chosen: dict = {}
    for j in range(-radius, radius + 1):
        px = int(math.floor(x + j * normal[0] + 0.5))
        py = int(math.floor(y + j * normal[1] + 0.5))
        key = (px, py)
        if key in chosen and abs(chosen[key]) <= abs(j):
            continue
        chosen[key] = j
    out = []
    for (px, py), j in sorted(chosen.items(), key=lambda kv: kv[1]):
        if not _is_admissible((px, py), cfg.patch_dims, section.shape):
            continue
        s, c = extract_patch_pair(section, cmap, (px, py), cfg.patch_dims)
        cval = float(cmap.grid[px, py]) if cmap is not None else None
        out.append(
            Candidate(offset=j, pixel=(px, py), s_patch=s, c_patch=c, contrast_value=cval)
        )
    return out


def track_section(
    model: ClassifiedModel,
    predicted_section: SeismicSection,
    cfg: TrackerConfig,
    predicted_contrast: ContrastMap | None = None,
) -> TrackedBoundary:
    """Synthesize the boundary of one predicted section from the model.

    The model's tensors are never mutated: tracking works on a per-section
    copy (they are immutable values), so sections are order-independent and
    safe to process concurrently.
    """
    radius = abs(predicted_section.inline_no - model.reference_inline)
    if radius < 1:
        raise DataError("predicted section must differ from the reference inline")
    if not predicted_section.normalized:
        raise DataError("tracking requires a normalized predicted section")

    cmap = predicted_contrast
    if cfg.use_contrast and cmap is None:
        cmap = contrast_map(predicted_section, cfg.glcm)
    if not cfg.use_contrast:
        cmap = None

    pairs = list(model.tensors)
    curve = model.reference_curve
    diagnostics = []
    tracked_idx = []
    tracked_pixels = []
    tracked_offsets = []

    for i, (x, y) in enumerate(map(tuple, curve.points)):
        k = int(model.assignment[i])
        if k < 0:
            diagnostics.append(
                PointDiagnostic(index=i, x=x, y=y, status="skipped_inadmissible")
            )
            continue
        try:
            normal = normal_at(curve, i, cfg.normal_window)
        except DataError:
            diagnostics.append(
                PointDiagnostic(index=i, x=x, y=y, status="no_normal", tensor_id=k)
            )
            continue
        candidates = _normal_candidates((x, y), normal, radius, predicted_section, cmap, cfg)
        if not candidates:
            diagnostics.append(
                PointDiagnostic(
                    index=i, x=x, y=y, status="skipped_inadmissible", tensor_id=k
                )
            )
            continue
        result = localize_tracked_point(pairs[k], candidates, cfg)
        pairs[k] = result.pair
        tracked_idx.append(len(diagnostics))
        tracked_pixels.append(result.pixel)
        tracked_offsets.append(result.offset)
        diagnostics.append(
            PointDiagnostic(
                index=i,
                x=result.pixel[0],
                y=result.pixel[1],
                status="tracked",
                tensor_id=k,
                offset=result.offset,
                e_min=result.e_min,
            )
        )

    offsets = np.asarray(tracked_offsets, dtype=np.float64)
    keep = filter_tracked_points(offsets, cfg.median_window, cfg.rejection_px)
    for di, kept in zip(tracked_idx, keep):
        if not kept:
            diagnostics[di].status = "filtered"
    survivors = [p for p, kept in zip(tracked_pixels, keep) if kept]
    if len(survivors) < 2:
        raise DataError("too few tracked points survive to form a boundary")
    curve_out = connect_points(survivors)
    return TrackedBoundary(
        inline_no=predicted_section.inline_no,
        curve=curve_out,
        offsets=offsets,
        diagnostics=tuple(diagnostics),
    )


@dataclass(frozen=True)
class SectionOutcome:
    """Result of tracking one predicted section; error text when it failed."""

    inline_no: int
    boundary: TrackedBoundary | None = None
    error: str | None = None
    error_kind: str | None = None  # data | numerical

    @property
    def ok(self) -> bool:
        return self.boundary is not None


def build_model(
    volume: SeismicVolume,
    reference_inline: int,
    record: BoundaryRecord,
    cfg: TrackerConfig,
) -> ClassifiedModel:
    """Normalize the reference, derive its contrast map, order the boundary,
    and classify the texture tensors."""
    if record.inline_no != reference_inline:
        raise DataError(
            f"boundary is labeled for inline {record.inline_no}, "
            f"not reference {reference_inline}"
        )
    section = normalize_section(volume.section(reference_inline))
    record.check_bounds(section.shape)
    curve = order_boundary(record.as_array(), cfg.patch_dims, section.shape)
    cmap = contrast_map(section, cfg.glcm) if cfg.use_contrast else None
    return classify_tensors(section, cmap, curve, cfg)


def track_volume(
    volume: SeismicVolume,
    reference_inline: int,
    record: BoundaryRecord,
    inline_range,
    cfg: TrackerConfig,
    jobs: int = 1,
) -> tuple[ClassifiedModel, list]:
    """Track every inline in the range (reference excluded) from the model.

    Sections are independent; a failure is captured in its SectionOutcome
    instead of aborting the rest. With jobs > 1 sections run in a thread
    pool; results are returned in range order either way.
    """
    from .errors import NumericalError

    targets = [il for il in inline_range if il != reference_inline]
    for il in targets:
        if il not in volume.header.inline_numbers():
            raise DataError(f"inline {il} outside volume range")
    model = build_model(volume, reference_inline, record, cfg)

    def run_one(il: int) -> SectionOutcome:
        try:
            section = normalize_section(volume.section(il))
            tracked = track_section(model, section, cfg)
            return SectionOutcome(inline_no=il, boundary=tracked)
        except NumericalError as exc:
            return SectionOutcome(inline_no=il, error=str(exc), error_kind="numerical")
        except DataError as exc:
            return SectionOutcome(inline_no=il, error=str(exc), error_kind="data")

    if jobs > 1 and len(targets) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_one, targets))
    else:
        outcomes = [run_one(il) for il in targets]
    return model, outcomes
