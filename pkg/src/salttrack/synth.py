"""Deterministic synthetic seismic volumes with known dome boundaries.

Each inline section holds a circular dome whose radius grows linearly
across inlines, so every boundary point moves along its own normal by a
known, exact amount per section (the per-section drift). Textures are
anchored in polar coordinates around the dome center:

  * angular harmonics cos(m * theta) vary the texture along the boundary,
    giving each learned texture tensor a rich spectrum, and are invariant
    under radial motion, so the true tracked position always reproduces
    its training texture;
  * a radial oscillating rim (a damped wavelet in the signed boundary
    distance) plus the interior/exterior level step localize the boundary
    in the normal direction with bounded, alias-free mismatch energy;
  * isotropic hash noise decorrelates neighboring inlines.

All randomness comes from a counter-based splitmix64 hash of
(seed, stream, pixel index), so volumes are bit-reproducible anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .volume_io import BoundaryRecord, SeismicVolume, VolumeHeader, save_boundary, save_volume

# margin that keeps default 31x31 patches admissible along the whole truth arc
DOME_MARGIN = 16

_PHI = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SEED_SALT = np.uint64(0xD6E8FEB86659FD93)
_STREAM_SALT = np.uint64(0xA5A5A5A5A5A5A5A5)


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def hash_uniform(seed: int, stream: int, count: int) -> np.ndarray:
    """Deterministic uniforms in (0, 1]: splitmix64 of (seed, stream, index)."""
    with np.errstate(over="ignore"):  # modular uint64 arithmetic is the point
        base = np.uint64(seed) * _SEED_SALT + np.uint64(stream) * _STREAM_SALT
        idx = np.arange(count, dtype=np.uint64)
        bits = _splitmix(base + (idx + np.uint64(1)) * _PHI)
    return (bits.astype(np.float64) + 1.0) / 18446744073709551616.0


def hash_gauss(seed: int, stream: int, shape: tuple) -> np.ndarray:
    """Standard normal field via Box-Muller over two hash streams."""
    count = int(np.prod(shape))
    u1 = hash_uniform(seed, 2 * stream, count)
    u2 = hash_uniform(seed, 2 * stream + 1, count)
    g = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return g.reshape(shape)


@dataclass(frozen=True)
class SynthSpec:
    """Geometry, texture, and noise parameters of a synthetic volume.

    drift_per_section is the boundary's outward motion in px per inline
    step ("expand" mode, radius growth) or the crossline translation of
    the dome center ("center" mode).
    """

    n_inline: int = 21
    n_crossline: int = 200
    n_time: int = 160
    inline_start: int = 0
    # The default dome is a very large, gently bowed body whose center lies
    # far right of the section: the visible boundary is its near-vertical
    # left flank, the classic salt-wall geometry. Under crossline drift the
    # entire texture field translates rigidly, and flank normals are close
    # to the crossline axis, which keeps candidate pixels on the raster.
    center_crossline: float = 1372.0
    center_time: float = 80.0
    radius: float = 1280.0
    drift_per_section: float = 1.0
    drift_mode: str = "center"  # center | expand
    arc_end_left: float = 182.78  # arc end angles, degrees; left end is lower
    arc_end_right: float = 177.22
    # angular texture: (m cycles around the dome, amplitude, phase) triples;
    # with the far-away center these are horizontally layered strata. Three
    # harmonics keep every tensor's retained spectrum well above the novelty
    # of any single candidate patch.
    angular_waves: tuple = ((310, 0.13, 0.0), (383, 0.12, 2.1), (503, 0.11, 1.3))
    exterior_envelope: float = 2.0  # strata fade inside the dome over this px
    # radial rim wavelet: localized oscillation in the boundary distance
    rim_amplitude: float = 0.16
    rim_width: float = 7.0
    rim_wavelength: float = 7.5
    exterior_level: float = 0.48
    interior_level: float = 0.60
    step_width: float = 2.0
    noise_sigma: float = 0.006
    interior_noise_scale: float = 0.3
    seed: int = 7

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise DataError("noise_sigma must be >= 0")
        if min(self.n_inline, self.n_crossline, self.n_time) < 1:
            raise DataError("empty dimension in synthetic spec")
        if self.drift_mode not in ("expand", "center"):
            raise DataError(f"unknown drift_mode {self.drift_mode!r}")
        if self.radius < 8:
            raise DataError("dome radius too small")

    def radius_at(self, il_idx: int) -> float:
        if self.drift_mode == "expand":
            return self.radius + self.drift_per_section * il_idx
        return self.radius

    def center_at(self, il_idx: int) -> tuple[float, float]:
        cx = self.center_crossline
        if self.drift_mode == "center":
            cx += self.drift_per_section * il_idx
        return (cx, self.center_time)

    def header(self) -> VolumeHeader:
        return VolumeHeader(
            inline_start=self.inline_start,
            inline_count=self.n_inline,
            crossline_start=0,
            crossline_count=self.n_crossline,
            time_start_ms=1300,
            time_step_ms=4,
            time_count=self.n_time,
        )


def textured_spec(seed: int = 11) -> SynthSpec:
    """Harder preset: amplitude cues weakened against noise so that the
    contrast channel and full tensor structure carry more of the match."""
    return SynthSpec(
        angular_waves=((310, 0.05, 0.0), (503, 0.04, 1.3)),
        rim_amplitude=0.08,
        rim_width=6.0,
        rim_wavelength=7.0,
        interior_level=0.55,
        noise_sigma=0.035,
        seed=seed,
    )


def _check_margins(spec: SynthSpec) -> None:
    """The whole truth arc, at every inline, must keep a patch margin."""
    thetas = np.linspace(spec.arc_end_left, spec.arc_end_right, 33)
    for il_idx in (0, spec.n_inline - 1):
        pts = np.array([_arc_point(spec, il_idx, t) for t in thetas])
        if (
            pts[:, 0].min() < DOME_MARGIN
            or pts[:, 0].max() > spec.n_crossline - 1 - DOME_MARGIN
            or pts[:, 1].min() < DOME_MARGIN
            or pts[:, 1].max() > spec.n_time - 1 - DOME_MARGIN
        ):
            raise DataError(
                f"dome/margin violation at inline index {il_idx}: the boundary "
                f"arc must stay >= {DOME_MARGIN} px from every section edge"
            )


def _thin_chain(points: list) -> list:
    """Drop pixels whose removal keeps the chain 8-connected (corner fill)."""
    pts = points
    changed = True
    while changed:
        changed = False
        out = [pts[0]]
        i = 1
        while i < len(pts) - 1:
            prev = out[-1]
            nxt = pts[i + 1]
            if max(abs(prev[0] - nxt[0]), abs(prev[1] - nxt[1])) <= 1:
                changed = True  # skip pts[i]
            else:
                out.append(pts[i])
            i += 1
        out.append(pts[-1])
        pts = out
    return pts


def _arc_point(spec: SynthSpec, il_idx: int, theta_deg: float) -> tuple[int, int]:
    cx, cy = spec.center_at(il_idx)
    r = spec.radius_at(il_idx)
    t = np.radians(theta_deg)
    x = cx + r * np.cos(t)
    y = cy - r * np.sin(t)
    return (int(np.floor(x + 0.5)), int(np.floor(y + 0.5)))


def boundary_arc(spec: SynthSpec, il_idx: int) -> np.ndarray:
    """Rasterized upper dome arc, ordered bottom-left end -> clockwise.

    The parametrization is refined adaptively so consecutive pixels always
    come out 8-adjacent; redundant corner pixels are thinned away.
    """

    def refine(t0, p0, t1, p1, out):
        if p1 == p0:
            return p0
        if max(abs(p1[0] - p0[0]), abs(p1[1] - p0[1])) == 1:
            out.append(p1)
            return p1
        tm = 0.5 * (t0 + t1)
        if tm == t0 or tm == t1:  # float resolution exhausted
            out.append(p1)
            return p1
        pm = _arc_point(spec, il_idx, tm)
        last = refine(t0, p0, tm, pm, out)
        return refine(tm, last, t1, p1, out)

    thetas = np.linspace(spec.arc_end_left, spec.arc_end_right, 257)
    pts = [_arc_point(spec, il_idx, t) for t in thetas]
    chain = [pts[0]]
    last = pts[0]
    for t0, t1, p1 in zip(thetas[:-1], thetas[1:], pts[1:]):
        last = refine(t0, last, t1, p1, chain)
    chain = _thin_chain(chain)

    arr = np.asarray(chain, dtype=np.int64)
    if len({tuple(p) for p in chain}) != len(chain):
        raise DataError("generator produced a self-intersecting boundary")
    steps = np.abs(np.diff(arr, axis=0)).max(axis=1)
    if np.any(steps != 1):
        raise DataError("generator produced a disconnected boundary")
    return arr


def _section_field(spec: SynthSpec, il_idx: int) -> np.ndarray:
    nx, ny = spec.n_crossline, spec.n_time
    cx, cy = spec.center_at(il_idx)
    r = spec.radius_at(il_idx)
    xs = np.arange(nx, dtype=np.float64)[:, None]
    ys = np.arange(ny, dtype=np.float64)[None, :]

    dx = xs - cx
    dy = ys - cy
    dist = np.sqrt(dx * dx + dy * dy) - r  # signed boundary distance
    theta = np.arctan2(-dy, dx)  # screen y grows downward

    # smooth level step across the boundary (positive dist = exterior)
    field = spec.exterior_level + (spec.interior_level - spec.exterior_level) * 0.5 * (
        1.0 - np.tanh(dist / spec.step_width)
    )
    # strata: angular facies waves, faded out inside the dome body
    envelope = 0.5 * (1.0 + np.tanh(dist / spec.exterior_envelope))
    for m, amp, phase in spec.angular_waves:
        field = field + amp * envelope * np.cos(m * theta + phase)
    # radial rim wavelet localizes the boundary in the normal direction
    field = field + spec.rim_amplitude * np.exp(
        -((dist / spec.rim_width) ** 2)
    ) * np.cos(2.0 * np.pi * dist / spec.rim_wavelength)

    noise = hash_gauss(spec.seed, il_idx, (nx, ny))
    inside = dist <= 0.0
    sigma = np.where(
        inside, spec.noise_sigma * spec.interior_noise_scale, spec.noise_sigma
    )
    return field + sigma * noise


def generate(spec: SynthSpec) -> tuple[SeismicVolume, list]:
    """Materialize the volume and its per-inline ground-truth boundaries."""
    _check_margins(spec)
    samples = np.empty((spec.n_inline, spec.n_crossline, spec.n_time), dtype=np.float32)
    records = []
    for il_idx in range(spec.n_inline):
        samples[il_idx] = _section_field(spec, il_idx).astype(np.float32)
        pts = boundary_arc(spec, il_idx)
        records.append(
            BoundaryRecord(
                inline_no=spec.inline_start + il_idx,
                points=tuple(map(tuple, pts)),
            )
        )
    return SeismicVolume(header=spec.header(), samples=samples), records


def generate_to_dir(spec: SynthSpec, out_dir) -> dict:
    """Write the volume directory plus truth_il<N>.csv files; return paths."""
    volume, records = generate(spec)
    root = save_volume(volume, out_dir)
    truth_paths = {}
    for rec in records:
        path = root / f"truth_il{rec.inline_no:04d}.csv"
        save_boundary(rec, path)
        truth_paths[rec.inline_no] = path
    return {"volume": root, "truth": truth_paths}
