"""Per-frame contact patch features from raw taxel grids.

Pipeline: ``normalize`` -> ``upsample_bicubic`` -> ``segment_patch`` ->
``merge_hull`` -> ``patch_features``. ``extract_features`` chains them.

Coordinates: the fine image is indexed ``[row, col]`` with row increasing
downward (gravity). Contours and hulls use pixel-corner coordinates
``(x, y) = (col, row)``; the center of fine pixel ``(r, c)`` is therefore at
``(c + 0.5, r + 0.5)``. In millimetres, taxel ``(i, j)`` is centered at
``((j + 0.5) * pitch, (i + 0.5) * pitch)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np
from scipy import ndimage

FULL_SCALE = 255.0


class FrameError(ValueError):
    """Base class for frame-processing errors."""


class DimensionMismatchError(FrameError):
    pass


class InvalidBaselineError(FrameError):
    pass


class DegeneratePatchError(FrameError):
    """Raised when the merged hull has zero area (all points collinear)."""


@dataclass(frozen=True)
class SensorGeometry:
    rows: int = 20
    cols: int = 12
    pitch: float = 5.0  # mm; four taxels per cm^2
    radius: float = 372.0  # mm, curvature along gravity
    sample_rate: float = 10.0  # Hz

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ValueError(f"sensor needs at least 2x2 taxels, got {self.rows}x{self.cols}")
        if not (self.pitch > 0 and self.radius > 0 and self.sample_rate > 0):
            raise ValueError("pitch, radius and sample_rate must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def width(self) -> float:
        return self.cols * self.pitch

    @property
    def height(self) -> float:
        return self.rows * self.pitch


@dataclass(eq=False)
class RawFrame:
    timestamp: float
    robot_pose: tuple[float, float]  # (normal, tangential) progress, mm
    counts: np.ndarray  # rows x cols, non-negative integers

    def __post_init__(self):
        self.robot_pose = (float(self.robot_pose[0]), float(self.robot_pose[1]))
        self.counts = np.asarray(self.counts)

    def __eq__(self, other):
        if not isinstance(other, RawFrame):
            return NotImplemented
        return (
            self.timestamp == other.timestamp
            and self.robot_pose == other.robot_pose
            and self.counts.shape == other.counts.shape
            and np.array_equal(self.counts, other.counts)
        )


@dataclass(frozen=True)
class PatchFeatures:
    present: bool
    cop: tuple[float, float] | None = None  # mm, (x, y) with y along gravity
    area: float = 0.0  # mm^2
    intensity: float | None = None  # [0, 255]

    @classmethod
    def absent(cls) -> "PatchFeatures":
        return cls(present=False)


@dataclass(frozen=True)
class FrameConfig:
    upsample: int = 8
    patch_threshold: float = 200.0
    min_component_area: int = 4  # fine pixels
    weighting: Literal["pressure", "binary"] = "pressure"


def normalize(frame: RawFrame | np.ndarray, baseline: np.ndarray) -> np.ndarray:
    """Map raw counts to [0, 255] greyscale with 255 at the unloaded baseline."""
    counts = frame.counts if isinstance(frame, RawFrame) else np.asarray(frame)
    baseline = np.asarray(baseline)
    if counts.shape != baseline.shape:
        raise DimensionMismatchError(f"frame {counts.shape} vs baseline {baseline.shape}")
    if np.any(baseline <= 0):
        raise InvalidBaselineError("baseline counts must all be > 0")
    return np.clip(FULL_SCALE * counts / baseline, 0.0, FULL_SCALE)


def _catmull_rom(d: np.ndarray, a: float = -0.5) -> np.ndarray:
    d = np.abs(d)
    out = np.zeros_like(d)
    near = d <= 1
    far = (d > 1) & (d < 2)
    out[near] = (a + 2) * d[near] ** 3 - (a + 3) * d[near] ** 2 + 1
    out[far] = a * d[far] ** 3 - 5 * a * d[far] ** 2 + 8 * a * d[far] - 4 * a
    return out


@lru_cache(maxsize=64)
def _interp_matrix(n: int, factor: int) -> np.ndarray:
    # Pixel-center aligned: fine pixel u samples source coordinate (u + .5)/f - .5.
    s = (np.arange(n * factor) + 0.5) / factor - 0.5
    base = np.floor(s).astype(int)
    m = np.zeros((n * factor, n))
    rows = np.arange(n * factor)
    for k in range(-1, 3):
        idx = base + k
        w = _catmull_rom(s - idx)
        np.add.at(m, (rows, np.clip(idx, 0, n - 1)), w)
    m.setflags(write=False)
    return m


def upsample_bicubic(img: np.ndarray, factor: int) -> np.ndarray:
    """Separable Catmull-Rom upsampling with clamped borders."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    img = np.asarray(img, dtype=float)
    if factor == 1:
        return img.copy()
    mr = _interp_matrix(img.shape[0], factor)
    mc = _interp_matrix(img.shape[1], factor)
    return np.clip(mr @ img @ mc.T, 0.0, FULL_SCALE)


_EIGHT = np.ones((3, 3), dtype=bool)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def signed_area(poly: Sequence[Sequence[float]]) -> float:
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _drop_collinear(loop: list[tuple[int, int]]) -> list[tuple[int, int]]:
    out = []
    n = len(loop)
    for i in range(n):
        if _cross(loop[i - 1], loop[i], loop[(i + 1) % n]) != 0:
            out.append(loop[i])
    return out


def trace_boundary(mask: np.ndarray) -> list[tuple[int, int]]:
    """Outer boundary polygon of one 8-connected pixel region.

    Returns corner vertices ordered with positive signed area. Diagonal
    pinch points are walked through so that 8-connected pixels stay on
    one loop.
    """
    m = np.pad(np.asarray(mask, dtype=bool), 1)
    inner = m[1:-1, 1:-1]
    out_edges: dict[tuple[int, int], list[tuple[tuple[int, int], tuple[int, int]]]] = {}

    def add(side, start_of, end_of):
        rr, cc = np.nonzero(side)
        for r, c in zip(rr.tolist(), cc.tolist()):
            a, b = start_of(r, c), end_of(r, c)
            out_edges.setdefault(a, []).append((b, (b[0] - a[0], b[1] - a[1])))

    # Interior kept on the left of every directed edge.
    add(inner & ~m[:-2, 1:-1], lambda r, c: (c, r), lambda r, c: (c + 1, r))
    add(inner & ~m[2:, 1:-1], lambda r, c: (c + 1, r + 1), lambda r, c: (c, r + 1))
    add(inner & ~m[1:-1, :-2], lambda r, c: (c, r + 1), lambda r, c: (c, r))
    add(inner & ~m[1:-1, 2:], lambda r, c: (c + 1, r), lambda r, c: (c + 1, r + 1))

    loops = []
    while out_edges:
        start = min(out_edges)
        loop = [start]
        cur = start
        heading = None
        while True:
            choices = out_edges[cur]
            if len(choices) == 1 or heading is None:
                k = 0
            else:
                # pinch vertex: take the right turn to stay on the 8-connected loop
                k = min(range(len(choices)),
                        key=lambda i: heading[0] * choices[i][1][1] - heading[1] * choices[i][1][0])
            nxt, heading = choices.pop(k)
            if not choices:
                del out_edges[cur]
            cur = nxt
            if cur == start:
                break
            loop.append(cur)
        loops.append(loop)
    best = max(loops, key=signed_area)
    return _drop_collinear(best)


def segment_patch(fine: np.ndarray, patch_threshold: float = 200.0,
                  min_component_area: int = 4) -> list[list[tuple[int, int]]]:
    """Threshold the fine image and return one boundary polygon per component."""
    if not 0 < patch_threshold < FULL_SCALE:
        raise ValueError("patch_threshold must lie in (0, 255)")
    fg = np.asarray(fine) <= patch_threshold
    if not fg.any():
        return []
    labels, n = ndimage.label(fg, structure=_EIGHT)
    contours = []
    for k, sl in enumerate(ndimage.find_objects(labels), start=1):
        comp = labels[sl] == k
        if comp.sum() < min_component_area:
            continue
        loop = trace_boundary(comp)
        r0, c0 = sl[0].start, sl[1].start
        contours.append([(x + c0, y + r0) for x, y in loop])
    return contours


def merge_hull(contours: Sequence[Sequence[Sequence[float]]]) -> np.ndarray:
    """Convex hull of all contour vertices (monotone chain), counter-clockwise.

    Counter-clockwise means positive signed area in the (x, y) frame used
    by the contours.
    """
    if len(contours) == 0:
        raise ValueError("need at least one contour")
    pts = sorted({(float(x), float(y)) for c in contours for x, y in c})
    if len(pts) < 3:
        raise DegeneratePatchError("fewer than three distinct points")

    def half(points):
        chain: list[tuple[float, float]] = []
        for p in points:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegeneratePatchError("all points collinear")
    return np.array(hull)


def _inside_convex(hull: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    inside = np.ones(px.shape, dtype=bool)
    n = len(hull)
    for i in range(n):
        x0, y0 = hull[i]
        x1, y1 = hull[(i + 1) % n]
        inside &= (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0) >= -1e-12
    return inside


COVERAGE_SUBSAMPLES = 4  # per axis, for pixels straddling the hull edge


def hull_coverage(hull: np.ndarray, px: np.ndarray, py: np.ndarray,
                  sub: int = COVERAGE_SUBSAMPLES) -> np.ndarray:
    """Fraction of each unit pixel (centers px, py) lying inside the convex hull."""
    cov = np.zeros(px.shape)
    offsets = (np.arange(sub) + 0.5) / sub - 0.5
    for oy in offsets:
        for ox in offsets:
            cov += _inside_convex(hull, px + ox, py + oy)
    return cov / sub**2


def image_moments(weights: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Raw moments (M00, M10, M01) of point weights at coordinates x, y."""
    return float(weights.sum()), float((weights * x).sum()), float((weights * y).sum())


def patch_features(fine: np.ndarray, hull: np.ndarray, geometry: SensorGeometry,
                   factor: int, weighting: str = "pressure") -> PatchFeatures:
    fine = np.asarray(fine, dtype=float)
    hull = np.asarray(hull, dtype=float)
    area_px = signed_area(hull)
    if len(hull) < 3 or area_px <= 0:
        raise DegeneratePatchError("hull has no area")
    scale = geometry.pitch / factor  # mm per fine pixel

    c0 = max(int(np.floor(hull[:, 0].min())), 0)
    c1 = min(int(np.ceil(hull[:, 0].max())), fine.shape[1])
    r0 = max(int(np.floor(hull[:, 1].min())), 0)
    r1 = min(int(np.ceil(hull[:, 1].max())), fine.shape[0])
    py, px = np.mgrid[r0:r1, c0:c1] + 0.5
    # pixels cut by the hull edge count in proportion to their covered area
    cover = hull_coverage(hull, px, py)
    sub = fine[r0:r1, c0:c1]
    if weighting == "pressure":
        w = cover * (FULL_SCALE - sub)
    elif weighting == "binary":
        w = cover
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    m00, m10, m01 = image_moments(w, px, py)
    if m00 <= 0:
        return PatchFeatures.absent()
    cx, cy = m10 / m00 * scale, m01 / m00 * scale

    # intensity: mean value within one taxel pitch of the center of pressure
    rad = factor  # one pitch in fine pixels
    ic, ir = cx / scale, cy / scale
    a0, a1 = max(int(np.floor(ir - rad)), 0), min(int(np.ceil(ir + rad)) + 1, fine.shape[0])
    b0, b1 = max(int(np.floor(ic - rad)), 0), min(int(np.ceil(ic + rad)) + 1, fine.shape[1])
    gy, gx = np.mgrid[a0:a1, b0:b1] + 0.5
    near = (gx - ic) ** 2 + (gy - ir) ** 2 <= rad**2
    vals = fine[a0:a1, b0:b1][near]
    intensity = float(vals.mean()) if vals.size else float(fine[int(ir), int(ic)])
    return PatchFeatures(present=True, cop=(cx, cy), area=area_px * scale**2, intensity=intensity)


def extract_features(frame: RawFrame | np.ndarray, baseline: np.ndarray, geometry: SensorGeometry,
                     config: FrameConfig = FrameConfig()) -> PatchFeatures:
    img = normalize(frame, baseline)
    if img.shape != geometry.shape:
        raise DimensionMismatchError(f"frame {img.shape} vs geometry {geometry.shape}")
    fine = upsample_bicubic(img, config.upsample)
    contours = segment_patch(fine, config.patch_threshold, config.min_component_area)
    if not contours:
        return PatchFeatures.absent()
    try:
        hull = merge_hull(contours)
        return patch_features(fine, hull, geometry, config.upsample, config.weighting)
    except DegeneratePatchError:
        return PatchFeatures.absent()
