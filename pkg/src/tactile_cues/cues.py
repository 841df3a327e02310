"""Tactile cues: RANSAC outlier rejection plus a continuous two-segment fit."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np
from scipy import stats

AxisLabel = Literal["time", "normal_progress", "tangential_progress"]
FeatureLabel = Literal["cop_gravity", "cop_horizontal", "area", "intensity"]

MIN_FIT_POINTS = 8
MIN_SEGMENT_POINTS = 3


class InsufficientDataError(ValueError):
    def __init__(self, message: str, track: str | None = None):
        super().__init__(message if track is None else f"{track}: {message}")
        self.track = track


@dataclass(eq=False)
class FeatureTrack:
    progress: np.ndarray
    values: np.ndarray
    axis_label: AxisLabel
    feature_label: FeatureLabel

    def __post_init__(self):
        self.progress = np.asarray(self.progress, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.progress.shape != self.values.shape or self.progress.ndim != 1:
            raise ValueError("progress and values must be equal-length 1-D arrays")
        if np.any(np.diff(self.progress) <= 0):
            raise ValueError(f"{self.feature_label}: progress must be strictly increasing")

    @property
    def key(self) -> str:
        return f"{self.feature_label}/{self.axis_label}"

    def __len__(self):
        return len(self.progress)


@dataclass(frozen=True)
class PiecewiseFit:
    breakpoint: float
    slope: tuple[float, float]
    mean: tuple[float, float]
    sse: float
    inlier_count: int
    segment_points: tuple[int, int] = (0, 0)
    single_line: bool = False


@dataclass(frozen=True)
class RansacParams:
    iterations: int = 200
    inlier_tol: float | None = None  # None: 3 x median |residual| of a Theil-Sen pre-fit
    seed: int = 0


@dataclass
class CueSet:
    drop_rate: tuple[float, float]
    horizontal_rate: tuple[float, float]
    intensity_mean: tuple[float, float]
    area_rate: tuple[float, float]
    fits: dict[str, PiecewiseFit] = field(default_factory=dict, compare=False)

    def dominant_horizontal_rate(self) -> float:
        """Horizontal slope of the segment holding more inliers."""
        fit = self.fits.get("cop_horizontal")
        if fit is None or fit.single_line:
            return self.horizontal_rate[0]
        n1, n2 = fit.segment_points
        return self.horizontal_rate[0] if n1 >= n2 else self.horizontal_rate[1]


def default_inlier_tol(progress: np.ndarray, values: np.ndarray) -> float:
    slope, intercept, _, _ = stats.theilslopes(values, progress, method="joint")
    mad = float(np.median(np.abs(values - (intercept + slope * progress))))
    floor = 1e-9 * (1.0 + float(np.max(np.abs(values))))
    return max(3.0 * mad, floor)


def ransac_filter(track: FeatureTrack, iterations: int = 200, inlier_tol: float | None = None,
                  seed: int = 0) -> np.ndarray:
    """Boolean inlier mask from 2-point line RANSAC."""
    p, v = track.progress, track.values
    n = len(p)
    if n < 2:
        raise InsufficientDataError("RANSAC needs at least 2 points", track.key)
    if iterations == 0:
        return np.ones(n, dtype=bool)
    if inlier_tol is None:
        inlier_tol = default_inlier_tol(p, v)
    if inlier_tol <= 0:
        raise ValueError("inlier_tol must be > 0")
    rng = np.random.default_rng(seed)
    best_mask = None
    best_key = None
    for _ in range(iterations):
        i, j = rng.choice(n, size=2, replace=False)
        slope = (v[j] - v[i]) / (p[j] - p[i])
        res = np.abs(v - (v[i] + slope * (p - p[i])))
        mask = res <= inlier_tol
        # more inliers first, then lower total residual; strict '>' keeps the earlier iteration
        key = (int(mask.sum()), -float(res[mask].sum()))
        if best_key is None or key > best_key:
            best_key, best_mask = key, mask
    return best_mask


def _line_fit(z: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    zc = z - z.mean()
    denom = float(zc @ zc)
    slope = float(zc @ (y - y.mean())) / denom
    icpt = float(y.mean()) - slope * float(z.mean())
    sse = float(np.sum((y - icpt - slope * z) ** 2))
    return icpt, slope, sse


def fit_piecewise_2(progress, values) -> PiecewiseFit:
    """Continuous two-segment least squares with exhaustive breakpoint search.

    Candidate breakpoints are the interior sample positions, each side
    keeping at least three points (the breakpoint sample is shared). The
    hinge basis {1, p, max(0, p - b)} is solved per candidate through its
    normal equations.
    """
    p = np.asarray(progress, dtype=float)
    y = np.asarray(values, dtype=float)
    n = len(p)
    if n < MIN_FIT_POINTS:
        raise InsufficientDataError(f"need >= {MIN_FIT_POINTS} points, got {n}")
    p0, span = p[0], p[-1] - p[0]
    z = (p - p0) / span
    ybar = y.mean()
    yc = y - ybar

    icpt1, slope1, sse1 = _line_fit(z, yc)
    ks = np.arange(MIN_SEGMENT_POINTS - 1, n - MIN_SEGMENT_POINTS + 1)
    if ks.size:
        hinge = np.maximum(0.0, z[None, :] - z[ks][:, None])  # (K, n)
        gram = np.empty((ks.size, 3, 3))
        gram[:, 0, 0] = n
        gram[:, 0, 1] = gram[:, 1, 0] = z.sum()
        gram[:, 1, 1] = z @ z
        gram[:, 0, 2] = gram[:, 2, 0] = hinge.sum(axis=1)
        gram[:, 1, 2] = gram[:, 2, 1] = hinge @ z
        gram[:, 2, 2] = np.einsum("kn,kn->k", hinge, hinge)
        rhs = np.stack([np.full(ks.size, yc.sum()), np.full(ks.size, z @ yc), hinge @ yc], axis=1)
        beta = np.linalg.solve(gram, rhs[..., None])[..., 0]
        fitted = beta[:, :1] + beta[:, 1:2] * z[None, :] + beta[:, 2:3] * hinge
        sse = np.sum((yc[None, :] - fitted) ** 2, axis=1)
        tol = 1e-12 * (1.0 + float(yc @ yc))
        best = int(np.nonzero(sse <= sse.min() + tol)[0][0])
        improved = sse[best] < sse1 - tol
    else:
        improved = False

    if not improved:
        # single-line fallback, reported as two identical segments split at the midpoint
        fit_vals = icpt1 + slope1 * z + ybar
        mid = p0 + 0.5 * span
        left, right = p <= mid, p >= mid
        s = float(slope1 / span)
        return PiecewiseFit(
            breakpoint=float(mid), slope=(s, s),
            mean=(float(fit_vals[left].mean()), float(fit_vals[right].mean())),
            sse=float(sse1), inlier_count=n,
            segment_points=(int(left.sum()), int(right.sum())), single_line=True,
        )

    k = int(ks[best])
    b0, b1, b2 = beta[best]
    fit_vals = fitted[best] + ybar
    left, right = np.arange(n) <= k, np.arange(n) >= k
    return PiecewiseFit(
        breakpoint=float(p[k]),
        slope=(float(b1 / span), float((b1 + b2) / span)),
        mean=(float(fit_vals[left].mean()), float(fit_vals[right].mean())),
        sse=float(sse[best]),
        inlier_count=n,
        segment_points=(k + 1, n - k),
    )


MANDATORY = {"cop_gravity": "normal_progress", "intensity": "time"}
OPTIONAL = {"cop_horizontal": "tangential_progress", "area": "normal_progress"}


def fit_track(track: FeatureTrack, ransac: RansacParams = RansacParams()) -> PiecewiseFit:
    if len(track) < MIN_FIT_POINTS:
        raise InsufficientDataError(f"need >= {MIN_FIT_POINTS} points, got {len(track)}", track.key)
    mask = ransac_filter(track, ransac.iterations, ransac.inlier_tol, ransac.seed)
    if mask.sum() < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"only {int(mask.sum())} RANSAC inliers, need {MIN_FIT_POINTS}", track.key)
    return fit_piecewise_2(track.progress[mask], track.values[mask])


def extract_cues(tracks: Mapping[str, FeatureTrack] | list[FeatureTrack],
                 ransac: RansacParams = RansacParams()) -> CueSet:
    """Fit every available track and assemble the cue set.

    ``tracks`` may be keyed by feature label or given as a list. The
    gravity-direction CoP track and the intensity track are required;
    missing or short optional tracks give neutral (zero) rates.
    """
    if not isinstance(tracks, Mapping):
        tracks = {t.feature_label: t for t in tracks}
    fits: dict[str, PiecewiseFit] = {}
    for label, axis in MANDATORY.items():
        t = tracks.get(label)
        if t is None:
            raise InsufficientDataError("mandatory track missing", f"{label}/{axis}")
        if t.axis_label != axis:
            raise ValueError(f"{label} must be tracked against {axis}, got {t.axis_label}")
        fits[label] = fit_track(t, ransac)
    for label, axis in OPTIONAL.items():
        t = tracks.get(label)
        if t is None or t.axis_label != axis:
            continue
        try:
            fits[label] = fit_track(t, ransac)
        except InsufficientDataError:
            pass

    def rates(label):
        f = fits.get(label)
        return f.slope if f is not None else (0.0, 0.0)

    return CueSet(
        drop_rate=fits["cop_gravity"].slope,
        horizontal_rate=rates("cop_horizontal"),
        intensity_mean=fits["intensity"].mean,
        area_rate=rates("area"),
        fits=fits,
    )
