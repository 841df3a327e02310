"""Trial-level analysis: frames -> features -> tracks -> cues -> classes.

Only frames, baseline and sensor geometry are consulted; labels and
simulator configuration are never read here.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classify import (MotionClass, NotApplicableError, TangentialClass, Thresholds,
                       classify_normal, classify_tangential)
from .cues import CueSet, FeatureTrack, InsufficientDataError, RansacParams, extract_cues
from .frames import FrameConfig, PatchFeatures, RawFrame, SensorGeometry, extract_features


@dataclass
class TrialAnalysis:
    features: list[PatchFeatures]
    tracks: dict[str, FeatureTrack]
    cues: CueSet | None = None
    predicted: MotionClass | None = None
    tangential: TangentialClass | None = None
    horizontal_rate: float | None = None
    error: str | None = None


def frame_features(frames: list[RawFrame], baseline: np.ndarray, geometry: SensorGeometry,
                   config: FrameConfig = FrameConfig()) -> list[PatchFeatures]:
    return [extract_features(f, baseline, geometry, config) for f in frames]


def _increasing(progress: list[float], values: list[float]):
    # keep the first sample at each new progress maximum
    keep_p, keep_v = [], []
    for p, v in zip(progress, values):
        if not keep_p or p > keep_p[-1]:
            keep_p.append(p)
            keep_v.append(v)
    return np.array(keep_p), np.array(keep_v)


def build_tracks(frames: list[RawFrame], features: list[PatchFeatures]) -> dict[str, FeatureTrack]:
    hits = [(fr, ft) for fr, ft in zip(frames, features) if ft.present]
    normal = [fr.robot_pose[0] for fr, _ in hits]
    tangential = [fr.robot_pose[1] for fr, _ in hits]
    times = [fr.timestamp for fr, _ in hits]
    cop_x = [ft.cop[0] for _, ft in hits]
    cop_y = [ft.cop[1] for _, ft in hits]
    area = [ft.area for _, ft in hits]
    inten = [ft.intensity for _, ft in hits]

    tracks = {
        "cop_gravity": FeatureTrack(*_increasing(normal, cop_y), "normal_progress", "cop_gravity"),
        "area": FeatureTrack(*_increasing(normal, area), "normal_progress", "area"),
        "intensity": FeatureTrack(*_increasing(times, inten), "time", "intensity"),
    }
    p, v = _increasing(tangential, cop_x)
    if len(p) >= 2:
        tracks["cop_horizontal"] = FeatureTrack(p, v, "tangential_progress", "cop_horizontal")
    return tracks


def analyze_trial(frames: list[RawFrame], baseline: np.ndarray, geometry: SensorGeometry,
                  frame_config: FrameConfig = FrameConfig(), ransac: RansacParams = RansacParams(),
                  thresholds: Thresholds = Thresholds()) -> TrialAnalysis:
    features = frame_features(frames, baseline, geometry, frame_config)
    tracks = build_tracks(frames, features)
    out = TrialAnalysis(features, tracks)
    try:
        out.cues = extract_cues(tracks, ransac)
        out.predicted = classify_normal(out.cues, thresholds)
    except InsufficientDataError as exc:
        out.error = str(exc)

    ht = tracks.get("cop_horizontal")
    if out.cues is not None and "cop_horizontal" in out.cues.fits:
        rate = out.cues.dominant_horizontal_rate()
    elif ht is not None and len(ht) >= 2:
        rate = float(np.polyfit(ht.progress, ht.values, 1)[0])
    else:
        rate = None
    if rate is not None:
        travel = float(ht.progress[-1] - ht.progress[0])
        try:
            out.tangential = classify_tangential(rate, thresholds, tangential_travel=travel)
            out.horizontal_rate = rate
        except NotApplicableError:
            pass
    return out
