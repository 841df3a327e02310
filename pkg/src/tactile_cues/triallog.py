"""Trial-log files: JSON Lines, one header record followed by frame records.

Line 1 is ``{"record": "header", "version": "1", ...}`` with the sensor
geometry, object, trial configuration, labels and baseline grid. Each
following line is ``{"record": "frame", "timestamp": s, "robot_pose":
[normal_mm, tangential_mm], "counts": [...]}`` with counts row-major
(row index increasing with gravity). Floats are written with ``repr`` so
reading back is exact.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .classify import MotionClass, TangentialClass
from .frames import RawFrame, SensorGeometry
from .sim import TrialConfig, TrialRecord, object_from_dict, object_to_dict

FORMAT_VERSION = "1"
TRIAL_SUFFIX = ".trial.jsonl"


class TrialLogError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class UnsupportedVersionError(TrialLogError):
    pass


class TruncatedFrameError(TrialLogError):
    pass


class DimensionMismatchError(TrialLogError):
    pass


class NonMonotoneTimestampError(TrialLogError):
    pass


class MalformedRecordError(TrialLogError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def header_dict(rec: TrialRecord) -> dict:
    cfg = asdict(rec.config)
    cfg["mobility"] = rec.config.mobility.value
    cfg["contact_point"] = list(rec.config.contact_point)
    return {
        "record": "header",
        "version": FORMAT_VERSION,
        "geometry": asdict(rec.geometry),
        "object": object_to_dict(rec.object),
        "config": cfg,
        "true_class": rec.true_class.value,
        "true_tangential": None if rec.true_tangential is None else rec.true_tangential.value,
        "baseline": np.asarray(rec.baseline).ravel().tolist(),
    }


def frame_dict(fr: RawFrame) -> dict:
    return {
        "record": "frame",
        "timestamp": float(fr.timestamp),
        "robot_pose": [fr.robot_pose[0], fr.robot_pose[1]],
        "counts": np.asarray(fr.counts).ravel().tolist(),
    }


def dumps_trial(rec: TrialRecord) -> str:
    lines = [_dumps(header_dict(rec))] + [_dumps(frame_dict(f)) for f in rec.frames]
    return "\n".join(lines) + "\n"


def write_trial(path, rec: TrialRecord) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_trial(rec))


def _finite(values, line: int, what: str):
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise MalformedRecordError(f"{what} must be finite numbers", line)


def _parse_header(d: dict, line: int):
    if d.get("record") != "header":
        raise MalformedRecordError("first record must be the header", line)
    if "version" not in d:
        raise MalformedRecordError("header has no version field", line)
    if d["version"] != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported trial-log version {d['version']!r}", line)
    try:
        geometry = SensorGeometry(**d["geometry"])
        obj = object_from_dict(d["object"])
        cfg = dict(d["config"])
        known = {f.name for f in fields(TrialConfig)}
        unknown = set(cfg) - known
        if unknown:
            raise MalformedRecordError(f"unknown config keys {sorted(unknown)}", line)
        cfg["contact_point"] = tuple(cfg["contact_point"])
        config = TrialConfig(**cfg)
        true_class = MotionClass(d["true_class"])
        tt = d.get("true_tangential")
        true_tangential = None if tt is None else TangentialClass(tt)
        baseline = d["baseline"]
    except TrialLogError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecordError(f"bad header: {exc}", line) from exc
    _finite(baseline, line, "baseline")
    if len(baseline) != geometry.rows * geometry.cols:
        raise DimensionMismatchError(
            f"baseline has {len(baseline)} values, expected {geometry.rows}x{geometry.cols}", line)
    base = np.array(baseline).reshape(geometry.shape)
    return geometry, obj, config, true_class, true_tangential, base


def loads_trial(text: str) -> TrialRecord:
    lines = text.split("\n")
    complete = text.endswith("\n")
    if complete:
        lines = lines[:-1]
    if not lines or not lines[0].strip():
        raise MalformedRecordError("empty trial log", 1)
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise MalformedRecordError(f"header is not valid JSON: {exc.msg}", 1) from exc
    geometry, obj, config, true_class, true_tangential, baseline = _parse_header(head, 1)

    frames: list[RawFrame] = []
    n_taxels = geometry.rows * geometry.cols
    for k, raw in enumerate(lines[1:], start=2):
        last = k == len(lines)
        try:
            d = json.loads(raw)
        except json.JSONDecodeError as exc:
            if last and not complete:
                raise TruncatedFrameError("frame record cut off", k) from exc
            raise MalformedRecordError(f"invalid JSON: {exc.msg}", k) from exc
        if not isinstance(d, dict) or d.get("record") != "frame":
            raise MalformedRecordError("expected a frame record", k)
        missing = {"timestamp", "robot_pose", "counts"} - set(d)
        if missing:
            raise TruncatedFrameError(f"frame missing fields {sorted(missing)}", k)
        _finite([d["timestamp"]], k, "timestamp")
        pose = d["robot_pose"]
        if not isinstance(pose, list) or len(pose) != 2:
            raise MalformedRecordError("robot_pose must be a pair", k)
        _finite(pose, k, "robot_pose")
        counts = d["counts"]
        if not isinstance(counts, list):
            raise MalformedRecordError("counts must be a list", k)
        if len(counts) != n_taxels:
            raise DimensionMismatchError(
                f"counts has {len(counts)} values, expected {geometry.rows}x{geometry.cols}={n_taxels}", k)
        _finite(counts, k, "counts")
        if frames and not d["timestamp"] > frames[-1].timestamp:
            raise NonMonotoneTimestampError(
                f"timestamp {d['timestamp']} does not increase past {frames[-1].timestamp}", k)
        frames.append(RawFrame(d["timestamp"], tuple(pose), np.array(counts).reshape(geometry.shape)))
    if not frames:
        raise TruncatedFrameError("trial log has no frame records", len(lines) + 1)
    return TrialRecord(geometry, obj, config, baseline, frames, true_class, true_tangential)


def read_trial(path) -> TrialRecord:
    # newline="" keeps a missing final LF visible for truncation detection
    with open(path, encoding="utf-8", newline="") as fh:
        return loads_trial(fh.read())


def trial_paths(directory) -> list[Path]:
    return sorted(Path(directory).glob(f"*{TRIAL_SUFFIX}"))
