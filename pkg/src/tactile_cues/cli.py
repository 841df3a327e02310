"""Command-line entry point: simulate, features, classify, evaluate, tip-model."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .classify import EmptyEvaluationError, MotionClass, Thresholds, evaluate
from .cues import InsufficientDataError, RansacParams, extract_cues
from .frames import FrameConfig, FrameError
from .pipeline import analyze_trial, build_tracks, frame_features
from .report import (evaluation_report, render_evaluation_text, render_trial_text, to_json_line,
                     trial_report)
from .sim import CONDITIONS, generate_dataset, load_catalog
from .tipping import OutOfRangeError, TipScenario, contact_drop, drop_slope, tip_angle, x_max
from .triallog import TRIAL_SUFFIX, TrialLogError, read_trial, trial_paths, write_trial


class ValidationError(Exception):
    pass


def _frame_config(args) -> FrameConfig:
    return FrameConfig(upsample=args.upsample, patch_threshold=args.threshold)


def _load_thresholds(path) -> Thresholds:
    if path is None:
        return Thresholds()
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if "tip_band" in d:
        d["tip_band"] = tuple(d["tip_band"])
    try:
        return Thresholds(**d)
    except TypeError as exc:
        raise ValidationError(f"bad thresholds file: {exc}") from exc


def _inputs(path: str) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        return trial_paths(p)
    if p.is_file():
        return [p]
    raise ValidationError(f"no such file or directory: {path}")


def cmd_simulate(args) -> int:
    objects = load_catalog(args.objects, args.object_set)
    records = generate_dataset(objects, args.trials_per_condition, args.seed,
                               noise_sigma=args.noise_sigma, adversarial=args.adversarial, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i, rec in enumerate(records):
        name = f"trial_{i:04d}_{rec.object.name}_{rec.config.mobility.value}{TRIAL_SUFFIX}"
        write_trial(out / name, rec)
        names.append(name)
    manifest = {
        "seed": args.seed,
        "trials_per_condition": args.trials_per_condition,
        "noise_sigma": args.noise_sigma,
        "adversarial": args.adversarial,
        "objects": [o.name for o in objects],
        "conditions": [c.value for c in CONDITIONS],
        "trials": names,
    }
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(names)} trials to {out}")
    return 0


def cmd_features(args) -> int:
    rec = read_trial(args.input)
    feats = frame_features(rec.frames, rec.baseline, rec.geometry, _frame_config(args))
    w = sys.stdout.write
    w("# frames\n")
    w("index\ttimestamp\tnormal_mm\ttangential_mm\tpresent\tcop_x_mm\tcop_y_mm\tarea_mm2\tintensity\n")
    for i, (fr, f) in enumerate(zip(rec.frames, feats)):
        cop = (repr(f.cop[0]), repr(f.cop[1])) if f.present else ("", "")
        inten = "" if f.intensity is None else repr(f.intensity)
        w(f"{i}\t{fr.timestamp!r}\t{fr.robot_pose[0]!r}\t{fr.robot_pose[1]!r}\t{int(f.present)}\t"
          f"{cop[0]}\t{cop[1]}\t{f.area!r}\t{inten}\n")
    tracks = build_tracks(rec.frames, feats)
    w("\n# cues\n")
    w("feature\taxis\tpoints\tbreakpoint\tslope_1\tslope_2\tmean_1\tmean_2\tsse\tinliers\n")
    try:
        cues = extract_cues(tracks, RansacParams())
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for label, fit in sorted(cues.fits.items()):
        t = tracks[label]
        w(f"{label}\t{t.axis_label}\t{len(t)}\t{fit.breakpoint!r}\t{fit.slope[0]!r}\t{fit.slope[1]!r}\t"
          f"{fit.mean[0]!r}\t{fit.mean[1]!r}\t{fit.sse!r}\t{fit.inlier_count}\n")
    return 0


def _classify_paths(paths, args):
    th = _load_thresholds(getattr(args, "thresholds", None))
    fc = _frame_config(args)
    for p in paths:
        rec = read_trial(p)
        a = analyze_trial(rec.frames, rec.baseline, rec.geometry, fc, RansacParams(), th)
        yield p, rec, trial_report(p.name, a)


def cmd_classify(args) -> int:
    paths = _inputs(args.input)
    if not paths:
        raise ValidationError(f"no trial logs in {args.input}")
    out = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else sys.stdout
    try:
        for _, _, r in _classify_paths(paths, args):
            out.write((to_json_line(r) if args.format == "json" else render_trial_text(r)) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_evaluate(args) -> int:
    paths = _inputs(args.input)
    pairs, unclassified = [], 0
    if args.reports:
        preds = {}
        with open(args.reports, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    r = json.loads(line)
                    preds[r["source"]] = r["predicted"]
        for p in paths:
            rec = read_trial(p)
            pred = preds.get(p.name)
            if pred is None:
                unclassified += 1
            else:
                pairs.append((rec.true_class, MotionClass(pred)))
    else:
        for _, rec, r in _classify_paths(paths, args):
            if r["predicted"] is None:
                unclassified += 1
            else:
                pairs.append((rec.true_class, MotionClass(r["predicted"])))
    cm = evaluate(pairs)
    report = evaluation_report(cm, unclassified)
    print(to_json_line(report) if args.format == "json" else render_evaluation_text(report))
    return 0


def cmd_tip_model(args) -> int:
    s = TipScenario(args.radius, args.width, args.height)
    xm = x_max(s)
    print("x_mm\ttheta_rad\tdrop_mm\tslope")
    for k in range(args.steps + 1):
        x = xm * k / args.steps
        th = tip_angle(s, x)
        slope = drop_slope(s, x) if k < args.steps else float("inf")
        print(f"{x!r}\t{th!r}\t{contact_drop(s, th)!r}\t{slope!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tactile-cues", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def frame_opts(p):
        p.add_argument("--upsample", type=int, default=FrameConfig.upsample)
        p.add_argument("--threshold", type=float, default=FrameConfig.patch_threshold)

    p = sub.add_parser("simulate", help="generate labeled synthetic trials")
    p.add_argument("--objects", default=None, help="catalog JSON (default: bundled 13-object table)")
    p.add_argument("--object-set", choices=("all", "prototypical"), default="all")
    p.add_argument("--trials-per-condition", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=2.0)
    p.add_argument("--adversarial", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("features", help="per-frame features and fitted cues of one trial")
    p.add_argument("--in", dest="input", required=True)
    frame_opts(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("classify", help="classify trial logs")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--thresholds", default=None)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out", default=None)
    frame_opts(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="confusion matrix of predictions vs true labels")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--reports", default=None, help="classify output to score instead of re-classifying")
    p.add_argument("--thresholds", default=None)
    p.add_argument("--format", choices=("json", "text"), default="text")
    frame_opts(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tip-model", help="tip angle / contact drop table")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--width", type=float, required=True)
    p.add_argument("--height", type=float, required=True)
    p.add_argument("--steps", type=int, default=50)
    p.set_defaults(func=cmd_tip_model)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, TrialLogError, FrameError, InsufficientDataError,
            EmptyEvaluationError, OutOfRangeError, ValueError, FileNotFoundError,
            IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
