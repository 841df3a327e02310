"""Per-trial and per-dataset report records and their text rendering."""
from __future__ import annotations

import json
import math

from .classify import CLASS_ORDER, ConfusionMatrix, MotionClass
from .cues import PiecewiseFit
from .pipeline import TrialAnalysis


def _fit_dict(fit: PiecewiseFit) -> dict:
    return {
        "breakpoint": fit.breakpoint,
        "slope": list(fit.slope),
        "mean": list(fit.mean),
        "sse": fit.sse,
        "inlier_count": fit.inlier_count,
        "single_line": fit.single_line,
    }


def trial_report(source: str, analysis: TrialAnalysis) -> dict:
    cues = analysis.cues
    return {
        "record": "trial_report",
        "source": source,
        "predicted": None if analysis.predicted is None else analysis.predicted.value,
        "error": analysis.error,
        "cues": None if cues is None else {
            "drop_rate": list(cues.drop_rate),
            "horizontal_rate": list(cues.horizontal_rate),
            "intensity_mean": list(cues.intensity_mean),
            "area_rate": list(cues.area_rate),
        },
        "fits": {} if cues is None else {k: _fit_dict(v) for k, v in sorted(cues.fits.items())},
        "tangential": None if analysis.tangential is None else analysis.tangential.value,
        "horizontal_rate": analysis.horizontal_rate,
        "frames_with_patch": sum(f.present for f in analysis.features),
    }


def _finite_or_none(v: float) -> float | None:
    return v if math.isfinite(v) else None


def evaluation_report(cm: ConfusionMatrix, unclassified: int = 0) -> dict:
    return {
        "record": "evaluation",
        "classes": [c.value for c in CLASS_ORDER],
        "confusion": cm.counts.tolist(),
        "total": cm.total,
        "accuracy": cm.accuracy,
        "precision": {c.value: _finite_or_none(cm.precision(c)) for c in CLASS_ORDER},
        "recall": {c.value: _finite_or_none(cm.recall(c)) for c in CLASS_ORDER},
        "unclassified": unclassified,
    }


def to_json_line(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"))


def _num(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return f"{v:.3f}"


def _pair(v) -> str:
    return " ".join(_num(x) for x in v)


def render_trial_text(r: dict) -> str:
    out = [f"trial {r['source']}: {r['predicted'] or 'unclassified'}"]
    if r["error"]:
        out.append(f"  error: {r['error']}")
    if r["cues"]:
        for k in ("drop_rate", "horizontal_rate", "intensity_mean", "area_rate"):
            out.append(f"  {k:<16} {_pair(r['cues'][k])}")
    for name, f in r["fits"].items():
        out.append(f"  fit {name:<15} break {_num(f['breakpoint'])}  slope {_pair(f['slope'])}"
                   f"  mean {_pair(f['mean'])}  sse {_num(f['sse'])}  inliers {f['inlier_count']}")
    if r["tangential"]:
        out.append(f"  tangential {r['tangential']} (rate {_num(r['horizontal_rate'])})")
    return "\n".join(out)


def render_evaluation_text(r: dict) -> str:
    classes = r["classes"]
    out = ["confusion (rows: true, columns: predicted)",
           "  " + " ".join(f"{c:>10}" for c in [""] + classes)]
    for c, row in zip(classes, r["confusion"]):
        out.append("  " + f"{c:>10} " + " ".join(f"{n:>10d}" for n in row))
    out.append(f"total {r['total']}  accuracy {_num(r['accuracy'])}  unclassified {r['unclassified']}")
    for c in classes:
        out.append(f"  {c:<10} precision {_num(r['precision'][c])}  recall {_num(r['recall'][c])}")
    return "\n".join(out)


def predicted_class(r: dict) -> MotionClass | None:
    return None if r["predicted"] is None else MotionClass(r["predicted"])
