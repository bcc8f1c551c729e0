"""Scoring detected beats against annotations."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyCorpus, ParamError

SUMMARY_METRICS = (
    "detection_accuracy", "precision", "recall", "f1", "te_ms",
    "classification_accuracy", "sensitivity", "specificity",
)


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int], ...]  # (truth index, detected index)
    unmatched_truth: tuple[int, ...]
    unmatched_detected: tuple[int, ...]
    tolerance: int
    errors: tuple[int, ...] = ()  # |truth - detected| per pair, in samples


@dataclass(frozen=True)
class DetectionReport:
    tp: int
    fp: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    te_ms: float


@dataclass(frozen=True)
class ClassificationReport:
    ts1: int
    ts2: int
    fs1: int
    fs2: int
    accuracy: float
    sensitivity: float
    specificity: float


def _pct(num, den):
    return 100.0 * num / den if den else 0.0


def match_beats(truth_pos, detected_pos, tol: int) -> MatchResult:
    """Greedy one-to-one matching, closest pairs first.

    Pairs with ``|truth - detected| <= tol`` are accepted in order of
    increasing distance, then truth index, then detected index, skipping
    any whose endpoint is already matched.
    """
    if tol < 0:
        raise ParamError("tolerance must be non-negative")
    t = np.asarray(truth_pos, dtype=np.int64)
    d = np.asarray(detected_pos, dtype=np.int64)
    cand = []
    for i, tp in enumerate(t.tolist()):
        lo = np.searchsorted(d, tp - tol, side="left")
        hi = np.searchsorted(d, tp + tol, side="right")
        for j in range(lo, hi):
            cand.append((abs(int(d[j]) - tp), i, j))
    cand.sort()
    t_used = np.zeros(t.size, dtype=bool)
    d_used = np.zeros(d.size, dtype=bool)
    pairs, errs = [], []
    for err, i, j in cand:
        if t_used[i] or d_used[j]:
            continue
        t_used[i] = d_used[j] = True
        pairs.append((i, j))
        errs.append(err)
    order = np.argsort([p[0] for p in pairs], kind="stable")
    pairs = [pairs[k] for k in order]
    errs = [errs[k] for k in order]
    return MatchResult(tuple(pairs),
                       tuple(np.flatnonzero(~t_used).tolist()),
                       tuple(np.flatnonzero(~d_used).tolist()),
                       int(tol), tuple(errs))


def detection_metrics(m: MatchResult, fs: int) -> DetectionReport:
    """Accuracy ignores true negatives, so it is TP / (TP + FP + FN)."""
    tp, fp, fn = len(m.pairs), len(m.unmatched_detected), len(m.unmatched_truth)
    te = float(np.mean(m.errors)) / fs * 1e3 if m.errors else 0.0
    return DetectionReport(
        tp, fp, fn,
        accuracy=_pct(tp, tp + fp + fn),
        precision=_pct(tp, tp + fp),
        recall=_pct(tp, tp + fn),
        f1=_pct(2 * tp, 2 * tp + fp + fn),
        te_ms=te,
    )


def classification_metrics(m: MatchResult, truth_labels, detected_labels) -> ClassificationReport:
    """Label agreement over matched pairs only.

    Sensitivity is the accuracy on true S2 beats, specificity on true S1.
    """
    ts1 = ts2 = fs1 = fs2 = 0
    for i, j in m.pairs:
        t, d = truth_labels[i], detected_labels[j]
        if t == "S1":
            ts1 += d == "S1"
            fs1 += d == "S2"
        else:
            ts2 += d == "S2"
            fs2 += d == "S1"
    return ClassificationReport(
        ts1, ts2, fs1, fs2,
        accuracy=_pct(ts1 + ts2, ts1 + ts2 + fs1 + fs2),
        sensitivity=_pct(ts2, ts2 + fs2),
        specificity=_pct(ts1, ts1 + fs1),
    )


@dataclass(frozen=True)
class RecordingReport:
    recording: str
    detection: DetectionReport
    classification: ClassificationReport

    def metrics(self) -> dict[str, float]:
        d, c = self.detection, self.classification
        return {
            "detection_accuracy": d.accuracy, "precision": d.precision,
            "recall": d.recall, "f1": d.f1, "te_ms": d.te_ms,
            "classification_accuracy": c.accuracy,
            "sensitivity": c.sensitivity, "specificity": c.specificity,
        }

    def to_dict(self) -> dict:
        return {"recording": self.recording,
                "detection": asdict(self.detection),
                "classification": asdict(self.classification)}


def evaluate_recording(name, truth, detected, tol: int) -> RecordingReport:
    """Score one recording.  ``truth`` and ``detected`` need ``positions``,
    ``labels`` and (for ``truth``) ``sample_rate``."""
    m = match_beats(truth.positions, detected.positions, tol)
    return RecordingReport(name, detection_metrics(m, truth.sample_rate),
                           classification_metrics(m, truth.labels, detected.labels))


def aggregate(reports) -> dict[str, dict[str, float]]:
    """Mean, median and quartiles (linear interpolation) of every metric."""
    reports = list(reports)
    if not reports:
        raise EmptyCorpus("nothing to aggregate")
    table = {k: np.array([r.metrics()[k] for r in reports]) for k in SUMMARY_METRICS}
    return {
        k: {"mean": float(v.mean()), "median": float(np.median(v)),
            "p25": float(np.percentile(v, 25)), "p75": float(np.percentile(v, 75))}
        for k, v in table.items()
    }


def summary_csv(summary: dict[str, dict[str, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "mean", "median", "p25", "p75"])
    for k, row in summary.items():
        w.writerow([k] + [repr(row[c]) for c in ("mean", "median", "p25", "p75")])
    return buf.getvalue()
