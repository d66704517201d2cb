"""Panoptic quality metrics with thing/stuff splits and point-level IoU.

Segments are maximal same-(class, instance) point sets; stuff classes form
one segment per class. A prediction/ground-truth pair is a true positive
when classes agree and IoU exceeds 0.5, which makes the matching unique.
The minimum-points filter follows the public benchmark convention: small
unmatched ground-truth segments are not counted as misses and small
unmatched predictions are not counted as false positives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .fusion import PanopticLabeling


@dataclass
class ClassMatches:
    """Matching tallies for one class."""

    thing: bool
    tp: int = 0
    fp: int = 0
    fn: int = 0
    iou_sum: float = 0.0
    pairs: list[tuple[int, int, float]] = field(default_factory=list)
    # pointwise class overlap counts (PQ-dagger uses the ratio for stuff)
    point_inter: int = 0
    point_union: int = 0

    @property
    def point_iou(self) -> float:
        return self.point_inter / self.point_union if self.point_union else 0.0

    def merge(self, other: "ClassMatches") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        self.iou_sum += other.iou_sum
        self.pairs.extend(other.pairs)
        self.point_inter += other.point_inter
        self.point_union += other.point_union


@dataclass
class SegmentMatches:
    """Per-class matching results over one or more scans."""

    per_class: dict[int, ClassMatches]
    min_points: int


@dataclass(frozen=True)
class ClassScore:
    pq: float
    rq: float
    sq: float
    iou: float
    tp: int
    fp: int
    fn: int
    thing: bool


@dataclass(frozen=True)
class PQReport:
    """Class scores plus the aggregate means.

    Aggregates average over classes that participate (any TP/FP/FN after
    filtering); pq_dagger swaps the stuff-class PQ for its pointwise IoU.
    """

    per_class: dict[int, ClassScore]
    pq: float
    pq_dagger: float
    rq: float
    sq: float
    pq_things: float
    rq_things: float
    sq_things: float
    pq_stuff: float
    rq_stuff: float
    sq_stuff: float
    miou: float


def _segments(labeling: PanopticLabeling, cls: int, thing: bool) -> dict[int, np.ndarray]:
    """Map segment key -> point indices for one class."""
    in_cls = labeling.semantic == cls
    if not thing:
        idx = np.nonzero(in_cls)[0]
        return {0: idx} if idx.size else {}
    out = {}
    ids = labeling.instance[in_cls]
    idx = np.nonzero(in_cls)[0]
    for iid in np.unique(ids):
        out[int(iid)] = idx[ids == iid]
    return out


def match_segments(pred: PanopticLabeling, gt: PanopticLabeling,
                   min_points: int = 0, ignore_class: int = 0) -> SegmentMatches:
    """Match predicted and ground-truth segments class by class.

    Raises:
        ShapeError: labelings differ in point count.
    """
    if len(pred) != len(gt):
        raise ShapeError("pred and gt point counts differ")
    things = gt.thing_classes
    classes = np.union1d(np.unique(gt.semantic), np.unique(pred.semantic))
    result: dict[int, ClassMatches] = {}
    for cls in classes.tolist():
        if cls == ignore_class:
            continue
        thing = cls in things
        gt_segs = _segments(gt, cls, thing)
        pred_segs = _segments(pred, cls, thing)
        cm = ClassMatches(thing=thing)

        # pointwise overlap of the class masks (reported for PQ-dagger)
        gt_pts = sum(len(v) for v in gt_segs.values())
        pred_pts = sum(len(v) for v in pred_segs.values())
        if gt_pts or pred_pts:
            gt_mask = gt.semantic == cls
            inter_pts = int(np.count_nonzero(gt_mask & (pred.semantic == cls)))
            cm.point_inter = inter_pts
            cm.point_union = gt_pts + pred_pts - inter_pts

        matched_gt: set[int] = set()
        matched_pred: set[int] = set()
        for gid, gpts in gt_segs.items():
            for pid, ppts in pred_segs.items():
                inter = np.intersect1d(gpts, ppts, assume_unique=True).size
                if inter == 0:
                    continue
                union = len(gpts) + len(ppts) - inter
                iou = inter / union
                if iou > 0.5:
                    # IoU > 0.5 admits at most one partner on either side
                    assert gid not in matched_gt and pid not in matched_pred
                    matched_gt.add(gid)
                    matched_pred.add(pid)
                    cm.tp += 1
                    cm.iou_sum += iou
                    cm.pairs.append((pid, gid, iou))
        cm.fn = sum(1 for gid, gpts in gt_segs.items()
                    if gid not in matched_gt and len(gpts) >= max(min_points, 1))
        cm.fp = sum(1 for pid, ppts in pred_segs.items()
                    if pid not in matched_pred and len(ppts) >= max(min_points, 1))
        result[cls] = cm
    return SegmentMatches(per_class=result, min_points=min_points)


def _mean(values: list[float]) -> float:
    return float(np.mean(values)) if values else 0.0


def panoptic_quality(matches: SegmentMatches) -> PQReport:
    """Reduce matches to PQ/RQ/SQ per class and the aggregate means."""
    scores: dict[int, ClassScore] = {}
    for cls, cm in sorted(matches.per_class.items()):
        if cm.tp + cm.fp + cm.fn == 0:
            continue
        sq = cm.iou_sum / cm.tp if cm.tp else 0.0
        rq = cm.tp / (cm.tp + 0.5 * cm.fp + 0.5 * cm.fn)
        scores[cls] = ClassScore(pq=sq * rq, rq=rq, sq=sq, iou=cm.point_iou,
                                 tp=cm.tp, fp=cm.fp, fn=cm.fn, thing=cm.thing)
    things = [s for s in scores.values() if s.thing]
    stuff = [s for s in scores.values() if not s.thing]
    return PQReport(
        per_class=scores,
        pq=_mean([s.pq for s in scores.values()]),
        pq_dagger=_mean([s.pq if s.thing else s.iou for s in scores.values()]),
        rq=_mean([s.rq for s in scores.values()]),
        sq=_mean([s.sq for s in scores.values()]),
        pq_things=_mean([s.pq for s in things]),
        rq_things=_mean([s.rq for s in things]),
        sq_things=_mean([s.sq for s in things]),
        pq_stuff=_mean([s.pq for s in stuff]),
        rq_stuff=_mean([s.rq for s in stuff]),
        sq_stuff=_mean([s.sq for s in stuff]),
        miou=_mean([s.iou for s in scores.values()]),
    )


def evaluate(pred: PanopticLabeling, gt: PanopticLabeling,
             min_points: int = 0, ignore_class: int = 0) -> PQReport:
    return panoptic_quality(match_segments(pred, gt, min_points, ignore_class))


def mean_iou(pred_classes: np.ndarray, gt_classes: np.ndarray, num_classes: int,
             ignore_class: int = 0) -> tuple[dict[int, float], float]:
    """Pointwise per-class IoU and its mean over present classes."""
    pred_classes = np.asarray(pred_classes)
    gt_classes = np.asarray(gt_classes)
    if pred_classes.shape != gt_classes.shape:
        raise ShapeError("pred and gt lengths differ")
    per_class: dict[int, float] = {}
    for cls in range(num_classes):
        if cls == ignore_class:
            continue
        p = pred_classes == cls
        g = gt_classes == cls
        union = int(np.count_nonzero(p | g))
        if union == 0:
            continue
        per_class[cls] = int(np.count_nonzero(p & g)) / union
    return per_class, _mean(list(per_class.values()))


def format_report(report: PQReport) -> str:
    """Human-readable table of the per-class and aggregate metrics."""
    lines = [f"{'class':>8} {'PQ':>8} {'RQ':>8} {'SQ':>8} {'IoU':>8} "
             f"{'TP':>5} {'FP':>5} {'FN':>5} kind"]
    for cls, s in sorted(report.per_class.items()):
        lines.append(f"{cls:>8} {s.pq:8.4f} {s.rq:8.4f} {s.sq:8.4f} {s.iou:8.4f} "
                     f"{s.tp:>5} {s.fp:>5} {s.fn:>5} "
                     f"{'thing' if s.thing else 'stuff'}")
    lines.append("")
    lines.append(f"PQ={report.pq:.4f} PQ+={report.pq_dagger:.4f} "
                 f"RQ={report.rq:.4f} SQ={report.sq:.4f} mIoU={report.miou:.4f}")
    lines.append(f"things: PQ={report.pq_things:.4f} RQ={report.rq_things:.4f} "
                 f"SQ={report.sq_things:.4f}")
    lines.append(f"stuff:  PQ={report.pq_stuff:.4f} RQ={report.rq_stuff:.4f} "
                 f"SQ={report.sq_stuff:.4f}")
    return "\n".join(lines)


def report_key_values(report: PQReport) -> str:
    """Machine-readable report, one ``key=value`` per line, for CI diffing."""
    lines = []
    for name in ("pq", "pq_dagger", "rq", "sq", "pq_things", "rq_things",
                 "sq_things", "pq_stuff", "rq_stuff", "sq_stuff", "miou"):
        lines.append(f"{name}={getattr(report, name):.6f}")
    for cls, s in sorted(report.per_class.items()):
        for name in ("pq", "rq", "sq", "iou"):
            lines.append(f"class.{cls}.{name}={getattr(s, name):.6f}")
        for name in ("tp", "fp", "fn"):
            lines.append(f"class.{cls}.{name}={getattr(s, name)}")
    return "\n".join(lines)
