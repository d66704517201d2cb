"""Training losses as pure scalar functions of prediction/target arrays.

Everything here is side-effect free and hand-checkable: semantic losses
(weighted cross entropy, Lovasz softmax surrogate of IoU, total variation
of the error map), the foreground embedding regression loss, and the
binary pairwise-matrix segmentation loss with its ground-truth builder.
No autograd machinery; gradients are verified numerically in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, LabelError, ShapeError
from .instance import PillarSet

EPS = 1e-8


@dataclass(frozen=True)
class LossWeights:
    """Mixing weights: top-level betas plus the internal semantic mix."""

    beta_semantic: float = 1.0
    beta_embedding: float = 0.1
    beta_instance: float = 0.2
    wce_mix: float = 1.0
    lovasz_mix: float = 1.5
    tv_mix: float = 7.5

    def __post_init__(self):
        for name in ("beta_semantic", "beta_embedding", "beta_instance",
                     "wce_mix", "lovasz_mix", "tv_mix"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be non-negative")


@dataclass(frozen=True)
class PillarGT:
    """Per-pillar ground-truth instance labels and the equality matrix."""

    labels: np.ndarray  # (M,) modal ground-truth instance id per pillar
    matrix: np.ndarray  # (M, M) bool, True where two pillars share a label


def _flatten_valid(pred, gt, valid_mask):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt)
    if pred.ndim != 3:
        raise ShapeError(f"pred must be (H, W, C), got {pred.shape}")
    if gt.shape != pred.shape[:2]:
        raise ShapeError("gt shape does not match pred")
    flat_pred = pred.reshape(-1, pred.shape[2])
    flat_gt = gt.reshape(-1)
    if valid_mask is not None:
        valid = np.asarray(valid_mask, dtype=bool).reshape(-1)
        flat_pred = flat_pred[valid]
        flat_gt = flat_gt[valid]
    if flat_gt.size and (flat_gt.min() < 0 or flat_gt.max() >= pred.shape[2]):
        raise LabelError("gt class id outside [0, C)")
    return flat_pred, flat_gt


def weighted_cross_entropy(pred: np.ndarray, gt: np.ndarray,
                           class_weights: np.ndarray | None = None,
                           valid_mask: np.ndarray | None = None) -> float:
    """Mean over valid pixels of -w_gt * log(p_gt), probabilities floored at EPS."""
    flat_pred, flat_gt = _flatten_valid(pred, gt, valid_mask)
    if flat_gt.size == 0:
        return 0.0
    if class_weights is None:
        class_weights = np.ones(pred.shape[2])
    class_weights = np.asarray(class_weights, dtype=np.float64)
    p = np.clip(flat_pred[np.arange(flat_gt.size), flat_gt], EPS, None)
    return float(np.mean(-class_weights[flat_gt] * np.log(p)))


def inverse_log_frequency_weights(frequencies: np.ndarray) -> np.ndarray:
    """Default class weighting 1 / log(1.02 + freq)."""
    return 1.0 / np.log(1.02 + np.asarray(frequencies, dtype=np.float64))


def _lovasz_grad(fg_sorted: np.ndarray) -> np.ndarray:
    """Discrete gradient of the Jaccard loss along a sorted error prefix."""
    gts = fg_sorted.sum()
    intersection = gts - np.cumsum(fg_sorted)
    union = gts + np.cumsum(1.0 - fg_sorted)
    jaccard = 1.0 - intersection / union
    if fg_sorted.size > 1:
        jaccard[1:] = jaccard[1:] - jaccard[:-1]
    return jaccard


def _lovasz_errors(errors: np.ndarray, fg: np.ndarray) -> float:
    # descending stable sort: ties keep original index order
    order = np.argsort(-errors, kind="stable")
    return float(np.dot(errors[order], _lovasz_grad(fg[order].astype(np.float64))))


def lovasz_softmax(pred: np.ndarray, gt: np.ndarray,
                   valid_mask: np.ndarray | None = None) -> float:
    """Multi-class Lovasz extension of the Jaccard loss.

    Per class present in the ground truth, the error vector is 1 - p on that
    class's pixels and p elsewhere; sorted descending and dotted with the
    Jaccard-loss gradient. Averaged over present classes. On hard {0, 1}
    predictions this equals the mean of (1 - IoU) per present class.
    """
    flat_pred, flat_gt = _flatten_valid(pred, gt, valid_mask)
    if flat_gt.size == 0:
        return 0.0
    losses = []
    for cls in np.unique(flat_gt):
        fg = flat_gt == cls
        p = flat_pred[:, cls]
        errors = np.where(fg, 1.0 - p, p)
        losses.append(_lovasz_errors(errors, fg))
    return float(np.mean(losses))


def total_variation(pred: np.ndarray, gt: np.ndarray) -> float:
    """Isotropic L1 total variation of the absolute-error map.

    The error e = |pred - onehot(gt)| is differenced down and right on the
    (H-1) x (W-1) base grid, summed over channels and averaged over base
    pixels.

    Raises:
        ShapeError: pred is not (H, W, C) matching gt (H, W).
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt)
    if pred.ndim != 3 or gt.shape != pred.shape[:2]:
        raise ShapeError("pred must be (H, W, C) with gt (H, W)")
    h, w, c = pred.shape
    if gt.size and (gt.min() < 0 or gt.max() >= c):
        raise LabelError("gt class id outside [0, C)")
    if h < 2 or w < 2:
        return 0.0
    onehot = np.zeros_like(pred)
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    onehot[rows, cols, gt] = 1.0
    err = np.abs(pred - onehot)
    down = np.abs(err[1:, :-1, :] - err[:-1, :-1, :])
    right = np.abs(err[:-1, 1:, :] - err[:-1, :-1, :])
    return float((down.sum() + right.sum()) / ((h - 1) * (w - 1)))


def semantic_loss(pred: np.ndarray, gt: np.ndarray,
                  class_weights: np.ndarray | None = None,
                  valid_mask: np.ndarray | None = None,
                  weights: LossWeights = LossWeights()) -> float:
    """Weighted cross entropy + 1.5 Lovasz + 7.5 TV (default mix)."""
    return (weights.wce_mix * weighted_cross_entropy(pred, gt, class_weights, valid_mask)
            + weights.lovasz_mix * lovasz_softmax(pred, gt, valid_mask)
            + weights.tv_mix * total_variation(pred, gt))


def embedding_loss(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray,
                   reduction: str = "sum") -> float:
    """Sum over foreground pixels of the Euclidean embedding error.

    ``reduction="mean"`` divides by the foreground count for scale-stable
    comparisons across frames; the default matches the plain sum.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != gt.shape or pred.shape[:2] != mask.shape or pred.shape[-1] != 2:
        raise ShapeError("embedding maps must be (H, W, 2) with mask (H, W)")
    norms = np.linalg.norm(gt[mask] - pred[mask], axis=-1)
    if reduction == "mean":
        return float(norms.mean()) if norms.size else 0.0
    return float(norms.sum())


def build_pillar_gt(pillars: PillarSet, gt_instance_fg: np.ndarray) -> PillarGT:
    """Ground truth for the pairwise matrix from per-point instance labels.

    Each pillar takes the modal instance id of its member points (ties to
    the smallest id); the matrix marks pillar pairs with equal labels.
    """
    gt_instance_fg = np.asarray(gt_instance_fg)
    if gt_instance_fg.shape != pillars.point_pillar.shape:
        raise ShapeError("per-point labels do not match pillar memberships")
    m = pillars.count
    if m == 0:
        return PillarGT(labels=np.empty(0, dtype=np.int64),
                        matrix=np.empty((0, 0), dtype=bool))
    pairs = np.stack([pillars.point_pillar, gt_instance_fg], axis=1)
    uniq, counts = np.unique(pairs, axis=0, return_counts=True)
    order = np.lexsort((uniq[:, 1], -counts, uniq[:, 0]))
    uniq = uniq[order]
    first = np.ones(uniq.shape[0], dtype=bool)
    first[1:] = uniq[1:, 0] != uniq[:-1, 0]
    labels = uniq[first, 1]
    return PillarGT(labels=labels, matrix=labels[:, None] == labels[None, :])


def instance_seg_loss(pred_matrix: np.ndarray, gt_matrix: np.ndarray) -> float:
    """Binary segmentation loss on the pairwise matrix: BCE + Lovasz hinge.

    The Lovasz term is the binary extension applied to the flattened
    absolute-error vector; on hard predictions it equals 1 - IoU of the
    positive entries.

    Raises:
        ShapeError: matrices differ in shape.
    """
    pred = np.asarray(pred_matrix, dtype=np.float64)
    gt = np.asarray(gt_matrix, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeError("prediction and ground-truth matrices differ in shape")
    p = pred.reshape(-1)
    g = gt.reshape(-1)
    bce = float(np.mean(-(g * np.log(np.clip(p, EPS, None))
                          + (1.0 - g) * np.log(np.clip(1.0 - p, EPS, None)))))
    errors = np.abs(p - g)
    return bce + _lovasz_errors(errors, g > 0.5)


def total_loss(parts, weights: LossWeights = LossWeights()) -> float:
    """Weighted combination of (semantic, embedding, instance) parts."""
    sem, emb, ins = parts
    return (weights.beta_semantic * sem + weights.beta_embedding * emb
            + weights.beta_instance * ins)
