"""Instance segmentation metrics: per-instance IoU, mIoU, pixel accuracy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractError
from .scene import InstanceMask2D, validate_mask


@dataclass
class SegMetrics:
    """mIoU averages per-instance IoU over the IDs present in ground truth
    (background excluded); mAcc is plain per-pixel accuracy over all pixels
    including background. ``empty_gt`` flags ground truth with no instances,
    in which case ``miou`` is 0 by convention and should not be compared."""

    miou: float
    macc: float
    per_instance_iou: dict[int, float] = field(default_factory=dict)
    empty_gt: bool = False

    def to_dict(self) -> dict:
        return {
            "miou": self.miou,
            "macc": self.macc,
            "per_instance_iou": {str(k): v for k, v in self.per_instance_iou.items()},
            "empty_gt": self.empty_gt,
        }


def _iou(pred: np.ndarray, gt: np.ndarray) -> float:
    inter = int(np.count_nonzero(pred & gt))
    union = int(np.count_nonzero(pred | gt))
    return inter / union if union else 0.0


def compute_metrics(
    pred: InstanceMask2D,
    gt: InstanceMask2D,
    matching: str = "id",
) -> SegMetrics:
    """Compare a predicted instance mask against ground truth.

    With ``matching="id"`` (default) instances are matched by identical ID:
    the pipeline keeps IDs persistent end to end, so ID-faithful scoring is
    the honest metric. ``matching="hungarian"`` instead matches GT IDs to
    predicted IDs by maximum-IoU assignment, for comparison against
    ID-agnostic baselines.
    """
    if matching not in ("id", "hungarian"):
        raise ContractError(f"unknown matching {matching!r}")
    pred = validate_mask(pred)
    gt = validate_mask(gt)
    if pred.shape != gt.shape:
        raise ContractError(f"mask shapes differ: {pred.shape} vs {gt.shape}")

    macc = float(np.count_nonzero(pred == gt) / pred.size) if pred.size else 1.0
    gt_ids = np.unique(gt)
    gt_ids = gt_ids[gt_ids != 0]
    if gt_ids.size == 0:
        return SegMetrics(miou=0.0, macc=macc, per_instance_iou={}, empty_gt=True)

    per_instance: dict[int, float] = {}
    if matching == "id":
        for i in gt_ids:
            per_instance[int(i)] = _iou(pred == i, gt == i)
    else:
        pred_ids = np.unique(pred)
        pred_ids = pred_ids[pred_ids != 0]
        iou = np.zeros((gt_ids.size, max(pred_ids.size, 1)))
        for a, gi in enumerate(gt_ids):
            for b, pi in enumerate(pred_ids):
                iou[a, b] = _iou(pred == pi, gt == gi)
        rows, cols = linear_sum_assignment(iou, maximize=True)
        matched = dict(zip(rows.tolist(), cols.tolist()))
        for a, gi in enumerate(gt_ids):
            b = matched.get(a)
            per_instance[int(gi)] = iou[a, b] if b is not None and pred_ids.size else 0.0

    miou = float(np.mean(list(per_instance.values())))
    return SegMetrics(miou=miou, macc=macc, per_instance_iou=per_instance)
