"""Segmentation quality metrics and the training loss they feed.

Masks are binary uint8 arrays, predictions either binary masks or
probability maps in [0, 1].  Images whose ground truth has no positive
pixels cannot support a meaningful recall; those are flagged degenerate
and excluded from dataset means unless a caller opts in.
"""

from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 1e-7  # cross entropy clip, keeps log() finite on hard 0/1 outputs


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def degenerate(self) -> bool:
        """True when the ground truth contains no positive pixels."""
        return self.tp + self.fn == 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ImageScore:
    id: str
    recall: float
    precision: float
    dice: float
    degenerate: bool


@dataclass(frozen=True)
class SegmentationScores:
    """Per-image means over a dataset."""

    recall: float
    precision: float
    dice: float
    n_scored: int
    n_degenerate: int


def binarize(prob: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Threshold a probability map; pixels >= threshold become foreground."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie strictly between 0 and 1, got {threshold}")
    return (np.asarray(prob) >= threshold).astype(np.uint8)


def _check_binary_pair(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"prediction shape {pred.shape} does not match ground truth {gt.shape}")
    for name, arr in (("prediction", pred), ("ground truth", gt)):
        if not np.isin(arr, (0, 1)).all():
            raise ValueError(f"{name} mask must be binary")
    return pred.astype(bool), gt.astype(bool)


def confusion(pred: np.ndarray, gt: np.ndarray) -> ConfusionCounts:
    pred, gt = _check_binary_pair(pred, gt)
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    tn = int(np.count_nonzero(~pred & ~gt))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def recall(counts: ConfusionCounts) -> float:
    denom = counts.tp + counts.fn
    if denom == 0:
        return 1.0
    return counts.tp / denom


def precision(counts: ConfusionCounts) -> float:
    denom = counts.tp + counts.fp
    if denom == 0:
        return 1.0
    return counts.tp / denom


def dice_from_counts(counts: ConfusionCounts) -> float:
    denom = 2 * counts.tp + counts.fp + counts.fn
    if denom == 0:
        return 1.0
    return 2 * counts.tp / denom


def dice(pred: np.ndarray, gt: np.ndarray) -> float:
    return dice_from_counts(confusion(pred, gt))


def score_pair(pred: np.ndarray, gt: np.ndarray, id: str = "") -> ImageScore:
    counts = confusion(pred, gt)
    return ImageScore(
        id=id,
        recall=recall(counts),
        precision=precision(counts),
        dice=dice_from_counts(counts),
        degenerate=counts.degenerate,
    )


def dataset_scores(scores, include_degenerate: bool = False) -> SegmentationScores:
    """Average per-image scores; degenerate images are skipped by default."""
    scores = list(scores)
    if not scores:
        raise ValueError("cannot aggregate an empty score list")
    kept = scores if include_degenerate else [s for s in scores if not s.degenerate]
    n_degenerate = sum(1 for s in scores if s.degenerate)
    if not kept:
        raise ValueError("every image in the dataset is degenerate; nothing to average")
    n = len(kept)
    return SegmentationScores(
        recall=sum(s.recall for s in kept) / n,
        precision=sum(s.precision for s in kept) / n,
        dice=sum(s.dice for s in kept) / n,
        n_scored=n,
        n_degenerate=n_degenerate,
    )


@dataclass(frozen=True)
class LossConfig:
    beta: float = 0.5
    smooth: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.smooth <= 0.0:
            raise ValueError(f"smooth must be positive, got {self.smooth}")


def _check_prob_pair(prob: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    prob = np.asarray(prob, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if prob.shape != gt.shape:
        raise ValueError(f"probability shape {prob.shape} does not match ground truth {gt.shape}")
    return prob, gt


def soft_dice_loss(prob: np.ndarray, gt: np.ndarray, smooth: float = 1.0) -> float:
    prob, gt = _check_prob_pair(prob, gt)
    overlap = float((prob * gt).sum())
    mass = float(prob.sum() + gt.sum())
    return 1.0 - (2.0 * overlap + smooth) / (mass + smooth)


def binary_cross_entropy(prob: np.ndarray, gt: np.ndarray) -> float:
    prob, gt = _check_prob_pair(prob, gt)
    p = np.clip(prob, PROB_FLOOR, 1.0 - PROB_FLOOR)
    return float(-(gt * np.log(p) + (1.0 - gt) * np.log(1.0 - p)).mean())


def combined_loss(prob: np.ndarray, gt: np.ndarray, config: LossConfig | None = None) -> float:
    """beta * soft dice + (1 - beta) * mean cross entropy."""
    if config is None:
        config = LossConfig()
    return config.beta * soft_dice_loss(prob, gt, config.smooth) + (
        1.0 - config.beta
    ) * binary_cross_entropy(prob, gt)
