"""Confusion-matrix metrics. The positive class is CODE throughout."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Confusion:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(
            self.tp + other.tp, self.fn + other.fn, self.fp + other.fp, self.tn + other.tn
        )

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}


def confusion_from_predictions(y_true, y_pred) -> Confusion:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    return Confusion(
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
    )


def has_both_classes(c: Confusion) -> bool:
    return (c.tp + c.fn) > 0 and (c.fp + c.tn) > 0


def balanced_accuracy(c: Confusion) -> float:
    """Mean of sensitivity and specificity; defined only when the
    evaluation set holds both classes."""
    if not has_both_classes(c):
        raise ValueError("balanced accuracy undefined: a class is absent")
    sensitivity = c.tp / (c.tp + c.fn)
    specificity = c.tn / (c.fp + c.tn)
    return (sensitivity + specificity) / 2.0


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
    return precision, recall, f1


def macro_metrics(c: Confusion) -> tuple[float, float, float]:
    """Per-class precision/recall/F1 averaged with equal class weight."""
    if not has_both_classes(c):
        raise ValueError("macro metrics undefined: a class is absent")
    pos = _prf(c.tp, c.fp, c.fn)
    neg = _prf(c.tn, c.fn, c.fp)
    return tuple((a + b) / 2.0 for a, b in zip(pos, neg))  # type: ignore[return-value]
