"""Evaluation indices for ordinal grade predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMarginalsError


def _check_pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("empty prediction arrays")
    return pred, truth


def accuracy(pred, truth) -> float:
    """Fraction of exactly matching grades."""
    pred, truth = _check_pair(pred, truth)
    return float((pred == truth).mean())


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts of (true grade, predicted grade) pairs, 1-based grades."""

    counts: np.ndarray

    @classmethod
    def from_grades(cls, pred, truth, class_count: int) -> "ConfusionMatrix":
        pred, truth = _check_pair(pred, truth)
        pred = pred.ravel()
        truth = truth.ravel()
        for name, arr in (("pred", pred), ("truth", truth)):
            if arr.min() < 1 or arr.max() > class_count:
                raise ValueError(
                    f"{name} grades must lie in [1, {class_count}]")
        counts = np.zeros((class_count, class_count), dtype=np.int64)
        np.add.at(counts, (truth - 1, pred - 1), 1)
        return cls(counts)

    @property
    def proportions(self) -> np.ndarray:
        return self.counts / self.counts.sum()


def quadratic_weight_matrix(class_count: int) -> np.ndarray:
    """Agreement weights 1 - ((i - j) / (Class - 1))^2."""
    idx = np.arange(class_count)
    return 1.0 - ((idx[:, None] - idx[None, :]) / (class_count - 1)) ** 2


def quadratic_weighted_kappa(pred, truth, class_count: int) -> float:
    """Chance-corrected ordinal agreement in [-1, 1]."""
    confusion = ConfusionMatrix.from_grades(pred, truth, class_count)
    p = confusion.proportions
    w = quadratic_weight_matrix(class_count)
    p_observed = float((w * p).sum())
    marginal = np.outer(p.sum(axis=1), p.sum(axis=0))
    p_expected = float((w * marginal).sum())
    if 1.0 - p_expected < 1e-12:
        if abs(1.0 - p_observed) < 1e-12:
            return 1.0
        raise DegenerateMarginalsError(
            "chance agreement is 1; kappa undefined")
    return (p_observed - p_expected) / (1.0 - p_expected)


def grade_mae_series(pred, truth) -> np.ndarray:
    """Mean absolute grade error across roads, one value per time point.

    Inputs have shape (roads, time points).
    """
    pred, truth = _check_pair(pred, truth)
    if pred.ndim != 2:
        raise ValueError("expected (roads, time) grade matrices")
    return np.abs(pred.astype(np.float64) - truth).mean(axis=0)
