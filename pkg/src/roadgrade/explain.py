"""Combination-importance analysis of the attention score tensor.

The fusion layer's score tensor (heads, comb, comb, d) is collapsed to a
comb x comb heatmap, normalized so all cells sum to one, and reduced to
simplex vectors: importance per combination, per temporal resolution and per
graph type.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .graphs import GRAPH_KEYS, GRAPH_LETTERS
from .tensor import softmax

TRACE_FORMAT = "roadgrade-attention"
TRACE_VERSION = 1

_RESOLUTION_BY_LETTER = {"h": "hour", "d": "day", "w": "week"}
_GRAPH_BY_LETTER = {letter: key for key, letter in GRAPH_LETTERS.items()}


@dataclass(frozen=True)
class AttentionRecord:
    """Score tensor for one prediction-length setting plus its labels."""

    attention: np.ndarray          # (heads, comb, comb, d)
    labels: tuple[str, ...]
    prediction_length: int

    def __post_init__(self):
        attention = np.asarray(self.attention, dtype=np.float64)
        object.__setattr__(self, "attention", attention)
        object.__setattr__(self, "labels", tuple(self.labels))
        if attention.ndim != 4 or attention.shape[1] != attention.shape[2]:
            raise ValueError("attention must have shape (h, comb, comb, d)")
        if len(self.labels) != attention.shape[1]:
            raise ValueError("one label per combination required")
        sums = attention.sum(axis=2)
        if not np.allclose(sums, 1.0, atol=1e-6):
            raise ValueError("attention is not normalized over the attended "
                             "combination axis")


def aggregate_attention(attention: np.ndarray) -> np.ndarray:
    """Sum the score tensor over heads and features to a comb x comb matrix."""
    attention = np.asarray(attention)
    if attention.ndim != 4:
        raise ValueError("expected a (heads, comb, comb, d) tensor")
    return attention.sum(axis=(0, 3))


def normalize_heatmap(aggregated: np.ndarray) -> np.ndarray:
    """Softmax over all cells, so the whole heatmap carries unit mass."""
    aggregated = np.asarray(aggregated)
    flat = softmax(aggregated.reshape(-1))
    return flat.reshape(aggregated.shape)


def combination_importance(heatmap: np.ndarray,
                           sum_axis: str = "column") -> np.ndarray:
    """Per-combination importance: column (or row) sums, then softmax.

    Columns index the attended-to combination; `sum_axis="row"` is kept for
    sensitivity analysis.
    """
    heatmap = np.asarray(heatmap)
    if sum_axis == "column":
        sums = heatmap.sum(axis=0)
    elif sum_axis == "row":
        sums = heatmap.sum(axis=1)
    else:
        raise ValueError(f"unknown sum_axis {sum_axis!r}")
    return softmax(sums)


def _split_label(label: str) -> tuple[str, str]:
    try:
        graph_letter, res_letter = label.split("_")
        return _GRAPH_BY_LETTER[graph_letter], _RESOLUTION_BY_LETTER[res_letter]
    except (ValueError, KeyError):
        raise ValueError(f"malformed combination label {label!r}") from None


def decouple(importance: np.ndarray, labels: tuple[str, ...],
             axis: str) -> dict[str, float]:
    """Group the combination importance by resolution or by graph type.

    Members of each group are summed and the group sums renormalized with a
    softmax; the result maps group names to importance.
    """
    importance = np.asarray(importance)
    if importance.shape != (len(labels),):
        raise ValueError("importance and labels disagree")
    if axis == "resolution":
        group_of = {label: _split_label(label)[1] for label in labels}
        order = [r for r in ("hour", "day", "week")
                 if r in set(group_of.values())]
    elif axis == "graph":
        group_of = {label: _split_label(label)[0] for label in labels}
        order = [g for g in GRAPH_KEYS if g in set(group_of.values())]
    else:
        raise ValueError(f"unknown axis {axis!r}")
    sums = np.array([
        sum(value for label, value in zip(labels, importance)
            if group_of[label] == name)
        for name in order])
    weights = softmax(sums)
    return {name: float(w) for name, w in zip(order, weights)}


@dataclass(frozen=True)
class ImportanceReport:
    """All derived importance views for one prediction length."""

    labels: tuple[str, ...]
    aggregated: np.ndarray                 # raw comb x comb sums
    heatmap: np.ndarray                    # normalized, cells sum to 1
    combination: dict[str, float]
    resolution: dict[str, float]
    graph: dict[str, float]
    prediction_length: int


def build_report(record: AttentionRecord,
                 sum_axis: str = "column") -> ImportanceReport:
    aggregated = aggregate_attention(record.attention)
    heatmap = normalize_heatmap(aggregated)
    importance = combination_importance(heatmap, sum_axis=sum_axis)
    return ImportanceReport(
        labels=record.labels,
        aggregated=aggregated,
        heatmap=heatmap,
        combination={label: float(v)
                     for label, v in zip(record.labels, importance)},
        resolution=decouple(importance, record.labels, "resolution"),
        graph=decouple(importance, record.labels, "graph"),
        prediction_length=record.prediction_length,
    )


# -- artifacts -------------------------------------------------------------------


def write_attention_record(path, record: AttentionRecord) -> None:
    payload = {
        "format": TRACE_FORMAT,
        "version": TRACE_VERSION,
        "prediction_length": record.prediction_length,
        "labels": list(record.labels),
        "shape": list(record.attention.shape),
        "values": record.attention.ravel().tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)


def read_attention_record(path) -> AttentionRecord:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read attention record {path}: {exc}") \
            from None
    if (payload.get("format") != TRACE_FORMAT
            or payload.get("version") != TRACE_VERSION):
        raise DataError(f"{path} is not a version-{TRACE_VERSION} "
                        "attention record")
    attention = np.array(payload["values"]).reshape(payload["shape"])
    try:
        return AttentionRecord(attention, tuple(payload["labels"]),
                               payload["prediction_length"])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_report_json(path, report: ImportanceReport) -> None:
    payload = {
        "prediction_length": report.prediction_length,
        "labels": list(report.labels),
        "heatmap": [[float(v) for v in row] for row in report.heatmap],
        "combination_importance": report.combination,
        "resolution_importance": report.resolution,
        "graph_importance": report.graph,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)


def write_report_csv(path, report: ImportanceReport) -> None:
    """Heatmap in long format: one (row, col, value) line per cell."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "value"])
        for i, row_label in enumerate(report.labels):
            for j, col_label in enumerate(report.labels):
                writer.writerow([row_label, col_label,
                                 repr(float(report.heatmap[i, j]))])
