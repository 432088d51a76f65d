"""
Baseline identifiers, fault detection and accuracy/precision/recall reports.
"""
from __future__ import annotations
import csv
import io
import logging
import pathlib
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from percmon import errors, types
from percmon.builtin import RELIABILITY_RANKING
from percmon.graph import DiagnosticGraph, base_id
from percmon.types import ACTIVE, FAIL

log = logging.getLogger(__name__)

ALL = "all"
OUTPUTS = "outputs"
MODULES = "modules"
SLICES = (ALL, OUTPUTS, MODULES)

IDENTIFICATION = "identification"
DETECTION = "detection"

CSV_FIELDS = ("algo", "kind", "task", "slice", "samples", "accuracy", "precision", "recall", "tp", "fp", "fn", "tn")


def _modules_follow_outputs(graph: DiagnosticGraph, bits: List[int]) -> types.FaultState:
    """A module mode is active as soon as a failure mode of one of its outputs is."""
    for module in graph.system.modules:
        if any(bits[i] for i in graph.modes_of_outputs(module.id)):
            for i in graph.modes_of_module(module.id):
                bits[i] = ACTIVE
    return tuple(bits)


def baseline_all_active(graph: DiagnosticGraph, syndrome: Sequence[int]) -> types.FaultState:
    """Every failure mode in the scope of a failing test is active."""
    syndrome = graph.check_syndrome(syndrome)
    bits = [0] * graph.n_failure_modes
    for test, outcome in zip(graph.tests, syndrome):
        if outcome == FAIL:
            for i in test.indices:
                bits[i] = ACTIVE
    return _modules_follow_outputs(graph, bits)


def baseline_reliability(graph: DiagnosticGraph, syndrome: Sequence[int], ranking: Sequence[str] = RELIABILITY_RANKING) -> types.FaultState:
    """
    For each failing test only the failure modes of the least reliable
    module involved are active. ``ranking`` lists modules from the most to
    the least reliable; slice-qualified module ids are ranked by their base id.
    """
    syndrome = graph.check_syndrome(syndrome)
    rank = {m: n for n, m in enumerate(ranking)}
    for module in graph.system.modules:
        if base_id(module.id) not in rank:
            raise errors.RankingError(f"Module '{module.id}' is missing from the reliability ranking")
    bits = [0] * graph.n_failure_modes
    for test, outcome in zip(graph.tests, syndrome):
        if outcome != FAIL:
            continue
        modules = {graph.failure_modes[i].module for i in test.indices}
        weakest = max(modules, key=lambda m: (rank[base_id(m)], m))
        for i in test.indices:
            if graph.failure_modes[i].module == weakest:
                bits[i] = ACTIVE
    return _modules_follow_outputs(graph, bits)


def detect(assignment: Sequence[int], indices: Optional[Sequence[int]] = None) -> bool:
    """Something is wrong as soon as one failure mode is identified as active."""
    if indices is None:
        return any(assignment)
    return any(assignment[i] for i in indices)


def slice_indices(graph: DiagnosticGraph) -> Dict[str, Sequence[int]]:
    return {ALL: tuple(range(graph.n_failure_modes)), OUTPUTS: graph.output_indices, MODULES: graph.module_indices}


def detect_slices(graph: DiagnosticGraph, assignment: Sequence[int]) -> Dict[str, bool]:
    return {name: detect(assignment, idx) for name, idx in slice_indices(graph).items()}


class Confusion:
    __slots__ = ("tp", "fp", "fn", "tn")

    def __init__(self, tp: int = 0, fp: int = 0, fn: int = 0, tn: int = 0):
        self.tp, self.fp, self.fn, self.tn = int(tp), int(fp), int(fn), int(tn)

    @staticmethod
    def of(predicted: np.ndarray, actual: np.ndarray) -> Confusion:
        predicted = np.asarray(predicted, dtype=bool)
        actual = np.asarray(actual, dtype=bool)
        return Confusion(
            np.sum(predicted & actual), np.sum(predicted & ~actual),
            np.sum(~predicted & actual), np.sum(~predicted & ~actual),
        )

    def __add__(self, other: Confusion) -> Confusion:
        return Confusion(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 1.0

    @property
    def precision(self) -> float:
        """TP / (TP + FP), 1 when nothing was predicted active."""
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0

    @property
    def recall(self) -> float:
        """TP / (TP + FN), 1 when nothing was actually active."""
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0

    def to_config(self) -> dict:
        return {
            "accuracy": self.accuracy, "precision": self.precision, "recall": self.recall,
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
        }


class MetricsReport:
    """
    Bitwise identification scores and per-sample detection scores, each over
    all failure modes, output modes only and module modes only.
    """

    def __init__(self, samples: int, identification: Dict[str, Confusion], detection: Dict[str, Confusion],
                 per_mode: Dict[str, Confusion], algo: str = "", kind: str = ""):
        self.samples = samples
        self.identification = identification
        self.detection = detection
        self.per_mode = per_mode
        self.algo = algo
        self.kind = kind

    def accuracy(self, slice_name: str = ALL) -> float:
        return self.identification[slice_name].accuracy

    def precision(self, slice_name: str = ALL) -> float:
        return self.identification[slice_name].precision

    def recall(self, slice_name: str = ALL) -> float:
        return self.identification[slice_name].recall

    def rows(self) -> List[dict]:
        rows = []
        for task, table in ((IDENTIFICATION, self.identification), (DETECTION, self.detection)):
            for name in SLICES:
                row = {"algo": self.algo, "kind": self.kind, "task": task, "slice": name, "samples": self.samples}
                row.update(table[name].to_config())
                rows.append(row)
        return rows

    def to_config(self) -> dict:
        return {
            "algo": self.algo,
            "kind": self.kind,
            "samples": self.samples,
            "zero_division": 1.0,
            "identification": {k: v.to_config() for k, v in self.identification.items()},
            "detection": {k: v.to_config() for k, v in self.detection.items()},
            "per_mode": {k: v.to_config() for k, v in self.per_mode.items()},
        }

    def to_csv(self) -> str:
        return rows_to_csv(self.rows())

    def __str__(self):
        return (f"{self.__class__.__name__} [{self.algo} {self.kind}] accuracy={self.accuracy():.4f} "
                f"precision={self.precision():.4f} recall={self.recall():.4f}")


def rows_to_csv(rows: Sequence[dict], fields: Sequence[str] = CSV_FIELDS) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(fields), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
    return buffer.getvalue()


def read_csv_rows(path: Union[str, pathlib.Path]) -> List[dict]:
    path = pathlib.Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as f:
            return list(csv.DictReader(f))
    except FileNotFoundError:
        raise errors.DataError("File not found", code="missing-file", path=path) from None


def metrics(predictions, labels, graph: DiagnosticGraph, algo: str = "", kind: str = "") -> MetricsReport:
    predictions = np.asarray(predictions, dtype=np.int8)
    labels = np.asarray(labels, dtype=np.int8)
    if predictions.ndim != 2 or predictions.shape[0] == 0:
        raise errors.EmptyDatasetError("No predictions to evaluate")
    if predictions.shape != labels.shape or predictions.shape[1] != graph.n_failure_modes:
        raise errors.MisalignedInputError(f"Predictions {predictions.shape} and labels {labels.shape} do not match {graph}")
    identification, detection = {}, {}
    for name, idx in slice_indices(graph).items():
        idx = list(idx)
        if not idx:
            identification[name] = Confusion()
            detection[name] = Confusion()
            continue
        identification[name] = Confusion.of(predictions[:, idx], labels[:, idx])
        detection[name] = Confusion.of(predictions[:, idx].any(axis=1), labels[:, idx].any(axis=1))
    per_mode = {fm.id: Confusion.of(predictions[:, fm.index], labels[:, fm.index]) for fm in graph.failure_modes}
    return MetricsReport(predictions.shape[0], identification, detection, per_mode, algo, kind)

# vim: set et sw=4 ts=4:
