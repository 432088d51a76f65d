"""
Labelled syndrome datasets generated by the scenario harness.

A dataset file is newline-delimited JSON with one record per sample:
``{"timestamp", "syndrome", "labels", "slices", "split"}``.
"""
from __future__ import annotations
import logging
import pathlib
from typing import Dict, Iterator, List, Optional, Sequence, Union

import numpy as np

from percmon import checks, errors, jsonio, types, utils
from percmon.builtin import apollo_obstacle, apollo_temporal_graph
from percmon.config import ScenarioConfig
from percmon.graph import DiagnosticGraph
from percmon.scene import simulate_ticks

log = logging.getLogger(__name__)

REGULAR = "regular"
TEMPORAL = "temporal"

TRAIN = "train"
TEST = "test"
VALIDATION = "validation"
SPLITS = (TRAIN, TEST, VALIDATION)

MIN_COUNT = 10


class DatasetSample:
    __slots__ = ("timestamp", "syndrome", "labels", "slices", "split")

    def __init__(self, timestamp: float, syndrome: Sequence[int], labels: Sequence[int], slices: int = 1, split: Optional[str] = None):
        self.timestamp = float(timestamp)
        self.syndrome: types.Syndrome = types.as_bits(syndrome)
        self.labels: types.FaultState = types.as_bits(labels)
        self.slices = int(slices)
        self.split = split

    @staticmethod
    def from_config(config: dict) -> DatasetSample:
        return DatasetSample(config["timestamp"], config["syndrome"], config["labels"], config.get("slices", 1), config.get("split"))

    def to_config(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "syndrome": list(self.syndrome),
            "labels": list(self.labels),
            "slices": self.slices,
            "split": self.split,
        }

    def __repr__(self):
        return f"<{self.__class__.__name__} t={self.timestamp} split={self.split}>"


class Dataset:
    def __init__(self, samples: Sequence[DatasetSample], name: str = ""):
        self.samples: List[DatasetSample] = list(samples)
        self.name = name

    def __len__(self):
        return len(self.samples)

    def __iter__(self) -> Iterator[DatasetSample]:
        return iter(self.samples)

    def __getitem__(self, n: int) -> DatasetSample:
        return self.samples[n]

    def syndromes(self) -> np.ndarray:
        return np.array([s.syndrome for s in self.samples], dtype=np.int8).reshape(len(self.samples), -1)

    def labels(self) -> np.ndarray:
        return np.array([s.labels for s in self.samples], dtype=np.int8).reshape(len(self.samples), -1)

    @property
    def slices(self) -> int:
        return self.samples[0].slices if self.samples else 1

    def split(self, name: str) -> Dataset:
        if name not in SPLITS:
            raise errors.DataError(f"Unknown split '{name}', choose one of {', '.join(SPLITS)}", code="unknown-split")
        return Dataset([s for s in self.samples if s.split == name], f"{self.name}:{name}" if self.name else name)

    def counts(self) -> Dict[str, int]:
        return {name: sum(1 for s in self.samples if s.split == name) for name in SPLITS}

    def check_graph(self, graph: DiagnosticGraph):
        for n, s in enumerate(self.samples):
            if len(s.syndrome) != graph.n_tests or len(s.labels) != graph.n_failure_modes:
                raise errors.MisalignedInputError(
                    f"Sample {n} has {len(s.syndrome)} outcomes and {len(s.labels)} labels, {graph} expects {graph.n_tests} and {graph.n_failure_modes}")

    def save(self, directory: Union[str, pathlib.Path]) -> Dict[str, pathlib.Path]:
        """One file per split, ``<directory>/<split>.ndjson``."""
        directory = pathlib.Path(directory)
        paths = {}
        for name in SPLITS:
            path = directory / f"{name}.ndjson"
            n = jsonio.write_ndjson((s.to_config() for s in self.samples if s.split == name), path)
            log.info("Wrote %d %s samples to %s", n, name, path)
            paths[name] = path
        return paths

    @staticmethod
    def load(path: Union[str, pathlib.Path], split: Optional[str] = None) -> Dataset:
        """A dataset file, or the given split (all splits when None) of a dataset directory."""
        path = pathlib.Path(path)
        if path.is_dir():
            names = [split] if split else [n for n in SPLITS if (path / f"{n}.ndjson").exists()]
            if not names:
                raise errors.DataError("No dataset files found", code="missing-file", path=path)
            samples = []
            for name in names:
                samples.extend(_read(path / f"{name}.ndjson"))
            return Dataset(samples, path.name)
        dataset = Dataset(_read(path), path.stem)
        return dataset.split(split) if split else dataset

    def __str__(self):
        return f"{self.__class__.__name__} '{self.name}' [{len(self)} samples]"


def _read(path: pathlib.Path) -> List[DatasetSample]:
    try:
        return [DatasetSample.from_config(r) for r in jsonio.read_ndjson(path)]
    except (KeyError, TypeError, ValueError) as exc:
        raise errors.DataError(f"Malformed sample: {exc!r}", code="malformed-sample", path=path) from None


def assign_splits(samples: Sequence[DatasetSample]) -> List[DatasetSample]:
    """Contiguous time blocks: training first, then test, then validation."""
    train, test, _ = utils.split_counts(len(samples))
    for n, s in enumerate(samples):
        s.split = TRAIN if n < train else TEST if n < train + test else VALIDATION
    return list(samples)


def default_graph(kind: str) -> DiagnosticGraph:
    if kind == REGULAR:
        return apollo_obstacle()
    elif kind == TEMPORAL:
        return apollo_temporal_graph()
    raise errors.ConfigError(f"Unknown graph kind '{kind}'")


def generate_dataset(config: ScenarioConfig, count: int, seed: int, kind: str = REGULAR, graph: Optional[DiagnosticGraph] = None) -> Dataset:
    """
    ``count`` samples from one simulated drive. A regular sample is one tick;
    a temporal sample stacks two consecutive ticks and adds the tests across
    them. Outcomes and labels follow the test and failure-mode order of the
    graph.
    """
    if count < MIN_COUNT:
        raise errors.InvalidCountsError(f"Need at least {MIN_COUNT} samples, got {count}")
    graph = graph or default_graph(kind)
    test_ids = [t.id for t in graph.tests]
    mode_ids = [fm.id for fm in graph.failure_modes]
    scene = simulate_ticks(config, count + (1 if kind == TEMPORAL else 0), seed)
    samples = []
    for k in range(count):
        frame = scene[k]
        if kind == TEMPORAL:
            after = scene[k + 1]
            outcomes = checks.qualified(checks.frame_syndrome(frame, config), 0)
            outcomes.update(checks.qualified(checks.frame_syndrome(after, config), 1))
            outcomes.update(checks.temporal_syndrome(frame, after, config))
            labels = checks.qualified(checks.frame_labels(frame, config), 0)
            labels.update(checks.qualified(checks.frame_labels(after, config), 1))
            slices = 2
        else:
            outcomes = checks.frame_syndrome(frame, config)
            labels = checks.frame_labels(frame, config)
            slices = 1
        samples.append(DatasetSample(frame.timestamp, checks.vectorize(outcomes, test_ids, "test"),
                                     checks.vectorize(labels, mode_ids, "failure mode"), slices))
    dataset = Dataset(assign_splits(samples), f"{graph.name}-{kind}")
    log.info("Generated %s: %s", dataset, dataset.counts())
    return dataset

# vim: set et sw=4 ts=4:
