from __future__ import annotations
import logging
import pathlib
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from percmon import errors, jsonio
from percmon.graph import TRANSITION, DiagnosticGraph, DiagnosticTest
from percmon.testmodels import NoisyOrParams

log = logging.getLogger(__name__)

PARAMS_FORMAT_VERSION = 1
SMOOTHING = 1.0
CLAMP = (1e-6, 1.0 - 1e-6)


class LearnedParams:
    """
    Noisy-OR parameters per (test, scope member), activation priors per
    failure mode and transition probabilities per Transition relation.
    """

    def __init__(self, tests: Optional[Dict[str, Tuple[Sequence[float], Sequence[float]]]] = None,
                 priors: Optional[Dict[str, float]] = None,
                 transitions: Optional[Dict[str, Tuple[float, float]]] = None,
                 smoothing: float = SMOOTHING, samples: int = 0):
        self.tests = {k: (tuple(float(p) for p in pd), tuple(float(p) for p in pa)) for k, (pd, pa) in (tests or {}).items()}
        self.priors = {k: float(v) for k, v in (priors or {}).items()}
        self.transitions = {k: (float(a), float(b)) for k, (a, b) in (transitions or {}).items()}
        self.smoothing = smoothing
        self.samples = samples

    def has_test(self, test_id: str) -> bool:
        return test_id in self.tests

    def noisy_or(self, test: DiagnosticTest) -> NoisyOrParams:
        try:
            p_detect, p_false_alarm = self.tests[test.id]
        except KeyError:
            raise errors.MissingParameterError(f"No parameters learned for test '{test.id}'") from None
        if len(p_detect) != len(test.scope):
            raise errors.MissingParameterError(f"Parameters for test '{test.id}' do not match its scope")
        return NoisyOrParams(p_detect, p_false_alarm)

    def prior(self, failure_mode_id: str) -> float:
        try:
            return self.priors[failure_mode_id]
        except KeyError:
            raise errors.MissingParameterError(f"No prior for failure mode '{failure_mode_id}'") from None

    def transition(self, relation_id: str) -> Optional[Tuple[float, float]]:
        return self.transitions.get(relation_id)

    def to_config(self) -> dict:
        return {
            "version": PARAMS_FORMAT_VERSION,
            "smoothing": self.smoothing,
            "samples": self.samples,
            "tests": {k: {"p_detect": list(pd), "p_false_alarm": list(pa)} for k, (pd, pa) in sorted(self.tests.items())},
            "priors": dict(sorted(self.priors.items())),
            "transitions": {k: {"p_activate": a, "p_persist": b} for k, (a, b) in sorted(self.transitions.items())},
        }

    @staticmethod
    def from_config(config: dict, path: Optional[str] = None) -> LearnedParams:
        try:
            return LearnedParams(
                tests={k: (v["p_detect"], v["p_false_alarm"]) for k, v in config.get("tests", {}).items()},
                priors=config.get("priors", {}),
                transitions={k: (v["p_activate"], v["p_persist"]) for k, v in config.get("transitions", {}).items()},
                smoothing=config.get("smoothing", SMOOTHING),
                samples=config.get("samples", 0),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise errors.DataError(f"Malformed parameter file: {exc!r}", code="malformed-params", path=path) from None

    @staticmethod
    def load(path: Union[str, pathlib.Path]) -> LearnedParams:
        return LearnedParams.from_config(jsonio.read_file(path), path=str(path))

    def save(self, path: Union[str, pathlib.Path]):
        jsonio.write_file(self.to_config(), path)

    def __str__(self):
        return f"{self.__class__.__name__} [{len(self.tests)} tests, {len(self.priors)} priors, {len(self.transitions)} transitions]"


def _rate(hits, total, alpha: float) -> float:
    return (float(hits) + alpha) / (float(total) + 2.0 * alpha)


def fit_arrays(graph: DiagnosticGraph, syndromes: np.ndarray, labels: np.ndarray, alpha: float = SMOOTHING) -> LearnedParams:
    """
    Smoothed frequency estimates from aligned syndrome and label arrays.

    p_detect is fitted per scope member on samples where that member is the
    only active one, falling back to the rate over all samples with any
    member active. p_false_alarm is a property of the test: it is fitted
    once on the samples with the whole scope inactive and the same value is
    stored for every scope member.
    """
    syndromes = np.asarray(syndromes, dtype=np.int8)
    labels = np.asarray(labels, dtype=np.int8)
    if syndromes.ndim != 2 or syndromes.shape[0] == 0:
        raise errors.EmptyDatasetError("Cannot fit parameters on an empty dataset")
    if syndromes.shape != (labels.shape[0], graph.n_tests) or labels.shape[1] != graph.n_failure_modes:
        raise errors.MisalignedInputError(f"Dataset shape {syndromes.shape}/{labels.shape} does not match {graph}")
    n = syndromes.shape[0]
    lo, hi = CLAMP

    tests = {}
    for t, test in enumerate(graph.tests):
        scope = labels[:, list(test.indices)]
        active = scope.sum(axis=1)
        fails = syndromes[:, t] == 1
        quiet = active == 0
        p_false_alarm = _rate(np.sum(fails & quiet), np.sum(quiet), alpha)
        any_active = active > 0
        fallback = _rate(np.sum(fails & any_active), np.sum(any_active), alpha)
        p_detect = []
        for j in range(len(test.indices)):
            alone = (scope[:, j] == 1) & (active == 1)
            if np.any(alone):
                p_detect.append(_rate(np.sum(fails & alone), np.sum(alone), alpha))
            else:
                log.info("Test '%s': no sample with only '%s' active, using the global detection rate", test.id, test.scope[j])
                p_detect.append(fallback)
        tests[test.id] = (
            [float(np.clip(p, lo, hi)) for p in p_detect],
            [float(np.clip(p_false_alarm, lo, hi))] * len(test.indices),
        )

    priors = {}
    for fm in graph.failure_modes:
        priors[fm.id] = float(np.clip(_rate(labels[:, fm.index].sum(), n, alpha), lo, hi))

    transitions = {}
    for relation in graph.apriori:
        if relation.kind != TRANSITION:
            continue
        prev, nxt = labels[:, relation.indices[0]], labels[:, relation.indices[1]]
        p_activate = _rate(np.sum((prev == 0) & (nxt == 1)), np.sum(prev == 0), alpha)
        p_persist = _rate(np.sum((prev == 1) & (nxt == 1)), np.sum(prev == 1), alpha)
        transitions[relation.id] = (float(np.clip(p_activate, lo, hi)), float(np.clip(p_persist, lo, hi)))

    params = LearnedParams(tests, priors, transitions, smoothing=alpha, samples=n)
    log.debug("Fitted %s on %d samples", params, n)
    return params


def fit_params(graph: DiagnosticGraph, train, alpha: float = SMOOTHING) -> LearnedParams:
    """Smoothed frequency estimates from a labelled dataset (anything with syndromes() and labels())."""
    if len(train) == 0:
        raise errors.EmptyDatasetError("Cannot fit parameters on an empty dataset")
    return fit_arrays(graph, train.syndromes(), train.labels(), alpha)

# vim: set et sw=4 ts=4:
