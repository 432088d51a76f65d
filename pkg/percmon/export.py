"""
Node/edge export of a diagnostic graph and one syndrome for graph neural
networks. Every relation becomes a clique: a test over its scope plus its
outcome node, an a-priori relation over its scope.
"""
from __future__ import annotations
import itertools
import logging
import pathlib
from typing import List, Mapping, Optional, Sequence, Tuple, Union

from percmon import errors, jsonio
from percmon.graph import PRIOR, DiagnosticGraph
from percmon.learning import LearnedParams
from percmon.types import FAIL

log = logging.getLogger(__name__)

FAILURE_MODE_NODE = "failure-mode"
TEST_NODE = "test"


class GnnExportGraph:
    def __init__(self, nodes: List[dict], edges: List[Tuple[int, int]], features: List[Tuple[float, float]], labels: Optional[Sequence[int]] = None):
        self.nodes = nodes
        self.edges = edges
        self.features = features
        self.labels = list(labels) if labels is not None else None

    def to_config(self) -> dict:
        config = {"nodes": self.nodes, "edges": [list(e) for e in self.edges], "features": [list(f) for f in self.features]}
        if self.labels is not None:
            config["labels"] = self.labels
        return config

    def save(self, path: Union[str, pathlib.Path]):
        jsonio.write_file(self.to_config(), path)

    def __str__(self):
        return f"{self.__class__.__name__} [{len(self.nodes)} nodes, {len(self.edges)} edges]"


def _priors(graph: DiagnosticGraph, priors: Union[Mapping[str, float], LearnedParams, None]) -> List[float]:
    if isinstance(priors, LearnedParams):
        priors = priors.priors
    known = dict(priors or {})
    for relation in graph.apriori:
        if relation.kind == PRIOR:
            known.setdefault(graph.failure_modes[relation.indices[0]].id, relation.probability)
    result = []
    for fm in graph.failure_modes:
        if fm.id not in known:
            raise errors.MissingParameterError(f"No prior for failure mode '{fm.id}'")
        result.append(float(known[fm.id]))
    return result


def _clique(members: Sequence[int], into: set):
    for a, b in itertools.combinations(sorted(set(members)), 2):
        into.add((a, b))


def gnn_export(graph: DiagnosticGraph, syndrome: Sequence[int], priors: Union[Mapping[str, float], LearnedParams, None] = None,
               labels: Optional[Sequence[int]] = None) -> GnnExportGraph:
    """
    Failure modes are nodes 0..N_f-1 with features (1-rho, rho); test
    outcomes follow as nodes N_f..N_f+N_t-1 with one-hot (PASS, FAIL) features.
    """
    syndrome = graph.check_syndrome(syndrome)
    rho = _priors(graph, priors)
    n = graph.n_failure_modes
    nodes = [{"id": fm.id, "type": FAILURE_MODE_NODE} for fm in graph.failure_modes]
    nodes += [{"id": t.id, "type": TEST_NODE} for t in graph.tests]
    features = [(1.0 - p, p) for p in rho]
    features += [(0.0, 1.0) if outcome == FAIL else (1.0, 0.0) for outcome in syndrome]
    edges = set()
    for j, test in enumerate(graph.tests):
        _clique(list(test.indices) + [n + j], edges)
    for relation in graph.apriori:
        _clique(relation.indices, edges)
    if labels is not None:
        labels = graph.check_fault_state(labels)
    return GnnExportGraph(nodes, sorted(edges), features, labels)

# vim: set et sw=4 ts=4:
