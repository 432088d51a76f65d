"""
Fault identification algorithms behind one calling convention: a callable
from syndrome to fault state.
"""
from __future__ import annotations
import logging
from typing import Optional, Sequence

from percmon import errors, evaluation, solver, types
from percmon.builtin import RELIABILITY_RANKING
from percmon.config import ALGORITHMS
from percmon.factorgraph import MAX_ITERS, FactorGraphTemplate, max_product
from percmon.graph import DiagnosticGraph
from percmon.learning import LearnedParams

log = logging.getLogger(__name__)

DETERMINISTIC = "deterministic"
WEAKER_OR = "weaker-or"
FACTOR_GRAPH = "factor-graph"
BASELINE = "baseline"
BASELINE_RELIABILITY = "baseline-rel"


class Identifier:
    """
    Base class. ``failures`` counts syndromes the algorithm could not
    explain; for those the all-inactive fault state is returned.
    """
    name = ""

    def __init__(self, graph: DiagnosticGraph):
        self.graph = graph
        self.failures = 0

    def identify(self, syndrome: types.Syndrome) -> types.FaultState:
        raise NotImplementedError

    def fallback(self, syndrome: types.Syndrome, reason: str) -> types.FaultState:
        self.failures += 1
        log.debug("%s: %s for syndrome %s, reporting no faults", self.name, reason, syndrome)
        return (0,) * self.graph.n_failure_modes

    def __call__(self, syndrome: Sequence[int]) -> types.FaultState:
        return self.identify(self.graph.check_syndrome(syndrome))

    def __str__(self):
        return f"{self.__class__.__name__} [{self.name}]"


class DeterministicIdentifier(Identifier):
    """Minimum-cardinality solution of the deterministic constraints."""
    name = DETERMINISTIC

    def __init__(self, graph: DiagnosticGraph, budget: Optional[int] = None):
        super().__init__(graph)
        if not graph.is_deterministic:
            raise errors.ProbabilisticRelationError(f"{graph} has probabilistic relations, the deterministic solver cannot use it")
        self.budget = budget

    def identify(self, syndrome: types.Syndrome) -> types.FaultState:
        result = solver.solve_min_cardinality(self.graph, syndrome, self.budget)
        if not result.optimal:
            return self.fallback(syndrome, result.status)
        return result.assignment


class WeakerOrIdentifier(Identifier):
    """Minimum-cardinality solution of the linearized Weaker-OR formulation."""
    name = WEAKER_OR

    def __init__(self, graph: DiagnosticGraph):
        super().__init__(graph)
        # constraint shape is checked eagerly on an all-PASS syndrome
        solver.weaker_or_constraints(graph, (0,) * graph.n_tests)

    def identify(self, syndrome: types.Syndrome) -> types.FaultState:
        result = solver.solve_weaker_or(self.graph, syndrome)
        if not result.optimal:
            return self.fallback(syndrome, result.status)
        return result.assignment


class FactorGraphIdentifier(Identifier):
    """Maximum a-posteriori estimate from max-product belief propagation."""
    name = FACTOR_GRAPH

    def __init__(self, graph: DiagnosticGraph, params: Optional[LearnedParams] = None, max_iters: int = MAX_ITERS):
        super().__init__(graph)
        self.params = params
        self.max_iters = max_iters
        # fail early on missing priors instead of once per sample
        self.template = FactorGraphTemplate(graph, params)
        self.template.bind((0,) * graph.n_tests)

    def identify(self, syndrome: types.Syndrome) -> types.FaultState:
        try:
            return max_product(self.template.bind(syndrome), self.max_iters)
        except (errors.ZeroPartitionError, errors.InvalidFactorError) as exc:
            return self.fallback(syndrome, str(exc))


class BaselineIdentifier(Identifier):
    name = BASELINE

    def identify(self, syndrome: types.Syndrome) -> types.FaultState:
        return evaluation.baseline_all_active(self.graph, syndrome)


class ReliabilityIdentifier(Identifier):
    name = BASELINE_RELIABILITY

    def __init__(self, graph: DiagnosticGraph, ranking: Sequence[str] = RELIABILITY_RANKING):
        super().__init__(graph)
        self.ranking = tuple(ranking)
        evaluation.baseline_reliability(graph, (0,) * graph.n_tests, self.ranking)

    def identify(self, syndrome: types.Syndrome) -> types.FaultState:
        return evaluation.baseline_reliability(self.graph, syndrome, self.ranking)


def make_identifier(algo: str, graph: DiagnosticGraph, params: Optional[LearnedParams] = None,
                    budget: Optional[int] = None, ranking: Sequence[str] = RELIABILITY_RANKING) -> Identifier:
    if algo == DETERMINISTIC:
        return DeterministicIdentifier(graph, budget)
    elif algo == WEAKER_OR:
        return WeakerOrIdentifier(graph)
    elif algo == FACTOR_GRAPH:
        return FactorGraphIdentifier(graph, params)
    elif algo == BASELINE:
        return BaselineIdentifier(graph)
    elif algo == BASELINE_RELIABILITY:
        return ReliabilityIdentifier(graph, ranking)
    raise errors.ConfigError(f"Unknown algorithm '{algo}', choose one of {', '.join(ALGORITHMS)}")

# vim: set et sw=4 ts=4:
