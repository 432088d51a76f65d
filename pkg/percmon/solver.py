"""
Deterministic fault identification.

Every deterministic relation is compiled into pseudo-boolean constraints
``sum(a_i * f_i) >= rhs`` over the fault bits. A depth-first branch and
bound assigns bits in index order, trying INACTIVE before ACTIVE, so the
first optimum reached is also the lexicographically smallest one.
"""
from __future__ import annotations
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from percmon import errors, types
from percmon.graph import (
    DETERMINISTIC_OR, IMPLICATION, MODULE_OUTPUT, MUTUAL_EXCLUSION, WEAK_OR, WEAKER_OR,
    AprioriRelation, DiagnosticGraph,
)
from percmon.types import FAIL

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"

DEFAULT_ENUMERATION_CAP = 24

UNSET = -1


class LinearConstraint:
    __slots__ = ("terms", "rhs", "origin")

    def __init__(self, terms: Dict[int, int], rhs: int, origin: str):
        self.terms: Tuple[Tuple[int, int], ...] = tuple(sorted((i, a) for i, a in terms.items() if a != 0))
        self.rhs = rhs
        self.origin = origin

    def holds(self, bits: Sequence[int]) -> bool:
        return sum(a for i, a in self.terms if bits[i]) >= self.rhs

    def __repr__(self):
        lhs = " + ".join(f"{a}*f{i}" for i, a in self.terms)
        return f"<{self.origin}: {lhs} >= {self.rhs}>"


def _terms(indices: Iterable[int], coef: int, into: Optional[Dict[int, int]] = None) -> Dict[int, int]:
    into = {} if into is None else into
    for i in indices:
        into[i] = into.get(i, 0) + coef
    return into


def at_least_one(indices: Sequence[int], origin: str) -> LinearConstraint:
    return LinearConstraint(_terms(indices, 1), 1, origin)


def all_inactive(indices: Sequence[int], origin: str) -> LinearConstraint:
    return LinearConstraint(_terms(indices, -1), 0, origin)


def implies_any(antecedent: Sequence[int], consequent: Sequence[int], origin: str) -> LinearConstraint:
    """Some consequent active whenever any antecedent is: |A|*sum(C) - sum(A) >= 0."""
    terms = _terms(consequent, len(antecedent))
    return LinearConstraint(_terms(antecedent, -1, terms), 0, origin)


def equal_pairs(indices: Sequence[int], origin: str) -> List[LinearConstraint]:
    """All-zero or all-one: consecutive members must agree."""
    result = []
    for a, b in zip(indices, indices[1:]):
        result.append(LinearConstraint({a: 1, b: -1}, 0, origin))
        result.append(LinearConstraint({b: 1, a: -1}, 0, origin))
    return result


def at_most(indices: Sequence[int], k: int, origin: str) -> LinearConstraint:
    return LinearConstraint(_terms(indices, -1), -k, origin)


def compile_test(semantics: str, indices: Sequence[int], outcome: int, origin: str) -> List[LinearConstraint]:
    if outcome == FAIL:
        return [at_least_one(indices, origin)]
    if semantics == DETERMINISTIC_OR:
        return [all_inactive(indices, origin)]
    elif semantics == WEAK_OR:
        return equal_pairs(indices, origin)
    elif semantics == WEAKER_OR:
        return []
    raise errors.ProbabilisticRelationError(f"Test '{origin}' is not deterministic")


def compile_apriori(relation: AprioriRelation) -> List[LinearConstraint]:
    if relation.is_probabilistic:
        raise errors.ProbabilisticRelationError(f"Relation '{relation.id}' ({relation.kind}) is probabilistic")
    if relation.kind == MODULE_OUTPUT:
        result = [implies_any(relation.antecedent, relation.consequent, relation.id)]
        if relation.iff:
            result.append(implies_any(relation.consequent, relation.antecedent, relation.id))
        return result
    elif relation.kind == IMPLICATION:
        return [implies_any(relation.antecedent, relation.consequent, relation.id)]
    elif relation.kind == MUTUAL_EXCLUSION:
        return [at_most(relation.indices, 1, relation.id)]
    raise errors.ProbabilisticRelationError(f"Relation '{relation.id}' of kind {relation.kind} has no deterministic form")


def compile_graph(graph: DiagnosticGraph, syndrome: Sequence[int]) -> List[LinearConstraint]:
    syndrome = graph.check_syndrome(syndrome)
    constraints = []
    for test, outcome in zip(graph.tests, syndrome):
        if not test.is_deterministic:
            raise errors.ProbabilisticRelationError(f"Test '{test.id}' uses {test.semantics}")
        constraints.extend(compile_test(test.semantics, test.indices, outcome, test.id))
    for relation in graph.apriori:
        constraints.extend(compile_apriori(relation))
    return constraints


class SolveResult:
    def __init__(self, assignment: Optional[types.FaultState], status: str, nodes: int = 0):
        self.assignment = assignment
        self.status = status
        self.nodes = nodes

    @property
    def cardinality(self) -> Optional[int]:
        return None if self.assignment is None else sum(self.assignment)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def raise_for_status(self):
        if self.status == INFEASIBLE:
            raise errors.InfeasibleError("No fault assignment satisfies all relations")

    def to_config(self) -> dict:
        return {"assignment": list(self.assignment) if self.assignment else None, "cardinality": self.cardinality, "status": self.status}

    def __str__(self):
        return f"{self.__class__.__name__} {self.status} {self.assignment}"


class BranchAndBound:
    """Minimal-cardinality search (or full enumeration) over binary variables."""

    def __init__(self, n: int, constraints: Sequence[LinearConstraint], budget: Optional[int] = None):
        self.n = n
        self.constraints = list(constraints)
        if budget is not None:
            if budget < 0:
                raise errors.SolverError(f"Budget must not be negative, got {budget}")
            self.constraints.append(at_most(range(n), budget, "budget"))
        self.budget = budget
        self.nodes = 0

    def _propagate(self, assign: List[int]) -> bool:
        changed = True
        while changed:
            changed = False
            for c in self.constraints:
                current, room = 0, 0
                for i, a in c.terms:
                    v = assign[i]
                    if v == UNSET:
                        if a > 0:
                            room += a
                    elif v:
                        current += a
                best = current + room
                if best < c.rhs:
                    return False
                for i, a in c.terms:
                    if assign[i] != UNSET:
                        continue
                    if a > 0 and best - a < c.rhs:
                        assign[i] = 1
                        changed = True
                    elif a < 0 and best + a < c.rhs:
                        assign[i] = 0
                        changed = True
        return True

    def _lower_bound(self, assign: List[int]) -> int:
        """Active bits so far plus a greedy set of disjoint unmet covers."""
        ones = sum(1 for v in assign if v == 1)
        covers = []
        for c in self.constraints:
            current = sum(a for i, a in c.terms if assign[i] == 1)
            if current >= c.rhs:
                continue
            cover = tuple(i for i, a in c.terms if a > 0 and assign[i] == UNSET)
            if cover:
                covers.append(cover)
        covers.sort(key=lambda cv: (len(cv), cv))
        used: Set[int] = set()
        extra = 0
        for cover in covers:
            if used.isdisjoint(cover):
                used.update(cover)
                extra += 1
        return ones + extra

    def minimize(self) -> SolveResult:
        self.nodes = 0
        self._best: Optional[Tuple[int, ...]] = None
        self._best_card = self.n + 1
        self._search(self._start(), enumerate_all=False)
        if self._best is None:
            return SolveResult(None, INFEASIBLE, self.nodes)
        return SolveResult(self._best, OPTIMAL, self.nodes)

    def enumerate(self) -> Set[types.FaultState]:
        self.nodes = 0
        self._found: Set[types.FaultState] = set()
        self._search(self._start(), enumerate_all=True)
        return self._found

    def _start(self) -> List[int]:
        return [UNSET] * self.n

    def _search(self, assign: List[int], enumerate_all: bool):
        self.nodes += 1
        if not self._propagate(assign):
            return
        if not enumerate_all and self._best is not None and self._lower_bound(assign) >= self._best_card:
            return
        try:
            var = assign.index(UNSET)
        except ValueError:
            bits = tuple(assign)
            if enumerate_all:
                self._found.add(bits)
            else:
                self._best, self._best_card = bits, sum(bits)
            return
        for value in (0, 1):
            child = list(assign)
            child[var] = value
            self._search(child, enumerate_all)


def solve_min_cardinality(graph: DiagnosticGraph, syndrome: Sequence[int], budget: Optional[int] = None) -> SolveResult:
    """Smallest set of active failure modes explaining the syndrome."""
    result = BranchAndBound(graph.n_failure_modes, compile_graph(graph, syndrome), budget).minimize()
    if not result.optimal:
        log.info("No feasible assignment for syndrome %s (budget %s)", types.as_bits(syndrome), budget)
    return result


def enumerate_feasible(graph: DiagnosticGraph, syndrome: Sequence[int], budget: Optional[int] = None, cap: int = DEFAULT_ENUMERATION_CAP) -> Set[types.FaultState]:
    if graph.n_failure_modes > cap:
        raise errors.EnumerationCapError(f"{graph.n_failure_modes} failure modes exceed the enumeration cap of {cap}")
    return BranchAndBound(graph.n_failure_modes, compile_graph(graph, syndrome), budget).enumerate()


def weaker_or_constraints(graph: DiagnosticGraph, syndrome: Sequence[int]) -> List[LinearConstraint]:
    """
    FAIL tests need an active scope member. Each output o of a coupled module
    adds |F(o)| * sum(module modes) - sum(F(o)) >= 0. PASS adds nothing.
    """
    syndrome = graph.check_syndrome(syndrome)
    for test in graph.tests:
        if test.semantics != WEAKER_OR:
            raise errors.WrongSemanticsError(f"Test '{test.id}' uses {test.semantics}, expected {WEAKER_OR}")
    for relation in graph.apriori:
        if relation.kind != MODULE_OUTPUT:
            raise errors.WrongSemanticsError(f"Relation '{relation.id}' is {relation.kind}, expected {MODULE_OUTPUT}")
    constraints = []
    for test, outcome in zip(graph.tests, syndrome):
        if outcome == FAIL:
            constraints.append(at_least_one(test.indices, test.id))
    for relation in graph.apriori:
        module_modes = relation.consequent
        for output in graph.system.outputs_of(relation.module):
            output_modes = [i for i in relation.antecedent if graph.failure_modes[i].host == output.id]
            if not output_modes:
                continue
            terms = _terms(module_modes, len(output_modes))
            constraints.append(LinearConstraint(_terms(output_modes, -1, terms), 0, relation.id))
        if relation.iff:
            constraints.append(implies_any(relation.consequent, relation.antecedent, relation.id))
    return constraints


def solve_weaker_or(graph: DiagnosticGraph, syndrome: Sequence[int]) -> SolveResult:
    return BranchAndBound(graph.n_failure_modes, weaker_or_constraints(graph, syndrome)).minimize()

# vim: set et sw=4 ts=4:
