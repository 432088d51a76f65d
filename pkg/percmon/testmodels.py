from __future__ import annotations
import logging
import math
from typing import FrozenSet, Optional, Sequence, Union

import numpy as np

from percmon import errors, types, utils
from percmon.graph import (
    DETERMINISTIC_OR, IMPLICATION, MODULE_OUTPUT, MUTUAL_EXCLUSION, NOISY_OR, PRIOR, TRANSITION,
    WEAK_OR, WEAKER_OR, AprioriRelation, DiagnosticGraph, DiagnosticTest,
)
from percmon.types import FAIL, PASS

log = logging.getLogger(__name__)

OutcomeSet = FrozenSet[int]

ONLY_PASS: OutcomeSet = frozenset((PASS,))
ONLY_FAIL: OutcomeSet = frozenset((FAIL,))
PASS_OR_FAIL: OutcomeSet = frozenset((PASS, FAIL))


class NoisyOrParams:
    def __init__(self, p_detect: Sequence[float], p_false_alarm: Sequence[float]):
        if len(p_detect) != len(p_false_alarm):
            raise errors.LengthMismatchError(f"p_detect has {len(p_detect)} entries, p_false_alarm {len(p_false_alarm)}")
        for p in list(p_detect) + list(p_false_alarm):
            if not 0.0 <= p <= 1.0:
                raise errors.ProbabilityError(f"Probability {p} outside [0,1]")
        self.p_detect = tuple(float(p) for p in p_detect)
        self.p_false_alarm = tuple(float(p) for p in p_false_alarm)

    @staticmethod
    def of(test: DiagnosticTest) -> NoisyOrParams:
        if test.p_detect is None or test.p_false_alarm is None:
            raise errors.MissingParameterError(f"Test '{test.id}' carries no Noisy-OR parameters")
        return NoisyOrParams(test.p_detect, test.p_false_alarm)

    def __len__(self):
        return len(self.p_detect)


def _check_length(bits: Sequence[int], n: int):
    if len(bits) != n:
        raise errors.LengthMismatchError(f"Expected {n} scope bits, got {len(bits)}")


def eval_deterministic(semantics: str, bits: Sequence[int], scope_size: Optional[int] = None) -> OutcomeSet:
    """Admissible outcomes of a deterministic test given the bits of its scope."""
    if scope_size is not None:
        _check_length(bits, scope_size)
    active = sum(1 for b in bits if b)
    if semantics == DETERMINISTIC_OR:
        return ONLY_FAIL if active else ONLY_PASS
    elif semantics == WEAK_OR:
        if active == 0:
            return ONLY_PASS
        elif active == len(bits):
            return PASS_OR_FAIL
        else:
            return ONLY_FAIL
    elif semantics == WEAKER_OR:
        return PASS_OR_FAIL if active else ONLY_PASS
    raise errors.WrongSemanticsError(f"'{semantics}' is not a deterministic semantics")


def noisy_or_log_pass_prob(params: NoisyOrParams, bits: Sequence[int]) -> float:
    _check_length(bits, len(params))
    total = 0.0
    for b, pd, pa in zip(bits, params.p_detect, params.p_false_alarm):
        p = pd if b else pa
        if p >= 1.0:
            return -math.inf
        total += math.log1p(-p)
    return total


def noisy_or_pass_prob(params: NoisyOrParams, bits: Sequence[int]) -> float:
    """Pr(PASS) = prod_i (1 - p_d,i)^f_i (1 - p_a,i)^(1 - f_i)."""
    return math.exp(noisy_or_log_pass_prob(params, bits))


def noisy_or_fail_prob(params: NoisyOrParams, bits: Sequence[int]) -> float:
    return 1.0 - noisy_or_pass_prob(params, bits)


def outcome_likelihood(test: DiagnosticTest, bits: Sequence[int], outcome: int, params: Optional[NoisyOrParams] = None) -> float:
    """Likelihood of an outcome given the scope bits; 0/1 for deterministic tests."""
    _check_length(bits, len(test.scope))
    if params is None and test.semantics != NOISY_OR:
        return 1.0 if outcome in eval_deterministic(test.semantics, bits) else 0.0
    params = params or NoisyOrParams.of(test)
    p_pass = noisy_or_pass_prob(params, bits)
    return p_pass if outcome == PASS else 1.0 - p_pass


def _any(bits: Sequence[int], indices: Sequence[int]) -> bool:
    return any(bits[i] for i in indices)


def apriori_holds(relation: AprioriRelation, faults: Sequence[int]) -> bool:
    """Truth value of the deterministic predicate behind a relation."""
    if relation.kind == MODULE_OUTPUT:
        ok = not _any(faults, relation.antecedent) or _any(faults, relation.consequent)
        if relation.iff:
            ok = ok and (not _any(faults, relation.consequent) or _any(faults, relation.antecedent))
        return ok
    elif relation.kind == IMPLICATION:
        return not _any(faults, relation.antecedent) or _any(faults, relation.consequent)
    elif relation.kind == MUTUAL_EXCLUSION:
        return sum(1 for i in relation.indices if faults[i]) <= 1
    raise errors.WrongSemanticsError(f"Relation '{relation.id}' of kind {relation.kind} has no predicate")


def apriori_likelihood(relation: AprioriRelation, faults: Sequence[int], p_activate: Optional[float] = None, p_persist: Optional[float] = None) -> float:
    if relation.kind == PRIOR:
        rho = relation.probability
        return rho if faults[relation.indices[0]] else 1.0 - rho
    elif relation.kind == TRANSITION:
        p_activate = relation.p_activate if p_activate is None else p_activate
        p_persist = relation.p_persist if p_persist is None else p_persist
        if p_activate is None or p_persist is None:
            raise errors.MissingParameterError(f"Transition '{relation.id}' has no probabilities")
        prev, nxt = faults[relation.indices[0]], faults[relation.indices[1]]
        p_on = p_persist if prev else p_activate
        return p_on if nxt else 1.0 - p_on
    holds = apriori_holds(relation, faults)
    if relation.probability is None:
        return 1.0 if holds else 0.0
    return relation.probability if holds else 1.0 - relation.probability


def relation_satisfied(relation: Union[DiagnosticTest, AprioriRelation], faults: Sequence[int], outcome: Optional[int] = None) -> Union[bool, float]:
    """
    Deterministic relations give their indicator value, probabilistic ones
    the likelihood of the observed outcome (tests) or of the assignment.
    ``faults`` is the full fault state of the graph.
    """
    if isinstance(relation, DiagnosticTest):
        if outcome is None:
            raise errors.MissingOutcomeError(f"Test '{relation.id}' needs an observed outcome")
        bits = [faults[i] for i in relation.indices]
        if relation.is_deterministic:
            return outcome in eval_deterministic(relation.semantics, bits)
        return outcome_likelihood(relation, bits, outcome)
    if relation.is_probabilistic:
        return apriori_likelihood(relation, faults)
    return apriori_holds(relation, faults)


def sample_syndrome(graph: DiagnosticGraph, faults: Sequence[int], seed: Union[int, np.random.Generator, None]) -> types.Syndrome:
    """
    One uniform draw per test, in test order: Noisy-OR tests FAIL below their
    failure probability, ambiguous deterministic tests FAIL below one half.
    """
    faults = graph.check_fault_state(faults)
    rng = utils.as_generator(seed)
    draws = rng.random(graph.n_tests)
    outcomes = []
    for test, u in zip(graph.tests, draws):
        bits = [faults[i] for i in test.indices]
        if test.semantics == NOISY_OR:
            outcomes.append(FAIL if u < noisy_or_fail_prob(NoisyOrParams.of(test), bits) else PASS)
        else:
            admissible = eval_deterministic(test.semantics, bits)
            if len(admissible) == 1:
                outcomes.append(next(iter(admissible)))
            else:
                outcomes.append(FAIL if u < 0.5 else PASS)
    return tuple(outcomes)

# vim: set et sw=4 ts=4:
