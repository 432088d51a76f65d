"""
Deterministic kappa-diagnosability and PAC bounds on identification errors.

A graph is kappa-diagnosable when any two distinct fault sets with at most
kappa members produce disjoint sets of syndromes. :func:`brute_force_kappa`
checks that directly; :func:`check_sufficient_conditions` is the cheaper
test for graphs of scope-2 Weak-OR tests.
"""
from __future__ import annotations
import itertools
import logging
import math
from collections import defaultdict
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

import numpy as np

from percmon import errors, types, utils
from percmon.graph import (
    WEAK_OR, DiagnosticGraph, TemporalDiagnosticGraph, build_graph, output_subgraph, qualify,
    stack_temporal, with_semantics,
)
from percmon.testmodels import apriori_holds, eval_deterministic

log = logging.getLogger(__name__)

BRUTE_FORCE = "brute-force"
SUFFICIENT_CONDITIONS = "sufficient-conditions"

ALL_MODES = "all-modes"
OUTPUTS_ONLY = "outputs-only"
POLICIES = (ALL_MODES, OUTPUTS_ONLY)

SYNDROME_TEST_CAP = 64
MAX_SYNDROMES_PER_SET = 1 << 16
DEFAULT_BUDGET = 2_000_000
DELTA_GRID = (1e-12, 1e-9, 1e-6, 1e-3, 0.01, 0.05, 0.1, 0.5)

FaultSet = Tuple[int, ...]


def _bits(n: int, active: Iterable[int]) -> List[int]:
    bits = [0] * n
    for i in active:
        bits[i] = 1
    return bits


def _outcome_sets(graph: DiagnosticGraph, bits: Sequence[int]):
    return [sorted(eval_deterministic(t.semantics, [bits[i] for i in t.indices])) for t in graph.tests]


def _feasible(graph: DiagnosticGraph, bits: Sequence[int]) -> bool:
    return all(apriori_holds(r, bits) for r in graph.apriori if not r.is_probabilistic)


def _check_enumerable(graph: DiagnosticGraph, cap: int):
    for t in graph.tests:
        if not t.is_deterministic:
            raise errors.ProbabilisticRelationError(f"Test '{t.id}' uses {t.semantics}, syndrome sets need deterministic tests")
    if graph.n_tests > cap:
        raise errors.EnumerationCapError(f"{graph.n_tests} tests exceed the syndrome enumeration cap of {cap}")


def syndrome_set(graph: DiagnosticGraph, active: Iterable[int], respect_apriori: bool = True, cap: int = SYNDROME_TEST_CAP) -> Set[types.Syndrome]:
    """
    Every syndrome the active fault set can produce. A set violating a
    deterministic a-priori relation produces nothing.
    """
    _check_enumerable(graph, cap)
    return _syndromes(graph, tuple(sorted(set(active))), respect_apriori)


def _syndromes(graph: DiagnosticGraph, active: FaultSet, respect_apriori: bool) -> Set[types.Syndrome]:
    bits = _bits(graph.n_failure_modes, active)
    if respect_apriori and not _feasible(graph, bits):
        return set()
    choices = _outcome_sets(graph, bits)
    size = math.prod(len(c) for c in choices)
    if size > MAX_SYNDROMES_PER_SET:
        raise errors.EnumerationCapError(f"Fault set {active} admits {size} syndromes")
    return set(itertools.product(*choices))


class DiagnosabilityReport:
    def __init__(self, kappa: int, method: str, counterexample: Optional[Tuple[FaultSet, FaultSet]] = None,
                 max_k: Optional[int] = None, examined: int = 0, policy: Optional[str] = None,
                 semantics: Optional[str] = None, names: Optional[Sequence[str]] = None):
        self.kappa = kappa
        self.method = method
        self.counterexample = counterexample
        self.max_k = max_k
        self.examined = examined
        self.policy = policy
        self.semantics = semantics
        self.names = tuple(names) if names is not None else None

    def _ids(self, fault_set: FaultSet) -> list:
        if self.names is None:
            return list(fault_set)
        return [self.names[i] for i in fault_set]

    def to_config(self) -> dict:
        config = {"kappa": self.kappa, "method": self.method, "max_k": self.max_k, "examined": self.examined}
        if self.counterexample is not None:
            config["counterexample"] = [self._ids(s) for s in self.counterexample]
        if self.policy:
            config["policy"] = self.policy
        if self.semantics:
            config["semantics"] = self.semantics
        return config

    def __str__(self):
        return f"{self.__class__.__name__} kappa={self.kappa} ({self.method})"


def brute_force_kappa(graph: DiagnosticGraph, max_k: Optional[int] = None, respect_apriori: bool = True,
                      budget: int = DEFAULT_BUDGET, cap: int = SYNDROME_TEST_CAP) -> DiagnosabilityReport:
    """
    Fault sets are visited by increasing size. The first syndrome shared by
    two sets of size at most k shows the graph is not k-diagnosable, and the
    pair is reported as counterexample. ``budget`` limits the number of fault
    sets examined.
    """
    _check_enumerable(graph, cap)
    n = graph.n_failure_modes
    max_k = n if max_k is None else min(max_k, n)
    names = [fm.id for fm in graph.failure_modes]
    seen: Dict[types.Syndrome, FaultSet] = {}
    examined = 0
    for k in range(0, max_k + 1):
        level = math.comb(n, k)
        if examined + level > budget:
            partial = DiagnosabilityReport(max(k - 1, 0), BRUTE_FORCE, max_k=max_k, examined=examined, names=names)
            raise errors.BudgetExceededError(f"Checking fault sets of size {k} exceeds the budget of {budget}", partial=partial)
        for active in itertools.combinations(range(n), k):
            examined += 1
            for syndrome in sorted(_syndromes(graph, active, respect_apriori)):
                other = seen.setdefault(syndrome, active)
                if other != active:
                    kappa = k - 1
                    log.debug("%s is %d-diagnosable: %s and %s share %s", graph, kappa, other, active, syndrome)
                    return DiagnosabilityReport(kappa, BRUTE_FORCE, (other, active), max_k, examined, names=names)
    return DiagnosabilityReport(max_k, BRUTE_FORCE, None, max_k, examined, names=names)


def kappa_report(graph: DiagnosticGraph, policy: str = ALL_MODES, semantics: Optional[str] = None, max_k: Optional[int] = None,
                 budget: int = DEFAULT_BUDGET) -> DiagnosabilityReport:
    """
    Brute-force kappa under an inclusion policy: every failure mode with the
    a-priori relations, or output failure modes only without them.
    """
    if policy not in POLICIES:
        raise errors.ConfigError(f"Unknown policy '{policy}', choose one of {', '.join(POLICIES)}")
    if semantics:
        graph = with_semantics(graph, semantics)
    if policy == OUTPUTS_ONLY:
        graph = output_subgraph(graph)
    report = brute_force_kappa(graph, max_k, budget=budget)
    report.policy = policy
    report.semantics = semantics
    return report


def _hypothesis_sets(graph: DiagnosticGraph):
    """H(f): tests involving f, and Gamma(f): modes sharing one of them."""
    tests = [[] for _ in range(graph.n_failure_modes)]
    gamma = [set() for _ in range(graph.n_failure_modes)]
    for t in graph.tests:
        for i in t.indices:
            tests[i].append(t)
            gamma[i].update(j for j in t.indices if j != i)
    return tests, gamma


def check_sufficient_conditions(graph: DiagnosticGraph, kappa: int) -> bool:
    """
    Sufficient conditions for kappa-diagnosability with scope-2 Weak-OR tests:

    1. ``kappa <= (N_f - 1) / 2``
    2. every failure mode takes part in at least ``kappa`` tests
    3. for every ``q < kappa`` and every set X of ``N_f - 2 kappa + q``
       failure modes, more than q failure modes outside X share a test with X
    """
    for t in graph.tests:
        if t.semantics != WEAK_OR:
            raise errors.WrongSemanticsError(f"Test '{t.id}' uses {t.semantics}, expected {WEAK_OR}")
        if len(t.indices) != 2:
            raise errors.SemanticsError(f"Test '{t.id}' has {len(t.indices)} scope members, expected 2", code="scope-size")
    if kappa < 0:
        raise errors.SemanticsError(f"kappa must not be negative, got {kappa}", code="invalid-kappa")
    n = graph.n_failure_modes
    if 2 * kappa > n - 1:
        return False
    tests, gamma = _hypothesis_sets(graph)
    if kappa > 0 and min(len(h) for h in tests) < kappa:
        return False
    for q in range(kappa):
        size = n - 2 * kappa + q
        for x in itertools.combinations(range(n), size):
            members = set(x)
            reach = set()
            for i in x:
                reach |= gamma[i]
            if len(reach - members) <= q:
                return False
    return True


def sufficient_kappa(graph: DiagnosticGraph) -> DiagnosabilityReport:
    """Largest kappa the sufficient conditions certify."""
    kappa = 0
    while check_sufficient_conditions(graph, kappa + 1):
        kappa += 1
    return DiagnosabilityReport(kappa, SUFFICIENT_CONDITIONS, max_k=(graph.n_failure_modes - 1) // 2,
                                names=[fm.id for fm in graph.failure_modes])


def temporal_kappa_lower_bound(slice_kappas: Sequence[int]) -> int:
    """A stack of graphs is at least as diagnosable as its weakest slice."""
    if not slice_kappas:
        raise errors.DataError("No slice kappas given", code="empty-input")
    return min(slice_kappas)


def hamming(a: Sequence[int], b: Sequence[int]) -> int:
    if len(a) != len(b):
        raise errors.LengthMismatchError(f"Cannot compare fault states of length {len(a)} and {len(b)}")
    return sum(1 for x, y in zip(a, b) if bool(x) != bool(y))


def _pairs(dataset) -> List[Tuple[types.Syndrome, types.FaultState]]:
    if hasattr(dataset, "syndromes") and hasattr(dataset, "labels"):
        return [(tuple(int(b) for b in s), tuple(int(b) for b in f)) for s, f in zip(dataset.syndromes(), dataset.labels())]
    return [(tuple(s), tuple(f)) for s, f in dataset]


def empirical_hamming(identifier: types.IdentifierP, dataset) -> float:
    """Mean Hamming distance between identified and true fault states."""
    pairs = _pairs(dataset)
    if not pairs:
        raise errors.EmptyDatasetError("Cannot evaluate an identifier on an empty dataset")
    return sum(hamming(identifier(s), f) for s, f in pairs) / len(pairs)


class PacBound(NamedTuple):
    empirical_hamming: float
    n_failure_modes: int
    sample_count: int
    delta: float
    value: float

    def to_config(self) -> dict:
        return self._asdict()


class PacConfidence(NamedTuple):
    gamma: float
    raw: float
    value: float

    def to_config(self) -> dict:
        return self._asdict()


def _check_counts(n_failure_modes: int, sample_count: int):
    if sample_count < 1:
        raise errors.InvalidCountsError(f"Need at least one sample, got {sample_count}")
    if n_failure_modes < 0:
        raise errors.InvalidCountsError(f"Invalid number of failure modes {n_failure_modes}")


def pac_bound(h: float, n_failure_modes: int, sample_count: int, delta: float) -> PacBound:
    """Upper bound on the expected Hamming loss, valid with probability 1 - delta."""
    _check_counts(n_failure_modes, sample_count)
    if not 0.0 < delta <= 2.0:
        raise errors.DataError(f"delta must lie in (0, 2], got {delta}", code="invalid-delta")
    value = h + n_failure_modes * math.sqrt(math.log(2.0 / delta) / (2.0 * sample_count))
    return PacBound(float(h), n_failure_modes, sample_count, float(delta), value)


def pac_confidence(gamma: float, h: float, n_failure_modes: int, sample_count: int) -> PacConfidence:
    """Lower bound on the probability of at most gamma mistakes; ``raw`` may be negative."""
    _check_counts(n_failure_modes, sample_count)
    if gamma < h:
        raise errors.DataError(f"gamma {gamma} is below the empirical Hamming loss {h}", code="gamma-below-empirical")
    if n_failure_modes == 0:
        return PacConfidence(float(gamma), 1.0, 1.0)
    raw = 1.0 - 2.0 * math.exp(-2.0 * ((gamma - h) / n_failure_modes) ** 2 * sample_count)
    return PacConfidence(float(gamma), raw, min(1.0, max(0.0, raw)))


def pac_curve(h: float, n_failure_modes: int, sample_count: int, deltas: Sequence[float] = DELTA_GRID) -> List[PacBound]:
    return [pac_bound(h, n_failure_modes, sample_count, d) for d in deltas]


def _independent_spec(n_modes: int, name: str) -> dict:
    return {
        "name": name,
        "system": {"modules": [{"id": f"m{i + 1}"} for i in range(n_modes)], "outputs": [], "edges": []},
        "failure_modes": [{"id": f"f{i + 1}", "host": f"m{i + 1}", "kind": "unknown"} for i in range(n_modes)],
        "tests": [],
        "apriori": [],
    }


def _pair_tests(pairs, semantics: str, prefix: str = "t") -> List[dict]:
    return [{"id": f"{prefix}{n + 1}", "scope": [f"f{a + 1}", f"f{b + 1}"], "semantics": semantics} for n, (a, b) in enumerate(pairs)]


def random_weak_or_graph(n_modes: int, n_tests: int, seed: Union[int, np.random.Generator, None] = None,
                         semantics: str = WEAK_OR, name: str = "random-weak-or") -> DiagnosticGraph:
    """Independent failure modes f1..fn and tests over distinct random pairs."""
    all_pairs = list(itertools.combinations(range(n_modes), 2))
    if n_tests > len(all_pairs):
        raise errors.ConfigError(f"{n_modes} failure modes allow at most {len(all_pairs)} distinct pair tests")
    rng = utils.as_generator(seed)
    chosen = sorted(rng.choice(len(all_pairs), size=n_tests, replace=False).tolist())
    spec = _independent_spec(n_modes, name)
    spec["tests"] = _pair_tests([all_pairs[i] for i in chosen], semantics)
    return build_graph(spec)


def random_diagnosable_graph(n_modes: int, kappa: int, seed: Union[int, np.random.Generator, None] = None,
                             name: str = "random-diagnosable") -> DiagnosticGraph:
    """Add random Weak-OR pair tests until the sufficient conditions hold for kappa."""
    if 2 * kappa > n_modes - 1:
        raise errors.ConfigError(f"{n_modes} failure modes cannot be {kappa}-diagnosable")
    rng = utils.as_generator(seed)
    all_pairs = list(itertools.combinations(range(n_modes), 2))
    order = rng.permutation(len(all_pairs)).tolist()
    spec = _independent_spec(n_modes, name)
    pairs = []
    for i in order:
        pairs.append(all_pairs[i])
        spec["tests"] = _pair_tests(pairs, WEAK_OR)
        graph = build_graph(spec)
        if len(pairs) >= kappa and check_sufficient_conditions(graph, kappa):
            log.debug("%s satisfies the conditions for kappa=%d after %d tests", graph, kappa, len(pairs))
            return graph
    raise errors.SolverError(f"No graph over {n_modes} failure modes meets the conditions for kappa={kappa}")


def random_stack(n_slices: int, n_modes: int, n_tests: int, n_temporal: int = 0,
                 seed: Union[int, np.random.Generator, None] = None) -> Tuple[TemporalDiagnosticGraph, List[DiagnosticGraph]]:
    """Random Weak-OR slices stacked with random cross-slice pair tests."""
    rng = utils.as_generator(seed)
    slices = [random_weak_or_graph(n_modes, n_tests, rng, name=f"slice{k}") for k in range(n_slices)]
    cross = []
    for n in range(n_temporal if n_slices > 1 else 0):
        k = int(rng.integers(0, n_slices - 1))
        a, b = (int(v) for v in rng.integers(0, n_modes, size=2))
        cross.append({"id": f"x{n + 1}", "scope": [qualify(f"f{a + 1}", k), qualify(f"f{b + 1}", k + 1)], "semantics": WEAK_OR})
    return stack_temporal(slices, cross), slices


class SweepReport:
    """Mean Hamming distance per fault-set size over every (fault set, syndrome) pair."""

    def __init__(self, n_failure_modes: int, kappa: Optional[int] = None):
        self.n_failure_modes = n_failure_modes
        self.kappa = kappa
        self.totals: Dict[int, int] = defaultdict(int)
        self.counts: Dict[int, int] = defaultdict(int)
        self.worst: Dict[int, int] = defaultdict(int)

    def add(self, size: int, distance: int):
        self.totals[size] += distance
        self.counts[size] += 1
        self.worst[size] = max(self.worst[size], distance)

    @property
    def sample_count(self) -> int:
        return sum(self.counts.values())

    @property
    def empirical_hamming(self) -> float:
        return sum(self.totals.values()) / self.sample_count if self.sample_count else 0.0

    def mean(self, size: int) -> float:
        return self.totals[size] / self.counts[size] if self.counts[size] else 0.0

    def bound(self, delta: float) -> PacBound:
        return pac_bound(self.empirical_hamming, self.n_failure_modes, self.sample_count, delta)

    def to_config(self, delta: float = 1e-12) -> dict:
        return {
            "kappa": self.kappa,
            "samples": self.sample_count,
            "empirical_hamming": self.empirical_hamming,
            "pac_bound": self.bound(delta).to_config() if self.sample_count else None,
            "sizes": [
                {"size": k, "samples": self.counts[k], "mean_hamming": self.mean(k), "max_hamming": self.worst[k]}
                for k in sorted(self.counts)
            ],
        }


def identification_sweep(graph: DiagnosticGraph, identifier: types.IdentifierP,
                         max_size: Optional[int] = None, per_set_cap: int = 64,
                         seed: Union[int, np.random.Generator, None] = None, kappa: Optional[int] = None) -> SweepReport:
    """
    Run the identifier on every admissible syndrome of every fault set up to
    ``max_size``. Sets with more than ``per_set_cap`` syndromes are sampled.
    """
    _check_enumerable(graph, SYNDROME_TEST_CAP)
    rng = utils.as_generator(seed)
    n = graph.n_failure_modes
    max_size = n if max_size is None else min(max_size, n)
    report = SweepReport(n, kappa)
    for k in range(max_size + 1):
        for active in itertools.combinations(range(n), k):
            truth = tuple(_bits(n, active))
            syndromes = sorted(_syndromes(graph, active, True))
            if len(syndromes) > per_set_cap:
                picks = sorted(rng.choice(len(syndromes), size=per_set_cap, replace=False).tolist())
                syndromes = [syndromes[i] for i in picks]
            for syndrome in syndromes:
                report.add(k, hamming(identifier(syndrome), truth))
    log.info("Identification sweep over %s: %d samples, mean Hamming %.4f", graph, report.sample_count, report.empirical_hamming)
    return report

# vim: set et sw=4 ts=4:
