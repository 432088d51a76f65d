"""
Discrete factor graphs over binary failure-mode variables and belief
propagation in the log domain.

Forests are solved exactly with recursive (unnormalised) messages. Graphs
with cycles use a flooding schedule with damped, normalised messages and
the Bethe approximation of log Z.
"""
from __future__ import annotations
import itertools
import logging
import math
from collections import deque
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from percmon import errors, types
from percmon.graph import NOISY_OR, PRIOR, TRANSITION, DiagnosticGraph
from percmon.learning import LearnedParams
from percmon.testmodels import NoisyOrParams, apriori_likelihood, outcome_likelihood

log = logging.getLogger(__name__)

SUM = "sum"
MAX = "max"

MAX_ITERS = 100
TOLERANCE = 1e-6
DAMPING = 0.5
BRUTE_FORCE_CAP = 20


class Factor:
    def __init__(self, scope: Sequence[int], table, name: str = ""):
        self.scope: Tuple[int, ...] = tuple(int(v) for v in scope)
        if not self.scope:
            raise errors.InvalidFactorError(f"Factor '{name}' has an empty scope")
        if len(set(self.scope)) != len(self.scope):
            raise errors.InvalidFactorError(f"Factor '{name}' repeats a variable")
        table = np.asarray(table, dtype=float)
        if table.size != 2 ** len(self.scope):
            raise errors.InvalidFactorError(f"Factor '{name}' needs {2 ** len(self.scope)} entries, got {table.size}")
        table = table.reshape((2,) * len(self.scope))
        if not np.all(np.isfinite(table)) or np.any(table < 0):
            raise errors.InvalidFactorError(f"Factor '{name}' has negative or non-finite entries")
        if not np.any(table > 0):
            raise errors.InvalidFactorError(f"Factor '{name}' is zero everywhere")
        self.table = table
        self.name = name
        with np.errstate(divide="ignore"):
            self.log_table = np.log(table)

    def __len__(self):
        return len(self.scope)

    def __str__(self):
        return f"{self.__class__.__name__} '{self.name}' {self.scope}"


class FactorGraph:
    def __init__(self, n_vars: int, factors: Sequence[Factor], names: Optional[Sequence[str]] = None):
        self.n_vars = int(n_vars)
        self.factors: Tuple[Factor, ...] = tuple(factors)
        self.names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(self.n_vars))
        for f in self.factors:
            for v in f.scope:
                if not 0 <= v < self.n_vars:
                    raise errors.InvalidFactorError(f"{f} references unknown variable {v}")
        self.var_factors: List[List[int]] = [[] for _ in range(self.n_vars)]
        for fi, f in enumerate(self.factors):
            for v in f.scope:
                self.var_factors[v].append(fi)

    def is_forest(self) -> bool:
        """No cycle through factors with two or more variables."""
        parent = list(range(self.n_vars + len(self.factors)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for fi, f in enumerate(self.factors):
            if len(f) < 2:
                continue
            node = self.n_vars + fi
            for v in f.scope:
                a, b = find(node), find(v)
                if a == b:
                    return False
                parent[a] = b
        return True

    def __str__(self):
        return f"{self.__class__.__name__} [{self.n_vars} variables, {len(self.factors)} factors]"


class MessageState:
    """Log-domain messages: q[(v, f)] variable to factor, r[(f, v)] factor to variable."""

    def __init__(self):
        self.q: Dict[Tuple[int, int], np.ndarray] = {}
        self.r: Dict[Tuple[int, int], np.ndarray] = {}
        self.iterations = 0
        self.residual = math.inf
        self.converged = False


class Beliefs(NamedTuple):
    marginals: np.ndarray
    log_z: float
    converged: bool


class Posterior(NamedTuple):
    marginals: np.ndarray
    log_z: float
    map: types.FaultState


def _along(message: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = 2
    return message.reshape(shape)


def _reduce(table: np.ndarray, axis: int, mode: str) -> np.ndarray:
    flat = np.moveaxis(table, axis, 0).reshape(2, -1)
    if mode == MAX:
        return flat.max(axis=1)
    return np.logaddexp.reduce(flat, axis=1)


def _normalize(message: np.ndarray, mode: str) -> np.ndarray:
    top = message.max() if mode == MAX else np.logaddexp.reduce(message)
    if not np.isfinite(top):
        raise errors.ZeroPartitionError("Evidence is contradictory: a message vanished")
    return message - top


class EdgeIndex:
    """
    Flat numbering of the edges between variables and factors with two or
    more variables. Factors are grouped by arity so one group's messages are
    computed with array operations over all of its factors at once.
    """

    def __init__(self, fg: FactorGraph, multi: Sequence[int]):
        self.edges: List[Tuple[int, int]] = [(fi, v) for fi in multi for v in fg.factors[fi].scope]
        position = {edge: n for n, edge in enumerate(self.edges)}
        self.variable = np.array([v for _, v in self.edges], dtype=np.intp)
        per_var: List[List[int]] = [[] for _ in range(fg.n_vars)]
        for n, (_, v) in enumerate(self.edges):
            per_var[v].append(n)
        # index len(edges) addresses an all-zero padding row
        width = max([len(e) - 1 for e in per_var] + [1])
        self.siblings = np.full((len(self.edges), width), len(self.edges), dtype=np.intp)
        for on_var in per_var:
            for n in on_var:
                others = [m for m in on_var if m != n]
                self.siblings[n, :len(others)] = others
        by_arity: Dict[int, List[int]] = {}
        for fi in multi:
            by_arity.setdefault(len(fg.factors[fi]), []).append(fi)
        self.groups: List[Tuple[int, np.ndarray, np.ndarray]] = []
        for k, members in sorted(by_arity.items()):
            tables = np.stack([fg.factors[fi].log_table for fi in members])
            slots = np.array([[position[(fi, v)] for v in fg.factors[fi].scope] for fi in members], dtype=np.intp)
            self.groups.append((k, tables, slots))

    def __len__(self):
        return len(self.edges)


def _along_rows(messages: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [len(messages)] + [1] * ndim
    shape[axis + 1] = 2
    return messages.reshape(shape)


def _reduce_rows(tables: np.ndarray, axis: int, mode: str) -> np.ndarray:
    flat = np.moveaxis(tables, axis + 1, 1).reshape(len(tables), 2, -1)
    if mode == MAX:
        return flat.max(axis=2)
    return np.logaddexp.reduce(flat, axis=2)


def _normalize_rows(messages: np.ndarray, mode: str) -> np.ndarray:
    top = messages.max(axis=1) if mode == MAX else np.logaddexp.reduce(messages, axis=1)
    if not np.all(np.isfinite(top)):
        raise errors.ZeroPartitionError("Evidence is contradictory: a message vanished")
    return messages - top[:, None]


class BeliefPropagation:
    def __init__(self, fg: FactorGraph, mode: str = SUM, max_iters: int = MAX_ITERS, tolerance: float = TOLERANCE, damping: float = DAMPING):
        if mode not in (SUM, MAX):
            raise errors.InferenceError(f"Unknown propagation mode '{mode}'")
        if not 0.0 <= damping < 1.0:
            raise errors.InferenceError(f"Damping must lie in [0,1), got {damping}")
        self.fg = fg
        self.mode = mode
        self.max_iters = max_iters
        self.tolerance = tolerance
        self.damping = damping
        self.tree = fg.is_forest()
        self.local = [np.zeros(2) for _ in range(fg.n_vars)]
        self.multi: List[int] = []
        for fi, f in enumerate(fg.factors):
            if len(f) == 1:
                self.local[f.scope[0]] = self.local[f.scope[0]] + f.log_table
            else:
                self.multi.append(fi)
        self.neighbours: List[List[int]] = [[fi for fi in fg.var_factors[v] if len(fg.factors[fi]) > 1] for v in range(fg.n_vars)]
        self.state = MessageState()

    def _factor_message(self, fi: int, v: int, q: Dict[Tuple[int, int], np.ndarray]) -> np.ndarray:
        f = self.fg.factors[fi]
        table = f.log_table
        for pos, u in enumerate(f.scope):
            if u != v:
                table = table + _along(q[(u, fi)], pos, len(f))
        return _reduce(table, f.scope.index(v), self.mode)

    def _variable_message(self, v: int, fi: int, r: Dict[Tuple[int, int], np.ndarray]) -> np.ndarray:
        message = self.local[v]
        for g in self.neighbours[v]:
            if g != fi:
                message = message + r[(g, v)]
        return message

    # Forests: every message is the exact (unnormalised) sum or max over its subtree.

    def _tree_r(self, fi: int, v: int) -> np.ndarray:
        key = (fi, v)
        if key not in self.state.r:
            f = self.fg.factors[fi]
            for u in f.scope:
                if u != v:
                    self._tree_q(u, fi)
            self.state.r[key] = self._factor_message(fi, v, self.state.q)
        return self.state.r[key]

    def _tree_q(self, v: int, fi: int) -> np.ndarray:
        key = (v, fi)
        if key not in self.state.q:
            for g in self.neighbours[v]:
                if g != fi:
                    self._tree_r(g, v)
            self.state.q[key] = self._variable_message(v, fi, self.state.r)
        return self.state.q[key]

    def _run_tree(self):
        for fi in self.multi:
            for v in self.fg.factors[fi].scope:
                self._tree_r(fi, v)
                self._tree_q(v, fi)
        self.state.iterations = 1
        self.state.residual = 0.0
        self.state.converged = True

    def _factor_messages(self, edges: EdgeIndex, q: np.ndarray) -> np.ndarray:
        r = np.empty_like(q)
        for k, tables, slots in edges.groups:
            incoming = [_along_rows(q[slots[:, pos]], pos, k) for pos in range(k)]
            for pos in range(k):
                t = tables
                for other in range(k):
                    if other != pos:
                        t = t + incoming[other]
                r[slots[:, pos]] = _reduce_rows(t, pos, self.mode)
        return r

    def _variable_messages(self, edges: EdgeIndex, local: np.ndarray, r: np.ndarray) -> np.ndarray:
        padded = np.vstack([r, np.zeros((1, 2))])
        return local[edges.variable] + padded[edges.siblings].sum(axis=1)

    def _run_flooding(self):
        state = self.state
        edges = EdgeIndex(self.fg, self.multi)
        local = np.array(self.local).reshape(self.fg.n_vars, 2)
        q = _normalize_rows(local[edges.variable], self.mode)
        r = _normalize_rows(np.zeros((len(edges), 2)), self.mode)
        keep, fresh = math.log(self.damping) if self.damping > 0 else -math.inf, math.log1p(-self.damping)
        for it in range(1, self.max_iters + 1):
            update = _normalize_rows(self._factor_messages(edges, q), self.mode)
            if self.damping > 0:
                update = _normalize_rows(np.logaddexp(fresh + update, keep + r), self.mode)
            residual = float(np.max(np.abs(np.exp(update) - np.exp(r))))
            r = update
            q = _normalize_rows(self._variable_messages(edges, local, r), self.mode)
            state.iterations, state.residual = it, residual
            if residual < self.tolerance:
                state.converged = True
                break
        state.q = {(v, fi): q[n] for n, (fi, v) in enumerate(edges.edges)}
        state.r = {(fi, v): r[n] for n, (fi, v) in enumerate(edges.edges)}
        if not state.converged:
            log.warning("Belief propagation did not converge after %d iterations (residual %.3g)", state.iterations, state.residual)

    def run(self) -> MessageState:
        if self.tree:
            self._run_tree()
        else:
            self._run_flooding()
        return self.state

    def log_belief(self, v: int) -> np.ndarray:
        belief = self.local[v]
        for fi in self.neighbours[v]:
            belief = belief + self.state.r[(fi, v)]
        return belief

    def marginals(self) -> np.ndarray:
        result = np.empty((self.fg.n_vars, 2))
        for v in range(self.fg.n_vars):
            b = self.log_belief(v)
            result[v] = np.exp(_normalize(b, SUM) if self.mode == SUM else _normalize(b, MAX))
            if self.mode == MAX:
                result[v] /= result[v].sum()
        return result

    def _components(self) -> List[int]:
        """One representative variable per connected component."""
        seen, roots = set(), []
        for start in range(self.fg.n_vars):
            if start in seen:
                continue
            roots.append(start)
            stack = [start]
            seen.add(start)
            while stack:
                v = stack.pop()
                for fi in self.neighbours[v]:
                    for u in self.fg.factors[fi].scope:
                        if u not in seen:
                            seen.add(u)
                            stack.append(u)
        return roots

    def log_partition(self) -> float:
        if self.mode != SUM:
            raise errors.InferenceError("The partition function needs sum-product messages")
        if self.tree:
            total = 0.0
            for v in self._components():
                z = float(logsumexp(self.log_belief(v)))
                if not np.isfinite(z):
                    raise errors.ZeroPartitionError("Partition function is zero")
                total += z
            return total
        return self._bethe()

    def _bethe(self) -> float:
        total = 0.0
        for fi in self.multi:
            f = self.fg.factors[fi]
            t = f.log_table
            for pos, u in enumerate(f.scope):
                t = t + _along(self.state.q[(u, fi)], pos, len(f))
            log_b = t - logsumexp(t)
            b = np.exp(log_b)
            mask = b > 0
            total += float(np.sum(b[mask] * (f.log_table[mask] - log_b[mask])))
        for v in range(self.fg.n_vars):
            belief = self.log_belief(v)
            log_b = belief - logsumexp(belief)
            b = np.exp(log_b)
            mask = b > 0
            total += float(np.sum(b[mask] * self.local[v][mask]))
            total += (len(self.neighbours[v]) - 1) * float(np.sum(b[mask] * log_b[mask]))
        return total

    def _order(self) -> List[int]:
        order, seen = [], set()
        for start in range(self.fg.n_vars):
            if start in seen:
                continue
            seen.add(start)
            queue = deque([start])
            while queue:
                v = queue.popleft()
                order.append(v)
                for fi in self.neighbours[v]:
                    for u in self.fg.factors[fi].scope:
                        if u not in seen:
                            seen.add(u)
                            queue.append(u)
        return order

    def decode(self) -> types.FaultState:
        """
        Per-variable argmax of max-beliefs, taken in breadth-first order from
        the lowest variable of each component and conditioned on the variables
        already decoded. Ties go to INACTIVE, so among tied MAP states the one
        that is smallest in that breadth-first order wins. This equals the
        index-order choice of :func:`brute_force_posterior` whenever the
        breadth-first order is the index order, e.g. on chains numbered from
        one end.
        """
        assignment = [-1] * self.fg.n_vars
        for v in self._order():
            score = self.local[v].copy()
            for fi in self.neighbours[v]:
                f = self.fg.factors[fi]
                t = f.log_table
                for pos, u in enumerate(f.scope):
                    if u == v:
                        continue
                    if assignment[u] >= 0:
                        pin = np.full(2, -np.inf)
                        pin[assignment[u]] = 0.0
                        t = t + _along(pin, pos, len(f))
                    else:
                        t = t + _along(self.state.q[(u, fi)], pos, len(f))
                score = score + _reduce(t, f.scope.index(v), MAX)
            assignment[v] = 1 if score[1] > score[0] else 0
        return tuple(assignment)


def sum_product(fg: FactorGraph, max_iters: int = MAX_ITERS, tolerance: float = TOLERANCE, damping: float = DAMPING) -> Beliefs:
    bp = BeliefPropagation(fg, SUM, max_iters, tolerance, damping)
    state = bp.run()
    return Beliefs(bp.marginals(), bp.log_partition(), state.converged)


def max_product(fg: FactorGraph, max_iters: int = MAX_ITERS, tolerance: float = TOLERANCE, damping: float = DAMPING) -> types.FaultState:
    bp = BeliefPropagation(fg, MAX, max_iters, tolerance, damping)
    bp.run()
    return bp.decode()


def brute_force_posterior(fg: FactorGraph, cap: int = BRUTE_FORCE_CAP) -> Posterior:
    """
    Exact marginals, log Z and MAP by enumerating every assignment. Among
    tied MAP states the smallest in index order (f1 most significant) wins.
    """
    n = fg.n_vars
    if n > cap:
        raise errors.SizeCapError(f"{n} variables exceed the brute-force cap of {cap}")
    states = np.arange(2 ** n, dtype=np.int64)
    bits = ((states[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.intp)
    score = np.zeros(2 ** n)
    for f in fg.factors:
        score = score + f.log_table[tuple(bits[:, v] for v in f.scope)]
    log_z = float(logsumexp(score))
    if not np.isfinite(log_z):
        raise errors.ZeroPartitionError("Partition function is zero")
    weights = np.exp(score - log_z)
    on = weights @ bits
    marginals = np.stack([1.0 - on, on], axis=1)
    best = int(np.argmax(score))
    return Posterior(marginals, log_z, tuple(int(b) for b in bits[best]))


def _table(k: int, fn) -> np.ndarray:
    table = np.empty((2,) * k)
    for bits in itertools.product((0, 1), repeat=k):
        table[bits] = fn(bits)
    return table


class FactorGraphTemplate:
    """
    The syndrome-independent part of a graph's factor graph: relation and
    prior factors are built once, test factors once per observed outcome.
    """

    def __init__(self, graph: DiagnosticGraph, params: Optional[LearnedParams] = None):
        self.graph = graph
        self.params = params
        self._tests: Dict[Tuple[int, int], Factor] = {}
        self._noisy = []
        for test in graph.tests:
            if params is not None and params.has_test(test.id):
                self._noisy.append(params.noisy_or(test))
            elif test.semantics == NOISY_OR:
                self._noisy.append(NoisyOrParams.of(test))
            else:
                self._noisy.append(None)

        self.fixed: List[Factor] = []
        covered = set()
        for relation in graph.apriori:
            if relation.kind == PRIOR:
                covered.add(relation.indices[0])
            learned = params.transition(relation.id) if params is not None and relation.kind == TRANSITION else None
            p_activate, p_persist = learned if learned else (None, None)

            def likelihood(bits, relation=relation, p_activate=p_activate, p_persist=p_persist):
                faults = [0] * graph.n_failure_modes
                for i, b in zip(relation.indices, bits):
                    faults[i] = b
                return apriori_likelihood(relation, faults, p_activate, p_persist)

            self.fixed.append(Factor(relation.indices, _table(len(relation.indices), likelihood), relation.id))

        for fm in graph.failure_modes:
            if params is not None and fm.id in params.priors and fm.index not in covered:
                rho = params.priors[fm.id]
                self.fixed.append(Factor((fm.index,), (1.0 - rho, rho), f"{fm.id}.prior"))
            elif fm.index not in covered:
                raise errors.MissingParameterError(f"No prior for failure mode '{fm.id}'")
        self.names = [fm.id for fm in graph.failure_modes]

    def test_factor(self, n: int, outcome: int) -> Factor:
        key = (n, outcome)
        if key not in self._tests:
            test, noisy = self.graph.tests[n], self._noisy[n]
            self._tests[key] = Factor(test.indices, _table(len(test.indices), lambda bits: outcome_likelihood(test, bits, outcome, noisy)), test.id)
        return self._tests[key]

    def bind(self, syndrome: Sequence[int]) -> FactorGraph:
        syndrome = self.graph.check_syndrome(syndrome)
        factors = [self.test_factor(n, outcome) for n, outcome in enumerate(syndrome)]
        return FactorGraph(self.graph.n_failure_modes, factors + self.fixed, self.names)


def to_factor_graph(graph: DiagnosticGraph, syndrome: Sequence[int], params: Optional[LearnedParams] = None) -> FactorGraph:
    """
    One factor per test (likelihood of the observed outcome), one per
    a-priori relation and one unary prior per failure mode. Learned
    Noisy-OR parameters replace a test's own semantics; a failure mode
    covered by a Prior relation of the graph gets no second prior.
    """
    syndrome = graph.check_syndrome(syndrome)
    return FactorGraphTemplate(graph, params).bind(syndrome)

# vim: set et sw=4 ts=4:
