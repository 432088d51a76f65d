from __future__ import annotations
import copy
import logging
import pathlib
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from percmon import errors, jsonio, structs, types

log = logging.getLogger(__name__)

GRAPH_FORMAT_VERSION = 1

MODULE_HOST = "module"
OUTPUT_HOST = "output"

DETERMINISTIC_OR = "DeterministicOR"
WEAK_OR = "WeakOR"
WEAKER_OR = "WeakerOR"
NOISY_OR = "NoisyOR"
DETERMINISTIC_SEMANTICS = (DETERMINISTIC_OR, WEAK_OR, WEAKER_OR)
SEMANTICS = DETERMINISTIC_SEMANTICS + (NOISY_OR,)

MODULE_OUTPUT = "ModuleOutputImplication"
PRIOR = "Prior"
TRANSITION = "Transition"
MUTUAL_EXCLUSION = "MutualExclusion"
IMPLICATION = "Implication"
RELATION_KINDS = (MODULE_OUTPUT, PRIOR, TRANSITION, MUTUAL_EXCLUSION, IMPLICATION)

FAILURE_KINDS = (
    "out-of-distribution",
    "misdetection",
    "misposition",
    "misclassification",
    "misassociation",
    "too-many-outliers",
    "few-features",
    "suboptimal-solution",
    "wrong-relative-pose",
    "unknown",
)

SLICE_SEPARATOR = "@"


def qualify(item_id: str, k: int) -> str:
    return f"{item_id}{SLICE_SEPARATOR}{k}"


def split_qualified(item_id: str) -> Tuple[str, Optional[int]]:
    base, sep, k = item_id.rpartition(SLICE_SEPARATOR)
    if not sep:
        return item_id, None
    try:
        return base, int(k)
    except ValueError:
        return item_id, None


def base_id(item_id: str) -> str:
    return split_qualified(item_id)[0]


class Module:
    def __init__(self, config: dict):
        self.id = str(config["id"])
        self.name = str(config.get("name") or self.id)

    def to_config(self) -> dict:
        return {"id": self.id, "name": self.name}

    def __str__(self):
        return f"{self.__class__.__name__} '{self.name}' [{self.id}]"


class Output:
    def __init__(self, config: dict):
        self.id = str(config["id"])
        self.name = str(config.get("name") or self.id)
        self.module = str(config.get("module") or "")

    def to_config(self) -> dict:
        return {"id": self.id, "name": self.name, "module": self.module}

    def __str__(self):
        return f"{self.__class__.__name__} '{self.name}' [{self.id}]"


class PerceptionSystem:
    """
    Modules and the outputs they produce, linked by produce (module to output)
    and consume (output to module) edges.
    """

    def __init__(self, config: dict, path: Optional[str] = None):
        self.modules: Tuple[Module, ...] = tuple(Module(c) for c in config.get("modules", []))
        self.outputs: Tuple[Output, ...] = tuple(Output(c) for c in config.get("outputs", []))
        self._modules = structs.index_items(self.modules, "module", path)
        self._outputs = structs.index_items(self.outputs, "output", path)
        for oid in self._outputs:
            if oid in self._modules:
                raise errors.DuplicateIdError(f"Id '{oid}' names both a module and an output", path=path)
        edges = []
        for e in config.get("edges", []):
            src, dst = (e["from"], e["to"]) if isinstance(e, dict) else (e[0], e[1])
            edges.append((str(src), str(dst)))
        for o in self.outputs:
            if o.module not in self._modules:
                raise errors.DanglingReferenceError(f"Output '{o.id}' is produced by unknown module '{o.module}'", path=path)
            for src, dst in edges:
                if dst == o.id and src in self._modules and src != o.module:
                    raise errors.GraphError(f"Output '{o.id}' has more than one producing module", code="multiple-producers", path=path)
            if (o.module, o.id) not in edges:
                edges.append((o.module, o.id))
        for src, dst in edges:
            if src not in self._modules and src not in self._outputs:
                raise errors.DanglingReferenceError(f"Edge source '{src}' does not exist", path=path)
            if dst not in self._modules and dst not in self._outputs:
                raise errors.DanglingReferenceError(f"Edge target '{dst}' does not exist", path=path)
            if (src in self._modules) == (dst in self._modules):
                raise errors.GraphError(f"Edge {src} -> {dst} must link a module and an output", code="invalid-edge", path=path)
        self.edges: Tuple[Tuple[str, str], ...] = tuple(edges)

    def module(self, key: str, default: Union[Module, None, types.Nothing] = types.NOTHING) -> Optional[Module]:
        return structs.first_item_by_id_or_name(self.modules, key, default=default)

    def output(self, key: str, default: Union[Output, None, types.Nothing] = types.NOTHING) -> Optional[Output]:
        return structs.first_item_by_id_or_name(self.outputs, key, default=default)

    def is_module(self, host: str) -> bool:
        return host in self._modules

    def is_output(self, host: str) -> bool:
        return host in self._outputs

    def owning_module(self, host: str) -> str:
        """The module itself, or the module producing the output."""
        if host in self._modules:
            return host
        return self._outputs[host].module

    def outputs_of(self, module_id: str) -> List[Output]:
        return [o for o in self.outputs if o.module == module_id]

    def consumers_of(self, output_id: str) -> List[str]:
        return [dst for src, dst in self.edges if src == output_id]

    def to_config(self) -> dict:
        produced = {(o.module, o.id) for o in self.outputs}
        return {
            "modules": [m.to_config() for m in self.modules],
            "outputs": [o.to_config() for o in self.outputs],
            "edges": [{"from": s, "to": d} for s, d in self.edges if (s, d) not in produced],
        }


class FailureMode:
    def __init__(self, config: dict, index: int, system: PerceptionSystem, path: Optional[str] = None):
        self.id = str(config["id"])
        self.name = str(config.get("name") or self.id)
        self.index = index
        self.host = str(config.get("host") or "")
        self.kind = str(config.get("kind") or "unknown")
        if self.kind not in FAILURE_KINDS:
            raise errors.GraphError(f"Failure mode '{self.id}' has unknown kind '{self.kind}'", code="unknown-kind", path=path)
        if system.is_module(self.host):
            self.host_kind = MODULE_HOST
        elif system.is_output(self.host):
            self.host_kind = OUTPUT_HOST
        else:
            raise errors.DanglingReferenceError(f"Failure mode '{self.id}' is attached to unknown host '{self.host}'", path=path)
        self.module = system.owning_module(self.host)

    def to_config(self) -> dict:
        return {"id": self.id, "name": self.name, "host": self.host, "kind": self.kind}

    def __str__(self):
        return f"{self.__class__.__name__} '{self.name}' [{self.id}]"


class DiagnosticTest:
    """A test-driven relation: one outcome observed over a scope of failure modes."""

    def __init__(self, config: dict, graph: DiagnosticGraph, path: Optional[str] = None):
        self.id = str(config["id"])
        self.name = str(config.get("name") or self.id)
        scope = [str(s) for s in config.get("scope", [])]
        if not scope:
            raise errors.EmptyScopeError(f"Test '{self.id}' has an empty scope", path=path)
        if len(set(scope)) != len(scope):
            raise errors.DuplicateIdError(f"Test '{self.id}' lists a failure mode twice", path=path)
        self.scope: Tuple[str, ...] = tuple(scope)
        self.indices: Tuple[int, ...] = tuple(structs.resolve_ids(scope, graph._index, f"Test '{self.id}'", path))
        self.semantics = str(config.get("semantics", WEAKER_OR))
        if self.semantics not in SEMANTICS:
            raise errors.GraphError(f"Test '{self.id}' has unknown semantics '{self.semantics}'", code="unknown-semantics", path=path)
        self.p_detect = self._probabilities(config.get("p_detect"), "p_detect", path)
        self.p_false_alarm = self._probabilities(config.get("p_false_alarm"), "p_false_alarm", path)
        if self.semantics == NOISY_OR and (self.p_detect is None or self.p_false_alarm is None):
            raise errors.ProbabilityError(f"NoisyOR test '{self.id}' needs p_detect and p_false_alarm", path=path)
        self.span = int(config.get("span", 1))

    def _probabilities(self, values, what: str, path: Optional[str]) -> Optional[Tuple[float, ...]]:
        if values is None:
            return None
        if len(values) != len(self.scope):
            raise errors.ProbabilityError(f"Test '{self.id}': {what} has {len(values)} entries for a scope of {len(self.scope)}", path=path)
        return tuple(structs.check_probability(v, f"Test '{self.id}' {what}", path) for v in values)

    @property
    def is_deterministic(self) -> bool:
        return self.semantics in DETERMINISTIC_SEMANTICS

    def to_config(self) -> dict:
        config = {"id": self.id, "name": self.name, "scope": list(self.scope), "semantics": self.semantics}
        if self.p_detect is not None:
            config["p_detect"] = list(self.p_detect)
        if self.p_false_alarm is not None:
            config["p_false_alarm"] = list(self.p_false_alarm)
        if self.span != 1:
            config["span"] = self.span
        return config

    def __str__(self):
        return f"{self.__class__.__name__} '{self.name}' [{self.id}]"


class AprioriRelation:
    """
    Knowledge about failure modes that is not backed by a measured outcome.

    ModuleOutputImplication: if any output mode of the module is active, some
    module mode is active (and the reverse as well with ``iff``).
    Implication: if any antecedent is active, some consequent is active.
    MutualExclusion: at most one mode of the scope is active.
    Prior and Transition are purely probabilistic. Implication and
    MutualExclusion become soft when they carry a ``probability``.
    """

    def __init__(self, config: dict, graph: DiagnosticGraph, path: Optional[str] = None):
        self.id = str(config["id"])
        self.name = str(config.get("name") or self.id)
        self.kind = str(config.get("kind", ""))
        if self.kind not in RELATION_KINDS:
            raise errors.GraphError(f"Relation '{self.id}' has unknown kind '{self.kind}'", code="unknown-kind", path=path)
        owner = f"Relation '{self.id}'"
        self.module: Optional[str] = None
        self.iff = False
        self.probability: Optional[float] = None
        self.p_activate: Optional[float] = None
        self.p_persist: Optional[float] = None
        self.antecedent: Tuple[int, ...] = ()
        self.consequent: Tuple[int, ...] = ()

        if self.kind == MODULE_OUTPUT:
            self.module = str(config.get("module", ""))
            if not graph.system.is_module(self.module):
                raise errors.DanglingReferenceError(f"{owner} references unknown module '{self.module}'", path=path)
            self.iff = bool(config.get("iff", False))
            if "scope" in config:
                scope = [str(s) for s in config["scope"]]
            else:
                scope = [fm.id for fm in graph.failure_modes if fm.module == self.module]
            indices = structs.resolve_ids(scope, graph._index, owner, path)
            for i in indices:
                if graph.failure_modes[i].module != self.module:
                    raise errors.GraphError(f"{owner}: '{graph.failure_modes[i].id}' does not belong to module '{self.module}'", path=path)
            self.consequent = tuple(i for i in indices if graph.failure_modes[i].host_kind == MODULE_HOST)
            self.antecedent = tuple(i for i in indices if graph.failure_modes[i].host_kind == OUTPUT_HOST)
            if not self.consequent or not self.antecedent:
                raise errors.EmptyScopeError(f"{owner} needs module and output failure modes", path=path)
        elif self.kind == IMPLICATION:
            ante = [str(s) for s in config.get("antecedent", [])]
            cons = [str(s) for s in config.get("consequent", [])]
            if not ante or not cons:
                raise errors.EmptyScopeError(f"{owner} needs antecedent and consequent", path=path)
            self.antecedent = tuple(structs.resolve_ids(ante, graph._index, owner, path))
            self.consequent = tuple(structs.resolve_ids(cons, graph._index, owner, path))
            scope = ante + [c for c in cons if c not in ante]
        else:
            scope = [str(s) for s in config.get("scope", [])]

        if not scope:
            raise errors.EmptyScopeError(f"{owner} has an empty scope", path=path)
        self.scope: Tuple[str, ...] = tuple(scope)
        self.indices: Tuple[int, ...] = tuple(structs.resolve_ids(scope, graph._index, owner, path))

        if self.kind == PRIOR:
            if len(self.scope) != 1:
                raise errors.GraphError(f"{owner}: a prior covers exactly one failure mode", path=path)
            self.probability = structs.check_probability(config.get("probability"), owner, path)
        elif self.kind == TRANSITION:
            if len(self.scope) != 2:
                raise errors.GraphError(f"{owner}: a transition links exactly two failure modes", path=path)
            if config.get("p_activate") is not None:
                self.p_activate = structs.check_probability(config["p_activate"], owner, path)
            if config.get("p_persist") is not None:
                self.p_persist = structs.check_probability(config["p_persist"], owner, path)
        elif self.kind in (IMPLICATION, MUTUAL_EXCLUSION):
            if config.get("probability") is not None:
                self.probability = structs.check_probability(config["probability"], owner, path)

    @property
    def is_probabilistic(self) -> bool:
        return self.kind in (PRIOR, TRANSITION) or self.probability is not None

    def to_config(self) -> dict:
        config = {"id": self.id, "name": self.name, "kind": self.kind}
        if self.kind != IMPLICATION:
            config["scope"] = list(self.scope)
        if self.kind == MODULE_OUTPUT:
            config["module"] = self.module
            config["iff"] = self.iff
        if self.kind == IMPLICATION:
            ids = self.scope
            index_to_id = dict(zip(self.indices, ids))
            config["antecedent"] = [index_to_id[i] for i in self.antecedent]
            config["consequent"] = [index_to_id[i] for i in self.consequent]
        if self.probability is not None:
            config["probability"] = self.probability
        if self.p_activate is not None:
            config["p_activate"] = self.p_activate
        if self.p_persist is not None:
            config["p_persist"] = self.p_persist
        return config

    def __str__(self):
        return f"{self.__class__.__name__} {self.kind} [{self.id}]"


class DiagnosticGraph:
    """
    Bipartite graph of failure modes and relations over a perception system.
    Failure-mode and test indices follow document order and never change.
    """

    def __init__(self, config: dict, path: Optional[str] = None):
        self.path = path
        self.name = str(config.get("name", ""))
        self.version = int(config.get("version", GRAPH_FORMAT_VERSION))
        if self.version > GRAPH_FORMAT_VERSION:
            raise errors.GraphError(f"Unsupported graph format version {self.version}", code="unsupported-version", path=path)
        self.system = PerceptionSystem(config.get("system", {}), path)
        self._check_ids(config, path)
        self.failure_modes: Tuple[FailureMode, ...] = tuple(
            FailureMode(c, i, self.system, path) for i, c in enumerate(config.get("failure_modes", []))
        )
        self._index: Dict[str, int] = {fm.id: fm.index for fm in structs.index_items(self.failure_modes, "failure mode", path).values()}
        self.tests: Tuple[DiagnosticTest, ...] = tuple(DiagnosticTest(c, self, path) for c in config.get("tests", []))
        self.apriori: Tuple[AprioriRelation, ...] = tuple(AprioriRelation(c, self, path) for c in config.get("apriori", []))
        structs.index_items(self.tests, "test", path)
        structs.index_items(self.apriori, "relation", path)
        ids = {t.id for t in self.tests}
        for r in self.apriori:
            if r.id in ids:
                raise errors.DuplicateIdError(f"Id '{r.id}' names both a test and a relation", path=path)
        log.debug("Built %s", self)

    def _check_ids(self, config: dict, path: Optional[str]):
        for section in ("failure_modes", "tests", "apriori"):
            for c in config.get(section, []):
                if SLICE_SEPARATOR in str(c.get("id", "")) and not isinstance(self, TemporalDiagnosticGraph):
                    raise errors.GraphError(f"Id '{c['id']}' must not contain '{SLICE_SEPARATOR}'", code="reserved-character", path=path)

    @property
    def n_failure_modes(self) -> int:
        return len(self.failure_modes)

    @property
    def n_tests(self) -> int:
        return len(self.tests)

    @property
    def slice_count(self) -> int:
        return 1

    def slice_of(self, index: int) -> int:
        return 0

    def index_of(self, key: str) -> int:
        return self.failure_mode(key).index

    def failure_mode(self, key: str, default: Union[FailureMode, None, types.Nothing] = types.NOTHING) -> Optional[FailureMode]:
        if key in self._index:
            return self.failure_modes[self._index[key]]
        return self._lookup(self.failure_modes, key, default, "failure mode")

    def test(self, key: str, default: Union[DiagnosticTest, None, types.Nothing] = types.NOTHING) -> Optional[DiagnosticTest]:
        return self._lookup(self.tests, key, default, "test")

    def relation(self, key: str, default: Union[AprioriRelation, None, types.Nothing] = types.NOTHING) -> Optional[AprioriRelation]:
        return self._lookup(self.apriori, key, default, "relation")

    def _lookup(self, items, key: str, default, what: str):
        found = structs.first_item_by_id_or_name(items, key, default=None)
        if found is not None:
            return found
        if default is types.NOTHING:
            raise errors.DanglingReferenceError(f"{self} has no {what} '{key}'", path=self.path)
        return default

    def test_index(self, key: str) -> int:
        test = self.test(key)
        return self.tests.index(test)

    @cached_property
    def output_indices(self) -> Tuple[int, ...]:
        return tuple(fm.index for fm in self.failure_modes if fm.host_kind == OUTPUT_HOST)

    @cached_property
    def module_indices(self) -> Tuple[int, ...]:
        return tuple(fm.index for fm in self.failure_modes if fm.host_kind == MODULE_HOST)

    def modes_of_module(self, module_id: str) -> Tuple[int, ...]:
        """Failure modes hosted by the module itself."""
        return tuple(fm.index for fm in self.failure_modes if fm.host == module_id)

    def modes_of_outputs(self, module_id: str) -> Tuple[int, ...]:
        """Failure modes hosted by the outputs the module produces."""
        return tuple(fm.index for fm in self.failure_modes if fm.host_kind == OUTPUT_HOST and fm.module == module_id)

    def tests_involving(self, index: int) -> List[DiagnosticTest]:
        return [t for t in self.tests if index in t.indices]

    def neighbours(self, index: int) -> set:
        """Failure modes sharing at least one test with the given one."""
        result = set()
        for t in self.tests_involving(index):
            result.update(t.indices)
        result.discard(index)
        return result

    @property
    def is_deterministic(self) -> bool:
        return all(t.is_deterministic for t in self.tests) and not any(r.is_probabilistic for r in self.apriori)

    def check_fault_state(self, faults: Sequence[int]) -> types.FaultState:
        bits = types.as_bits(faults)
        if len(bits) != self.n_failure_modes:
            raise errors.LengthMismatchError(f"Fault state has {len(bits)} entries, graph has {self.n_failure_modes} failure modes")
        return bits

    def check_syndrome(self, syndrome: Sequence[int]) -> types.Syndrome:
        bits = types.as_bits(syndrome)
        if len(bits) != self.n_tests:
            raise errors.LengthMismatchError(f"Syndrome has {len(bits)} entries, graph has {self.n_tests} tests")
        return bits

    def to_config(self) -> dict:
        config = {
            "version": self.version,
            "system": self.system.to_config(),
            "failure_modes": [fm.to_config() for fm in self.failure_modes],
            "tests": [t.to_config() for t in self.tests],
            "apriori": [r.to_config() for r in self.apriori],
        }
        if self.name:
            config["name"] = self.name
        return config

    @cached_property
    def _fingerprint(self) -> str:
        return jsonio.canonical(self.to_config())

    def __eq__(self, other: object):
        if isinstance(other, DiagnosticGraph):
            return self._fingerprint == other._fingerprint
        return NotImplemented

    def __hash__(self):
        return hash(self._fingerprint)

    def __str__(self):
        return f"{self.__class__.__name__} '{self.name}' [N_f={self.n_failure_modes}, N_t={self.n_tests}]"


def _qualify_config(config: dict, k: int) -> dict:
    """Copy of a slice definition with every id tagged by its slice number."""
    q = lambda i: qualify(str(i), k)
    system = config.get("system", {})
    out = {
        "system": {
            "modules": [dict(m, id=q(m["id"]), name=q(m.get("name") or m["id"])) for m in system.get("modules", [])],
            "outputs": [dict(o, id=q(o["id"]), name=q(o.get("name") or o["id"]), module=q(o["module"])) for o in system.get("outputs", [])],
            "edges": [{"from": q(e["from"]), "to": q(e["to"])} for e in system.get("edges", [])],
        },
        "failure_modes": [dict(fm, id=q(fm["id"]), name=q(fm.get("name") or fm["id"]), host=q(fm["host"])) for fm in config.get("failure_modes", [])],
        "tests": [dict(t, id=q(t["id"]), name=q(t.get("name") or t["id"]), scope=[q(s) for s in t["scope"]]) for t in config.get("tests", [])],
        "apriori": [],
    }
    for r in config.get("apriori", []):
        r = copy.deepcopy(r)
        r["id"] = q(r["id"])
        r["name"] = q(r.get("name") or base_id(r["id"]))
        for key in ("scope", "antecedent", "consequent"):
            if key in r:
                r[key] = [q(s) for s in r[key]]
        if "module" in r:
            r["module"] = q(r["module"])
        out["apriori"].append(r)
    return out


class TemporalDiagnosticGraph(DiagnosticGraph):
    """
    K stacked slices plus tests and transitions across consecutive slices.
    Slice k owns indices [k*N_f, (k+1)*N_f) when the slices are identical.
    """

    def __init__(self, slices: Sequence[DiagnosticGraph], temporal_tests: Iterable[dict] = (), temporal_apriori: Iterable[dict] = (), path: Optional[str] = None):
        slices = list(slices)
        if not slices:
            raise errors.SliceError("At least one slice is required", path=path)
        for s in slices:
            if isinstance(s, TemporalDiagnosticGraph):
                raise errors.SliceError("Slices must be regular diagnostic graphs", path=path)
        self.slices: Tuple[DiagnosticGraph, ...] = tuple(slices)
        self._temporal_test_configs = [dict(t) for t in temporal_tests]
        self._temporal_apriori_configs = [dict(r) for r in temporal_apriori]
        for config in self._temporal_test_configs:
            config["span"] = self._check_cross_slice(config.get("scope", []), f"Test '{config.get('id')}'", path)
        for config in self._temporal_apriori_configs:
            refs = list(config.get("scope", [])) + list(config.get("antecedent", [])) + list(config.get("consequent", []))
            self._check_cross_slice(refs, f"Relation '{config.get('id')}'", path)

        merged = {
            "version": GRAPH_FORMAT_VERSION,
            "name": slices[0].name,
            "system": {"modules": [], "outputs": [], "edges": []},
            "failure_modes": [],
            "tests": [],
            "apriori": [],
        }
        for k, s in enumerate(slices):
            q = _qualify_config(s.to_config(), k)
            for key in ("modules", "outputs", "edges"):
                merged["system"][key].extend(q["system"][key])
            for key in ("failure_modes", "tests", "apriori"):
                merged[key].extend(q[key])
        merged["tests"].extend(self._temporal_test_configs)
        merged["apriori"].extend(self._temporal_apriori_configs)
        super().__init__(merged, path)

        offsets, n = [], 0
        for s in slices:
            offsets.append(n)
            n += s.n_failure_modes
        self._offsets = tuple(offsets)
        first = sum(s.n_tests for s in slices)
        self.temporal_tests: Tuple[DiagnosticTest, ...] = self.tests[first:]
        first = sum(len(s.apriori) for s in slices)
        self.temporal_apriori: Tuple[AprioriRelation, ...] = self.apriori[first:]

    def _check_cross_slice(self, refs: Iterable[str], owner: str, path: Optional[str]) -> int:
        touched = set()
        for ref in refs:
            base, k = split_qualified(str(ref))
            if k is None:
                raise errors.SliceError(f"{owner}: '{ref}' lacks a slice number", path=path)
            if not 0 <= k < len(self.slices):
                raise errors.SliceError(f"{owner}: '{ref}' references nonexistent slice {k}", path=path)
            if self.slices[k].failure_mode(base, default=None) is None:
                raise errors.DanglingReferenceError(f"{owner}: '{ref}' does not exist in slice {k}", path=path)
            touched.add(k)
        if touched and max(touched) - min(touched) > 1:
            raise errors.SliceError(f"{owner} spans non-adjacent slices {sorted(touched)}", path=path)
        return len(touched)

    def _check_ids(self, config: dict, path: Optional[str]):
        pass

    @property
    def slice_count(self) -> int:
        return len(self.slices)

    def slice_of(self, index: int) -> int:
        k = 0
        for i, offset in enumerate(self._offsets):
            if index >= offset:
                k = i
        return k

    def slice_indices(self, k: int) -> Tuple[int, ...]:
        start = self._offsets[k]
        return tuple(range(start, start + self.slices[k].n_failure_modes))

    def to_config(self) -> dict:
        return {
            "version": GRAPH_FORMAT_VERSION,
            "slices": [s.to_config() for s in self.slices],
            "temporal_tests": [{k: v for k, v in c.items() if k != "span"} for c in self._temporal_test_configs],
            "temporal_apriori": self._temporal_apriori_configs,
        }


def build_graph(spec: Union[dict, str, pathlib.Path]) -> DiagnosticGraph:
    """Validate a graph definition (document or JSON file) into a DiagnosticGraph."""
    path = None
    if isinstance(spec, (str, pathlib.Path)):
        path = str(spec)
        spec = jsonio.read_file(spec)
    if not isinstance(spec, dict):
        raise errors.GraphError("Graph definition must be a JSON object", code="malformed-graph", path=path)
    try:
        if "slices" in spec:
            slices = [DiagnosticGraph(s, path) for s in spec["slices"]]
            return TemporalDiagnosticGraph(slices, spec.get("temporal_tests", []), spec.get("temporal_apriori", []), path)
        return DiagnosticGraph(spec, path)
    except (KeyError, TypeError) as exc:
        raise errors.GraphError(f"Malformed graph definition: {exc!r}", code="malformed-graph", path=path) from None


def serialize(graph: DiagnosticGraph) -> dict:
    return graph.to_config()


def stack_temporal(slices: Sequence[DiagnosticGraph], temporal_tests: Iterable[dict] = (), temporal_apriori: Iterable[dict] = ()) -> TemporalDiagnosticGraph:
    """
    Stack slices into one graph. Cross-slice scopes use slice-qualified ids,
    e.g. ``qualify("f1", 0)``, and may only touch adjacent slices.
    """
    return TemporalDiagnosticGraph(slices, temporal_tests, temporal_apriori)


def with_semantics(graph: DiagnosticGraph, semantics: str) -> DiagnosticGraph:
    """Same topology, every test re-tagged with the given deterministic semantics."""
    if semantics not in DETERMINISTIC_SEMANTICS:
        raise errors.WrongSemanticsError(f"'{semantics}' is not a deterministic semantics")

    def retag(config: dict) -> dict:
        config = copy.deepcopy(config)
        for t in config.get("tests", []):
            t["semantics"] = semantics
            t.pop("p_detect", None)
            t.pop("p_false_alarm", None)
        return config

    config = graph.to_config()
    if "slices" in config:
        config["slices"] = [retag(s) for s in config["slices"]]
        config["temporal_tests"] = retag({"tests": config["temporal_tests"]})["tests"]
    else:
        config = retag(config)
    return build_graph(config)


def subgraph(graph: DiagnosticGraph, keep: Iterable[str]) -> DiagnosticGraph:
    """
    Restrict a regular graph to the given failure modes. Tests lose the
    removed scope members (and vanish when nothing is left); a-priori
    relations survive only when their whole scope is kept.
    """
    if isinstance(graph, TemporalDiagnosticGraph):
        raise errors.GraphError("Sub-graphs of stacked graphs are not supported")
    keep = {graph.failure_mode(k).id for k in keep}
    config = graph.to_config()
    config["failure_modes"] = [fm for fm in config["failure_modes"] if fm["id"] in keep]
    tests = []
    for t in config["tests"]:
        members = [i for i, s in enumerate(t["scope"]) if s in keep]
        if not members:
            continue
        t["scope"] = [t["scope"][i] for i in members]
        for key in ("p_detect", "p_false_alarm"):
            if key in t:
                t[key] = [t[key][i] for i in members]
        tests.append(t)
    config["tests"] = tests
    apriori = []
    for r in graph.apriori:
        if all(graph.failure_modes[i].id in keep for i in r.indices):
            apriori.append(r.to_config())
    config["apriori"] = apriori
    return build_graph(config)


def output_subgraph(graph: DiagnosticGraph) -> DiagnosticGraph:
    """Output failure modes only, without a-priori relations."""
    sub = subgraph(graph, [graph.failure_modes[i].id for i in graph.output_indices])
    config = sub.to_config()
    config["apriori"] = []
    return build_graph(config)

# vim: set et sw=4 ts=4:
