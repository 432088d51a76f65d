"""
Published example topologies, built as graph definition documents and then
validated through :func:`percmon.graph.build_graph`.
"""
from __future__ import annotations
import logging
import pathlib
from typing import Dict, List, Optional

from percmon import errors
from percmon.graph import (
    DETERMINISTIC_OR, IMPLICATION, MODULE_OUTPUT, MUTUAL_EXCLUSION, PRIOR, TRANSITION,
    WEAKER_OR, DiagnosticGraph, TemporalDiagnosticGraph, build_graph, qualify, stack_temporal, with_semantics,
)

log = logging.getLogger(__name__)

FIG2_EXAMPLE = "fig2-example"
EGOMOTION_EXAMPLE = "lidar-egomotion-example"
APOLLO_OBSTACLE = "apollo-obstacle"
NAMES = (FIG2_EXAMPLE, EGOMOTION_EXAMPLE, APOLLO_OBSTACLE)

R5_DETERMINISTIC = "deterministic"
R5_PROBABILISTIC = "probabilistic"
R5_DISABLED = "disabled"

# Sensor modules of the obstacle pipeline, the fusion module last.
SENSORS = ("lidar", "camera", "radar")
FUSION = "fusion"
MODULE_FAILURES = {
    "lidar": "out-of-distribution",
    "camera": "out-of-distribution",
    "radar": "misdetection",
    "fusion": "misassociation",
}
OUTPUT_FAILURES = ("misdetection", "misposition", "misclassification")
SENSOR_PAIRS = (
    ("lidar", "camera"),
    ("radar", "camera"),
    ("lidar", "fusion"),
    ("radar", "fusion"),
    ("lidar", "radar"),
    ("camera", "fusion"),
)
RELIABILITY_RANKING = ("radar", "fusion", "lidar", "camera")


def output_id(module: str) -> str:
    return f"{module}.obstacles"


def module_mode_id(module: str) -> str:
    short = {"out-of-distribution": "ood"}.get(MODULE_FAILURES[module], MODULE_FAILURES[module])
    return f"{module}.{short}"


def output_mode_id(module: str, kind: str) -> str:
    return f"{output_id(module)}.{kind}"


def pair_test_id(a: str, b: str, kind: str) -> str:
    return f"{a}-{b}.{kind}"


def fig2_example(semantics: str = DETERMINISTIC_OR, coupling: str = "implication", r5: str = R5_PROBABILISTIC, r5_probability: float = 0.8) -> DiagnosticGraph:
    """
    Three modules (lidar, camera, fusion) with one output each. f1..f3 are the
    module failure modes, f4..f6 the failure modes of their obstacle outputs.
    t1 compares lidar and camera obstacles, t2 camera and fused obstacles.
    """
    if coupling not in ("implication", "iff"):
        raise errors.ConfigError(f"Unknown coupling '{coupling}'")
    if r5 not in (R5_DETERMINISTIC, R5_PROBABILISTIC, R5_DISABLED):
        raise errors.ConfigError(f"Unknown kind '{r5}' for relation r5")
    spec = {
        "name": FIG2_EXAMPLE,
        "system": {
            "modules": [
                {"id": "m1", "name": "lidar detector"},
                {"id": "m2", "name": "camera detector"},
                {"id": "m3", "name": "sensor fusion"},
            ],
            "outputs": [
                {"id": "o1", "name": "lidar obstacles", "module": "m1"},
                {"id": "o2", "name": "camera obstacles", "module": "m2"},
                {"id": "o3", "name": "fused obstacles", "module": "m3"},
            ],
            "edges": [{"from": "o1", "to": "m3"}, {"from": "o2", "to": "m3"}],
        },
        "failure_modes": [
            {"id": "f1", "host": "m1", "kind": "out-of-distribution"},
            {"id": "f2", "host": "m2", "kind": "out-of-distribution"},
            {"id": "f3", "host": "m3", "kind": "misassociation"},
            {"id": "f4", "host": "o1", "kind": "misdetection"},
            {"id": "f5", "host": "o2", "kind": "misdetection"},
            {"id": "f6", "host": "o3", "kind": "misdetection"},
        ],
        "tests": [
            {"id": "t1", "scope": ["f4", "f5"], "semantics": semantics},
            {"id": "t2", "scope": ["f5", "f6"], "semantics": semantics},
        ],
        "apriori": [
            {"id": "r1", "kind": MODULE_OUTPUT, "module": "m1", "iff": coupling == "iff"},
            {"id": "r2", "kind": MODULE_OUTPUT, "module": "m2", "iff": coupling == "iff"},
            {"id": "r3", "kind": MODULE_OUTPUT, "module": "m3", "iff": coupling == "iff"},
            {"id": "r4", "kind": IMPLICATION, "antecedent": ["f6"], "consequent": ["f3", "f4", "f5"]},
        ],
    }
    if r5 != R5_DISABLED:
        rel = {"id": "r5", "kind": IMPLICATION, "antecedent": ["f4", "f5"], "consequent": ["f3"]}
        if r5 == R5_PROBABILISTIC:
            rel["probability"] = r5_probability
        spec["apriori"].append(rel)
    return build_graph(spec)


def egomotion_example(semantics: str = DETERMINISTIC_OR) -> DiagnosticGraph:
    spec = {
        "name": EGOMOTION_EXAMPLE,
        "system": {
            "modules": [
                {"id": "extraction", "name": "feature extraction"},
                {"id": "registration", "name": "point-cloud registration"},
            ],
            "outputs": [
                {"id": "features", "name": "features", "module": "extraction"},
                {"id": "pose", "name": "relative pose", "module": "registration"},
            ],
            "edges": [{"from": "features", "to": "registration"}],
        },
        "failure_modes": [
            {"id": "extraction.ood", "host": "extraction", "kind": "out-of-distribution"},
            {"id": "registration.suboptimal", "host": "registration", "kind": "suboptimal-solution"},
            {"id": "features.outliers", "host": "features", "kind": "too-many-outliers"},
            {"id": "features.few", "host": "features", "kind": "few-features"},
            {"id": "pose.wrong", "host": "pose", "kind": "wrong-relative-pose"},
        ],
        "tests": [
            {"id": "feature-count", "scope": ["features.few"], "semantics": semantics},
            {"id": "certificate", "scope": ["registration.suboptimal"], "semantics": semantics},
            {"id": "pose-plausibility", "scope": ["pose.wrong"], "semantics": semantics},
            {"id": "inlier-count", "scope": ["features.outliers", "pose.wrong"], "semantics": semantics},
        ],
        "apriori": [
            {"id": "extraction.coupling", "kind": MODULE_OUTPUT, "module": "extraction"},
            {"id": "registration.coupling", "kind": MODULE_OUTPUT, "module": "registration"},
            {"id": "features.exclusive", "kind": MUTUAL_EXCLUSION, "scope": ["features.outliers", "features.few"]},
        ],
    }
    return build_graph(spec)


def apollo_spec(semantics: str = WEAKER_OR, priors: Optional[Dict[str, float]] = None) -> dict:
    modules = SENSORS + (FUSION,)
    spec = {
        "name": APOLLO_OBSTACLE,
        "system": {
            "modules": [{"id": m, "name": f"{m} obstacle detector" if m != FUSION else "sensor fusion"} for m in modules],
            "outputs": [{"id": output_id(m), "name": f"{m} obstacles", "module": m} for m in modules],
            "edges": [{"from": output_id(s), "to": FUSION} for s in SENSORS],
        },
        "failure_modes": [],
        "tests": [],
        "apriori": [],
    }
    for m in modules:
        spec["failure_modes"].append({"id": module_mode_id(m), "host": m, "kind": MODULE_FAILURES[m]})
    for m in modules:
        for kind in OUTPUT_FAILURES:
            spec["failure_modes"].append({"id": output_mode_id(m, kind), "host": output_id(m), "kind": kind})
    for a, b in SENSOR_PAIRS:
        for kind in OUTPUT_FAILURES:
            spec["tests"].append({
                "id": pair_test_id(a, b, kind),
                "scope": [output_mode_id(a, kind), output_mode_id(b, kind)],
                "semantics": semantics,
            })
    for m in modules:
        spec["apriori"].append({"id": f"{m}.coupling", "kind": MODULE_OUTPUT, "module": m})
    for fid, rho in (priors or {}).items():
        spec["apriori"].append({"id": f"{fid}.prior", "kind": PRIOR, "scope": [fid], "probability": rho})
    return spec


def apollo_obstacle(semantics: str = WEAKER_OR, priors: Optional[Dict[str, float]] = None) -> DiagnosticGraph:
    """16 failure modes, 18 pairwise tests, 4 module/output couplings."""
    return build_graph(apollo_spec(semantics, priors))


def temporal_tests(pairs=SENSOR_PAIRS, semantics: str = WEAKER_OR, first: int = 0) -> List[dict]:
    """Output a at slice ``first`` against output b at the next slice, per failure kind."""
    tests = []
    for a, b in pairs:
        for kind in OUTPUT_FAILURES:
            tests.append({
                "id": f"{pair_test_id(a, b, kind)}.temporal{first}",
                "scope": [qualify(output_mode_id(a, kind), first), qualify(output_mode_id(b, kind), first + 1)],
                "semantics": semantics,
            })
    return tests


def transition_relations(first: int = 0, p_activate: Optional[float] = None, p_persist: Optional[float] = None) -> List[dict]:
    relations = []
    for m in SENSORS + (FUSION,):
        rel = {
            "id": f"{module_mode_id(m)}.transition{first}",
            "kind": TRANSITION,
            "scope": [qualify(module_mode_id(m), first), qualify(module_mode_id(m), first + 1)],
        }
        if p_activate is not None:
            rel["p_activate"] = p_activate
        if p_persist is not None:
            rel["p_persist"] = p_persist
        relations.append(rel)
    return relations


def apollo_temporal_graph(semantics: str = WEAKER_OR, slices: int = 2, transitions: bool = True) -> TemporalDiagnosticGraph:
    """
    Consecutive copies of the obstacle graph joined by cross-slice tests.
    Transitions are left out for purely deterministic solving.
    """
    base = apollo_obstacle(semantics)
    cross_tests, cross_relations = [], []
    for k in range(slices - 1):
        cross_tests.extend(temporal_tests(semantics=semantics, first=k))
        if transitions:
            cross_relations.extend(transition_relations(first=k))
    return stack_temporal([base] * slices, cross_tests, cross_relations)


def builtin_graphs(name: str, **options) -> DiagnosticGraph:
    key = name.casefold()
    if key == FIG2_EXAMPLE:
        return fig2_example(**options)
    elif key == EGOMOTION_EXAMPLE:
        return egomotion_example(**options)
    elif key == APOLLO_OBSTACLE:
        return apollo_obstacle(**options)
    raise errors.UnknownGraphError(f"Unknown builtin graph '{name}', choose one of {', '.join(NAMES)}")


def load_graph(ref: str, kind: str = "regular", semantics: Optional[str] = None, transitions: bool = True) -> DiagnosticGraph:
    """
    Graph by builtin name or definition file. Temporal kind stacks two
    slices; for a builtin other than the obstacle graph no cross-slice
    relations are known, so the slices are stacked as they are.
    """
    if ref.casefold() in NAMES:
        if kind == "temporal":
            if ref.casefold() == APOLLO_OBSTACLE:
                return apollo_temporal_graph(semantics or WEAKER_OR, transitions=transitions)
            base = builtin_graphs(ref, **({"semantics": semantics} if semantics else {}))
            return stack_temporal([base, base])
        return builtin_graphs(ref, **({"semantics": semantics} if semantics else {}))
    path = pathlib.Path(ref)
    if not path.exists():
        raise errors.UnknownGraphError(f"'{ref}' is neither a builtin graph nor a file", path=ref)
    graph = build_graph(path)
    if kind == "temporal" and graph.slice_count == 1:
        graph = stack_temporal([graph, graph])
    if semantics:
        graph = with_semantics(graph, semantics)
    return graph

# vim: set et sw=4 ts=4:
