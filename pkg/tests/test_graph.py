import json
import unittest

from percmon import builtin, errors
from percmon.graph import (
    DETERMINISTIC_OR, MODULE_OUTPUT, NOISY_OR, TRANSITION, WEAK_OR, WEAKER_OR,
    base_id, build_graph, output_subgraph, qualify, serialize, split_qualified, stack_temporal, subgraph,
    with_semantics,
)


def two_mode_spec(**changes) -> dict:
    spec = {
        "name": "pair",
        "system": {
            "modules": [{"id": "m1"}, {"id": "m2"}],
            "outputs": [{"id": "o1", "module": "m1"}],
            "edges": [{"from": "o1", "to": "m2"}],
        },
        "failure_modes": [
            {"id": "f1", "host": "m1", "kind": "out-of-distribution"},
            {"id": "f2", "host": "o1", "kind": "misdetection"},
        ],
        "tests": [{"id": "t1", "scope": ["f1", "f2"], "semantics": DETERMINISTIC_OR}],
        "apriori": [],
    }
    spec.update(changes)
    return spec


class GraphValidationTests(unittest.TestCase):

    def test_minimal_graph(self):
        g = build_graph(two_mode_spec())
        self.assertEqual(g.n_failure_modes, 2)
        self.assertEqual(g.n_tests, 1)
        self.assertEqual(g.tests[0].indices, (0, 1))
        self.assertEqual(g.output_indices, (1,))
        self.assertEqual(g.module_indices, (0,))
        self.assertTrue(g.is_deterministic)

    def test_dangling_host(self):
        spec = two_mode_spec(system={"modules": [], "outputs": [], "edges": []},
                             failure_modes=[{"id": "f1", "host": "m1"}], tests=[])
        self.assertRaises(errors.DanglingReferenceError, build_graph, spec)

    def test_dangling_scope(self):
        spec = two_mode_spec(tests=[{"id": "t1", "scope": ["f1", "f9"]}])
        self.assertRaises(errors.DanglingReferenceError, build_graph, spec)

    def test_empty_scope(self):
        spec = two_mode_spec(tests=[{"id": "t1", "scope": []}])
        self.assertRaises(errors.EmptyScopeError, build_graph, spec)

    def test_duplicate_ids(self):
        spec = two_mode_spec()
        spec["failure_modes"].append({"id": "f1", "host": "m2"})
        self.assertRaises(errors.DuplicateIdError, build_graph, spec)
        spec = two_mode_spec(apriori=[{"id": "t1", "kind": MODULE_OUTPUT, "module": "m1"}])
        self.assertRaises(errors.DuplicateIdError, build_graph, spec)

    def test_noisy_or_needs_probabilities(self):
        spec = two_mode_spec(tests=[{"id": "t1", "scope": ["f1", "f2"], "semantics": NOISY_OR}])
        self.assertRaises(errors.ProbabilityError, build_graph, spec)
        spec = two_mode_spec(tests=[{"id": "t1", "scope": ["f1", "f2"], "semantics": NOISY_OR,
                                     "p_detect": [0.9, 1.2], "p_false_alarm": [0.1, 0.1]}])
        self.assertRaises(errors.ProbabilityError, build_graph, spec)
        spec = two_mode_spec(tests=[{"id": "t1", "scope": ["f1", "f2"], "semantics": NOISY_OR,
                                     "p_detect": [0.9, 0.8], "p_false_alarm": [0.1, 0.1]}])
        g = build_graph(spec)
        self.assertFalse(g.is_deterministic)
        self.assertEqual(g.tests[0].p_detect, (0.9, 0.8))

    def test_prior_needs_probability(self):
        spec = two_mode_spec(apriori=[{"id": "r1", "kind": "Prior", "scope": ["f1"]}])
        self.assertRaises(errors.ProbabilityError, build_graph, spec)
        spec = two_mode_spec(apriori=[{"id": "r1", "kind": "Prior", "scope": ["f1", "f2"], "probability": 0.1}])
        self.assertRaises(errors.GraphError, build_graph, spec)

    def test_unknown_semantics_and_kind(self):
        spec = two_mode_spec(tests=[{"id": "t1", "scope": ["f1"], "semantics": "XOR"}])
        self.assertRaises(errors.GraphError, build_graph, spec)
        spec = two_mode_spec(apriori=[{"id": "r1", "kind": "Equivalence", "scope": ["f1"]}])
        self.assertRaises(errors.GraphError, build_graph, spec)

    def test_module_output_coupling(self):
        g = build_graph(two_mode_spec(apriori=[{"id": "r1", "kind": MODULE_OUTPUT, "module": "m1"}]))
        r = g.relation("r1")
        self.assertEqual(r.consequent, (0,))
        self.assertEqual(r.antecedent, (1,))
        self.assertFalse(r.iff)
        spec = two_mode_spec(apriori=[{"id": "r1", "kind": MODULE_OUTPUT, "module": "m2"}])
        self.assertRaises(errors.EmptyScopeError, build_graph, spec)

    def test_reserved_separator(self):
        spec = two_mode_spec(tests=[{"id": "t@1", "scope": ["f1"]}])
        self.assertRaises(errors.GraphError, build_graph, spec)

    def test_round_trip_document(self):
        g = builtin.fig2_example()
        self.assertEqual(build_graph(g.to_config()), g)

    def test_missing_file(self):
        self.assertRaises(errors.DataError, build_graph, "/nonexistent/graph.json")


class BuiltinGraphTests(unittest.TestCase):

    def test_fig2_example(self):
        g = builtin.fig2_example()
        self.assertEqual(g.n_failure_modes, 6)
        self.assertEqual(g.n_tests, 2)
        self.assertEqual([t.scope for t in g.tests], [("f4", "f5"), ("f5", "f6")])
        self.assertEqual(len(g.apriori), 5)
        self.assertFalse(g.is_deterministic)
        g = builtin.fig2_example(coupling="iff", r5=builtin.R5_DISABLED)
        self.assertEqual(len(g.apriori), 4)
        self.assertTrue(g.is_deterministic)
        self.assertTrue(all(r.iff for r in g.apriori if r.kind == MODULE_OUTPUT))
        self.assertRaises(errors.ConfigError, builtin.fig2_example, coupling="xor")

    def test_apollo_obstacle(self):
        g = builtin.apollo_obstacle()
        self.assertEqual(g.n_failure_modes, 16)
        self.assertEqual(g.n_tests, 18)
        self.assertEqual(len(g.apriori), 4)
        self.assertEqual(len(g.module_indices), 4)
        self.assertEqual(len(g.output_indices), 12)
        self.assertTrue(all(t.semantics == WEAKER_OR and len(t.scope) == 2 for t in g.tests))
        t = g.test("lidar-camera.misdetection")
        self.assertEqual(t.scope, ("lidar.obstacles.misdetection", "camera.obstacles.misdetection"))
        self.assertEqual(g.failure_mode("radar.misdetection").module, "radar")

    def test_apollo_modes_of_module(self):
        g = builtin.apollo_obstacle()
        self.assertEqual(g.modes_of_module("camera"), (g.index_of("camera.ood"),))
        self.assertEqual(len(g.modes_of_outputs("camera")), 3)
        self.assertEqual(g.failure_mode("camera.obstacles.misposition").module, "camera")

    def test_egomotion_example(self):
        g = builtin.egomotion_example()
        self.assertEqual(g.n_failure_modes, 5)
        self.assertEqual(g.n_tests, 4)
        self.assertTrue(g.is_deterministic)

    def test_unknown_builtin(self):
        self.assertRaises(errors.UnknownGraphError, builtin.builtin_graphs, "nope")
        self.assertRaises(errors.UnknownGraphError, builtin.load_graph, "nope")

    def test_load_graph_semantics(self):
        g = builtin.load_graph("apollo-obstacle", semantics=WEAK_OR)
        self.assertTrue(all(t.semantics == WEAK_OR for t in g.tests))
        self.assertEqual(builtin.load_graph("APOLLO-OBSTACLE"), builtin.apollo_obstacle())


class TemporalGraphTests(unittest.TestCase):

    def test_ids(self):
        self.assertEqual(qualify("f1", 2), "f1@2")
        self.assertEqual(split_qualified("f1@2"), ("f1", 2))
        self.assertEqual(split_qualified("f1"), ("f1", None))
        self.assertEqual(base_id("lidar@0"), "lidar")

    def test_single_slice(self):
        g = builtin.fig2_example()
        t = stack_temporal([g])
        self.assertEqual(t.n_failure_modes, g.n_failure_modes)
        self.assertEqual(t.n_tests, g.n_tests)
        self.assertEqual(t.slice_count, 1)

    def test_fig2_pair(self):
        g = builtin.fig2_example()
        cross = [{"id": "x1", "scope": [qualify("f4", 0), qualify("f4", 1)], "semantics": DETERMINISTIC_OR}]
        t = stack_temporal([g, g], cross)
        self.assertEqual(t.n_failure_modes, 12)
        self.assertEqual(t.n_tests, 5)
        self.assertEqual(t.temporal_tests[0].span, 2)
        self.assertEqual(t.slice_of(7), 1)
        self.assertEqual(t.slice_indices(1), tuple(range(6, 12)))
        self.assertEqual(t.failure_mode("f4@1").index, 9)

    def test_apollo_temporal(self):
        t = builtin.apollo_temporal_graph()
        self.assertEqual(t.n_failure_modes, 32)
        self.assertEqual(t.n_tests, 54)
        self.assertEqual(len(t.temporal_tests), 18)
        self.assertEqual(sum(1 for r in t.apriori if r.kind == TRANSITION), 4)
        self.assertEqual(t.temporal_tests[0].id, "lidar-camera.misdetection.temporal0")
        self.assertEqual(t.temporal_tests[0].scope, ("lidar.obstacles.misdetection@0", "camera.obstacles.misdetection@1"))
        no_transitions = builtin.apollo_temporal_graph(transitions=False)
        self.assertEqual(len(no_transitions.apriori), 8)
        self.assertTrue(no_transitions.is_deterministic)

    def test_cross_slice_validation(self):
        g = builtin.fig2_example()
        self.assertRaises(errors.SliceError, stack_temporal, [])
        self.assertRaises(errors.SliceError, stack_temporal, [g, g], [{"id": "x", "scope": ["f4", "f4@1"]}])
        self.assertRaises(errors.SliceError, stack_temporal, [g, g], [{"id": "x", "scope": ["f4@0", "f4@2"]}])
        self.assertRaises(errors.SliceError, stack_temporal, [g, g, g], [{"id": "x", "scope": ["f4@0", "f4@2"]}])
        self.assertRaises(errors.DanglingReferenceError, stack_temporal, [g, g], [{"id": "x", "scope": ["f9@0", "f4@1"]}])

    def test_round_trip_document(self):
        t = builtin.apollo_temporal_graph()
        self.assertEqual(build_graph(t.to_config()), t)


class DerivedGraphTests(unittest.TestCase):

    def test_with_semantics(self):
        g = with_semantics(builtin.apollo_obstacle(), DETERMINISTIC_OR)
        self.assertTrue(all(t.semantics == DETERMINISTIC_OR for t in g.tests))
        self.assertRaises(errors.WrongSemanticsError, with_semantics, g, NOISY_OR)
        t = with_semantics(builtin.apollo_temporal_graph(transitions=False), WEAK_OR)
        self.assertEqual(t.n_tests, 54)
        self.assertTrue(all(test.semantics == WEAK_OR for test in t.tests))

    def test_subgraph(self):
        g = builtin.fig2_example(coupling="iff", r5=builtin.R5_DISABLED)
        sub = subgraph(g, ["f4", "f5"])
        self.assertEqual(sub.n_failure_modes, 2)
        self.assertEqual([t.scope for t in sub.tests], [("f4", "f5"), ("f5",)])
        self.assertEqual(len(sub.apriori), 0)
        with self.assertRaises(errors.DanglingReferenceError) as cm:
            subgraph(g, ["f4", "nope"])
        self.assertEqual(cm.exception.code, "dangling-reference")

    def test_unknown_lookups(self):
        g = builtin.fig2_example()
        for lookup in (g.failure_mode, g.test, g.relation, g.index_of, g.test_index):
            with self.subTest(lookup=lookup.__name__):
                self.assertRaises(errors.DanglingReferenceError, lookup, "nope")
        self.assertIsNone(g.failure_mode("nope", default=None))
        self.assertIsNone(g.relation("nope", default=None))
        self.assertEqual(g.failure_mode("f1").index, 0)

    def test_output_subgraph(self):
        sub = output_subgraph(builtin.apollo_obstacle())
        self.assertEqual(sub.n_failure_modes, 12)
        self.assertEqual(sub.n_tests, 18)
        self.assertEqual(sub.apriori, ())


def test_graph_file_with_apriori_relations(tmp_path):
    source = builtin.fig2_example(coupling="iff")
    path = tmp_path / "graph.json"
    path.write_text(json.dumps(serialize(source)))
    g = build_graph(path)
    assert [r.id for r in g.apriori] == [r.id for r in source.apriori]
    assert g.relation("r1").antecedent == source.relation("r1").antecedent
    assert g.relation("r1").iff
    assert g.path == str(path)


if __name__ == "__main__":
    unittest.main()

# vim: set et sw=4 ts=4:
