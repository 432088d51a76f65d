import itertools
import unittest

import numpy as np
import pytest

from percmon import builtin, errors
from percmon.graph import DETERMINISTIC_OR, IMPLICATION, MODULE_OUTPUT, NOISY_OR, WEAK_OR, WEAKER_OR, build_graph
from percmon.testmodels import (
    ONLY_FAIL, ONLY_PASS, PASS_OR_FAIL, NoisyOrParams, apriori_holds, apriori_likelihood, eval_deterministic,
    noisy_or_fail_prob, noisy_or_pass_prob, outcome_likelihood, relation_satisfied, sample_syndrome,
)
from percmon.types import FAIL, PASS


def chain_graph(semantics: str = NOISY_OR, p_detect=(0.95, 0.95), p_false_alarm=(0.1, 0.1), priors=None) -> dict:
    tests = []
    for n, scope in enumerate((["f1", "f2"], ["f2", "f3"])):
        test = {"id": f"t{n + 1}", "scope": scope, "semantics": semantics}
        if semantics == NOISY_OR:
            test.update(p_detect=list(p_detect), p_false_alarm=list(p_false_alarm))
        tests.append(test)
    spec = {
        "name": "chain",
        "system": {"modules": [{"id": "m"}], "outputs": [], "edges": []},
        "failure_modes": [{"id": f"f{i}", "host": "m"} for i in (1, 2, 3)],
        "tests": tests,
        "apriori": [],
    }
    for fid, rho in (priors or {}).items():
        spec["apriori"].append({"id": f"{fid}.prior", "kind": "Prior", "scope": [fid], "probability": rho})
    return spec


class DeterministicTableTests(unittest.TestCase):

    def test_or(self):
        self.assertEqual(eval_deterministic(DETERMINISTIC_OR, (0, 0)), ONLY_PASS)
        self.assertEqual(eval_deterministic(DETERMINISTIC_OR, (0, 1)), ONLY_FAIL)
        self.assertEqual(eval_deterministic(DETERMINISTIC_OR, (1, 0)), ONLY_FAIL)
        self.assertEqual(eval_deterministic(DETERMINISTIC_OR, (1, 1)), ONLY_FAIL)

    def test_weak_or(self):
        self.assertEqual(eval_deterministic(WEAK_OR, (0, 0)), ONLY_PASS)
        self.assertEqual(eval_deterministic(WEAK_OR, (1, 0)), ONLY_FAIL)
        self.assertEqual(eval_deterministic(WEAK_OR, (0, 1)), ONLY_FAIL)
        self.assertEqual(eval_deterministic(WEAK_OR, (1, 1)), PASS_OR_FAIL)
        self.assertEqual(eval_deterministic(WEAK_OR, (1,)), PASS_OR_FAIL)

    def test_weaker_or(self):
        self.assertEqual(eval_deterministic(WEAKER_OR, (0, 0)), ONLY_PASS)
        self.assertEqual(eval_deterministic(WEAKER_OR, (0, 1)), PASS_OR_FAIL)
        self.assertEqual(eval_deterministic(WEAKER_OR, (1, 1)), PASS_OR_FAIL)

    def test_errors(self):
        self.assertRaises(errors.WrongSemanticsError, eval_deterministic, NOISY_OR, (0, 1))
        self.assertRaises(errors.LengthMismatchError, eval_deterministic, DETERMINISTIC_OR, (0, 1), 3)


class NoisyOrTableTests(unittest.TestCase):
    """Pass/fail probabilities for every assignment of a two-member scope."""

    def check_table(self, pd1, pd2, pa1, pa2):
        params = NoisyOrParams((pd1, pd2), (pa1, pa2))
        expected_fail = {
            (0, 0): pa1 + pa2 - pa1 * pa2,
            (0, 1): pa1 + pd2 - pa1 * pd2,
            (1, 0): pd1 + pa2 - pd1 * pa2,
            (1, 1): pd1 + pd2 - pd1 * pd2,
        }
        for bits, fail in expected_fail.items():
            self.assertAlmostEqual(noisy_or_fail_prob(params, bits), fail, delta=1e-12)
            self.assertAlmostEqual(noisy_or_pass_prob(params, bits), 1.0 - fail, delta=1e-12)

    def test_symbolic_grid(self):
        values = (0.0, 0.05, 0.3, 0.5, 0.77, 0.99)
        for pd1, pd2, pa1, pa2 in itertools.product(values, repeat=4):
            self.check_table(pd1, pd2, pa1, pa2)

    def test_published_values(self):
        self.check_table(0.95, 0.95, 0.1, 0.1)
        params = NoisyOrParams((0.95, 0.95), (0.1, 0.1))
        self.assertAlmostEqual(noisy_or_pass_prob(params, (1, 0)), 0.045, delta=1e-12)
        self.assertAlmostEqual(noisy_or_fail_prob(params, (1, 0)), 0.955, delta=1e-12)

    def test_certain_detection(self):
        params = NoisyOrParams((1.0, 0.5), (0.0, 0.0))
        self.assertEqual(noisy_or_pass_prob(params, (1, 0)), 0.0)
        self.assertEqual(noisy_or_pass_prob(params, (0, 0)), 1.0)

    def test_invalid_params(self):
        self.assertRaises(errors.LengthMismatchError, NoisyOrParams, (0.9,), (0.1, 0.1))
        self.assertRaises(errors.ProbabilityError, NoisyOrParams, (1.5,), (0.1,))
        self.assertRaises(errors.LengthMismatchError, noisy_or_pass_prob, NoisyOrParams((0.9,), (0.1,)), (0, 1))


class RelationTests(unittest.TestCase):

    def setUp(self):
        self.graph = builtin.fig2_example(semantics=DETERMINISTIC_OR)

    def test_or_fail_on_inactive_scope(self):
        t1 = self.graph.tests[0]
        self.assertFalse(relation_satisfied(t1, (0,) * 6, FAIL))
        self.assertTrue(relation_satisfied(t1, (0,) * 6, PASS))
        self.assertTrue(relation_satisfied(t1, (0, 0, 0, 1, 0, 0), FAIL))
        self.assertRaises(errors.MissingOutcomeError, relation_satisfied, t1, (0,) * 6)

    def test_module_output_implication(self):
        r1 = self.graph.relation("r1")
        self.assertEqual(r1.kind, MODULE_OUTPUT)
        self.assertTrue(relation_satisfied(r1, (0,) * 6))
        self.assertFalse(relation_satisfied(r1, (0, 0, 0, 1, 0, 0)))
        self.assertTrue(relation_satisfied(r1, (1, 0, 0, 1, 0, 0)))
        self.assertTrue(relation_satisfied(r1, (1, 0, 0, 0, 0, 0)))
        iff = builtin.fig2_example(coupling="iff").relation("r1")
        self.assertFalse(apriori_holds(iff, (1, 0, 0, 0, 0, 0)))

    def test_soft_implication(self):
        r5 = self.graph.relation("r5")
        self.assertEqual(r5.kind, IMPLICATION)
        self.assertTrue(r5.is_probabilistic)
        self.assertAlmostEqual(relation_satisfied(r5, (0, 0, 1, 1, 0, 0)), 0.8)
        self.assertAlmostEqual(relation_satisfied(r5, (0, 0, 0, 1, 0, 0)), 0.2)

    def test_prior(self):
        g = build_graph(chain_graph(priors={"f1": 0.2}))
        prior = g.relation("f1.prior")
        self.assertEqual(relation_satisfied(prior, (1, 0, 0)), 0.2)
        self.assertEqual(relation_satisfied(prior, (0, 0, 0)), 0.8)

    def test_transition(self):
        t = builtin.apollo_temporal_graph()
        relation = t.relation("lidar.ood.transition0")
        faults = [0] * t.n_failure_modes
        self.assertRaises(errors.MissingParameterError, apriori_likelihood, relation, faults)
        self.assertEqual(apriori_likelihood(relation, faults, 0.1, 0.7), 0.9)
        faults[relation.indices[0]] = 1
        faults[relation.indices[1]] = 1
        self.assertEqual(apriori_likelihood(relation, faults, 0.1, 0.7), 0.7)

    def test_outcome_likelihood(self):
        g = build_graph(chain_graph())
        t1 = g.tests[0]
        self.assertAlmostEqual(outcome_likelihood(t1, (1, 0), PASS), 0.045, delta=1e-12)
        self.assertAlmostEqual(outcome_likelihood(t1, (1, 0), FAIL), 0.955, delta=1e-12)
        d = build_graph(chain_graph(DETERMINISTIC_OR)).tests[0]
        self.assertEqual(outcome_likelihood(d, (0, 1), PASS), 0.0)
        self.assertEqual(outcome_likelihood(d, (0, 1), FAIL), 1.0)


@pytest.fixture
def apollo():
    return builtin.apollo_obstacle()


def test_sample_all_inactive_weaker_or(apollo):
    for seed in range(20):
        assert sample_syndrome(apollo, (0,) * 16, seed) == (PASS,) * 18


def test_sample_zero_false_alarm():
    g = build_graph(chain_graph(p_false_alarm=(0.0, 0.0)))
    assert all(sample_syndrome(g, (0, 0, 0), seed) == (PASS, PASS) for seed in range(20))


def test_sample_deterministic_or():
    g = build_graph(chain_graph(DETERMINISTIC_OR))
    assert sample_syndrome(g, (1, 0, 0), 0) == (FAIL, PASS)
    with pytest.raises(errors.LengthMismatchError):
        sample_syndrome(g, (1, 0), 0)


def test_sample_noisy_or_rate():
    spec = chain_graph(p_detect=(0.95, 0.5), p_false_alarm=(0.5, 0.1))
    spec["tests"] = spec["tests"][:1]
    g = build_graph(spec)
    rng = np.random.default_rng(7)
    fails = sum(sample_syndrome(g, (1, 0, 0), rng)[0] for _ in range(100000))
    assert abs(fails / 100000 - 0.955) < 0.01


def test_sample_is_seeded(apollo):
    faults = [0] * 16
    faults[apollo.index_of("camera.obstacles.misdetection")] = 1
    faults[apollo.index_of("camera.ood")] = 1
    assert sample_syndrome(apollo, faults, 3) == sample_syndrome(apollo, faults, 3)

# vim: set et sw=4 ts=4:
