import math
import unittest

import numpy as np
import pytest

from percmon import builtin, errors, solver
from percmon.diagnosability import (
    ALL_MODES, BRUTE_FORCE, OUTPUTS_ONLY, brute_force_kappa, check_sufficient_conditions, empirical_hamming, hamming,
    identification_sweep, kappa_report, pac_bound, pac_confidence, pac_curve, random_diagnosable_graph, random_stack,
    random_weak_or_graph, sufficient_kappa, syndrome_set, temporal_kappa_lower_bound,
)
from percmon.factorgraph import max_product, to_factor_graph
from percmon.graph import DETERMINISTIC_OR, NOISY_OR, WEAK_OR, build_graph
from percmon.types import FAIL, PASS


def pair_graph(n_modes: int, pairs, semantics: str = DETERMINISTIC_OR):
    return build_graph({
        "system": {"modules": [{"id": "m"}]},
        "failure_modes": [{"id": f"f{i + 1}", "host": "m"} for i in range(n_modes)],
        "tests": [{"id": f"t{n + 1}", "scope": [f"f{i + 1}" for i in scope], "semantics": semantics}
                  for n, scope in enumerate(pairs)],
    })


def triangle(semantics: str = DETERMINISTIC_OR):
    return pair_graph(3, [(0, 1), (1, 2), (0, 2)], semantics)


class SyndromeSetTests(unittest.TestCase):

    def test_empty_set(self):
        self.assertEqual(syndrome_set(triangle(), []), {(PASS, PASS, PASS)})

    def test_saturated_weak_or(self):
        g = pair_graph(2, [(0, 1)], WEAK_OR)
        self.assertEqual(syndrome_set(g, [0, 1]), {(PASS,), (FAIL,)})
        self.assertEqual(syndrome_set(g, [0]), {(FAIL,)})

    def test_example_setting(self):
        g = builtin.fig2_example(semantics=DETERMINISTIC_OR, coupling="iff", r5=builtin.R5_DISABLED)
        self.assertEqual(syndrome_set(g, [g.index_of("f2"), g.index_of("f5")]), {(FAIL, FAIL)})
        self.assertEqual(syndrome_set(g, [g.index_of("f5")]), set())
        self.assertEqual(syndrome_set(g, [g.index_of("f5")], respect_apriori=False), {(FAIL, FAIL)})

    def test_probabilistic_rejected(self):
        g = build_graph({
            "system": {"modules": [{"id": "m"}]},
            "failure_modes": [{"id": "f1", "host": "m"}],
            "tests": [{"id": "t1", "scope": ["f1"], "semantics": NOISY_OR, "p_detect": [0.9], "p_false_alarm": [0.1]}],
        })
        self.assertRaises(errors.ProbabilisticRelationError, syndrome_set, g, [0])


class KappaTests(unittest.TestCase):

    def test_singleton_tests(self):
        report = brute_force_kappa(pair_graph(2, [(0,), (1,)]))
        self.assertEqual(report.kappa, 2)
        self.assertIsNone(report.counterexample)
        self.assertEqual(report.method, BRUTE_FORCE)

    def test_single_shared_test(self):
        report = brute_force_kappa(pair_graph(2, [(0, 1)]))
        self.assertEqual(report.kappa, 0)
        self.assertEqual(report.counterexample, ((0,), (1,)))
        self.assertEqual(report.to_config()["counterexample"], [["f1"], ["f2"]])

    def test_triangle(self):
        report = brute_force_kappa(triangle())
        self.assertEqual(report.kappa, 1)
        self.assertEqual(report.counterexample, ((0, 1), (0, 2)))

    def test_max_k(self):
        report = brute_force_kappa(pair_graph(3, [(0,), (1,), (2,)]), max_k=1)
        self.assertEqual(report.kappa, 1)
        self.assertEqual(report.max_k, 1)

    def test_budget_exceeded(self):
        with self.assertRaises(errors.BudgetExceededError) as cm:
            brute_force_kappa(pair_graph(3, [(0,), (1,), (2,)]), budget=4)
        self.assertEqual(cm.exception.partial.kappa, 1)

    def test_apollo_policies(self):
        g = builtin.apollo_obstacle()
        outputs = kappa_report(g, OUTPUTS_ONLY, semantics=WEAK_OR, max_k=2)
        self.assertEqual(outputs.policy, OUTPUTS_ONLY)
        self.assertEqual(outputs.semantics, WEAK_OR)
        everything = kappa_report(g, ALL_MODES, semantics=WEAK_OR, max_k=2)
        self.assertGreaterEqual(everything.kappa, 0)
        self.assertRaises(errors.ConfigError, kappa_report, g, "some-modes")


class SufficientConditionTests(unittest.TestCase):

    def test_triangle(self):
        g = triangle(WEAK_OR)
        self.assertTrue(check_sufficient_conditions(g, 0))
        self.assertTrue(check_sufficient_conditions(g, 1))
        self.assertFalse(check_sufficient_conditions(g, 2))
        self.assertEqual(sufficient_kappa(g).kappa, 1)

    def test_untested_mode(self):
        self.assertFalse(check_sufficient_conditions(pair_graph(3, [(0, 1)], WEAK_OR), 1))

    def test_wrong_graphs(self):
        self.assertRaises(errors.WrongSemanticsError, check_sufficient_conditions, triangle(), 1)
        self.assertRaises(errors.SemanticsError, check_sufficient_conditions, pair_graph(3, [(0, 1, 2)], WEAK_OR), 1)
        self.assertRaises(errors.SemanticsError, check_sufficient_conditions, triangle(WEAK_OR), -1)

    def test_conditions_imply_kappa(self):
        rng = np.random.default_rng(5)
        checked = 0
        for _ in range(100):
            n_modes = int(rng.integers(4, 8))
            n_tests = int(rng.integers(n_modes, n_modes * (n_modes - 1) // 2 + 1))
            g = random_weak_or_graph(n_modes, n_tests, rng)
            for kappa in range(1, (n_modes - 1) // 2 + 1):
                if check_sufficient_conditions(g, kappa):
                    checked += 1
                    self.assertGreaterEqual(brute_force_kappa(g, max_k=kappa).kappa, kappa)
        self.assertGreater(checked, 0)

    def test_random_diagnosable_graph(self):
        g = random_diagnosable_graph(9, 4, seed=1)
        self.assertTrue(check_sufficient_conditions(g, 4))
        self.assertRaises(errors.ConfigError, random_diagnosable_graph, 6, 3, 1)


class TemporalTests(unittest.TestCase):

    def test_lower_bound(self):
        self.assertEqual(temporal_kappa_lower_bound([3, 3]), 3)
        self.assertEqual(temporal_kappa_lower_bound([2, 5, 4]), 2)
        self.assertRaises(errors.DataError, temporal_kappa_lower_bound, [])

    def test_random_stacks(self):
        rng = np.random.default_rng(9)
        for n in range(50):
            n_slices = 2 + n % 2
            n_modes = int(rng.integers(3, 5))
            n_tests = int(rng.integers(2, n_modes * (n_modes - 1) // 2 + 1))
            seed = int(rng.integers(1 << 30))
            stack, slices = random_stack(n_slices, n_modes, n_tests, 0, seed)
            bound = temporal_kappa_lower_bound([brute_force_kappa(s).kappa for s in slices])
            plain = brute_force_kappa(stack, max_k=4).kappa
            self.assertGreaterEqual(plain, min(bound, 4))
            linked, _ = random_stack(n_slices, n_modes, n_tests, 3, seed)
            self.assertEqual(linked.n_tests, stack.n_tests + 3)
            self.assertGreaterEqual(brute_force_kappa(linked, max_k=4).kappa, plain)


class HammingTests(unittest.TestCase):

    def test_distance(self):
        self.assertEqual(hamming((1, 0, 1), (1, 0, 1)), 0)
        self.assertEqual(hamming((1, 0, 0), (0, 1, 0)), 2)
        self.assertEqual(hamming((1, 1, 1, 1), (0, 0, 0, 0)), 4)
        self.assertRaises(errors.LengthMismatchError, hamming, (1,), (1, 0))

    def test_empirical(self):
        data = [((1,), (1, 0, 1)), ((0,), (0, 0, 0)), ((1,), (0, 1, 0)), ((0,), (0, 0, 0))]
        self.assertEqual(empirical_hamming(lambda s: (0, 0, 0), data), 3 / 4)
        truth = dict(data[:2])
        self.assertEqual(empirical_hamming(lambda s: truth[s], data[:2]), 0.0)
        self.assertRaises(errors.EmptyDatasetError, empirical_hamming, lambda s: s, [])


class IdentificationGuaranteeTests(unittest.TestCase):
    """Exact identification up to kappa, bounded mistakes beyond."""

    def test_random_weak_or_graphs(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            g = random_weak_or_graph(10, 25, rng)
            kappa = brute_force_kappa(g).kappa
            report = identification_sweep(g, lambda s: solver.solve_min_cardinality(g, s).assignment,
                                           max_size=kappa + 1, seed=rng, kappa=kappa)
            for size in range(kappa + 1):
                self.assertEqual(report.worst[size], 0)
            ceiling = math.ceil(report.bound(1e-12).value)
            self.assertLessEqual(report.mean(kappa + 1), ceiling)
            self.assertEqual(report.to_config()["kappa"], kappa)


class PacTests(unittest.TestCase):

    def test_bound(self):
        self.assertEqual(pac_bound(0.3, 10, 50, 2.0).value, 0.3)
        self.assertAlmostEqual(pac_bound(0.5, 10, 1000, 0.05).value, 0.9294, delta=1e-4)
        self.assertAlmostEqual(pac_bound(0.5, 10, 10 ** 9, 0.05).value, 0.5, delta=0.01)
        self.assertRaises(errors.InvalidCountsError, pac_bound, 0.5, 10, 0, 0.05)
        self.assertRaises(errors.DataError, pac_bound, 0.5, 10, 10, 0.0)

    def test_curve_is_monotone(self):
        values = [b.value for b in pac_curve(0.2, 16, 165)]
        self.assertEqual(values, sorted(values, reverse=True))

    def test_confidence(self):
        c = pac_confidence(0.5, 0.5, 10, 100)
        self.assertEqual(c.raw, -1.0)
        self.assertEqual(c.value, 0.0)
        self.assertAlmostEqual(pac_confidence(10, 0.0, 10, 100).value, 1.0)
        c = pac_confidence(2.0, 0.0, 10, 400)
        self.assertAlmostEqual(1.0 - c.raw, 2 * math.exp(-32), delta=1e-15)
        self.assertRaises(errors.DataError, pac_confidence, 0.1, 0.5, 10, 100)


@pytest.fixture
def noisy_chain():
    return build_graph({
        "system": {"modules": [{"id": "m"}]},
        "failure_modes": [{"id": f"f{i}", "host": "m"} for i in (1, 2, 3)],
        "tests": [
            {"id": "t1", "scope": ["f1", "f2"], "semantics": NOISY_OR, "p_detect": [0.9, 0.8], "p_false_alarm": [0.1, 0.05]},
            {"id": "t2", "scope": ["f2", "f3"], "semantics": NOISY_OR, "p_detect": [0.85, 0.9], "p_false_alarm": [0.05, 0.1]},
        ],
        "apriori": [{"id": f"f{i}.prior", "kind": "Prior", "scope": [f"f{i}"], "probability": 0.2} for i in (1, 2, 3)],
    })


def sample_losses(graph, rng, n, predictions):
    faults = (rng.random((n, graph.n_failure_modes)) < 0.2).astype(np.int8)
    syndromes = np.zeros((n, graph.n_tests), dtype=np.int8)
    for t, test in enumerate(graph.tests):
        pass_prob = np.ones(n)
        for j, i in enumerate(test.indices):
            pass_prob *= np.where(faults[:, i] == 1, 1.0 - test.p_detect[j], 1.0 - test.p_false_alarm[j])
        syndromes[:, t] = rng.random(n) >= pass_prob
    guesses = np.array([predictions[tuple(int(b) for b in s)] for s in syndromes])
    return np.sum(guesses != faults, axis=1)


def test_pac_bound_calibration(noisy_chain):
    predictions = {}
    for s1 in (PASS, FAIL):
        for s2 in (PASS, FAIL):
            predictions[(s1, s2)] = max_product(to_factor_graph(noisy_chain, (s1, s2)))
    rng = np.random.default_rng(77)
    expected = sample_losses(noisy_chain, rng, 100000, predictions).mean()
    misses = 0
    for _ in range(500):
        h = sample_losses(noisy_chain, rng, 200, predictions).mean()
        if expected > pac_bound(h, noisy_chain.n_failure_modes, 200, 0.05).value:
            misses += 1
    assert misses / 500 <= 0.05 + 0.02


if __name__ == "__main__":
    unittest.main()

# vim: set et sw=4 ts=4:
