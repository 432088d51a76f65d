import math
import unittest

import pytest

from percmon import checks, errors
from percmon.builtin import FUSION, OUTPUT_FAILURES, module_mode_id, output_mode_id
from percmon.config import ScenarioConfig
from percmon.scene import FieldOfView, Obstacle, Rectangle, Region, restrict_to_region, simulate_scene, simulate_ticks
from percmon.types import ACTIVE, FAIL, INACTIVE, PASS


def obstacles(*positions, cls="car"):
    return [Obstacle(f"o{n}", p, cls=cls) for n, p in enumerate(positions)]


class MatchingTests(unittest.TestCase):

    def test_minimum_distance_pairs(self):
        a = obstacles((0, 0), (10, 0))
        b = obstacles((9, 0), (1, 0))
        matches = checks.match_obstacles(a, b)
        pairs = sorted((m.left.position, m.right.position) for m in matches)
        self.assertEqual(pairs, [((0.0, 0.0), (1.0, 0.0)), ((10.0, 0.0), (9.0, 0.0))])
        self.assertEqual(sum(m.distance for m in matches), 2.0)

    def test_rectangular(self):
        matches = checks.match_obstacles(obstacles((0, 0), (5, 5), (20, 0)), obstacles((19, 1)))
        self.assertEqual(len(matches), 1)
        self.assertEqual(matches[0].left.position, (20.0, 0.0))
        self.assertEqual(checks.match_obstacles([], obstacles((1, 1))), [])


class CheckTests(unittest.TestCase):

    def test_misdetection(self):
        self.assertEqual(checks.test_misdetection(obstacles((0, 0)), obstacles((3, 3))), PASS)
        self.assertEqual(checks.test_misdetection(obstacles((0, 0)), []), FAIL)
        self.assertEqual(checks.test_misdetection([], []), PASS)

    def test_misposition_threshold(self):
        a, b = obstacles((0, 0)), obstacles((2.5, 0))
        self.assertEqual(checks.test_misposition(checks.match_obstacles(a, b), 2.5), FAIL)
        self.assertEqual(checks.test_misposition(checks.match_obstacles(a, obstacles((2.4, 0))), 2.5), PASS)
        self.assertEqual(checks.test_misposition([], 2.5), PASS)
        self.assertRaises(errors.ConfigError, checks.test_misposition, [], 0.0)

    def test_misclassification(self):
        matches = checks.match_obstacles(obstacles((0, 0)), obstacles((0.5, 0), cls="truck"))
        self.assertEqual(checks.test_misclassification(matches), FAIL)
        matches = checks.match_obstacles(obstacles((0, 0)), obstacles((0.5, 0)))
        self.assertEqual(checks.test_misclassification(matches), PASS)

    def test_compare_restricts_to_region(self):
        region = Region(Rectangle(-1, 5, -1, 1))
        outcome = checks.compare(obstacles((0, 0), (30, 0)), obstacles((0, 0)), region, 2.5)
        self.assertEqual(outcome, {"misdetection": PASS, "misposition": PASS, "misclassification": PASS})

    def test_labels(self):
        region = Region(Rectangle(-50, 50, -50, 50))
        truth = obstacles((0, 0), (10, 0))
        clean = checks.label_ground_truth(truth, truth, region, 2.5)
        self.assertTrue(all(v == INACTIVE for v in clean.values()))
        ghost = checks.label_ground_truth(truth + obstacles((20, 5)), truth, region, 2.5)
        self.assertEqual(ghost, {"misdetection": ACTIVE, "misposition": INACTIVE, "misclassification": INACTIVE})
        moved = checks.label_ground_truth(obstacles((0, 0), (13, 0)), truth, region, 2.5)
        self.assertEqual(moved["misposition"], ACTIVE)
        self.assertEqual(moved["misdetection"], INACTIVE)


class TemporalAdjustTests(unittest.TestCase):

    def test_identity(self):
        obs = [Obstacle("a", (1, 2), (3, 4))]
        adjusted, theta = checks.temporal_adjust(obs, 0.0, {"car": 10.0}, 2.5)
        self.assertEqual(adjusted[0].position, (1.0, 2.0))
        self.assertEqual(theta, 2.5)

    def test_known_velocity(self):
        adjusted, theta = checks.temporal_adjust([Obstacle("a", (5, 1), (10, 0))], 0.03, {"car": 10.0}, 2.5)
        self.assertAlmostEqual(adjusted[0].position[0], 5.3)
        self.assertAlmostEqual(adjusted[0].position[1], 1.0)
        self.assertEqual(theta, 2.5)

    def test_unknown_velocity(self):
        obs = [Obstacle("a", (5, 1)), Obstacle("b", (7, 1), cls="pedestrian")]
        adjusted, theta = checks.temporal_adjust(obs, 0.3, {"car": 10.0, "pedestrian": 1.5}, 2.5)
        self.assertAlmostEqual(theta, 5.5)
        self.assertEqual([o.position for o in adjusted], [(5.0, 1.0), (7.0, 1.0)])
        self.assertRaises(errors.ConfigError, checks.temporal_adjust, obs, -0.1, {}, 2.5)


class RegionTests(unittest.TestCase):

    def test_field_of_view(self):
        fov = FieldOfView(0.0, 0.5, 50.0)
        self.assertTrue(fov.contains((10, 0)))
        self.assertFalse(fov.contains((-10, 0)))
        self.assertFalse(fov.contains((60, 0)))
        self.assertTrue(FieldOfView(0.0, math.pi, 10.0).contains((-5, 0)))
        self.assertRaises(errors.ConfigError, FieldOfView, 0.0, 0.0, 10.0)

    def test_restrict(self):
        region = Region(Rectangle(0, 10, -5, 5), [FieldOfView(0.0, 0.5, 8.0)])
        kept = restrict_to_region(obstacles((5, 0), (9, 0), (5, 4.9), (-1, 0)), region)
        self.assertEqual([o.position for o in kept], [(5.0, 0.0)])
        self.assertRaises(errors.ConfigError, Rectangle, 1, 1, 0, 1)

    def test_obstacle_validation(self):
        self.assertRaises(errors.ConfigError, Obstacle, "x", (0, 0), cls="spaceship")
        self.assertRaises(errors.ConfigError, Obstacle, "x", (math.nan, 0))


@pytest.fixture
def scenario():
    return ScenarioConfig.default()


def active_labels(config, ticks, seed):
    seen = set()
    for frame in simulate_ticks(config, ticks, seed):
        seen.update(k for k, v in checks.frame_labels(frame, config).items() if v == ACTIVE)
    return seen


def test_clean_run_is_quiet(scenario):
    config = scenario.clean()
    scene = simulate_ticks(config, 1000, seed=3)
    assert len(scene) == 1000
    for frame in scene:
        assert set(checks.frame_syndrome(frame, config).values()) == {PASS}
        assert set(checks.frame_labels(frame, config).values()) == {INACTIVE}
    for earlier, later in zip(scene.frames[:50], scene.frames[1:51]):
        assert set(checks.temporal_syndrome(earlier, later, config).values()) == {PASS}


def test_camera_misdetections_only(scenario):
    config = scenario.clean().override(detectors={"camera": {"misdetect": 0.3}})
    seen = active_labels(config, 300, seed=5)
    assert seen == {output_mode_id("camera", "misdetection"), module_mode_id("camera")}


def test_camera_misclassifications_only(scenario):
    config = scenario.clean().override(detectors={"camera": {"misclassify": 0.3}})
    seen = active_labels(config, 300, seed=6)
    assert seen == {output_mode_id("camera", "misclassification"), module_mode_id("camera")}


def test_labels_cover_every_mode(scenario):
    frame = simulate_ticks(scenario, 1, seed=0)[0]
    labels = checks.frame_labels(frame, scenario)
    assert len(labels) == 16
    assert output_mode_id(FUSION, "misposition") in labels
    syndrome = checks.frame_syndrome(frame, scenario)
    assert len(syndrome) == 18
    assert set(checks.vectorize(syndrome, sorted(syndrome), "test")) <= {PASS, FAIL}
    with pytest.raises(errors.MisalignedInputError):
        checks.vectorize(syndrome, ["nope"], "test")


def test_temporal_syndrome_ids(scenario):
    scene = simulate_ticks(scenario, 2, seed=0)
    outcomes = checks.temporal_syndrome(scene[0], scene[1], scenario)
    assert len(outcomes) == 18
    assert "lidar-camera.misdetection.temporal0" in outcomes
    assert set(checks.qualified({"a": 1}, 1)) == {"a@1"}


def test_simulation_is_seeded(scenario):
    first = [f.to_config() for f in simulate_ticks(scenario, 30, seed=4)]
    second = [f.to_config() for f in simulate_ticks(scenario, 30, seed=4)]
    other = [f.to_config() for f in simulate_ticks(scenario, 30, seed=5)]
    assert first == second
    assert first != other


def test_simulate_scene_duration(scenario):
    scene = simulate_scene(scenario, 3.0, tick=0.3, seed=1)
    assert len(scene) == 10
    assert scene[9].timestamp == pytest.approx(2.7)
    with pytest.raises(errors.ConfigError):
        simulate_scene(scenario, 0.0)


def test_output_kinds():
    assert OUTPUT_FAILURES == ("misdetection", "misposition", "misclassification")


if __name__ == "__main__":
    unittest.main()

# vim: set et sw=4 ts=4:
