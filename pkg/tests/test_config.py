import argparse
import json
import pathlib
import tempfile
import unittest

from percmon import errors
from percmon.config import DEFAULT_THETA, RUN_DEFAULTS, RunConfig, ScenarioConfig


class ScenarioConfigTests(unittest.TestCase):

    def test_defaults(self):
        config = ScenarioConfig.default()
        self.assertEqual(config.tick, 0.3)
        self.assertEqual(config.theta, DEFAULT_THETA)
        self.assertEqual(config.modules, ["lidar", "camera", "radar", "fusion"])
        self.assertEqual(len(config.pairs), 6)
        self.assertEqual(config.gate, 5.0)
        self.assertTrue(config.reports_velocity("camera"))
        self.assertEqual(ScenarioConfig.load(None).hash, config.hash)

    def test_unknown_keys(self):
        self.assertRaises(errors.ConfigError, ScenarioConfig, {"speed": 3})
        self.assertRaises(errors.ConfigError, ScenarioConfig, {"fusion": {"gate": 2.0}})

    def test_invalid_values(self):
        self.assertRaises(errors.ConfigError, ScenarioConfig, {"theta": 0})
        self.assertRaises(errors.ConfigError, ScenarioConfig, {"pairs": [["lidar", "sonar"]]})
        self.assertRaises(errors.ConfigError, ScenarioConfig, {"detectors": {"sonar": {}}})
        self.assertRaises(errors.ConfigError, ScenarioConfig, {"detectors": {"camera": {"ghost": 1.5}}})
        self.assertRaises(errors.ConfigError, ScenarioConfig, {"traffic": {"spawn_radius": [10.0, 20.0]}})

    def test_override_and_clean(self):
        config = ScenarioConfig.default()
        wider = config.override(theta=4.0)
        self.assertEqual(wider.theta, 4.0)
        self.assertNotEqual(wider.hash, config.hash)
        clean = config.clean()
        self.assertTrue(all(d.is_clean for d in clean.detectors.values()))
        self.assertEqual(clean.misassociation, 0.0)
        self.assertFalse(config.detectors["camera"].is_clean)

    def test_region(self):
        config = ScenarioConfig.default()
        self.assertTrue(config.region_of("lidar", "camera").contains((20.0, 0.0)))
        self.assertFalse(config.region_of("lidar", "camera").contains((-3.0, 0.0)))
        self.assertTrue(config.region_of("fusion").contains((55.0, 0.0)))
        self.assertRaises(errors.ConfigError, config.region_of, "sonar")

    def test_load_reports_path(self):
        with self.assertRaises(errors.DataError) as cm:
            ScenarioConfig.load("/nonexistent/scenario.json")
        self.assertEqual(cm.exception.path, "/nonexistent/scenario.json")


class RunConfigTests(unittest.TestCase):

    def test_defaults(self):
        config = RunConfig()
        self.assertEqual(config.algo, "factor-graph")
        self.assertEqual(config.count, 1650)
        self.assertEqual(set(config.to_config()), set(RUN_DEFAULTS))

    def test_validation(self):
        self.assertRaises(errors.ConfigError, RunConfig, {"colour": "red"})
        self.assertRaises(errors.ConfigError, RunConfig, {"algo": "guess"})
        self.assertRaises(errors.ConfigError, RunConfig, {"kind": "weekly"})
        self.assertRaises(errors.ConfigError, RunConfig, {"workers": 0})

    def test_file_overrides_flags(self):
        args = argparse.Namespace(algo="deterministic", seed=3, count=None)
        with tempfile.TemporaryDirectory() as tmp:
            path = pathlib.Path(tmp) / "run.json"
            path.write_text(json.dumps({"seed": 8, "delta": 0.05}), encoding="utf-8")
            config = RunConfig.from_arguments(args, path)
            self.assertEqual(config.algo, "deterministic")
            self.assertEqual(config.seed, 8)
            self.assertEqual(config.delta, [0.05])
            path.write_text(json.dumps({"sed": 8}), encoding="utf-8")
            self.assertRaises(errors.ConfigError, RunConfig.from_arguments, args, path)


if __name__ == "__main__":
    unittest.main()

# vim: set et sw=4 ts=4:
