"""
Run and scenario configuration.

Both configurations are plain JSON documents. Missing keys take the
defaults below; unknown keys are rejected so a typo never goes unnoticed.
"""
from __future__ import annotations
import copy
import logging
import math
import pathlib
from typing import Dict, List, Optional, Tuple, Union

from percmon import errors, jsonio, utils
from percmon.builtin import FUSION, SENSOR_PAIRS
from percmon.scene import OBSTACLE_CLASSES, DetectorModel, Obstacle, Rectangle, Region, SensorSpec, UnionFieldOfView

log = logging.getLogger(__name__)

DEFAULT_TICK = 0.3
DEFAULT_THETA = 2.5

DEFAULT_SCENARIO = {
    "tick": DEFAULT_TICK,
    "theta": DEFAULT_THETA,
    "region": {"x_min": -5.0, "x_max": 60.0, "y_min": -15.0, "y_max": 15.0},
    "sensors": [
        {"id": "lidar", "name": "roof lidar", "bearing": 0.0, "half_angle": math.pi, "range": 60.0},
        {"id": "camera", "name": "front camera", "bearing": 0.0, "half_angle": 0.6, "range": 50.0},
        {"id": "radar", "name": "front radar", "bearing": 0.0, "half_angle": 0.4, "range": 80.0},
    ],
    "detectors": {
        "lidar": {"misdetect": 0.03, "misposition": 0.02, "misclassify": 0.03, "ghost": 0.02,
                  "ood_rate": 0.01, "ood_duration": 8, "ood_probability": 0.4},
        "camera": {"misdetect": 0.05, "misposition": 0.04, "misclassify": 0.05, "ghost": 0.03,
                   "ood_rate": 0.015, "ood_duration": 8, "ood_probability": 0.5},
        "radar": {"misdetect": 0.02, "misposition": 0.02, "misclassify": 0.01, "ghost": 0.02},
    },
    "fusion": {"id": FUSION, "gate_factor": 2.0, "misassociation": 0.03},
    "pairs": [list(p) for p in SENSOR_PAIRS],
    "traffic": {
        "count": 6,
        "area": {"x_min": 0.0, "x_max": 70.0, "y_min": -15.0, "y_max": 15.0},
        "spawn_radius": [85.0, 95.0],
        "despawn_radius": 100.0,
        "classes": {"car": 4, "truck": 1, "pedestrian": 2, "cyclist": 1, "animal": 0.5, "cone": 0.5},
    },
    "obstacles": [],
    "class_speeds": {"car": 10.0, "truck": 10.0, "cyclist": 5.0, "pedestrian": 1.5, "animal": 1.5, "cone": 0.0},
}


def _merge(base: dict, override: dict, where: str, path: Optional[str]) -> dict:
    result = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise errors.ConfigError(f"Unknown key '{where}{key}'", path=path)
        if isinstance(base[key], dict) and isinstance(value, dict) and key not in ("detectors", "classes", "class_speeds"):
            result[key] = _merge(base[key], value, f"{where}{key}.", path)
        else:
            result[key] = copy.deepcopy(value)
    return result


class ScenarioConfig:
    def __init__(self, config: Optional[dict] = None, path: Optional[str] = None):
        self.path = path
        self.document = _merge(DEFAULT_SCENARIO, config or {}, "", path)
        doc = self.document
        try:
            self.tick = float(doc["tick"])
            self.theta = float(doc["theta"])
            if self.tick <= 0 or self.theta <= 0:
                raise errors.ConfigError(f"tick and theta must be positive, got {self.tick} and {self.theta}", path=path)
            self.region = Rectangle.from_config(doc["region"])
            self.sensors: Tuple[SensorSpec, ...] = tuple(SensorSpec(s, path) for s in doc["sensors"])
            ids = [s.id for s in self.sensors]
            if len(set(ids)) != len(ids):
                raise errors.ConfigError("Sensor ids must be unique", path=path)
            for sid in doc["detectors"]:
                if sid not in ids:
                    raise errors.ConfigError(f"Detector model for unknown sensor '{sid}'", path=path)
            self.detectors: Dict[str, DetectorModel] = {s: DetectorModel(s, doc["detectors"].get(s, {}), path) for s in ids}
            fusion = doc["fusion"]
            self.fusion_id = str(fusion["id"])
            if self.fusion_id in ids:
                raise errors.ConfigError(f"Fusion id '{self.fusion_id}' clashes with a sensor", path=path)
            self.gate = float(fusion["gate_factor"]) * self.theta
            self.misassociation = float(fusion["misassociation"])
            if not 0.0 <= self.misassociation <= 1.0:
                raise errors.ConfigError(f"Misassociation probability {self.misassociation} outside [0,1]", path=path)
            modules = ids + [self.fusion_id]
            self.pairs: Tuple[Tuple[str, str], ...] = tuple((str(a), str(b)) for a, b in doc["pairs"])
            for a, b in self.pairs:
                if a not in modules or b not in modules or a == b:
                    raise errors.ConfigError(f"Invalid output pair ({a}, {b})", path=path)
            traffic = doc["traffic"]
            self.traffic_count = int(traffic["count"])
            self.traffic_area = Rectangle.from_config(traffic["area"])
            self.spawn_radius = (float(traffic["spawn_radius"][0]), float(traffic["spawn_radius"][1]))
            self.despawn_radius = float(traffic["despawn_radius"])
            reach = max(math.hypot(*s.fov.mount) + s.fov.max_range for s in self.sensors)
            if not reach < self.spawn_radius[0] <= self.spawn_radius[1] < self.despawn_radius:
                raise errors.ConfigError("Obstacles must spawn beyond every sensor's range and inside the despawn radius", path=path)
            self.class_weights = {str(k): float(v) for k, v in traffic["classes"].items() if float(v) > 0}
            self.class_speeds = {str(k): float(v) for k, v in doc["class_speeds"].items()}
            for cls in list(self.class_weights) + list(self.class_speeds):
                if cls not in OBSTACLE_CLASSES:
                    raise errors.ConfigError(f"Unknown obstacle class '{cls}'", path=path)
            if self.traffic_count and not self.class_weights:
                raise errors.ConfigError("Random traffic needs at least one class with positive weight", path=path)
            self.obstacles: Tuple[Obstacle, ...] = tuple(Obstacle.from_config(o) for o in doc["obstacles"])
        except errors.ConfigError as exc:
            if exc.path is None:
                exc.path = path
            raise
        except errors.PercmonException as exc:
            raise errors.ConfigError(str(exc), path=path) from None
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise errors.ConfigError(f"Malformed scenario: {exc!r}", path=path) from None

    @staticmethod
    def default() -> ScenarioConfig:
        return ScenarioConfig()

    @staticmethod
    def load(path: Union[str, pathlib.Path, None]) -> ScenarioConfig:
        if path is None:
            return ScenarioConfig.default()
        return ScenarioConfig(jsonio.read_file(path), path=str(path))

    def override(self, **changes) -> ScenarioConfig:
        document = copy.deepcopy(self.document)
        document.update(changes)
        return ScenarioConfig(document, self.path)

    def clean(self) -> ScenarioConfig:
        """Same world without any injected corruption."""
        document = copy.deepcopy(self.document)
        document["detectors"] = {}
        document["fusion"]["misassociation"] = 0.0
        return ScenarioConfig(document, self.path)

    @property
    def modules(self) -> List[str]:
        return [s.id for s in self.sensors] + [self.fusion_id]

    def field_of_view(self, module: str):
        """A sensor's sector; the fused output covers the union of all sectors."""
        if module == self.fusion_id:
            return UnionFieldOfView(s.fov for s in self.sensors)
        for s in self.sensors:
            if s.id == module:
                return s.fov
        raise errors.ConfigError(f"Unknown module '{module}'", path=self.path)

    def region_of(self, *modules: str) -> Region:
        return Region(self.region, [self.field_of_view(m) for m in modules])

    def reports_velocity(self, module: str) -> bool:
        if module == self.fusion_id:
            return any(s.reports_velocity for s in self.sensors)
        self.field_of_view(module)
        return next(s for s in self.sensors if s.id == module).reports_velocity

    def to_config(self) -> dict:
        return copy.deepcopy(self.document)

    @property
    def hash(self) -> str:
        return utils.config_hash(self.document)


ALGORITHMS = ("deterministic", "weaker-or", "factor-graph", "baseline", "baseline-rel")
KINDS = ("regular", "temporal")

RUN_DEFAULTS = {
    "graph": "apollo-obstacle",
    "dataset": None,
    "algo": "factor-graph",
    "kind": "regular",
    "seed": 0,
    "out": ".",
    "budget": None,
    "delta": [1e-12, 1e-9, 1e-6, 1e-3, 0.01, 0.05, 0.1, 0.5],
    "params": None,
    "workers": 1,
    "max_k": None,
    "semantics": None,
    "count": 1650,
    "scenario": None,
    "policy": None,
    "split": "test",
    "inputs": [],
}


class RunConfig:
    """Command selectors; a JSON config file overrides the command-line flags key by key."""

    def __init__(self, values: Optional[dict] = None, path: Optional[str] = None):
        values = dict(values or {})
        unknown = sorted(set(values) - set(RUN_DEFAULTS))
        if unknown:
            raise errors.ConfigError(f"Unknown configuration keys: {', '.join(unknown)}", path=path)
        merged = dict(RUN_DEFAULTS)
        merged.update({k: v for k, v in values.items() if v is not None})
        self.graph: str = str(merged["graph"])
        self.dataset: Optional[str] = merged["dataset"]
        self.algo: str = merged["algo"]
        self.kind: str = merged["kind"]
        self.seed: int = int(merged["seed"])
        self.out = pathlib.Path(merged["out"])
        self.budget: Optional[int] = None if merged["budget"] is None else int(merged["budget"])
        delta = merged["delta"]
        self.delta: List[float] = [float(d) for d in (delta if isinstance(delta, (list, tuple)) else [delta])]
        self.params: Optional[str] = merged["params"]
        self.workers: int = int(merged["workers"])
        self.max_k: Optional[int] = None if merged["max_k"] is None else int(merged["max_k"])
        self.semantics: Optional[str] = merged["semantics"]
        self.count: int = int(merged["count"])
        self.scenario: Optional[str] = merged["scenario"]
        self.policy: Optional[str] = merged["policy"]
        self.split: str = merged["split"]
        self.inputs: List[str] = [str(i) for i in merged["inputs"]]
        if self.algo not in ALGORITHMS:
            raise errors.ConfigError(f"Unknown algorithm '{self.algo}', choose one of {', '.join(ALGORITHMS)}", path=path)
        if self.kind not in KINDS:
            raise errors.ConfigError(f"Unknown graph kind '{self.kind}', choose one of {', '.join(KINDS)}", path=path)
        if self.workers < 1:
            raise errors.ConfigError(f"Need at least one worker, got {self.workers}", path=path)

    @staticmethod
    def from_arguments(args, config_file: Optional[Union[str, pathlib.Path]] = None) -> RunConfig:
        values = {k: getattr(args, k) for k in RUN_DEFAULTS if getattr(args, k, None) is not None}
        path = None
        if config_file is not None:
            path = str(config_file)
            document = jsonio.read_file(config_file)
            if not isinstance(document, dict):
                raise errors.ConfigError("Configuration file must hold a JSON object", path=path)
            unknown = sorted(set(document) - set(RUN_DEFAULTS))
            if unknown:
                raise errors.ConfigError(f"Unknown configuration keys: {', '.join(unknown)}", path=path)
            values.update(document)
        return RunConfig(values, path)

    def to_config(self) -> dict:
        return {
            "graph": self.graph, "dataset": self.dataset, "algo": self.algo, "kind": self.kind, "seed": self.seed,
            "out": str(self.out), "budget": self.budget, "delta": self.delta, "params": self.params,
            "workers": self.workers, "max_k": self.max_k, "semantics": self.semantics, "count": self.count,
            "scenario": self.scenario, "policy": self.policy, "split": self.split, "inputs": self.inputs,
        }

# vim: set et sw=4 ts=4:
