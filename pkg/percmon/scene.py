"""
Planar obstacle world observed by sector-shaped sensors.

Obstacles move at constant velocity around a static ego vehicle at the
origin. Every detector reports the obstacles inside its field of view,
corrupted according to its :class:`DetectorModel`; the fusion module merges
the sensor outputs into one obstacle list.
"""
from __future__ import annotations
import logging
import math
from collections import Counter
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from percmon import errors, structs, utils

log = logging.getLogger(__name__)

OBSTACLE_CLASSES = ("car", "truck", "pedestrian", "cyclist", "animal", "cone")

NO_MATCH = 1e9

Point = Tuple[float, float]


class Obstacle:
    __slots__ = ("id", "position", "velocity", "cls")

    def __init__(self, id: str, position: Sequence[float], velocity: Optional[Sequence[float]] = None, cls: str = "car"):
        self.id = str(id)
        self.position: Point = (float(position[0]), float(position[1]))
        self.velocity: Optional[Point] = None if velocity is None else (float(velocity[0]), float(velocity[1]))
        if not all(math.isfinite(v) for v in self.position + (self.velocity or ())):
            raise errors.ConfigError(f"Obstacle '{self.id}' has non-finite coordinates")
        if cls not in OBSTACLE_CLASSES:
            raise errors.ConfigError(f"Obstacle '{self.id}' has unknown class '{cls}'")
        self.cls = cls

    @staticmethod
    def from_config(config: dict) -> Obstacle:
        return Obstacle(config["id"], config["position"], config.get("velocity"), config.get("class", "car"))

    def to_config(self) -> dict:
        config = {"id": self.id, "position": list(self.position), "class": self.cls}
        if self.velocity is not None:
            config["velocity"] = list(self.velocity)
        return config

    def replace(self, **changes) -> Obstacle:
        values = {"id": self.id, "position": self.position, "velocity": self.velocity, "cls": self.cls}
        values.update(changes)
        return Obstacle(**values)

    def advanced(self, dt: float) -> Obstacle:
        if self.velocity is None or dt == 0:
            return self
        x, y = self.position
        vx, vy = self.velocity
        return self.replace(position=(x + vx * dt, y + vy * dt))

    def distance(self, other: Obstacle) -> float:
        return math.hypot(self.position[0] - other.position[0], self.position[1] - other.position[1])

    def __repr__(self):
        return f"<{self.__class__.__name__} {self.id} {self.cls} at ({self.position[0]:.2f}, {self.position[1]:.2f})>"


class FieldOfView:
    """Angular sector around a mount point: center bearing, half-angle and range."""

    def __init__(self, bearing: float, half_angle: float, max_range: float, mount: Point = (0.0, 0.0)):
        if not 0.0 < half_angle <= math.pi:
            raise errors.ConfigError(f"Half-angle {half_angle} outside (0, pi]")
        if max_range <= 0:
            raise errors.ConfigError(f"Range must be positive, got {max_range}")
        self.bearing = float(bearing)
        self.half_angle = float(half_angle)
        self.max_range = float(max_range)
        self.mount = (float(mount[0]), float(mount[1]))

    def contains(self, p: Point) -> bool:
        dx, dy = p[0] - self.mount[0], p[1] - self.mount[1]
        if math.hypot(dx, dy) > self.max_range:
            return False
        if self.half_angle >= math.pi:
            return True
        offset = (math.atan2(dy, dx) - self.bearing + math.pi) % (2 * math.pi) - math.pi
        return abs(offset) <= self.half_angle


class UnionFieldOfView:
    def __init__(self, parts: Iterable[Union[FieldOfView, UnionFieldOfView]]):
        self.parts = tuple(parts)

    def contains(self, p: Point) -> bool:
        return any(f.contains(p) for f in self.parts)


class Rectangle:
    def __init__(self, x_min: float, x_max: float, y_min: float, y_max: float):
        if not (x_min < x_max and y_min < y_max):
            raise errors.ConfigError(f"Degenerate rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]")
        self.x_min, self.x_max, self.y_min, self.y_max = float(x_min), float(x_max), float(y_min), float(y_max)

    @staticmethod
    def from_config(config: dict) -> Rectangle:
        return Rectangle(config["x_min"], config["x_max"], config["y_min"], config["y_max"])

    def to_config(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "y_min": self.y_min, "y_max": self.y_max}

    def contains(self, p: Point) -> bool:
        return self.x_min <= p[0] <= self.x_max and self.y_min <= p[1] <= self.y_max


class Region:
    """Region of interest intersected with any number of fields of view."""

    def __init__(self, roi: Optional[Rectangle] = None, fields: Iterable = ()):
        self.roi = roi
        self.fields = tuple(fields)

    def contains(self, p: Point) -> bool:
        if self.roi is not None and not self.roi.contains(p):
            return False
        return all(f.contains(p) for f in self.fields)



def restrict_to_region(obstacles: Iterable[Obstacle], region: Region) -> List[Obstacle]:
    return [o for o in obstacles if region.contains(o.position)]


class SensorSpec:
    def __init__(self, config: dict, path: Optional[str] = None):
        self.id = str(config["id"])
        self.name = str(config.get("name") or self.id)
        try:
            self.fov = FieldOfView(
                config.get("bearing", 0.0), config.get("half_angle", math.pi), config.get("range", 60.0),
                tuple(config.get("mount", (0.0, 0.0))),
            )
        except errors.ConfigError as exc:
            raise errors.ConfigError(f"Sensor '{self.id}': {exc}", path=path) from None
        self.reports_velocity = bool(config.get("reports_velocity", True))

    def to_config(self) -> dict:
        return {
            "id": self.id, "name": self.name, "bearing": self.fov.bearing, "half_angle": self.fov.half_angle,
            "range": self.fov.max_range, "mount": list(self.fov.mount), "reports_velocity": self.reports_velocity,
        }

    def __str__(self):
        return f"{self.__class__.__name__} '{self.name}' [{self.id}]"


class DetectorModel:
    """
    Per-tick injection probabilities of one detector. During an
    out-of-distribution episode every probability is raised to at least
    ``ood_probability``.
    """
    KINDS = ("misdetect", "misposition", "misclassify", "ghost")

    def __init__(self, sensor: str, config: dict, path: Optional[str] = None):
        self.sensor = sensor
        owner = f"Detector '{sensor}'"
        self.probabilities = {k: structs.check_probability(config.get(k, 0.0), f"{owner} {k}", path) for k in self.KINDS}
        low, high = config.get("misposition_range", (3.0, 6.0))
        if not 0 <= low <= high:
            raise errors.ConfigError(f"{owner}: invalid misposition range [{low}, {high}]", path=path)
        self.misposition_range = (float(low), float(high))
        self.ood_rate = structs.check_probability(config.get("ood_rate", 0.0), f"{owner} ood_rate", path)
        self.ood_duration = int(config.get("ood_duration", 10))
        self.ood_probability = structs.check_probability(config.get("ood_probability", 0.5), f"{owner} ood_probability", path)
        self.position_noise = float(config.get("position_noise", 0.0))
        if self.position_noise < 0 or self.ood_duration < 1:
            raise errors.ConfigError(f"{owner}: negative noise or empty episode", path=path)

    def probability(self, kind: str, ood: bool) -> float:
        p = self.probabilities[kind]
        return max(p, self.ood_probability) if ood else p

    @property
    def is_clean(self) -> bool:
        return not any(self.probabilities.values()) and self.ood_rate == 0 and self.position_noise == 0

    def to_config(self) -> dict:
        config = dict(self.probabilities)
        config.update({
            "misposition_range": list(self.misposition_range), "ood_rate": self.ood_rate,
            "ood_duration": self.ood_duration, "ood_probability": self.ood_probability,
            "position_noise": self.position_noise,
        })
        return config


class Detector:
    """A sensor with its fault model and out-of-distribution episode state."""

    def __init__(self, spec: SensorSpec, model: DetectorModel, roi: Optional[Rectangle] = None):
        self.spec = spec
        self.model = model
        self.region = Region(roi, [spec.fov])
        self.ood_left = 0
        self._ghosts = 0

    def _ghost(self, rng: np.random.Generator) -> Optional[Point]:
        fov = self.spec.fov
        for _ in range(50):
            r = fov.max_range * math.sqrt(rng.random())
            a = fov.bearing + rng.uniform(-fov.half_angle, fov.half_angle)
            p = (fov.mount[0] + r * math.cos(a), fov.mount[1] + r * math.sin(a))
            if self.region.contains(p):
                return p
        return None

    def observe(self, truth: Sequence[Obstacle], rng: np.random.Generator) -> List[Obstacle]:
        model = self.model
        if self.ood_left > 0:
            self.ood_left -= 1
        elif model.ood_rate and rng.random() < model.ood_rate:
            self.ood_left = model.ood_duration
            log.debug("Detector %s enters an out-of-distribution episode", self.spec.id)
        ood = self.ood_left > 0

        seen = [o if self.spec.reports_velocity else o.replace(velocity=None) for o in truth if self.spec.fov.contains(o.position)]
        if model.is_clean:
            return seen
        draws = rng.random(len(DetectorModel.KINDS))
        if model.position_noise > 0 and seen:
            noise = rng.normal(0.0, model.position_noise, size=(len(seen), 2))
            seen = [o.replace(position=(o.position[0] + dx, o.position[1] + dy)) for o, (dx, dy) in zip(seen, noise)]
        if draws[0] < model.probability("misdetect", ood) and seen:
            del seen[int(rng.integers(len(seen)))]
        if draws[1] < model.probability("misposition", ood) and seen:
            i = int(rng.integers(len(seen)))
            magnitude = rng.uniform(*model.misposition_range)
            angle = rng.uniform(-math.pi, math.pi)
            x, y = seen[i].position
            seen[i] = seen[i].replace(position=(x + magnitude * math.cos(angle), y + magnitude * math.sin(angle)))
        if draws[2] < model.probability("misclassify", ood) and seen:
            i = int(rng.integers(len(seen)))
            others = [c for c in OBSTACLE_CLASSES if c != seen[i].cls]
            seen[i] = seen[i].replace(cls=others[int(rng.integers(len(others)))])
        if draws[3] < model.probability("ghost", ood):
            p = self._ghost(rng)
            if p is not None:
                self._ghosts += 1
                velocity = (0.0, 0.0) if self.spec.reports_velocity else None
                cls = OBSTACLE_CLASSES[int(rng.integers(len(OBSTACLE_CLASSES)))]
                seen.append(Obstacle(f"{self.spec.id}-ghost{self._ghosts}", p, velocity, cls))
        return seen


def _merge(members: Sequence[Obstacle], id: str) -> Obstacle:
    position = np.mean([m.position for m in members], axis=0)
    velocities = [m.velocity for m in members if m.velocity is not None]
    velocity = np.mean(velocities, axis=0) if velocities else None
    cls = Counter(m.cls for m in members).most_common(1)[0][0]
    return Obstacle(id, position, velocity, cls)


def associate(clusters: Sequence[Sequence[Obstacle]], detections: Sequence[Obstacle], gate: float) -> List[Tuple[int, int]]:
    """Minimum-distance assignment of detections to cluster centroids, pairs beyond the gate dropped."""
    if not clusters or not detections:
        return []
    centroids = np.array([np.mean([m.position for m in c], axis=0) for c in clusters])
    cost = cdist(centroids, np.array([d.position for d in detections]))
    cost[cost >= gate] = NO_MATCH
    rows, cols = linear_sum_assignment(cost)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if cost[r, c] < NO_MATCH]


def fuse(outputs: Dict[str, Sequence[Obstacle]], order: Sequence[str], gate: float,
         misassociation: float = 0.0, rng: Optional[np.random.Generator] = None,
         fields: Optional[Dict[str, FieldOfView]] = None) -> List[Obstacle]:
    """
    Sequential nearest-neighbour fusion: the outputs are merged one sensor at
    a time, each fused obstacle averaging its members. With ``fields`` a
    sensor's detections only join fused obstacles inside its field of view.
    A misassociation merges the two closest fused obstacles.
    """
    clusters: List[List[Obstacle]] = []
    for sensor in order:
        detections = list(outputs.get(sensor, ()))
        candidates = list(range(len(clusters)))
        if fields is not None and sensor in fields:
            fov = fields[sensor]
            candidates = [i for i in candidates if fov.contains(tuple(np.mean([m.position for m in clusters[i]], axis=0)))]
        matched = set()
        for r, c in associate([clusters[i] for i in candidates], detections, gate):
            clusters[candidates[r]].append(detections[c])
            matched.add(c)
        clusters.extend([d] for i, d in enumerate(detections) if i not in matched)
    fused = [_merge(c, f"fused{i}") for i, c in enumerate(clusters)]
    if misassociation and rng is not None and rng.random() < misassociation and len(fused) >= 2:
        d = cdist([o.position for o in fused], [o.position for o in fused])
        np.fill_diagonal(d, np.inf)
        i, j = sorted(np.unravel_index(int(np.argmin(d)), d.shape))
        merged = _merge([fused[i], fused[j]], fused[i].id)
        merged = merged.replace(cls=fused[i].cls)
        fused = [merged if k == i else o for k, o in enumerate(fused) if k != j]
    return fused


class Frame:
    """Ground truth and every module output at one tick."""

    def __init__(self, k: int, timestamp: float, truth: List[Obstacle], outputs: Dict[str, List[Obstacle]]):
        self.k = k
        self.timestamp = timestamp
        self.truth = truth
        self.outputs = outputs

    def to_config(self) -> dict:
        return {
            "k": self.k,
            "timestamp": self.timestamp,
            "truth": [o.to_config() for o in self.truth],
            "outputs": {m: [o.to_config() for o in obs] for m, obs in self.outputs.items()},
        }


class Traffic:
    """Constant-velocity obstacles; leavers are replaced by newcomers outside every sensor's reach."""

    def __init__(self, config, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.obstacles: List[Obstacle] = [o.replace() for o in config.obstacles]
        self._serial = 0
        area = config.traffic_area
        for _ in range(config.traffic_count):
            position = (rng.uniform(area.x_min, area.x_max), rng.uniform(area.y_min, area.y_max))
            self.obstacles.append(self._spawn(position, rng.uniform(-math.pi, math.pi)))

    def _spawn(self, position: Point, heading: float) -> Obstacle:
        names = list(self.config.class_weights)
        weights = np.array([self.config.class_weights[n] for n in names], dtype=float)
        cls = names[int(self.rng.choice(len(names), p=weights / weights.sum()))]
        speed = self.config.class_speeds.get(cls, 0.0)
        self._serial += 1
        return Obstacle(f"obstacle{self._serial}", position, (speed * math.cos(heading), speed * math.sin(heading)), cls)

    def step(self, dt: float):
        inner, outer = self.config.spawn_radius
        moved = []
        for o in self.obstacles:
            o = o.advanced(dt)
            if math.hypot(*o.position) > self.config.despawn_radius:
                bearing = self.rng.uniform(-math.pi, math.pi)
                r = self.rng.uniform(inner, outer)
                position = (r * math.cos(bearing), r * math.sin(bearing))
                o = self._spawn(position, bearing + math.pi + self.rng.uniform(-0.3, 0.3))
            moved.append(o)
        self.obstacles = moved


class Scene:
    def __init__(self, config, frames: List[Frame]):
        self.config = config
        self.frames = frames

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, k: int) -> Frame:
        return self.frames[k]


def simulate_ticks(config, ticks: int, seed: int) -> Scene:
    if ticks < 1:
        raise errors.ConfigError(f"Need at least one tick, got {ticks}")
    scene_rng = utils.substream(seed, utils.SCENE_STREAM)
    injection_rng = utils.substream(seed, utils.INJECTION_STREAM)
    traffic = Traffic(config, scene_rng)
    detectors = [Detector(s, config.detectors[s.id], config.region) for s in config.sensors]
    order = [s.id for s in config.sensors]
    fields = {s.id: s.fov for s in config.sensors}
    frames = []
    for k in range(ticks):
        if k:
            traffic.step(config.tick)
        truth = list(traffic.obstacles)
        outputs = {d.spec.id: d.observe(truth, injection_rng) for d in detectors}
        outputs[config.fusion_id] = fuse(outputs, order, config.gate, config.misassociation, injection_rng, fields)
        frames.append(Frame(k, round(k * config.tick, 9), truth, outputs))
    return Scene(config, frames)


def simulate_scene(config, duration: float, tick: Optional[float] = None, seed: int = 0) -> Scene:
    """Ground truth and every output over ``duration`` seconds sampled every ``tick`` seconds."""
    if tick is not None:
        config = config.override(tick=tick)
    if duration <= 0:
        raise errors.ConfigError(f"Duration must be positive, got {duration}")
    return simulate_ticks(config, max(1, int(math.floor(duration / config.tick + 1e-9))), seed)

# vim: set et sw=4 ts=4:
