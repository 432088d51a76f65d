"""
Runtime consistency checks between obstacle lists.

Two outputs are compared inside a common region: the intersection of their
fields of view with the region of interest. Obstacles are paired by a
minimum-distance assignment, then

* misdetection fails when the two lists differ in size,
* misposition fails when a pair is at least ``theta`` meters apart,
* misclassification fails when a pair disagrees on the class.

Ground-truth labels come from the same checks run against the true
obstacles.
"""
from __future__ import annotations
import logging
from typing import Dict, List, Mapping, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from percmon import errors, types
from percmon.builtin import OUTPUT_FAILURES, module_mode_id, output_mode_id, pair_test_id
from percmon.graph import qualify
from percmon.scene import Frame, Obstacle, Region, restrict_to_region
from percmon.types import ACTIVE, FAIL, INACTIVE, PASS

log = logging.getLogger(__name__)

MISDETECTION, MISPOSITION, MISCLASSIFICATION = OUTPUT_FAILURES


class Match(NamedTuple):
    left: Obstacle
    right: Obstacle
    distance: float


def match_obstacles(a: Sequence[Obstacle], b: Sequence[Obstacle]) -> List[Match]:
    """Optimal rectangular assignment minimizing the summed Euclidean distance."""
    if not a or not b:
        return []
    cost = cdist(np.array([o.position for o in a]), np.array([o.position for o in b]))
    rows, cols = linear_sum_assignment(cost)
    return [Match(a[r], b[c], float(cost[r, c])) for r, c in zip(rows, cols)]


def test_misdetection(a: Sequence[Obstacle], b: Sequence[Obstacle]) -> int:
    return FAIL if len(a) != len(b) else PASS


def test_misposition(matches: Sequence[Match], theta: float) -> int:
    if theta <= 0:
        raise errors.ConfigError(f"Position threshold must be positive, got {theta}")
    return FAIL if any(m.distance >= theta for m in matches) else PASS


def test_misclassification(matches: Sequence[Match]) -> int:
    return FAIL if any(m.left.cls != m.right.cls for m in matches) else PASS


def temporal_adjust(obstacles: Sequence[Obstacle], dt: float, class_speeds: Mapping[str, float], theta: float) -> Tuple[List[Obstacle], float]:
    """
    Move obstacles ``dt`` seconds ahead. Obstacles without a velocity stay
    put and widen the threshold by the distance their class covers on average.
    """
    if dt < 0:
        raise errors.ConfigError(f"Time step must not be negative, got {dt}")
    adjusted, slack = [], 0.0
    for o in obstacles:
        if o.velocity is None:
            slack = max(slack, class_speeds.get(o.cls, 0.0) * dt)
            adjusted.append(o)
        else:
            adjusted.append(o.advanced(dt))
    return adjusted, theta + slack


def check_lists(a: Sequence[Obstacle], b: Sequence[Obstacle], theta: float) -> Dict[str, int]:
    """Outcome of the three checks on two already restricted lists, keyed by failure kind."""
    matches = match_obstacles(a, b)
    return {
        MISDETECTION: test_misdetection(a, b),
        MISPOSITION: test_misposition(matches, theta),
        MISCLASSIFICATION: test_misclassification(matches),
    }


def compare(a: Sequence[Obstacle], b: Sequence[Obstacle], region: Region, theta: float) -> Dict[str, int]:
    return check_lists(restrict_to_region(a, region), restrict_to_region(b, region), theta)


def label_ground_truth(output: Sequence[Obstacle], truth: Sequence[Obstacle], region: Region, theta: float) -> Dict[str, int]:
    """Failure-kind labels of an output: the checks run against the true obstacles."""
    outcome = compare(output, truth, region, theta)
    return {kind: ACTIVE if v == FAIL else INACTIVE for kind, v in outcome.items()}


def frame_labels(frame: Frame, config) -> Dict[str, int]:
    """Output failure-mode labels of every module; a module mode is active iff one of its output modes is."""
    labels = {}
    for module in config.modules:
        region = config.region_of(module)
        per_kind = label_ground_truth(frame.outputs[module], frame.truth, region, config.theta)
        for kind, bit in per_kind.items():
            labels[output_mode_id(module, kind)] = bit
        labels[module_mode_id(module)] = ACTIVE if any(per_kind.values()) else INACTIVE
    return labels


def frame_syndrome(frame: Frame, config) -> Dict[str, int]:
    """Outcome of every pairwise test at one tick, keyed by test id."""
    syndrome = {}
    for a, b in config.pairs:
        outcome = compare(frame.outputs[a], frame.outputs[b], config.region_of(a, b), config.theta)
        for kind in OUTPUT_FAILURES:
            syndrome[pair_test_id(a, b, kind)] = outcome[kind]
    return syndrome


def temporal_syndrome(earlier: Frame, later: Frame, config, first: int = 0) -> Dict[str, int]:
    """
    Output a at one tick against output b at the next, per pair and failure
    kind. Both sides keep the obstacles that are inside the common region at
    both ticks, judged by moving a ahead and b back by their velocities.
    """
    dt = later.timestamp - earlier.timestamp
    syndrome = {}
    for a, b in config.pairs:
        region = config.region_of(a, b)
        moved, theta = temporal_adjust(restrict_to_region(earlier.outputs[a], region), dt, config.class_speeds, config.theta)
        moved = restrict_to_region(moved, region)
        arrived = [o for o in restrict_to_region(later.outputs[b], region) if region.contains(o.advanced(-dt).position)]
        outcome = check_lists(moved, arrived, theta)
        for kind in OUTPUT_FAILURES:
            syndrome[f"{pair_test_id(a, b, kind)}.temporal{first}"] = outcome[kind]
    return syndrome


def qualified(values: Dict[str, int], k: int) -> Dict[str, int]:
    return {qualify(key, k): v for key, v in values.items()}


def vectorize(values: Mapping[str, int], ids: Sequence[str], what: str) -> Tuple[int, ...]:
    try:
        return types.as_bits(values[i] for i in ids)
    except KeyError as exc:
        raise errors.MisalignedInputError(f"The harness produces no {what} '{exc.args[0]}'") from None

# vim: set et sw=4 ts=4:
