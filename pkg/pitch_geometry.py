"""Ball-state geometry: pitch zones, shooting angle and distance to goal.

Coordinates follow the event data frame: a 120 x 80 pitch, every state
oriented so the acting team attacks toward x = 120. The goal centre sits at
(120, 40) and the posts at y = 40 -/+ goal_width / 2.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

try:
    from .errors import GeometryError
except ImportError:
    from errors import GeometryError


# Shots taken exactly on the goal line are evaluated this far in front of it.
GOAL_LINE_EPSILON = 1e-9


class Zone(str, Enum):
    """Pitch band in the direction of attack."""

    DEFENDING = "Defending"
    MIDFIELD = "Midfield"
    ATTACKING = "Attacking"


@dataclass(frozen=True)
class BallState:
    """Ball position (x along the attack, y across the pitch)."""

    x: float
    y: float

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class PitchSpec:
    """Pitch dimensions, goal width and zone boundaries.

    `legacy_distance_formula` switches goal_distance to the literal
    sqrt(x^2 + (40 - y)^2) expression, kept for sensitivity runs only.
    """

    length: float = 120.0
    width: float = 80.0
    goal_width: float = 8.0
    zone_bounds: Tuple[float, float] = (40.0, 80.0)
    legacy_distance_formula: bool = False

    def __post_init__(self):
        if not 0 < self.goal_width < self.width:
            raise GeometryError(
                f"goal width must lie in (0, {self.width}), got {self.goal_width}",
                {"goal_width": self.goal_width},
            )
        low, high = self.zone_bounds
        if not 0 < low < high < self.length:
            raise GeometryError(
                f"zone bounds must be increasing inside the pitch, got {self.zone_bounds}",
                {"zone_bounds": list(self.zone_bounds)},
            )

    @property
    def goal_center_y(self) -> float:
        return self.width / 2

    def contains(self, state: BallState) -> bool:
        return 0 <= state.x <= self.length and 0 <= state.y <= self.width


DEFAULT_PITCH = PitchSpec()


def _check_bounds(state: BallState, spec: PitchSpec):
    if not spec.contains(state):
        raise GeometryError(
            f"ball state ({state.x}, {state.y}) lies outside the "
            f"{spec.length:g}x{spec.width:g} pitch",
            {"x": state.x, "y": state.y},
        )


def zone_of(state: BallState, spec: PitchSpec = DEFAULT_PITCH) -> Zone:
    """Zone of a ball state; boundaries belong to the zone further up the pitch."""
    _check_bounds(state, spec)
    low, high = spec.zone_bounds
    if state.x < low:
        return Zone.DEFENDING
    if state.x < high:
        return Zone.MIDFIELD
    return Zone.ATTACKING


def shooting_angle(state: BallState, spec: PitchSpec = DEFAULT_PITCH) -> float:
    """Angle in radians subtended by the two goalposts as seen from `state`.

    Three cases depending on which side of the goal centre the ball is on.
    A state on the goal line is moved GOAL_LINE_EPSILON in front of it.
    """
    _check_bounds(state, spec)
    depth = spec.length - state.x
    if depth <= 0:
        depth = GOAL_LINE_EPSILON

    half_goal = spec.goal_width / 2
    center = spec.goal_center_y
    y = state.y

    if y > center:
        return math.atan((y - center + half_goal) / depth) - math.atan((y - center - half_goal) / depth)
    if y < center:
        return math.atan((center + half_goal - y) / depth) - math.atan((center - half_goal - y) / depth)
    return 2 * math.atan(half_goal / depth)


def goal_distance(state: BallState, spec: PitchSpec = DEFAULT_PITCH) -> float:
    """Euclidean distance from `state` to the centre of the goal."""
    _check_bounds(state, spec)
    if spec.legacy_distance_formula:
        return math.hypot(state.x, spec.goal_center_y - state.y)
    return math.hypot(spec.length - state.x, spec.goal_center_y - state.y)
