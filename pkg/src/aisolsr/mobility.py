"""Random-waypoint motion: straight-line legs to uniform waypoints with pauses.

Each node owns a seeded random stream, so position traces are reproducible
independent of event interleaving. A speed range of exactly 0 pins nodes in
place (static micro-scenarios).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .model import Position, euclidean_distance

MOVING = "moving"
PAUSED = "paused"


@dataclass(frozen=True)
class MobilityState:
    current: Position
    waypoint: Position
    speed: float
    phase: str
    pause_remaining: float


class RandomWaypoint:
    """Waypoint/speed draws and kinematics for one scenario's area."""

    def __init__(
        self,
        width: float,
        height: float,
        speed_min: float,
        speed_max: float,
        pause_time: float,
    ):
        self.width = width
        self.height = height
        self.speed_min = speed_min
        self.speed_max = speed_max
        self.pause_time = pause_time

    @property
    def static(self) -> bool:
        return self.speed_max <= 0.0

    def draw_position(self, rng: random.Random) -> Position:
        return Position(rng.uniform(0.0, self.width), rng.uniform(0.0, self.height))

    def initial_state(self, rng: random.Random, start: Position | None = None) -> MobilityState:
        current = start if start is not None else self.draw_position(rng)
        if self.static:
            return MobilityState(current, current, 0.0, PAUSED, 0.0)
        waypoint = self.draw_position(rng)
        speed = rng.uniform(self.speed_min, self.speed_max)
        return MobilityState(current, waypoint, speed, MOVING, 0.0)

    def advance(self, m: MobilityState, dt: float, rng: random.Random) -> MobilityState:
        """Move one node forward by dt seconds.

        Moving legs clamp at the waypoint (arrival starts the pause); an
        expired pause draws a fresh waypoint and speed from rng. Draw order
        is fixed (x, y, speed) so traces replay bit-identically.
        """
        if dt <= 0:
            raise ValueError("dt must be positive")
        if self.static:
            return m
        if m.phase == PAUSED:
            if m.pause_remaining > dt:
                return replace(m, pause_remaining=m.pause_remaining - dt)
            waypoint = self.draw_position(rng)
            speed = rng.uniform(self.speed_min, self.speed_max)
            return MobilityState(m.current, waypoint, speed, MOVING, 0.0)
        remaining = euclidean_distance(m.current, m.waypoint)
        step = m.speed * dt
        if step >= remaining:
            return MobilityState(m.waypoint, m.waypoint, m.speed, PAUSED, self.pause_time)
        frac = step / remaining
        nxt = Position(
            m.current.x + (m.waypoint.x - m.current.x) * frac,
            m.current.y + (m.waypoint.y - m.current.y) * frac,
        )
        return replace(m, current=nxt)
