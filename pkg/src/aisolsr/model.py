"""Shared value types for nodes, links, routes and energy bookkeeping.

Everything here is immutable-by-convention and free of simulator state;
all other modules build on these types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

# Node identifiers are plain non-negative ints, unique within a scenario.
NodeId = int


@dataclass(frozen=True)
class Position:
    """Planar position in meters."""

    x: float
    y: float


@dataclass(frozen=True)
class EnergyState:
    """Remaining battery charge of one node.

    `initial_max` is the scenario-wide maximum initial energy (the
    normalization denominator), not this node's own starting charge.
    """

    remaining: float
    initial_max: float


def euclidean_distance(a: Position, b: Position) -> float:
    """Straight-line distance in meters between two positions."""
    return math.hypot(a.x - b.x, a.y - b.y)


def normalized_energy(e: EnergyState) -> float:
    """Remaining energy as a ratio of the scenario's maximum initial energy.

    Raises ValueError for a non-positive denominator (invalid scenario).
    """
    if e.initial_max <= 0:
        raise ValueError("initial_max must be positive, got %r" % e.initial_max)
    return e.remaining / e.initial_max


@dataclass(frozen=True)
class Route:
    """A loop-free node sequence from source to destination.

    Carries the cached quantities route selection ranks on: hop count,
    summed remaining energy of the intermediate nodes, and geometric
    length in meters.
    """

    nodes: tuple[NodeId, ...]
    hop_count: int
    intermediate_energy_sum: float
    length: float

    def __post_init__(self) -> None:
        if len(self.nodes) < 2:
            raise ValueError("a route needs at least two nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("route contains a loop: %r" % (self.nodes,))
        if self.hop_count != len(self.nodes) - 1:
            raise ValueError("hop_count inconsistent with node sequence")

    @property
    def source(self) -> NodeId:
        return self.nodes[0]

    @property
    def destination(self) -> NodeId:
        return self.nodes[-1]

    @property
    def intermediates(self) -> tuple[NodeId, ...]:
        return self.nodes[1:-1]

    @staticmethod
    def from_nodes(
        nodes: Iterable[NodeId],
        positions: Mapping[NodeId, Position],
        energies: Mapping[NodeId, float],
    ) -> "Route":
        """Build a route, deriving the cached hop/energy/length fields."""
        seq = tuple(nodes)
        length = sum(
            euclidean_distance(positions[u], positions[v])
            for u, v in zip(seq, seq[1:])
        )
        inter = seq[1:-1]
        return Route(
            nodes=seq,
            hop_count=len(seq) - 1,
            intermediate_energy_sum=sum(energies[n] for n in inter),
            length=length,
        )


def route_length(nodes: Iterable[NodeId], positions: Mapping[NodeId, Position]) -> float:
    """Sum of per-hop straight-line distances along a node sequence."""
    seq = tuple(nodes)
    return sum(
        euclidean_distance(positions[u], positions[v]) for u, v in zip(seq, seq[1:])
    )


@dataclass(frozen=True)
class AntigenCriteria:
    """Thresholds the route filter tests candidates against.

    energy_floor: minimum normalized remaining energy an intermediate node
    must hold (candidates with any intermediate strictly below it are
    rejected). detection_capacity: size of the surviving-route array.
    """

    energy_floor: float = 0.5
    detection_capacity: int = 8

    def __post_init__(self) -> None:
        if not 0.0 <= self.energy_floor <= 1.0:
            raise ValueError("energy_floor must be in [0,1]")
        if self.detection_capacity < 1:
            raise ValueError("detection_capacity must be >= 1")


@dataclass
class LinkEntry:
    """One-hop neighbor record refreshed by periodic neighbor sensing."""

    neighbor: NodeId
    distance: float
    neighbor_energy: float
    neighbor_position: Position
    last_heard: float
    symmetric: bool = False


@dataclass
class TopologyEntry:
    """A remote link learned from flooded topology advertisements."""

    from_node: NodeId
    to_node: NodeId
    link_distance: float
    to_energy: float
    to_position: Position | None
    sequence: int
    updated_at: float = 0.0
