"""Immune-inspired route selection layered on the link-state topology.

The pipeline a source runs per destination:

  1. enumerate loop-free candidate routes (bounded count and hop depth),
  2. negative selection: reject any candidate whose intermediate nodes dip
     below the normalized-energy floor, keep the lowest-hop survivors in a
     capacity-bounded detection array,
  3. clonal selection: score survivors by intermediate-energy-per-hop
     affinity; a clearly dominant route wins, otherwise the top-N mutate by
     comparing geometric length and the shortest wins,
  4. the winner is cached in a per-(source, destination) route memory and
     reused until a link on it disappears, a node on it decays below the
     floor, or the entry ages out.

Every stage is a pure function of the topology snapshot, so identical
inputs always select the identical route.
"""

from __future__ import annotations

import math
from bisect import insort
from dataclasses import dataclass
from typing import Iterable, Mapping

from .model import AntigenCriteria, EnergyState, NodeId, Route, normalized_energy
from .olsr import TopologySnapshot, bfs_hops, shortest_paths


@dataclass(frozen=True)
class ClonalgParams:
    top_n: int = 3
    dominance_margin: float = 0.05
    max_candidates: int = 16
    extra_hop_slack: int = 3
    memory_capacity: int = 64
    meta_replacement: int = 1


def route_order(route: Route) -> tuple[int, float, tuple[NodeId, ...]]:
    """Total order used everywhere routes compete: hops, length, node sequence."""
    return (route.hop_count, route.length, route.nodes)


class DetectionSet:
    """Capacity-bounded array of filter survivors, kept sorted ascending.

    A new survivor that orders below the current worst member evicts it
    (the max-hop entry is always the victim).
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.routes: list[Route] = []

    def consider(self, route: Route) -> bool:
        if len(self.routes) < self.capacity:
            insort(self.routes, route, key=route_order)
            return True
        if route_order(route) < route_order(self.routes[-1]):
            self.routes.pop()
            insort(self.routes, route, key=route_order)
            return True
        return False

    def __len__(self) -> int:
        return len(self.routes)

    def __iter__(self):
        return iter(self.routes)


def negative_selection_filter(
    candidates: Iterable[Route],
    criteria: AntigenCriteria,
    energies: Mapping[NodeId, EnergyState],
) -> DetectionSet:
    """Reject candidates with an under-floor intermediate; rank the rest.

    A route survives iff every intermediate node's normalized energy is at
    least the floor (strictly-below fails); survivors compete for the
    capacity slots under route_order. Single-hop routes pass vacuously.
    """
    ds = DetectionSet(criteria.detection_capacity)
    for route in candidates:
        if all(
            normalized_energy(energies[n]) >= criteria.energy_floor
            for n in route.intermediates
        ):
            ds.consider(route)
    return ds


def affinity(route: Route, energies: Mapping[NodeId, EnergyState]) -> float:
    """Summed remaining energy of the intermediate nodes per hop.

    Undefined for direct (single-hop) routes, which have no intermediates;
    those bypass scoring entirely (see clonalg_select).
    """
    if route.hop_count < 2:
        raise ValueError("affinity is undefined for single-hop routes")
    total = sum(energies[n].remaining for n in route.intermediates)
    return total / route.hop_count


def clonalg_select(
    ds: DetectionSet,
    params: ClonalgParams,
    energies: Mapping[NodeId, EnergyState],
) -> Route | None:
    """Pick the survivor to install: dominant affinity, else min-length mutation.

    A direct route wins outright (it depletes no intermediate). Otherwise,
    if the best affinity beats the second best by a relative margin above
    params.dominance_margin it wins; else the top-N by affinity compete on
    geometric length. Margins are relative, so uniformly scaling all node
    energies never changes the outcome.
    """
    if not ds.routes:
        return None
    for route in ds.routes:
        if route.hop_count == 1:
            return route
    scored = sorted(
        ((affinity(r, energies), r) for r in ds.routes),
        key=lambda pair: (-pair[0], pair[1].hop_count, pair[1].length, pair[1].nodes),
    )
    best_aff, best_route = scored[0]
    if len(scored) == 1:
        return best_route
    second_aff = scored[1][0]
    if second_aff > 0.0:
        margin = (best_aff - second_aff) / second_aff
    else:
        margin = math.inf if best_aff > 0.0 else 0.0
    if margin > params.dominance_margin:
        return best_route
    pool = scored[: min(params.top_n, len(scored))]
    return min(pool, key=lambda pair: (pair[1].length, pair[1].nodes))[1]


def enumerate_candidate_routes(
    snapshot: TopologySnapshot,
    src: NodeId,
    dst: NodeId,
    max_routes: int,
    max_hops: int,
) -> list[Route]:
    """The best max_routes loop-free paths src->dst within max_hops.

    Exact: equals the top slice of all simple paths under route_order.
    Paths are generated level by level (all h-hop paths before any
    (h+1)-hop path) with hop-distance pruning, stopping once enough whole
    levels are collected.
    """
    if src == dst:
        raise ValueError("src and dst must differ")
    adj = snapshot.adjacency
    dist_to_dst = bfs_hops(adj, dst)
    if src not in dist_to_dst:
        return []
    sequences: list[tuple[NodeId, ...]] = []
    for budget in range(dist_to_dst[src], max_hops + 1):
        _paths_of_exact_length(adj, dist_to_dst, src, dst, budget, sequences)
        if len(sequences) >= max_routes:
            break
    routes = [snapshot.route_from(seq) for seq in sequences]
    routes.sort(key=route_order)
    return routes[:max_routes]


def _paths_of_exact_length(adj, dist_to_dst, src, dst, budget, out):
    path = [src]
    on_path = {src}

    def extend(u: NodeId, depth: int) -> None:
        if u == dst:
            if depth == budget:
                out.append(tuple(path))
            return
        if depth == budget:
            return
        for v in sorted(adj.get(u, {})):
            if v in on_path:
                continue
            if depth + 1 + dist_to_dst.get(v, math.inf) > budget:
                continue
            path.append(v)
            on_path.add(v)
            extend(v, depth + 1)
            path.pop()
            on_path.remove(v)

    extend(src, 0)


@dataclass
class MemoryEntry:
    route: Route
    stored_at: float
    topology_version: int
    stored_affinity: float


class ImmuneMemory:
    """Per-node cache of the last selected route per (source, destination).

    Exceeding capacity evicts the meta_replacement lowest-affinity entries;
    direct routes store +inf affinity since they deplete no intermediates.
    """

    def __init__(self, capacity: int = 64, meta_replacement: int = 1):
        self.capacity = capacity
        self.meta_replacement = max(1, meta_replacement)
        self.entries: dict[tuple[NodeId, NodeId], MemoryEntry] = {}

    def get(self, src: NodeId, dst: NodeId) -> MemoryEntry | None:
        return self.entries.get((src, dst))

    def invalidate(self, src: NodeId, dst: NodeId) -> None:
        self.entries.pop((src, dst), None)

    def store(self, src: NodeId, dst: NodeId, entry: MemoryEntry) -> None:
        self.entries[(src, dst)] = entry
        while len(self.entries) > self.capacity:
            victims = sorted(
                self.entries.items(), key=lambda kv: (kv[1].stored_affinity, kv[0])
            )[: self.meta_replacement]
            for key, _ in victims:
                del self.entries[key]


def entry_valid(
    entry: MemoryEntry,
    snapshot: TopologySnapshot,
    criteria: AntigenCriteria,
    now: float,
    max_age: float,
) -> bool:
    """A cached route survives while its links exist, every on-route node
    stays at or above the energy floor, and the entry is young enough."""
    if now - entry.stored_at > max_age:
        return False
    nodes = entry.route.nodes
    for u, v in zip(nodes, nodes[1:]):
        if v not in snapshot.adjacency.get(u, {}):
            return False
    for n in nodes:
        state = EnergyState(snapshot.energy_of(n), snapshot.initial_max)
        if normalized_energy(state) < criteria.energy_floor:
            return False
    return True


def ais_route(
    snapshot: TopologySnapshot,
    src: NodeId,
    dst: NodeId,
    memory: ImmuneMemory,
    params: ClonalgParams,
    criteria: AntigenCriteria,
    now: float,
    max_entry_age: float,
) -> Route | None:
    """Return the route to stamp on outgoing packets, or None if unreachable.

    Memory hit short-circuits the pipeline. A pipeline that filters every
    candidate away falls back to the plain shortest-hop route (uncached).
    """
    entry = memory.get(src, dst)
    if entry is not None:
        if entry_valid(entry, snapshot, criteria, now, max_entry_age):
            return entry.route
        memory.invalidate(src, dst)
    dist_to_dst = bfs_hops(snapshot.adjacency, dst)
    if src not in dist_to_dst:
        return None
    max_hops = dist_to_dst[src] + params.extra_hop_slack
    candidates = enumerate_candidate_routes(snapshot, src, dst, params.max_candidates, max_hops)
    energies = snapshot.energy_states()
    ds = negative_selection_filter(candidates, criteria, energies)
    winner = clonalg_select(ds, params, energies)
    if winner is not None:
        stored_affinity = (
            math.inf if winner.hop_count == 1 else affinity(winner, energies)
        )
        memory.store(
            src,
            dst,
            MemoryEntry(winner, now, snapshot.version, stored_affinity),
        )
        return winner
    path = shortest_paths(snapshot, src).get(dst)
    if path is None:
        return None
    return snapshot.route_from(path)
