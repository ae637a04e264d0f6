"""Proactive link-state engine: HELLO neighbor sensing, multipoint-relay
selection, TC flooding through relays, topology tables and hop-count
shortest-path routing.

Control messages carry the energy / distance / position extension fields,
so every node accumulates a network-wide view of link geometry and
per-node remaining energy alongside plain connectivity.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .codec import (
    LINK_HEARD,
    LINK_MPR,
    LINK_SYM,
    HelloMessage,
    HelloNeighbor,
    TcAdvertisedLink,
    TcMessage,
)
from .model import (
    EnergyState,
    LinkEntry,
    NodeId,
    Position,
    Route,
    TopologyEntry,
    euclidean_distance,
)

_SEQ_MOD = 1 << 16


@dataclass
class NeighborTables:
    """One-hop links plus what each neighbor advertises about its own links."""

    one_hop: dict[NodeId, LinkEntry] = field(default_factory=dict)
    advertised: dict[NodeId, frozenset[NodeId]] = field(default_factory=dict)
    mpr_set: set[NodeId] = field(default_factory=set)
    mpr_selectors: set[NodeId] = field(default_factory=set)

    def symmetric_ids(self) -> list[NodeId]:
        return sorted(n for n, e in self.one_hop.items() if e.symmetric)

    def two_hop(self) -> dict[NodeId, set[NodeId]]:
        """Strict two-hop neighbors mapped to the one-hop neighbors reaching them."""
        reach: dict[NodeId, set[NodeId]] = {}
        for nbr in self.symmetric_ids():
            for target in self.advertised.get(nbr, frozenset()):
                if target in self.one_hop:
                    continue
                reach.setdefault(target, set()).add(nbr)
        return reach


@dataclass(frozen=True)
class RoutingTableEntry:
    destination: NodeId
    next_hop: NodeId
    hop_count: int


def select_mpr(tables: NeighborTables) -> set[NodeId]:
    """Greedy relay selection covering every strict two-hop neighbor.

    Sole reachers are taken first, then the neighbor covering the most
    uncovered targets; ties go to higher advertised energy, then lower id.
    """
    coverage = tables.two_hop()
    mprs: set[NodeId] = set()
    uncovered = set(coverage)
    for target in sorted(coverage):
        reachers = coverage[target]
        if len(reachers) == 1:
            mprs |= reachers
    for m in mprs:
        uncovered -= {t for t, r in coverage.items() if m in r}
    per_neighbor: dict[NodeId, set[NodeId]] = {}
    for target, reachers in coverage.items():
        for nbr in reachers:
            per_neighbor.setdefault(nbr, set()).add(target)
    while uncovered:
        best = max(
            (nbr for nbr in sorted(per_neighbor) if nbr not in mprs),
            key=lambda nbr: (
                len(per_neighbor[nbr] & uncovered),
                tables.one_hop[nbr].neighbor_energy,
                -nbr,
            ),
        )
        if not per_neighbor[best] & uncovered:
            break  # leftovers unreachable through symmetric links
        mprs.add(best)
        uncovered -= per_neighbor[best]
    return mprs


@dataclass
class TopologySnapshot:
    """A node's current picture of the network, frozen for one routing pass.

    adjacency is undirected (both directions present) with link lengths in
    meters; energy/position carry the best-known per-node values. Nodes the
    snapshot has never heard energy for fall back to default_energy.
    """

    adjacency: dict[NodeId, dict[NodeId, float]]
    energy: dict[NodeId, float]
    position: dict[NodeId, Position]
    initial_max: float
    version: int = 0
    default_energy: float | None = None

    @staticmethod
    def from_links(
        links: Iterable[tuple[NodeId, NodeId]],
        positions: Mapping[NodeId, Position],
        energies: Mapping[NodeId, float],
        initial_max: float,
        version: int = 0,
    ) -> "TopologySnapshot":
        adj: dict[NodeId, dict[NodeId, float]] = {}
        for u, v in links:
            d = euclidean_distance(positions[u], positions[v])
            adj.setdefault(u, {})[v] = d
            adj.setdefault(v, {})[u] = d
        return TopologySnapshot(
            adjacency=adj,
            energy=dict(energies),
            position=dict(positions),
            initial_max=initial_max,
            version=version,
        )

    def energy_of(self, node: NodeId) -> float:
        e = self.energy.get(node)
        if e is None:
            if self.default_energy is None:
                raise KeyError(f"no energy known for node {node}")
            return self.default_energy
        return e

    def energy_states(self) -> dict[NodeId, EnergyState]:
        return {
            n: EnergyState(self.energy_of(n), self.initial_max)
            for n in sorted(self.adjacency)
        }

    def route_from(self, nodes: Iterable[NodeId]) -> Route:
        """Build a Route whose cached length uses this snapshot's link lengths."""
        seq = tuple(nodes)
        length = sum(self.adjacency[u][v] for u, v in zip(seq, seq[1:]))
        return Route(
            nodes=seq,
            hop_count=len(seq) - 1,
            intermediate_energy_sum=sum(self.energy_of(n) for n in seq[1:-1]),
            length=length,
        )


def bfs_hops(adjacency: Mapping[NodeId, Mapping[NodeId, float]], start: NodeId) -> dict[NodeId, int]:
    """Hop distances from start over the adjacency (unweighted)."""
    dist = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in sorted(adjacency.get(u, {})):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def shortest_paths(snapshot: TopologySnapshot, src: NodeId) -> dict[NodeId, tuple[NodeId, ...]]:
    """Minimum-hop paths from src to every reachable node.

    Ties by total route length in meters, then lexicographic node sequence,
    so the result is unique and deterministic.
    """
    done: dict[NodeId, tuple[NodeId, ...]] = {}
    heap: list[tuple[int, float, tuple[NodeId, ...]]] = [(0, 0.0, (src,))]
    while heap:
        hops, length, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        done[node] = path
        for nbr in sorted(snapshot.adjacency.get(node, {})):
            if nbr not in done:
                d = snapshot.adjacency[node][nbr]
                heapq.heappush(heap, (hops + 1, length + d, path + (nbr,)))
    return done


def routing_table(snapshot: TopologySnapshot, src: NodeId) -> dict[NodeId, RoutingTableEntry]:
    paths = shortest_paths(snapshot, src)
    return {
        dst: RoutingTableEntry(dst, path[1], len(path) - 1)
        for dst, path in paths.items()
        if dst != src
    }


class NodeState:
    """Per-node protocol state: tables, sequence counters, topology knowledge."""

    def __init__(
        self,
        node_id: NodeId,
        position: Position,
        energy_remaining: float,
        initial_max: float,
        neighbor_hold: float = 6.0,
        topology_hold: float = 15.0,
        default_energy: float | None = None,
    ):
        self.id = node_id
        self.position = position
        self.energy_remaining = energy_remaining
        self.initial_max = initial_max
        self.neighbor_hold = neighbor_hold
        self.topology_hold = topology_hold
        self.default_energy = default_energy
        self.tables = NeighborTables()
        # per-originator advertised links, entry rows, and freshness bookkeeping
        self.topology: dict[NodeId, dict[NodeId, TopologyEntry]] = {}
        self.topo_updated: dict[NodeId, float] = {}
        self.last_ansn: dict[NodeId, int] = {}
        self.node_info: dict[NodeId, tuple[float, Position, float]] = {}
        self.forwarded: set[tuple[NodeId, int]] = set()
        self.ansn = 0
        self.message_seq = 0
        self.packet_seq = 0
        self.version = 0
        self.malformed = 0

    # -- sequence helpers ---------------------------------------------------

    def _next_seqs(self) -> tuple[int, int]:
        pkt, msg = self.packet_seq, self.message_seq
        self.packet_seq = (self.packet_seq + 1) % _SEQ_MOD
        self.message_seq = (self.message_seq + 1) % _SEQ_MOD
        return pkt, msg

    # -- HELLO --------------------------------------------------------------

    def emit_hello(self, now: float) -> HelloMessage:
        blocks = []
        for nbr in sorted(self.tables.one_hop):
            entry = self.tables.one_hop[nbr]
            if nbr in self.tables.mpr_set:
                code = LINK_MPR
            elif entry.symmetric:
                code = LINK_SYM
            else:
                code = LINK_HEARD
            blocks.append(HelloNeighbor(code, nbr))
        pkt, msg = self._next_seqs()
        return HelloMessage(
            originator=self.id,
            energy=self.energy_remaining,
            position=self.position,
            neighbors=tuple(blocks),
            distance=0.0,
            packet_sequence=pkt,
            message_sequence=msg,
        )

    def process_hello(self, msg: HelloMessage, now: float) -> None:
        sender = msg.originator
        dist = euclidean_distance(self.position, msg.position)
        entry = self.tables.one_hop.get(sender)
        structural = entry is None
        if entry is None:
            entry = LinkEntry(sender, dist, msg.energy, msg.position, now)
            self.tables.one_hop[sender] = entry
        else:
            entry.distance = dist
            entry.neighbor_energy = msg.energy
            entry.neighbor_position = msg.position
            entry.last_heard = now
        advertised_ids = {nb.neighbor_id for nb in msg.neighbors}
        symmetric = self.id in advertised_ids
        if entry.symmetric != symmetric:
            entry.symmetric = symmetric
            structural = True
        selected_us = any(
            nb.neighbor_id == self.id and nb.link_code == LINK_MPR
            for nb in msg.neighbors
        )
        if selected_us:
            self.tables.mpr_selectors.add(sender)
        else:
            self.tables.mpr_selectors.discard(sender)
        adv = frozenset(
            nb.neighbor_id
            for nb in msg.neighbors
            if nb.link_code in (LINK_SYM, LINK_MPR) and nb.neighbor_id != self.id
        )
        if self.tables.advertised.get(sender) != adv:
            self.tables.advertised[sender] = adv
            structural = True
        self.node_info[sender] = (msg.energy, msg.position, now)
        self.version += 1
        if structural:
            self.recompute_mprs()

    def recompute_mprs(self) -> None:
        self.tables.mpr_set = select_mpr(self.tables)

    # -- TC -----------------------------------------------------------------

    def emit_tc(self, now: float) -> TcMessage | None:
        selectors = [s for s in sorted(self.tables.mpr_selectors) if s in self.tables.one_hop]
        if not selectors:
            return None
        advertised = tuple(
            TcAdvertisedLink(s, self.tables.one_hop[s].distance) for s in selectors
        )
        self.ansn = (self.ansn + 1) % _SEQ_MOD
        pkt, msg = self._next_seqs()
        return TcMessage(
            originator=self.id,
            ansn=self.ansn,
            energy=self.energy_remaining,
            position=self.position,
            advertised=advertised,
            packet_sequence=pkt,
            message_sequence=msg,
        )

    def process_tc(self, msg: TcMessage, from_node: NodeId, now: float) -> TcMessage | None:
        """Absorb a TC if fresh; return the copy to re-flood, if any."""
        if msg.originator == self.id:
            return None
        if msg.ansn > self.last_ansn.get(msg.originator, -1):
            self.last_ansn[msg.originator] = msg.ansn
            self.topology[msg.originator] = {
                adv.neighbor_id: TopologyEntry(
                    from_node=msg.originator,
                    to_node=adv.neighbor_id,
                    link_distance=adv.link_distance,
                    to_energy=self.node_info.get(adv.neighbor_id, (0.0, None, 0.0))[0],
                    to_position=self.node_info.get(adv.neighbor_id, (0.0, None, 0.0))[1],
                    sequence=msg.ansn,
                    updated_at=now,
                )
                for adv in msg.advertised
            }
            self.topo_updated[msg.originator] = now
            self.node_info[msg.originator] = (msg.energy, msg.position, now)
            self.version += 1
        key = (msg.originator, msg.message_sequence)
        if (
            from_node in self.tables.mpr_selectors
            and key not in self.forwarded
            and msg.ttl > 1
        ):
            self.forwarded.add(key)
            return replace(msg, ttl=msg.ttl - 1, hop_count=msg.hop_count + 1)
        return None

    # -- expiry and views -----------------------------------------------------

    def purge(self, now: float) -> None:
        """Drop expired links and stale topology rows."""
        gone = [
            nbr
            for nbr, e in self.tables.one_hop.items()
            if now - e.last_heard > self.neighbor_hold
        ]
        for nbr in gone:
            del self.tables.one_hop[nbr]
            self.tables.advertised.pop(nbr, None)
            self.tables.mpr_selectors.discard(nbr)
            self.tables.mpr_set.discard(nbr)
        stale = [
            origin
            for origin, at in self.topo_updated.items()
            if now - at > self.topology_hold
        ]
        for origin in stale:
            del self.topo_updated[origin]
            self.topology.pop(origin, None)
        if gone or stale:
            self.version += 1
        if gone:
            self.recompute_mprs()

    def snapshot(self, now: float) -> TopologySnapshot:
        """Routing view over current (unexpired) links and topology rows."""
        self.purge(now)
        # node_info is refreshed by every HELLO and TC, so it is the freshest
        # per-node source; one-hop entries only decide link symmetry.
        positions: dict[NodeId, Position] = {self.id: self.position}
        energies: dict[NodeId, float] = {self.id: self.energy_remaining}
        for node, (energy, pos, _) in self.node_info.items():
            if node != self.id:
                positions[node] = pos
                energies[node] = energy
        adj: dict[NodeId, dict[NodeId, float]] = {}

        def add_edge(u: NodeId, v: NodeId, fallback: float) -> None:
            pu, pv = positions.get(u), positions.get(v)
            d = euclidean_distance(pu, pv) if pu is not None and pv is not None else fallback
            adj.setdefault(u, {})[v] = d
            adj.setdefault(v, {})[u] = d

        for nbr, entry in self.tables.one_hop.items():
            if entry.symmetric:
                add_edge(self.id, nbr, entry.distance)
        for origin, links in self.topology.items():
            for to_node, row in links.items():
                add_edge(origin, to_node, row.link_distance)
        return TopologySnapshot(
            adjacency=adj,
            energy=energies,
            position=positions,
            initial_max=self.initial_max,
            version=self.version,
            default_energy=self.default_energy,
        )
