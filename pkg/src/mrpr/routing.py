"""
Minimum reconfiguration probability routing (MRPR) and wavelength assignment.

Edges of the auxiliary graph carry ``-ln`` of their survival probability, so
the least-cost route is the one least likely to be reconfigured. Edges with
no usable channel get ``inf`` and are never traversed.

Ties on cost are broken by fewer hops, then the lexicographically smallest
node sequence, then the smallest wavelength index.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from mrpr.errors import ContractViolation
from mrpr.estimator import ResourceStats
from mrpr.reliability import (
    EdgeReliability,
    RepackingTable,
    edge_cost,
    failure_probability,
    path_reconfig_probability,
)
from mrpr.topology import LinkKey, Topology

POLICIES = ("random", "first-fit")


@dataclass(frozen=True)
class LightpathRequest:
    id: int
    source: str
    destination: str
    arrival_time: float
    holding_time: float

    def __post_init__(self):
        if self.source == self.destination:
            raise ValueError(f"request {self.id}: source equals destination")
        if not self.holding_time > 0:
            raise ValueError(f"request {self.id}: holding time must be positive")


@dataclass(frozen=True)
class LightpathAssignment:
    request_id: int
    route: tuple[str, ...]
    wavelengths: tuple[int, ...]
    cost: float
    reconfig_prob: float

    @property
    def links(self) -> list[LinkKey]:
        return list(zip(self.route, self.route[1:]))


@dataclass
class AuxiliaryGraph:
    nodes: list[str]
    weights: dict[LinkKey, float]
    reliability: dict[LinkKey, EdgeReliability]

    def __post_init__(self):
        self.adjacency: dict[str, list[tuple[str, float]]] = {n: [] for n in self.nodes}
        for (u, v), w in self.weights.items():
            self.adjacency[u].append((v, w))


class Path(NamedTuple):
    nodes: tuple[str, ...]
    cost: float

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1


def link_reliabilities(
    topology: Topology,
    stats: Mapping[object, ResourceStats],
    table: RepackingTable | None = None,
) -> dict[LinkKey, EdgeReliability]:
    """Failure and repacking probabilities of every link, ignoring usability."""
    table = table or RepackingTable()
    rels = {}
    for link in topology:
        try:
            ls = stats[link.key]
            rs = stats[link.dst]
        except KeyError as exc:
            raise ValueError(f"no statistics for resource {exc.args[0]!r}") from None
        f_link = failure_probability(ls.m_h, ls.m_f)
        f_router = failure_probability(rs.m_h, rs.m_f)
        occupied = link.occupied
        if occupied < link.capacity:
            repack = table.probability(link.capacity, occupied, ls.lam, ls.mu)
        else:
            repack = 0.0
        rels[link.key] = EdgeReliability(f_link, repack, f_router)
    return rels


def build_auxiliary_graph(
    topology: Topology,
    stats: Mapping[object, ResourceStats],
    table: RepackingTable | None = None,
    wavelength: int | None = None,
    reliabilities: Mapping[LinkKey, EdgeReliability] | None = None,
) -> AuxiliaryGraph:
    """Weighted digraph of edge costs for the current network state.

    Without ``wavelength`` a link is usable when it has any free channel
    (converter networks); with it, only when that wavelength is free.
    """
    if reliabilities is None:
        reliabilities = link_reliabilities(topology, stats, table)
    weights = {}
    rels = {}
    for link in topology:
        if not topology.link_is_up(link):
            usable = False
        elif wavelength is None:
            usable = link.free_channels() > 0
        else:
            usable = wavelength < link.wavelengths and link.wavelength_available(wavelength)
        base = reliabilities[link.key]
        rel = EdgeReliability(base.link_failure, base.repacking, base.router_failure, usable)
        rels[link.key] = rel
        weights[link.key] = edge_cost(rel)
    return AuxiliaryGraph(list(topology.nodes), weights, rels)


def shortest_path(graph: AuxiliaryGraph, source: str, dest: str) -> Path | None:
    """Least-cost path from ``source`` to ``dest`` over finite-weight edges.

    Labels are ordered by ``(cost, hops, node sequence)``, which is monotone
    under path extension, so plain label-setting yields the tie-broken optimum.
    """
    if source not in graph.adjacency or dest not in graph.adjacency:
        raise KeyError(f"unknown node in ({source!r}, {dest!r})")
    heap = [(0.0, 0, (source,))]
    settled: set[str] = set()
    while heap:
        cost, hops, nodes = heapq.heappop(heap)
        node = nodes[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == dest:
            return Path(nodes, cost)
        for nxt, w in graph.adjacency[node]:
            if nxt in settled or math.isinf(w):
                continue
            heapq.heappush(heap, (cost + w, hops + 1, nodes + (nxt,)))
    return None


def _pick(choices: list[int], policy: str, rng: np.random.Generator | None) -> int:
    if policy == "first-fit":
        return choices[0]
    if policy == "random":
        if rng is None:
            raise ValueError("random wavelength policy needs an rng")
        return choices[int(rng.integers(len(choices)))]
    raise ValueError(f"unknown wavelength policy {policy!r}")


def assign_wavelength(
    topology: Topology,
    route: Sequence[str],
    policy: str = "random",
    rng: np.random.Generator | None = None,
) -> tuple[int, ...] | None:
    """Wavelength per route link, or ``None`` when blocked.

    With converters each link picks independently among its free wavelengths;
    without, one wavelength free on every link is chosen.
    """
    links = topology.route_links(route)
    if not links or any(not topology.link_is_up(l) for l in links):
        return None
    if topology.converters:
        chosen = []
        for link in links:
            free = link.free_wavelengths()
            if not free:
                return None
            chosen.append(_pick(free, policy, rng))
        return tuple(chosen)
    width = min(l.wavelengths for l in links)
    common = [w for w in range(width) if all(l.occupancy[w] < l.fibers for l in links)]
    if not common:
        return None
    w = _pick(common, policy, rng)
    return (w,) * len(links)


def commit_assignment(topology: Topology, assignment: LightpathAssignment) -> None:
    for (u, v), w in zip(assignment.links, assignment.wavelengths):
        topology.link(u, v).occupy(w)


def release_assignment(topology: Topology, assignment: LightpathAssignment) -> None:
    for (u, v), w in zip(assignment.links, assignment.wavelengths):
        topology.link(u, v).release(w)


def layered_shortest_path(
    topology: Topology,
    stats: Mapping[object, ResourceStats],
    source: str,
    dest: str,
    table: RepackingTable | None = None,
) -> tuple[Path, int, AuxiliaryGraph] | None:
    """Best ``(path, wavelength)`` over one auxiliary graph per wavelength."""
    rels = link_reliabilities(topology, stats, table)
    width = max((l.wavelengths for l in topology), default=0)
    best = None
    for w in range(width):
        graph = build_auxiliary_graph(topology, stats, wavelength=w, reliabilities=rels)
        path = shortest_path(graph, source, dest)
        if path is None:
            continue
        key = (path.cost, path.hops, path.nodes, w)
        if best is None or key < best[0]:
            best = (key, path, w, graph)
    if best is None:
        return None
    return best[1], best[2], best[3]


def mrpr_route(
    request: LightpathRequest,
    topology: Topology,
    stats: Mapping[object, ResourceStats],
    policy: str = "random",
    rng: np.random.Generator | None = None,
    table: RepackingTable | None = None,
    commit: bool = True,
) -> LightpathAssignment | None:
    """Route and assign wavelengths to ``request``; ``None`` means blocked.

    Converter networks search one auxiliary graph. Without converters the
    search is layered by wavelength and the policy then chooses among the
    wavelengths free on every link of the winning path (first-fit therefore
    returns the winning layer itself).
    """
    if topology.converters:
        graph = build_auxiliary_graph(topology, stats, table)
        path = shortest_path(graph, request.source, request.destination)
    else:
        found = layered_shortest_path(
            topology, stats, request.source, request.destination, table
        )
        path, graph = (None, None) if found is None else (found[0], found[2])
    if path is None:
        return None
    wavelengths = assign_wavelength(topology, path.nodes, policy, rng)
    if wavelengths is None:
        raise ContractViolation(f"finite-cost path {path.nodes} has no assignable wavelength")
    rels = [graph.reliability[k] for k in zip(path.nodes, path.nodes[1:])]
    assignment = LightpathAssignment(
        request.id, path.nodes, wavelengths, path.cost, path_reconfig_probability(rels)
    )
    if commit:
        commit_assignment(topology, assignment)
    return assignment


class FixedRouter:
    """Fixed minimum-hop routing baseline.

    The route of each ``(source, destination)`` pair is computed once on the
    bare topology and reused regardless of load or failures.
    """

    def __init__(self, topology: Topology):
        unit = {link.key: 1.0 for link in topology}
        self._graph = AuxiliaryGraph(list(topology.nodes), unit, {})
        self._routes: dict[tuple[str, str], Path | None] = {}

    def route_for(self, source: str, dest: str) -> Path | None:
        key = (source, dest)
        if key not in self._routes:
            self._routes[key] = shortest_path(self._graph, source, dest)
        return self._routes[key]

    def route(
        self,
        request: LightpathRequest,
        topology: Topology,
        rng: np.random.Generator | None,
        policy: str = "random",
        stats: Mapping[object, ResourceStats] | None = None,
        table: RepackingTable | None = None,
        commit: bool = True,
    ) -> LightpathAssignment | None:
        path = self.route_for(request.source, request.destination)
        if path is None:
            return None
        wavelengths = assign_wavelength(topology, path.nodes, policy, rng)
        if wavelengths is None:
            return None
        cost = prob = 0.0
        if stats is not None:
            all_rels = link_reliabilities(topology, stats, table)
            rels = [all_rels[k] for k in zip(path.nodes, path.nodes[1:])]
            cost = sum(edge_cost(r) for r in rels)
            prob = path_reconfig_probability(rels)
        assignment = LightpathAssignment(request.id, path.nodes, wavelengths, cost, prob)
        if commit:
            commit_assignment(topology, assignment)
        return assignment


def baseline_fixed_route(
    request: LightpathRequest,
    topology: Topology,
    rng: np.random.Generator | None,
    router: FixedRouter | None = None,
    **kwargs,
) -> LightpathAssignment | None:
    router = router or FixedRouter(topology)
    return router.route(request, topology, rng, **kwargs)
