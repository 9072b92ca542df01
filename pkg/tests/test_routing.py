import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_path
from mrpr.errors import ContractViolation
from mrpr.estimator import ResourceStats
from mrpr.reliability import EdgeReliability, RepackingTable, edge_cost
from mrpr.routing import (
    AuxiliaryGraph,
    FixedRouter,
    LightpathAssignment,
    LightpathRequest,
    assign_wavelength,
    build_auxiliary_graph,
    commit_assignment,
    layered_shortest_path,
    link_reliabilities,
    mrpr_route,
    release_assignment,
    shortest_path,
)
from mrpr.topology import default_topology, load_topology


def make_stats(topo, failure=None, holding=1.0):
    failure = failure or {}
    resources = list(topo.nodes) + list(topo.links)
    return {
        r: ResourceStats.with_priors(r, holding=holding, failure=failure.get(r, math.inf))
        for r in resources
    }


def graph_from(weights, nodes):
    rel = {k: EdgeReliability(0.0, 0.0, 0.0) for k in weights}
    return AuxiliaryGraph(list(nodes), dict(weights), rel)


def request(s="A", d="H", rid=0):
    return LightpathRequest(rid, s, d, 0.0, 1.0)


class TestShortestPath:
    def test_simple(self):
        g = graph_from({("A", "B"): 1.0, ("B", "C"): 1.0, ("A", "C"): 3.0}, "ABC")
        assert shortest_path(g, "A", "C") == (("A", "B", "C"), 2.0)

    def test_tie_prefers_fewer_hops(self):
        g = graph_from({("A", "B"): 1.0, ("B", "C"): 1.0, ("A", "C"): 2.0}, "ABC")
        assert shortest_path(g, "A", "C").nodes == ("A", "C")

    def test_tie_prefers_lexicographic(self):
        g = graph_from({("A", "C"): 1.0, ("C", "D"): 1.0, ("A", "B"): 1.0, ("B", "D"): 1.0}, "ABCD")
        assert shortest_path(g, "A", "D").nodes == ("A", "B", "D")

    def test_infinite_edges_skipped(self):
        g = graph_from({("A", "B"): math.inf, ("A", "C"): 5.0, ("C", "B"): 1.0}, "ABC")
        assert shortest_path(g, "A", "B").nodes == ("A", "C", "B")

    def test_unreachable(self):
        g = graph_from({("A", "B"): math.inf}, "AB")
        assert shortest_path(g, "A", "B") is None

    def test_unknown_node(self):
        with pytest.raises(KeyError):
            shortest_path(graph_from({}, "AB"), "A", "Z")

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_matches_brute_force(self, data):
        n = data.draw(st.integers(2, 6))
        nodes = [chr(ord("A") + i) for i in range(n)]
        pairs = [(u, v) for u, v in itertools.permutations(nodes, 2)]
        present = data.draw(st.lists(st.sampled_from(pairs), unique=True))
        weight = st.one_of(st.sampled_from([0.0, 1.0, 2.0, math.inf]), st.floats(0.0, 5.0))
        weights = {k: data.draw(weight) for k in present}
        got = shortest_path(graph_from(weights, nodes), nodes[0], nodes[-1])
        want = brute_force_path(weights, nodes, nodes[0], nodes[-1])
        if want is None:
            assert got is None
        else:
            assert (got.cost, got.hops, got.nodes) == want


class TestWavelengths:
    def test_no_converter_common_wavelength(self):
        topo = load_topology("node A\nnode B\nnode C\nlink A B fibers=1 wavelengths=3\n"
                             "link B C fibers=1 wavelengths=3\n")
        topo.link("A", "B").occupy(0)
        topo.link("B", "C").occupy(1)
        assert assign_wavelength(topo, ["A", "B", "C"], "first-fit") == (2, 2)
        topo.link("A", "B").occupy(2)
        assert assign_wavelength(topo, ["A", "B", "C"], "first-fit") is None

    def test_converters_assign_per_link(self):
        topo = load_topology("node A\nnode B\nnode C\nlink A B fibers=1 wavelengths=2\n"
                             "link B C fibers=1 wavelengths=2\n", converters=True)
        topo.link("A", "B").occupy(0)
        topo.link("B", "C").occupy(1)
        assert assign_wavelength(topo, ["A", "B", "C"], "first-fit") == (1, 0)

    def test_random_policy_needs_rng_and_is_seeded(self):
        topo = default_topology()
        route = ["A", "B", "D"]
        with pytest.raises(ValueError):
            assign_wavelength(topo, route, "random", None)
        draws = [assign_wavelength(topo, route, "random", np.random.default_rng(3)) for _ in range(2)]
        assert draws[0] == draws[1]
        seen = {assign_wavelength(topo, route, "random", np.random.default_rng(s))[0] for s in range(40)}
        assert seen == {0, 1, 2, 3}

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            assign_wavelength(default_topology(), ["A", "B"], "best-fit")

    def test_down_link_blocks(self):
        topo = default_topology()
        topo.link("A", "B").up = False
        assert assign_wavelength(topo, ["A", "B"], "first-fit") is None

    def test_commit_release_round_trip(self):
        topo = default_topology()
        a = LightpathAssignment(0, ("A", "B", "D"), (1, 1), 0.0, 0.0)
        commit_assignment(topo, a)
        assert topo.link("A", "B").occupancy == [0, 1, 0, 0]
        release_assignment(topo, a)
        assert all(l.occupied == 0 for l in topo)
        with pytest.raises(ContractViolation):
            release_assignment(topo, a)


class TestAuxiliaryGraph:
    def test_failure_probability_enters_cost(self):
        topo = default_topology()
        stats = make_stats(topo, {("A", "B"): 1.0})  # m_h = 1, m_f = 1 -> F = 0.5
        g = build_auxiliary_graph(topo, stats)
        assert g.weights[("A", "B")] == pytest.approx(math.log(2))
        assert g.weights[("A", "C")] == 0.0

    def test_router_failure_enters_incoming_edges(self):
        topo = default_topology()
        stats = make_stats(topo, {"D": 3.0})  # F = 0.25
        g = build_auxiliary_graph(topo, stats)
        for key in [("B", "D"), ("A", "D")]:
            assert g.weights[key] == pytest.approx(-math.log(0.75))
        assert g.weights[("D", "F")] == 0.0

    def test_full_link_is_infinite(self):
        topo = load_topology("node A\nnode B\nlink A B fibers=1 wavelengths=1\n")
        topo.link("A", "B").occupy(0)
        g = build_auxiliary_graph(topo, make_stats(topo))
        assert g.weights[("A", "B")] == math.inf

    def test_missing_stats(self):
        topo = default_topology()
        stats = make_stats(topo)
        del stats["C"]
        with pytest.raises(ValueError, match="'C'"):
            link_reliabilities(topo, stats)

    def test_repacking_uses_link_load(self):
        topo = load_topology("node A\nnode B\nlink A B fibers=1 wavelengths=2\n")
        stats = make_stats(topo)
        for t in range(1, 30):
            stats[("A", "B")].record_arrival(float(t))  # lam -> 1
        rel = link_reliabilities(topo, stats, RepackingTable())[("A", "B")]
        assert rel.repacking == pytest.approx(RepackingTable().probability(2, 0, 1.0, 1.0))
        assert rel.repacking > 0


class TestMrprRoute:
    def test_idle_network_min_hop(self):
        topo = default_topology()
        a = mrpr_route(request(), topo, make_stats(topo), "first-fit")
        assert a.route == ("A", "C", "E", "H")
        assert a.wavelengths == (0, 0, 0)
        assert a.cost == 0.0 and a.reconfig_prob == 0.0
        assert topo.link("A", "C").occupancy[0] == 1

    def test_avoids_failure_prone_link(self):
        topo = default_topology()
        stats = make_stats(topo, {("C", "E"): 0.5})
        a = mrpr_route(request(), topo, stats, "first-fit", commit=False)
        assert a.route == ("A", "D", "F", "H")
        assert topo.link("A", "D").occupied == 0

    def test_cost_probability_duality(self):
        topo = default_topology()
        stats = make_stats(topo, {("A", "C"): 4.0, "E": 9.0, ("E", "H"): 2.0, ("A", "D"): 1.0})
        a = mrpr_route(request(), topo, stats, "first-fit")
        assert a.reconfig_prob == pytest.approx(-math.expm1(-a.cost), abs=1e-12)

    def test_blocked(self):
        topo = load_topology("node A\nnode B\nlink A B fibers=1 wavelengths=1\n")
        stats = make_stats(topo)
        assert mrpr_route(request("A", "B"), topo, stats, "first-fit") is not None
        assert mrpr_route(request("A", "B", 1), topo, stats, "first-fit") is None

    def test_continuity_forces_detour(self):
        text = ("node S\nnode M\nnode N\nnode T\n"
                "link S M fibers=1 wavelengths=2\nlink M T fibers=1 wavelengths=2\n"
                "link S N fibers=1 wavelengths=2\nlink N T fibers=1 wavelengths=2\n")
        topo = load_topology(text)
        topo.link("S", "M").occupy(0)
        topo.link("M", "T").occupy(1)
        a = mrpr_route(request("S", "T"), topo, make_stats(topo), "first-fit")
        assert a.route == ("S", "N", "T")
        wi = load_topology(text, converters=True)
        wi.link("S", "M").occupy(0)
        wi.link("M", "T").occupy(1)
        b = mrpr_route(request("S", "T"), wi, make_stats(wi), "first-fit")
        assert b.route == ("S", "M", "T") and b.wavelengths == (1, 0)

    def test_layered_matches_brute_force_over_wavelengths(self):
        rng = np.random.default_rng(7)
        topo = default_topology()
        for link in topo:
            for w in range(link.wavelengths):
                for _ in range(int(rng.integers(0, 4))):
                    link.occupy(w)
        failure = {k: float(rng.uniform(0.5, 20)) for k in topo.links}
        stats = make_stats(topo, failure)
        path, w, _ = layered_shortest_path(topo, stats, "A", "H")
        rels = link_reliabilities(topo, stats)
        best = None
        for wl in range(4):
            weights = {k: (edge_cost(r) if topo.links[k].wavelength_available(wl) else math.inf)
                       for k, r in rels.items()}
            found = brute_force_path(weights, topo.nodes, "A", "H")
            if found is not None and (best is None or found + (wl,) < best):
                best = found + (wl,)
        assert (path.cost, path.hops, path.nodes, w) == best

    def test_blocking_monotone_in_occupancy(self):
        rng = np.random.default_rng(11)
        topo = default_topology()
        stats = make_stats(topo)
        was_blocked = False
        for _ in range(200):
            link = list(topo)[int(rng.integers(13))]
            free = link.free_wavelengths()
            if free:
                link.occupy(free[0])
            blocked = mrpr_route(request(), topo, stats, "first-fit", commit=False) is None
            assert blocked or not was_blocked
            was_blocked = blocked


class TestFixedRouter:
    def test_min_hop_route_is_cached(self):
        topo = default_topology()
        router = FixedRouter(topo)
        a = router.route(request(), topo, None, "first-fit")
        assert a.route == ("A", "C", "E", "H")
        topo.link("C", "E").up = False
        assert router.route(request(rid=1), topo, None, "first-fit") is None

    def test_reports_cost_when_stats_given(self):
        topo = default_topology()
        stats = make_stats(topo, {("C", "E"): 1.0})
        a = FixedRouter(topo).route(request(), topo, None, "first-fit", stats=stats, commit=False)
        assert a.cost == pytest.approx(math.log(2))
        assert a.reconfig_prob == pytest.approx(0.5)


@pytest.mark.parametrize("kwargs", [dict(source="A", destination="A"), dict(holding_time=0.0)])
def test_invalid_request(kwargs):
    base = dict(id=0, source="A", destination="B", arrival_time=0.0, holding_time=1.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        LightpathRequest(**base)


def test_network_without_links_blocks():
    topo = load_topology("node A\nnode B\n")
    assert mrpr_route(request("A", "B"), topo, make_stats(topo), "first-fit") is None
