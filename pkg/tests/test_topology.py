import pytest
from hypothesis import given, strategies as st

from mrpr.errors import ContractViolation, TopologyError
from mrpr.topology import Link, default_topology, default_topology_text, dump_topology, load_topology


def test_default_topology_scale():
    topo = default_topology()
    assert topo.nodes == list("ABCDEFGH")
    assert len(topo.links) == 13
    assert all(l.fibers == 3 and l.wavelengths == 4 for l in topo)


def test_default_topology_has_two_disjoint_a_to_h_routes():
    topo = default_topology()
    for route in (["A", "B", "D", "F", "H"], ["A", "C", "E", "G", "H"]):
        assert len(topo.route_links(route)) == 4
    assert not set("BDF") & set("CEG")


def test_default_topology_strongly_connected():
    topo = default_topology()
    for start in topo.nodes:
        seen, stack = {start}, [start]
        while stack:
            for link in topo.out_links(stack.pop()):
                if link.dst not in seen:
                    seen.add(link.dst)
                    stack.append(link.dst)
        assert seen == set(topo.nodes)


def test_round_trip():
    topo = default_topology()
    again = load_topology(dump_topology(topo))
    assert again.nodes == topo.nodes
    assert list(again.links) == list(topo.links)
    assert dump_topology(again) == dump_topology(topo)


def test_comments_and_blank_lines():
    topo = load_topology("# net\n\nnode X  # first\nnode Y\nlink X Y fibers=1 wavelengths=2\n")
    assert topo.nodes == ["X", "Y"]
    assert topo.link("X", "Y").capacity == 2


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("node A\nlink A Z fibers=1 wavelengths=1\n", "'Z'"),
        ("", "no nodes"),
        ("# only a comment\n", "no nodes"),
        ("node A\nnode A\n", "duplicate node"),
        ("node A\nnode B\nlink A B fibers=0 wavelengths=1\n", "fibers must be positive"),
        ("node A\nnode B\nlink A B fibers=1 wavelengths=-2\n", "wavelengths must be positive"),
        ("node A\nnode B\nlink A B fibers=x wavelengths=1\n", "integer"),
        ("node A\nlink A A fibers=1 wavelengths=1\n", "self-loop"),
        ("node A\nnode B\nlink A B fibers=1 wavelengths=1\nlink A B fibers=1 wavelengths=1\n",
         "duplicate link"),
        ("node A\nrouter B\n", "unknown directive"),
        ("node A-B\n", "must not contain"),
        ("node A\nnode B\nlink A B 1 1\n", "fibers="),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(TopologyError, match=fragment):
        load_topology(text)


def test_parse_error_reports_line_number():
    with pytest.raises(TopologyError) as info:
        load_topology("node A\nnode B\n\nlink A Z fibers=1 wavelengths=1\n")
    assert info.value.line == 4
    assert "line 4" in str(info.value)


def test_directed_links_are_distinct():
    topo = load_topology(
        "node A\nnode B\nlink A B fibers=1 wavelengths=1\nlink B A fibers=2 wavelengths=1\n"
    )
    assert topo.link("A", "B").fibers == 1
    assert topo.link("B", "A").fibers == 2


class TestChannels:
    def test_free_channels_empty(self):
        assert Link("A", "B", 3, 4).free_channels() == 12

    def test_free_channels_full(self):
        link = Link("A", "B", 3, 4, occupancy=[3, 3, 3, 3])
        assert link.free_channels() == 0

    def test_free_channels_partial(self):
        link = Link("A", "B", 3, 4)
        link.occupy(0)
        link.occupy(0)
        assert link.free_channels() == 10

    def test_wavelength_available(self):
        link = Link("A", "B", 3, 4, occupancy=[0, 3, 2, 0])
        assert link.wavelength_available(0)
        assert not link.wavelength_available(1)
        assert link.wavelength_available(2)

    def test_wavelength_index_out_of_range(self):
        with pytest.raises(IndexError):
            Link("A", "B", 1, 2).wavelength_available(2)

    def test_occupy_release_inverse(self):
        link = Link("A", "B", 2, 3, occupancy=[1, 0, 2])
        before = list(link.occupancy)
        link.occupy(1)
        link.release(1)
        assert link.occupancy == before

    def test_occupy_full_is_violation(self):
        link = Link("A", "B", 1, 2)
        link.occupy(0)
        with pytest.raises(ContractViolation):
            link.occupy(0)

    def test_release_fresh_is_violation(self):
        with pytest.raises(ContractViolation):
            Link("A", "B", 1, 2).release(1)


@given(
    fibers=st.integers(1, 4),
    wavelengths=st.integers(1, 5),
    ops=st.lists(st.tuples(st.booleans(), st.integers(0, 4)), max_size=60),
)
def test_occupancy_invariants_hold(fibers, wavelengths, ops):
    link = Link("A", "B", fibers, wavelengths)
    for occupy, w in ops:
        w %= wavelengths
        try:
            link.occupy(w) if occupy else link.release(w)
        except ContractViolation:
            pass
        assert all(0 <= n <= fibers for n in link.occupancy)
        assert link.free_channels() == link.capacity - sum(link.occupancy)


def test_default_text_is_documented_stand_in():
    assert "stand" in default_topology_text().lower() or "place" in default_topology_text().lower()
