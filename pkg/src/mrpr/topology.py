"""
Optical network topology with per-wavelength channel occupancy.

A topology file is UTF-8, line oriented, with ``#`` starting a comment::

    node A
    node B
    link A B fibers=3 wavelengths=4

Node labels may not contain ``-`` (scenario files name links ``A-B``).
Links are directed; a bidirectional fiber pair is written as two ``link``
lines. Every link carries ``fibers`` parallel fibers, each with the same
``wavelengths`` channels, so wavelength ``w`` can be used by at most
``fibers`` lightpaths at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Iterator

from mrpr.errors import ContractViolation, TopologyError

LinkKey = tuple[str, str]


@dataclass
class Link:
    """Directed fiber link ``src -> dst`` and its channel occupancy.

    ``occupancy[w]`` counts the fibers on which wavelength ``w`` is in use.
    ``up`` is cleared while the link is failed.
    """

    src: str
    dst: str
    fibers: int
    wavelengths: int
    occupancy: list[int] = field(default_factory=list)
    up: bool = True

    def __post_init__(self):
        if self.fibers <= 0 or self.wavelengths <= 0:
            raise TopologyError(
                f"link {self.src}->{self.dst}: fibers and wavelengths must be positive"
            )
        if not self.occupancy:
            self.occupancy = [0] * self.wavelengths
        elif len(self.occupancy) != self.wavelengths:
            raise TopologyError(f"link {self.src}->{self.dst}: occupancy length mismatch")

    @property
    def key(self) -> LinkKey:
        return (self.src, self.dst)

    @property
    def capacity(self) -> int:
        return self.fibers * self.wavelengths

    @property
    def occupied(self) -> int:
        return sum(self.occupancy)

    def free_channels(self) -> int:
        return self.capacity - self.occupied

    def _check_index(self, w: int) -> None:
        if not 0 <= w < self.wavelengths:
            raise IndexError(
                f"wavelength {w} out of range for link {self.src}->{self.dst} "
                f"({self.wavelengths} wavelengths)"
            )

    def wavelength_available(self, w: int) -> bool:
        self._check_index(w)
        return self.occupancy[w] < self.fibers

    def free_wavelengths(self) -> list[int]:
        return [w for w, used in enumerate(self.occupancy) if used < self.fibers]

    def occupy(self, w: int) -> None:
        self._check_index(w)
        if self.occupancy[w] >= self.fibers:
            raise ContractViolation(
                f"occupy on full wavelength {w} of link {self.src}->{self.dst}"
            )
        self.occupancy[w] += 1

    def release(self, w: int) -> None:
        self._check_index(w)
        if self.occupancy[w] <= 0:
            raise ContractViolation(
                f"release on empty wavelength {w} of link {self.src}->{self.dst}"
            )
        self.occupancy[w] -= 1


@dataclass
class Topology:
    """Routers, directed links and the converter mode of the network.

    With ``converters`` set every router performs wavelength interchange
    (WI); otherwise a lightpath must keep one wavelength end to end.
    """

    nodes: list[str]
    links: dict[LinkKey, Link]
    converters: bool = False
    down_nodes: set[str] = field(default_factory=set)

    def __post_init__(self):
        self._out: dict[str, list[Link]] = {n: [] for n in self.nodes}
        for link in self.links.values():
            self._out[link.src].append(link)

    def link(self, src: str, dst: str) -> Link:
        return self.links[(src, dst)]

    def out_links(self, node: str) -> list[Link]:
        return self._out[node]

    def __iter__(self) -> Iterator[Link]:
        return iter(self.links.values())

    def link_is_up(self, link: Link) -> bool:
        """True when the link and both end routers are operational."""
        return link.up and link.src not in self.down_nodes and link.dst not in self.down_nodes

    def route_links(self, route) -> list[Link]:
        return [self.links[(a, b)] for a, b in zip(route, route[1:])]

    def reset(self) -> None:
        """Clear all occupancy and failure flags."""
        for link in self.links.values():
            link.occupancy = [0] * link.wavelengths
            link.up = True
        self.down_nodes.clear()

    def copy(self) -> "Topology":
        links = {
            key: Link(l.src, l.dst, l.fibers, l.wavelengths, list(l.occupancy), l.up)
            for key, l in self.links.items()
        }
        return Topology(list(self.nodes), links, self.converters, set(self.down_nodes))


def _parse_int_option(token: str, name: str, lineno: int) -> int:
    key, sep, value = token.partition("=")
    if not sep or key != name:
        raise TopologyError(f"expected '{name}=<int>', got {token!r}", lineno)
    try:
        number = int(value)
    except ValueError:
        raise TopologyError(f"{name} must be an integer, got {value!r}", lineno) from None
    if number <= 0:
        raise TopologyError(f"{name} must be positive, got {number}", lineno)
    return number


def load_topology(text: str, converters: bool = False) -> Topology:
    """Parse and validate a topology description.

    Raises :class:`TopologyError` (with the line number where applicable) on
    syntax errors, duplicate nodes or links, self-loops, links to undeclared
    nodes and nonpositive fiber/wavelength counts.
    """
    nodes: list[str] = []
    seen_nodes: set[str] = set()
    pending: list[tuple[int, str, str, int, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0]
        if kind == "node":
            if len(tokens) != 2:
                raise TopologyError("expected 'node <label>'", lineno)
            label = tokens[1]
            if "-" in label:
                raise TopologyError(f"node label {label!r} must not contain '-'", lineno)
            if label in seen_nodes:
                raise TopologyError(f"duplicate node label {label!r}", lineno)
            seen_nodes.add(label)
            nodes.append(label)
        elif kind == "link":
            if len(tokens) != 5:
                raise TopologyError(
                    "expected 'link <from> <to> fibers=<int> wavelengths=<int>'", lineno
                )
            fibers = _parse_int_option(tokens[3], "fibers", lineno)
            wavelengths = _parse_int_option(tokens[4], "wavelengths", lineno)
            pending.append((lineno, tokens[1], tokens[2], fibers, wavelengths))
        else:
            raise TopologyError(f"unknown directive {kind!r}", lineno)

    if not nodes:
        raise TopologyError("topology declares no nodes")

    links: dict[LinkKey, Link] = {}
    for lineno, src, dst, fibers, wavelengths in pending:
        for end in (src, dst):
            if end not in seen_nodes:
                raise TopologyError(f"link endpoint {end!r} is not a declared node", lineno)
        if src == dst:
            raise TopologyError(f"self-loop on {src!r}", lineno)
        if (src, dst) in links:
            raise TopologyError(f"duplicate link {src}->{dst}", lineno)
        links[(src, dst)] = Link(src, dst, fibers, wavelengths)

    return Topology(nodes, links, converters)


def dump_topology(topology: Topology) -> str:
    """Serialize node and link declarations back to the file format."""
    lines = [f"node {n}" for n in topology.nodes]
    lines += [
        f"link {l.src} {l.dst} fibers={l.fibers} wavelengths={l.wavelengths}"
        for l in topology.links.values()
    ]
    return "\n".join(lines) + "\n"


def default_topology_text() -> str:
    """Text of the bundled 8-router, 13-link default topology."""
    return resources.files("mrpr.data").joinpath("default.topo").read_text("utf-8")


def default_topology(converters: bool = False) -> Topology:
    return load_topology(default_topology_text(), converters)
