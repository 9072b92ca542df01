"""
Discrete-event simulation of lightpath traffic with resource failures, plus a
standalone single-server FIFO (M/M/1) trace generator.

Events are ordered by ``(time, seq)`` where ``seq`` is the insertion counter,
which gives a deterministic total order for equal timestamps.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from mrpr import kernels
from mrpr.errors import ContractViolation
from mrpr.estimator import NoiseSpec, ResourceStats
from mrpr.reliability import Distribution, Exponential, RepackingTable, Weibull
from mrpr.routing import (
    FixedRouter,
    LightpathAssignment,
    LightpathRequest,
    commit_assignment,
    mrpr_route,
    release_assignment,
)
from mrpr.scenario import ScenarioConfig, prior_failure_mean, resource_name
from mrpr.topology import Topology

log = logging.getLogger(__name__)

ARRIVAL, DEPARTURE, FAILURE, REPAIR = "arrival", "departure", "failure", "repair"


def sample_exponential(rng: np.random.Generator, mean: float) -> float:
    """Inverse-CDF exponential draw ``-mean * ln(1 - U)``."""
    if not mean > 0:
        raise ValueError("mean must be positive")
    return Exponential(mean).from_uniform(rng.random())


def sample_weibull(rng: np.random.Generator, shape: float, scale: float) -> float:
    """Inverse-CDF Weibull draw ``scale * (-ln(1 - U))**(1/shape)``."""
    return Weibull(shape, scale).from_uniform(rng.random())


def sample(rng: np.random.Generator, dist: Distribution) -> float:
    return dist.from_uniform(rng.random())


# ---------------------------------------------------------------------------
# Network scenario
# ---------------------------------------------------------------------------


@dataclass
class RequestRecord:
    id: int
    source: str
    destination: str
    arrival_time: float
    holding_time: float
    counted: bool
    assignment: LightpathAssignment | None = None

    @property
    def admitted(self) -> bool:
        return self.assignment is not None


@dataclass
class SimMetrics:
    offered: int = 0
    admitted: int = 0
    blocked: int = 0
    reconfigurations: int = 0
    readmitted: int = 0
    dropped: int = 0
    failures: int = 0
    broken_per_failure: list[int] = field(default_factory=list)
    elapsed: float = 0.0
    leaked_channels: int = 0
    records: list[RequestRecord] = field(default_factory=list)

    @property
    def blocking_probability(self) -> float:
        return self.blocked / self.offered if self.offered else 0.0

    @property
    def mean_broken_per_failure(self) -> float:
        if not self.broken_per_failure:
            return 0.0
        return sum(self.broken_per_failure) / len(self.broken_per_failure)

    @property
    def mean_reconfig_prob(self) -> float:
        probs = [r.assignment.reconfig_prob for r in self.records if r.counted and r.admitted]
        return sum(probs) / len(probs) if probs else 0.0

    CSV_FIELDS = (
        "offered", "admitted", "blocked", "blocking_probability", "reconfigurations",
        "readmitted", "dropped", "failures", "mean_broken_per_failure",
        "mean_reconfig_prob", "elapsed",
    )  # fmt: skip

    def row(self) -> dict[str, object]:
        return {name: getattr(self, name) for name in self.CSV_FIELDS}


@dataclass
class _Active:
    request: LightpathRequest
    assignment: LightpathAssignment
    admitted_at: float
    departs_at: float


Observer = Callable[["SimState", LightpathRequest, "LightpathAssignment | None"], None]


class SimState:
    """Mutable state of one replication: network, statistics, event queue."""

    def __init__(self, config: ScenarioConfig, replication: int = 0,
                 topology: Topology | None = None):
        self.config = config
        self.topology = topology if topology is not None else config.load_topology()
        self.topology.converters = config.converters
        self.table = RepackingTable(config.repacking)
        streams = np.random.SeedSequence(config.seed, spawn_key=(replication,)).spawn(3)
        self.arrival_rng, self.failure_rng, self.wavelength_rng = (
            np.random.default_rng(s) for s in streams
        )
        self.pairs = config.resolved_pairs(self.topology)
        self.fixed = FixedRouter(self.topology) if config.routing == "baseline" else None
        self.stats = self._initial_stats()

        self.now = 0.0
        self._queue: list[tuple[float, int, str, object]] = []
        self._seq = 0
        self.active: dict[int, _Active] = {}
        self.metrics = SimMetrics()
        self.admit_events = 0
        self.departed = 0
        self.torn_down = 0
        self.arrivals_done = False
        self.warmup_end = math.inf

    def _initial_stats(self) -> dict[object, ResourceStats]:
        cfg = self.config
        profiles = cfg.drift_profiles()
        stats: dict[object, ResourceStats] = {}
        for resource in list(self.topology.nodes) + list(self.topology.links):
            profile = profiles.get(resource_name(resource))
            arrival_noise = None
            if profile is not None:
                arrival_noise = NoiseSpec(cfg.noise.q, cfg.noise.r, profile=profile)
            stats[resource] = ResourceStats.with_priors(
                resource,
                noise=cfg.noise,
                holding=cfg.mean_holding,
                failure=prior_failure_mean(cfg.failure_for(resource)),
                arrival_noise=arrival_noise,
            )
        return stats

    # -- event queue -------------------------------------------------------

    def schedule(self, time: float, kind: str, payload) -> None:
        if time < self.now:
            raise ContractViolation(f"event scheduled in the past ({time} < {self.now})")
        heapq.heappush(self._queue, (time, self._seq, kind, payload))
        self._seq += 1

    def pop(self):
        return heapq.heappop(self._queue)

    def __bool__(self) -> bool:
        return bool(self._queue)

    # -- routing -----------------------------------------------------------

    def route(self, request: LightpathRequest) -> LightpathAssignment | None:
        cfg = self.config
        if self.fixed is not None:
            return self.fixed.route(
                request, self.topology, self.wavelength_rng, cfg.wavelength_policy,
                stats=self.stats, table=self.table, commit=False,
            )
        return mrpr_route(
            request, self.topology, self.stats, cfg.wavelength_policy,
            self.wavelength_rng, self.table, commit=False,
        )

    def _admit(self, request: LightpathRequest, assignment: LightpathAssignment,
               departs_at: float) -> None:
        commit_assignment(self.topology, assignment)
        self.active[request.id] = _Active(request, assignment, self.now, departs_at)
        self.admit_events += 1
        for resource in _route_resources(assignment):
            self.stats[resource].record_arrival(self.now)

    # -- failures ----------------------------------------------------------

    def _resource_up(self, resource) -> bool:
        if isinstance(resource, tuple):
            return self.topology.links[resource].up
        return resource not in self.topology.down_nodes

    def inject_failure(self, resource, t: float) -> int:
        """Fail ``resource``, tear down and re-offer the lightpaths crossing it.

        Returns the number of lightpaths broken.
        """
        if not self._resource_up(resource):
            raise ContractViolation(f"double failure of {resource!r}")
        if isinstance(resource, tuple):
            self.topology.links[resource].up = False
        else:
            self.topology.down_nodes.add(resource)
        self.stats[resource].record_failure(t)

        hit = [
            lp_id for lp_id, lp in sorted(self.active.items())
            if resource in _route_resources(lp.assignment)
        ]
        broken = [self.active.pop(lp_id) for lp_id in hit]
        for lp in broken:
            release_assignment(self.topology, lp.assignment)
        self.torn_down += len(broken)

        counted = t >= self.warmup_end
        if counted:
            self.metrics.failures += 1
            self.metrics.reconfigurations += len(broken)
            self.metrics.broken_per_failure.append(len(broken))

        for lp in broken:
            remaining = lp.departs_at - t
            assignment = None
            if remaining > 0:
                retry = LightpathRequest(lp.request.id, lp.request.source,
                                         lp.request.destination, t, remaining)
                assignment = self.route(retry)
            if assignment is not None:
                self._admit(retry, assignment, lp.departs_at)
                if counted:
                    self.metrics.readmitted += 1
            elif counted:
                self.metrics.dropped += 1
        return len(broken)

    def repair(self, resource, t: float) -> None:
        if self._resource_up(resource):
            raise ContractViolation(f"repair of operational resource {resource!r}")
        if isinstance(resource, tuple):
            self.topology.links[resource].up = True
        else:
            self.topology.down_nodes.discard(resource)

    # -- invariants --------------------------------------------------------

    def check_invariants(self) -> None:
        expected = self.admit_events - self.departed - self.torn_down
        if expected != len(self.active):
            raise ContractViolation(
                f"conservation broken: admitted {self.admit_events} - departed "
                f"{self.departed} - torn down {self.torn_down} != active {len(self.active)}"
            )
        used = sum(len(lp.assignment.wavelengths) for lp in self.active.values())
        occupied = 0
        for link in self.topology:
            if any(not 0 <= n <= link.fibers for n in link.occupancy):
                raise ContractViolation(f"occupancy out of range on {link.key}")
            occupied += link.occupied
        if used != occupied:
            raise ContractViolation(f"channel leak: {occupied} occupied vs {used} in use")


def _route_resources(assignment: LightpathAssignment):
    yield from assignment.route
    yield from assignment.links


def run_scenario(
    config: ScenarioConfig,
    replication: int = 0,
    observer: Observer | None = None,
    check_invariants: bool = False,
    topology: Topology | None = None,
) -> SimMetrics:
    """Simulate ``config.requests`` lightpath requests and drain the network.

    Arrivals form a Poisson stream at ``arrival_rate``; each picks a traffic
    pair uniformly. Failures are generated per resource from its configured
    distribution while arrivals continue; a failed resource is repaired after
    ``repair_time``. The first ``warmup_fraction`` of requests (and failures
    before the first counted request) are excluded from the metrics.
    """
    state = SimState(config, replication, topology)
    cfg = config
    metrics = state.metrics
    warmup_n = cfg.warmup_requests
    mean_gap = 1.0 / cfg.arrival_rate

    state.schedule(sample_exponential(state.arrival_rng, mean_gap), ARRIVAL, 0)
    resources = list(state.topology.nodes) + list(state.topology.links)
    for resource in resources:
        dist = cfg.failure_for(resource)
        if dist is not None:
            state.schedule(sample(state.failure_rng, dist), FAILURE, resource)

    while state:
        t, _, kind, payload = state.pop()
        state.now = t
        if kind == ARRIVAL:
            i = payload
            pair = state.pairs[int(state.arrival_rng.integers(len(state.pairs)))]
            holding = sample_exponential(state.arrival_rng, cfg.mean_holding)
            request = LightpathRequest(i, pair[0], pair[1], t, holding)
            counted = i >= warmup_n
            if i == warmup_n:
                state.warmup_end = t
            assignment = state.route(request)
            if observer is not None:
                observer(state, request, assignment)
            if assignment is not None:
                state._admit(request, assignment, t + holding)
                state.schedule(t + holding, DEPARTURE, i)
            if counted:
                metrics.offered += 1
                if assignment is None:
                    metrics.blocked += 1
                else:
                    metrics.admitted += 1
            metrics.records.append(
                RequestRecord(i, pair[0], pair[1], t, holding, counted, assignment)
            )
            if i + 1 < cfg.requests:
                state.schedule(t + sample_exponential(state.arrival_rng, mean_gap), ARRIVAL, i + 1)
            else:
                state.arrivals_done = True
        elif kind == DEPARTURE:
            lp = state.active.pop(payload, None)
            if lp is not None:
                release_assignment(state.topology, lp.assignment)
                state.departed += 1
                for resource in _route_resources(lp.assignment):
                    state.stats[resource].record_release(t - lp.admitted_at)
        elif kind == FAILURE:
            if not state.arrivals_done:
                state.inject_failure(payload, t)
                state.schedule(t + cfg.effective_repair_time, REPAIR, payload)
        elif kind == REPAIR:
            state.repair(payload, t)
            if not state.arrivals_done:
                dist = cfg.failure_for(payload)
                state.schedule(t + sample(state.failure_rng, dist), FAILURE, payload)
        else:  # pragma: no cover
            raise ContractViolation(f"unknown event kind {kind!r}")
        if check_invariants:
            state.check_invariants()

    metrics.elapsed = state.now
    metrics.leaked_channels = sum(link.occupied for link in state.topology)
    if state.active or metrics.leaked_channels:
        raise ContractViolation(
            f"{len(state.active)} lightpaths / {metrics.leaked_channels} channels left after drain"
        )
    return metrics


def run_replications(config: ScenarioConfig, replications: int,
                     workers: int = 1) -> list[SimMetrics]:
    """Independent replications, returned in replication order."""
    if workers <= 1 or replications == 1:
        return [run_scenario(config, r) for r in range(replications)]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_scenario, [config] * replications, range(replications)))


# ---------------------------------------------------------------------------
# M/M/1 trace
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MM1Record:
    clock: float
    inter_arrival: float
    next_arrival: float
    service_begin: float
    service_time: float
    service_end: float
    idle: float
    waiting: float


MM1_HEADERS = (
    "clock_usec", "inter_arrival_time_usec", "next_arrival_time_usec",
    "service_begin_usec", "service_time_usec", "service_end_usec",
    "server_idle_time_usec", "customer_waiting_time_usec",
)  # fmt: skip


@dataclass
class MM1Result:
    """Per-customer columns of the FIFO trace plus aggregates.

    ``inter_arrival[i]`` is the gap from customer ``i`` to the next offered
    arrival; ``lost`` counts arrivals turned away by a full queue.
    """

    lam: float
    mu: float
    arrival: np.ndarray
    inter_arrival: np.ndarray
    begin: np.ndarray
    service: np.ndarray
    end: np.ndarray
    idle: np.ndarray
    offered: int
    lost: int

    @property
    def waiting(self) -> np.ndarray:
        return self.begin - self.arrival

    @property
    def elapsed(self) -> float:
        return float(self.end[-1])

    @property
    def average_waiting(self) -> float:
        return float(self.waiting.mean())

    @property
    def average_idle(self) -> float:
        return float(self.idle.mean())

    @property
    def mean_sojourn(self) -> float:
        return float((self.end - self.arrival).mean())

    @property
    def unstable(self) -> bool:
        return self.lam >= self.mu

    def __len__(self) -> int:
        return len(self.arrival)

    def records(self) -> Iterator[MM1Record]:
        for i in range(len(self.arrival)):
            a = float(self.arrival[i])
            gap = float(self.inter_arrival[i])
            yield MM1Record(a, gap, a + gap, float(self.begin[i]), float(self.service[i]),
                            float(self.end[i]), float(self.idle[i]),
                            float(self.begin[i] - self.arrival[i]))


def run_mm1(
    lam: float,
    mu: float,
    n_customers: int,
    queue_capacity: int | None = None,
    seed: int = 0,
) -> MM1Result:
    """Simulate a single-server FIFO queue until ``n_customers`` are served.

    With ``queue_capacity`` set, an arrival that finds the server busy and
    that many customers waiting (not counting the one in service) is lost.
    """
    if not (lam > 0 and mu > 0):
        raise ValueError("rates must be positive")
    if n_customers < 1:
        raise ValueError("n_customers must be at least 1")
    if queue_capacity is not None and queue_capacity < 0:
        raise ValueError("queue_capacity must be nonnegative")
    capacity = -1 if queue_capacity is None else int(queue_capacity)

    size = n_customers + 1
    while True:
        gap_ss, service_ss = np.random.SeedSequence(seed).spawn(2)
        # prefix-stable draws: a larger retry reuses the same leading samples
        inter = -np.log1p(-np.random.default_rng(gap_ss).random(size)) / lam
        service = -np.log1p(-np.random.default_rng(service_ss).random(size)) / mu
        out = [np.empty(n_customers) for _ in range(4)]
        accepted = np.empty(n_customers, dtype=np.int64)
        m, offered, lost = kernels.mm1_fifo(inter, service, capacity, n_customers, *out, accepted)
        if m == n_customers and offered < size:
            break
        size *= 2
    arrival, begin, end, idle = out
    return MM1Result(lam, mu, arrival, inter[accepted + 1], begin, service[accepted],
                     end, idle, offered, lost)


def time_average_in_system(arrival: np.ndarray, end: np.ndarray) -> float:
    """Time-average number of customers present over ``[0, max(end)]``,
    computed by sweeping the merged arrival/departure epochs."""
    times = np.concatenate([arrival, end])
    steps = np.concatenate([np.ones(len(arrival)), -np.ones(len(end))])
    order = np.lexsort((steps, times))  # departures first on ties
    times, steps = times[order], steps[order]
    count = np.cumsum(steps)
    area = float(np.sum(count[:-1] * np.diff(times)))
    return area / float(times[-1])
