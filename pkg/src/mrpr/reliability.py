"""
Reconfiguration probabilities for lightpaths on links and routers.

Two sources of reconfiguration enter the edge cost of a link ``(i, j)``:

* failure of the link or of the downstream router during the lifetime of the
  lightpath (``F``), from holding-time and failure inter-arrival statistics;
* repacking on the link (``R``), from a birth-death model of the link
  occupancy with an absorbing "repacking" state reached when a new arrival
  finds the link full.

The edge cost ``-ln(1-F_ij) - ln(1-R_ij) - ln(1-F_j)`` is additive along a
route, so a shortest path maximizes the probability that the lightpath is
never reconfigured.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from mrpr import kernels
from mrpr.errors import DegenerateModelError, QuadratureError

log = logging.getLogger(__name__)

PROB_CEILING = 1.0 - 1e-15
TAIL_MASS = 1e-9
QUAD_TOL = 1e-9


# ---------------------------------------------------------------------------
# Lifetime distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    mean: float

    def __post_init__(self):
        if not self.mean > 0:
            raise ValueError(f"exponential mean must be positive, got {self.mean}")

    def pdf(self, x: float) -> float:
        return math.exp(-x / self.mean) / self.mean if x >= 0 else 0.0

    def cdf(self, x: float) -> float:
        return -math.expm1(-x / self.mean) if x > 0 else 0.0

    def isf(self, tail: float) -> float:
        """Point beyond which the remaining probability mass is ``tail``."""
        return -self.mean * math.log(tail)

    def from_uniform(self, u: float) -> float:
        return -self.mean * math.log1p(-u)


@dataclass(frozen=True)
class Weibull:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("Weibull shape and scale must be positive")

    @property
    def mean(self) -> float:
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    def pdf(self, x: float) -> float:
        if x < 0:
            return 0.0
        if x == 0:
            if self.shape < 1:
                return math.inf
            return 1.0 / self.scale if self.shape == 1 else 0.0
        z = x / self.scale
        k = self.shape
        return (k / self.scale) * z ** (k - 1) * math.exp(-(z**k))

    def cdf(self, x: float) -> float:
        return -math.expm1(-((x / self.scale) ** self.shape)) if x > 0 else 0.0

    def isf(self, tail: float) -> float:
        return self.scale * (-math.log(tail)) ** (1.0 / self.shape)

    def from_uniform(self, u: float) -> float:
        return self.scale * (-math.log1p(-u)) ** (1.0 / self.shape)


Distribution = Exponential | Weibull


@dataclass(frozen=True)
class FailureModel:
    """Failure inter-arrival and lightpath holding-time laws of one resource."""

    failure: Distribution
    holding: Distribution

    @property
    def m_f(self) -> float:
        return self.failure.mean

    @property
    def m_h(self) -> float:
        return self.holding.mean


# ---------------------------------------------------------------------------
# Failure probability
# ---------------------------------------------------------------------------


def failure_probability(m_h: float, m_f: float) -> float:
    """Probability that an exponential failure clock fires within an
    exponential holding time: ``m_h / (m_h + m_f)``."""
    if not (m_h > 0 and m_f > 0):
        raise ValueError(f"mean times must be positive (m_h={m_h}, m_f={m_f})")
    if math.isinf(m_f):
        return 0.0
    return m_h / (m_h + m_f)


def _quad(func, a, b, what):
    value, err, info, *rest = integrate.quad(
        func, a, b, epsabs=QUAD_TOL * 1e-2, epsrel=1e-11, limit=200, full_output=1
    )
    if rest or err > QUAD_TOL:
        raise QuadratureError(f"{what}: quadrature did not converge (abs error {err:.3g})")
    return value


def failure_probability_numeric(failure: Distribution, holding: Distribution) -> float:
    """Evaluate ``int_0^inf (int_0^y f(x) dx) h(y) dy`` by nested adaptive
    quadrature.

    The outer integral is truncated where the holding-time tail mass drops
    below ``1e-9``; the inner integral is integrated directly from the pdf,
    not taken from a closed-form CDF.
    """
    upper = holding.isf(TAIL_MASS)
    inner_cache: dict[float, float] = {}

    def inner(y: float) -> float:
        if y <= 0:
            return 0.0
        hit = inner_cache.get(y)
        if hit is None:
            hit = _quad(failure.pdf, 0.0, y, "inner failure integral")
            inner_cache[y] = hit
        return hit

    value = _quad(lambda y: inner(y) * holding.pdf(y), 0.0, upper, "outer holding integral")
    return min(max(value, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Erlang loss and repacking
# ---------------------------------------------------------------------------


def erlang_b(n: int, rho: float) -> float:
    """Erlang loss probability of an M/M/n/n system offered ``rho`` Erlangs.

    Uses the recurrence ``E(k) = rho E(k-1) / (k + rho E(k-1))``, which never
    forms ``rho**n`` or ``n!`` and stays accurate for large ``n``.
    """
    if n < 0 or rho < 0:
        raise ValueError(f"erlang_b needs n >= 0 and rho >= 0 (got n={n}, rho={rho})")
    return kernels.erlang_b(int(n), float(rho))


@dataclass(frozen=True)
class RepackingModel:
    """A link of ``capacity`` channels currently carrying ``occupancy``
    lightpaths, offered Poisson arrivals at ``lam`` with service rate ``mu``."""

    capacity: int
    occupancy: int
    lam: float
    mu: float

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        if not 0 <= self.occupancy < self.capacity:
            raise ValueError(
                f"occupancy must satisfy 0 <= N0 < C (N0={self.occupancy}, C={self.capacity})"
            )
        if self.lam < 0 or not self.mu > 0:
            raise ValueError(f"need lam >= 0 and mu > 0 (lam={self.lam}, mu={self.mu})")

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    @property
    def start_state(self) -> int:
        """Occupancy right after the new lightpath is admitted."""
        return self.occupancy + 1


def repacking_closed_form(model: RepackingModel) -> float:
    """``E(C, rho) / (C * E(n, rho))`` with ``n`` the post-admission occupancy.

    This expression does not agree with the trapping model it summarizes
    (for ``C = 1`` it gives 1 while the model gives ``lam / (lam + mu)``);
    it is kept as an alternative engine, see :func:`repacking_probability`.
    """
    rho = model.rho
    if rho == 0.0:
        return 0.0
    denom = model.capacity * erlang_b(model.start_state, rho)
    if denom == 0.0:
        raise DegenerateModelError(
            f"E({model.start_state}, {rho}) underflowed to zero; closed form undefined"
        )
    return min(max(erlang_b(model.capacity, rho) / denom, 0.0), 1.0)


def repacking_probability(model: RepackingModel) -> float:
    """Exact repacking probability of the trapping-state model.

    With generator ``A`` on the transient occupancy states, the expected
    value of ``p_r(t)`` under an ``Exp(mu)`` lifetime equals
    ``lam * [(mu I - A)^-1 p(0)]_C``, a tridiagonal solve. The result is
    divided by ``C`` for the random choice of the lightpath to re-route.
    """
    if model.lam == 0.0:
        return 0.0
    hit = kernels.trap_resolvent(model.capacity, model.start_state, model.rho)
    return min(max(hit / model.capacity, 0.0), 1.0)


def _trapping_rhs(capacity: int, lam: float, mu: float):
    n = np.arange(1, capacity + 1, dtype=float)
    out_rate = lam + (n - 1.0) * mu
    down_rate = n[:-1] * mu  # state n+1 -> n at rate n*mu

    def rhs(t, z):
        p = z[:capacity]
        dz = np.empty_like(z)
        dp = dz[:capacity]
        np.multiply(-out_rate, p, out=dp)
        dp[:-1] += down_rate * p[1:]
        dp[1:] += lam * p[:-1]
        dz[capacity] = lam * p[-1]
        dz[capacity + 1] = z[capacity] * mu * math.exp(-mu * t)
        return dz

    return rhs


@dataclass
class TrappingTrajectory:
    """Numerical solution of the trapping-state ODE system.

    ``p[n-1]`` holds ``p_n(t)`` on the grid ``t``; ``p_r`` the trapping
    probability; ``expected_trap`` the running integral of
    ``p_r(s) mu e^{-mu s}`` whose limit is the per-link repacking probability.
    """

    t: np.ndarray
    p: np.ndarray
    p_r: np.ndarray
    expected_trap: np.ndarray
    horizon: float


def solve_trapping_ode(
    model: RepackingModel, t_eval: Sequence[float] | None = None, rtol: float = 1e-11
) -> TrappingTrajectory:
    """Integrate the occupancy/trapping ODEs from ``p_{N0+1}(0) = 1``.

    The horizon ``T`` satisfies ``exp(-mu T) < 1e-9``; the weighted integral
    is carried as an extra state so no separate quadrature pass is needed.
    """
    c = model.capacity
    horizon = math.log(1.0 / TAIL_MASS) / model.mu * 1.01
    z0 = np.zeros(c + 2)
    z0[model.start_state - 1] = 1.0
    sol = integrate.solve_ivp(
        _trapping_rhs(c, model.lam, model.mu),
        (0.0, horizon),
        z0,
        method="DOP853",
        rtol=rtol,
        atol=1e-13,
        t_eval=None if t_eval is None else np.asarray(t_eval, dtype=float),
    )
    if not sol.success:
        raise QuadratureError(f"trapping ODE integration failed: {sol.message}")
    return TrappingTrajectory(sol.t, sol.y[:c], sol.y[c], sol.y[c + 1], horizon)


def repacking_ode_oracle(model: RepackingModel) -> float:
    """Repacking probability by direct time integration of the ODE system."""
    if model.lam == 0.0:
        return 0.0
    traj = solve_trapping_ode(model)
    return min(max(float(traj.expected_trap[-1]) / model.capacity, 0.0), 1.0)


def repacking_monte_carlo(
    model: RepackingModel, trials: int, rng: np.random.Generator, chunk: int = 1 << 20
) -> tuple[float, float]:
    """Monte-Carlo estimate of the repacking probability and its standard error.

    Simulates the embedded jump chain of the birth-death process together with
    the competing exponential lifetime of the tagged lightpath.
    """
    done = hits = 0
    while done < trials:
        u = rng.random(chunk)
        completed, h, _ = kernels.trap_trials(
            u, model.start_state, model.capacity, model.lam, model.mu, trials - done
        )
        done += completed
        hits += h
    p_hit = hits / trials
    stderr = math.sqrt(p_hit * (1.0 - p_hit) / trials)
    return p_hit / model.capacity, stderr / model.capacity


def route_repacking(link_probs: Iterable[float]) -> float:
    """Route repacking probability from independent per-link values."""
    keep = 1.0
    for p in link_probs:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability out of range: {p}")
        keep *= 1.0 - p
    return 1.0 - keep


# ---------------------------------------------------------------------------
# Edge cost and path probability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeReliability:
    """Reconfiguration probabilities of link ``(i, j)`` and its head router ``j``."""

    link_failure: float
    repacking: float
    router_failure: float
    usable: bool = True

    def probabilities(self) -> tuple[float, float, float]:
        return (self.link_failure, self.repacking, self.router_failure)


def _clamp(p: float) -> float:
    if p < 0.0:
        raise ValueError(f"negative probability {p}")
    return PROB_CEILING if p > PROB_CEILING else p


def edge_cost(rel: EdgeReliability) -> float:
    """``-ln(1-F_ij) - ln(1-R_ij) - ln(1-F_j)`` or ``inf`` for an edge with no
    free channel. A probability of exactly 1 also makes the edge unusable."""
    if not rel.usable:
        return math.inf
    cost = 0.0
    for p in rel.probabilities():
        if p >= 1.0:
            log.warning("edge probability %.17g >= 1; treating edge as unusable", p)
            return math.inf
        cost -= math.log1p(-_clamp(p))
    return cost


def path_reconfig_probability(rels: Iterable[EdgeReliability]) -> float:
    """Probability that a lightpath on the route is reconfigured at least once."""
    keep = 1.0
    for rel in rels:
        if not rel.usable or any(p >= 1.0 for p in rel.probabilities()):
            raise ValueError("path contains an unusable edge")
        for p in rel.probabilities():
            keep *= 1.0 - _clamp(p)
    return 1.0 - keep


# ---------------------------------------------------------------------------
# Repacking table used by routing
# ---------------------------------------------------------------------------

REPACKING_MODES = ("ode", "closed-form")


@dataclass
class RepackingTable:
    """Memoized repacking probabilities keyed by ``(C, N0, rho)``.

    ``mode="ode"`` returns the trapping-model value (the same quantity the
    ODE oracle integrates, computed exactly); ``mode="closed-form"`` returns
    the Erlang-ratio expression. Keys use the exact float ``rho``, so a
    memoized value is never an approximation of the requested one.
    """

    mode: str = "ode"
    _rows: dict[tuple[int, int, float], tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in REPACKING_MODES:
            raise ValueError(f"unknown repacking mode {self.mode!r}")

    def _row(self, capacity: int, occupancy: int, rho: float) -> tuple[float, float]:
        key = (capacity, occupancy, float(rho))
        row = self._rows.get(key)
        if row is None:
            model = RepackingModel(capacity, occupancy, key[2], 1.0)
            try:
                closed = repacking_closed_form(model)
            except DegenerateModelError:
                closed = math.nan
            row = (repacking_probability(model), closed)
            self._rows[key] = row
        return row

    def probability(self, capacity: int, occupancy: int, lam: float, mu: float) -> float:
        if lam <= 0.0:
            return 0.0
        ode, closed = self._row(capacity, occupancy, lam / mu)
        if self.mode == "ode":
            return ode
        if math.isnan(closed):
            raise DegenerateModelError("closed-form repacking probability undefined")
        return closed

    def precompute(self, capacity: int, rhos: Iterable[float]) -> None:
        for rho in rhos:
            for occupancy in range(capacity):
                self._row(capacity, occupancy, rho)

    def __len__(self) -> int:
        return len(self._rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["C", "N0", "rho", "R_ode", "R_closed_form"])
        for (c, n0, rho), (ode, closed) in sorted(self._rows.items()):
            writer.writerow([c, n0, repr(rho), repr(ode), repr(closed)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, mode: str = "ode") -> "RepackingTable":
        table = cls(mode)
        for row in csv.DictReader(io.StringIO(text)):
            key = (int(row["C"]), int(row["N0"]), float(row["rho"]))
            table._rows[key] = (float(row["R_ode"]), float(row["R_closed_form"]))
        return table
