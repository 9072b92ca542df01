"""
Scalar Kalman filters for arc travel times and per-resource statistics.

Each arc (or statistic) follows the random-walk-with-drift model::

    x[k+1] = x[k] + u[k] + w[k]      u ~ N(tau(k), drift_var), w ~ N(0, q)
    y[k]   = x[k] + v[k]             v ~ N(0, r)

and is tracked by the standard scalar predictor-corrector recursion.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from mrpr import kernels


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Noise variances and historical drift of one arc.

    ``profile`` maps step index to drift and overrides the constant ``tau``.
    """

    q: float = 0.0
    r: float = 1.0
    tau: float = 0.0
    drift_var: float = 0.0
    profile: Mapping[int, float] | None = None

    def __post_init__(self):
        if self.q < 0 or self.r < 0 or self.drift_var < 0:
            raise ValueError("noise variances must be nonnegative")

    @property
    def q_total(self) -> float:
        return self.q + self.drift_var

    def drift(self, k: int) -> float:
        if self.profile is not None:
            return self.profile.get(k, self.tau)
        return self.tau


@dataclass(frozen=True)
class ArcEstimator:
    """Filtered estimate ``x_hat`` with error variance ``p`` after ``k`` updates."""

    x_hat: float
    p: float
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    k: int = 0

    @classmethod
    def from_measurement(cls, y: float, noise: NoiseSpec) -> "ArcEstimator":
        """Start from a first measurement with variance ``r + q``."""
        return cls(float(y), noise.r + noise.q, noise)


class KalmanStep(NamedTuple):
    prior: float
    prior_var: float
    gain: float
    estimator: ArcEstimator


class Prediction(NamedTuple):
    mean: float
    variance: float


def kf_step(est: ArcEstimator, y: float) -> KalmanStep:
    """One predict/gain/correct cycle, returning the intermediate quantities."""
    if not math.isfinite(y):
        raise ValueError(f"measurement must be finite, got {y}")
    noise = est.noise
    xm = est.x_hat + noise.drift(est.k)
    pm = est.p + noise.q_total
    s = pm + noise.r
    if s > 0.0:
        gain = pm / s
    elif y == xm:
        gain = 0.0
    else:
        raise ValueError(
            "zero prior and measurement variance with a nonzero innovation: "
            "inconsistent noise configuration"
        )
    x = xm + gain * (y - xm)
    updated = replace(est, x_hat=x, p=(1.0 - gain) * pm, k=est.k + 1)
    return KalmanStep(xm, pm, gain, updated)


def kf_update(est: ArcEstimator, y: float) -> ArcEstimator:
    return kf_step(est, y).estimator


def kf_predict(est: ArcEstimator, m: int) -> Prediction:
    """``m``-step-ahead prediction from the current filtered estimate."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    noise = est.noise
    mean = est.x_hat + sum(noise.drift(est.k + i) for i in range(m))
    return Prediction(mean, est.p + m * noise.q_total)


def riccati_fixed_point(q_total: float, r: float) -> float:
    """Steady-state filtered variance: positive root of ``p^2 + Qp - Qr = 0``."""
    return 0.5 * (-q_total + math.sqrt(q_total * q_total + 4.0 * q_total * r))


@dataclass
class KalmanTrace:
    prior: np.ndarray
    prior_var: np.ndarray
    corrected: np.ndarray
    variance: np.ndarray
    gain: np.ndarray


def kalman_filter(
    y: Sequence[float],
    noise: NoiseSpec,
    x0: float,
    p0: float,
    k0: int = 0,
) -> KalmanTrace:
    """Filter a whole measurement series starting from state ``(x0, p0)``.

    Equivalent to folding :func:`kf_step` over ``y`` but runs in the compiled
    kernel when available.
    """
    y = np.ascontiguousarray(y, dtype=float)
    n = len(y)
    tau = np.array([noise.drift(k0 + i) for i in range(n)], dtype=float)
    out = [np.empty(n) for _ in range(5)]
    bad = kernels.kalman_sweep(y, tau, float(x0), float(p0), noise.q_total, noise.r, *out)
    if bad >= 0:
        raise ValueError(f"inconsistent zero-noise configuration at step {bad}")
    return KalmanTrace(*out)


# ---------------------------------------------------------------------------
# Arrival times along a route
# ---------------------------------------------------------------------------


@dataclass
class RouteArrivalEstimate:
    route: list[str]
    z: list[float]
    clamped: int = 0


ArcPredictor = Callable[[tuple[str, str], float], float]


def estimate_arrival_times(
    route: Sequence[str], z1: float, arc_predictor: ArcPredictor
) -> RouteArrivalEstimate:
    """Chain predicted arc travel times from the departure time ``z1``.

    Nodes add no service time. Negative predicted travel times are clamped to
    zero and counted in ``clamped``.
    """
    if not route:
        raise ValueError("route must contain at least one node")
    z = [float(z1)]
    clamped = 0
    for a, b in zip(route, route[1:]):
        try:
            d = arc_predictor((a, b), z[-1])
        except KeyError:
            raise ValueError(f"no travel-time predictor for arc {a}->{b}") from None
        if d < 0:
            d = 0.0
            clamped += 1
        z.append(z[-1] + d)
    return RouteArrivalEstimate(list(route), z, clamped)


def estimator_predictor(
    estimators: Mapping[tuple[str, str], ArcEstimator], step: float = 1.0
) -> ArcPredictor:
    """Arc predictor backed by per-arc filters sampled every ``step`` time units."""

    def predict(arc, t):
        est = estimators[arc]
        ahead = max(0, int(t // step) - est.k)
        return kf_predict(est, ahead).mean

    return predict


# ---------------------------------------------------------------------------
# Per-resource statistics
# ---------------------------------------------------------------------------


@dataclass
class _Channel:
    """One filtered statistic with a prior used until the first sample."""

    prior: float
    noise: NoiseSpec
    est: ArcEstimator | None = None

    @property
    def value(self) -> float:
        return self.prior if self.est is None else self.est.x_hat

    def observe(self, sample: float) -> None:
        if self.est is None:
            self.est = ArcEstimator.from_measurement(sample, self.noise)
        else:
            self.est = kf_update(self.est, sample)


@dataclass
class ResourceStats:
    """Running inter-arrival, holding and failure statistics of a link or router.

    Priors (``math.inf`` allowed for "never observed") stand in until the
    corresponding estimator has seen a sample.
    """

    resource: object
    interarrival: _Channel
    holding: _Channel
    failure: _Channel
    last_arrival: float | None = None
    last_failure: float | None = None

    @classmethod
    def with_priors(
        cls,
        resource,
        noise: NoiseSpec | None = None,
        interarrival: float = math.inf,
        holding: float = 1.0,
        failure: float = math.inf,
        arrival_noise: NoiseSpec | None = None,
    ) -> "ResourceStats":
        noise = noise or NoiseSpec()
        return cls(
            resource,
            _Channel(interarrival, arrival_noise or noise),
            _Channel(holding, noise),
            _Channel(failure, noise),
        )

    @property
    def lam(self) -> float:
        gap = self.interarrival.value
        return 0.0 if math.isinf(gap) else 1.0 / max(gap, 1e-300)

    @property
    def m_h(self) -> float:
        return max(self.holding.value, 1e-300)

    @property
    def mu(self) -> float:
        return 1.0 / self.m_h

    @property
    def m_f(self) -> float:
        return max(self.failure.value, 1e-300)

    def record_arrival(self, t: float) -> "ResourceStats":
        if self.last_arrival is not None:
            if t < self.last_arrival:
                raise ValueError(f"arrival time went backwards ({t} < {self.last_arrival})")
            self.interarrival.observe(t - self.last_arrival)
        self.last_arrival = t
        return self

    def record_release(self, holding: float) -> "ResourceStats":
        if not holding > 0:
            raise ValueError(f"holding time must be positive, got {holding}")
        self.holding.observe(holding)
        return self

    def record_failure(self, t: float) -> "ResourceStats":
        if self.last_failure is not None:
            if t < self.last_failure:
                raise ValueError(f"failure time went backwards ({t} < {self.last_failure})")
            self.failure.observe(t - self.last_failure)
        self.last_failure = t
        return self


def load_drift_profile(text: str) -> dict[str, dict[int, float]]:
    """Parse a drift profile CSV with columns ``arc,k,tau``.

    Arcs are named ``"<from>-<to>"``.
    """
    profiles: dict[str, dict[int, float]] = {}
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"arc", "k", "tau"} <= set(reader.fieldnames):
        raise ValueError("drift profile needs columns arc,k,tau")
    for lineno, row in enumerate(reader, start=2):
        try:
            profiles.setdefault(row["arc"].strip(), {})[int(row["k"])] = float(row["tau"])
        except (TypeError, ValueError):
            raise ValueError(f"drift profile line {lineno}: malformed row {row}") from None
    return profiles
