"""Command-line interface: ``mrpr <subcommand> ...``.

Exit codes: 0 success, 1 user or configuration error, 2 internal contract
violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from mrpr import kernels
from mrpr.errors import ConfigError, ContractViolation, MrprError
from mrpr.estimator import ArcEstimator, NoiseSpec, kf_predict, kf_step
from mrpr.reliability import (
    RepackingModel,
    erlang_b,
    repacking_closed_form,
    repacking_ode_oracle,
)
from mrpr.routing import LightpathRequest
from mrpr.scenario import ScenarioConfig, load_scenario
from mrpr.sim import MM1_HEADERS, SimState, run_mm1, run_replications

KALMAN_HEADERS = ("iteration", "actual", "measured", "corrected", "estimated")


def _csv_text(headers, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(value):
    return repr(float(value)) if isinstance(value, (float, np.floating)) else value


def _write(out_dir: str, name: str, text: str) -> Path:
    path = Path(out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
        target = path / name
        target.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write {path / name}: {exc.strerror}") from None
    return target


def _require_seed(args, why: str) -> int:
    if args.seed is None:
        raise ConfigError(f"--seed is required ({why})")
    return args.seed


# -- subcommands -----------------------------------------------------------


def cmd_simulate(args) -> int:
    config = load_scenario(args.config)
    if args.seed is not None:
        config.seed = args.seed
        config.validate()
    config.load_topology()  # fail early with a clear diagnostic
    if args.replications < 1:
        raise ConfigError("--replications must be at least 1")
    results = run_replications(config, args.replications, args.workers)
    fields = ("replication", "seed") + tuple(results[0].CSV_FIELDS)
    rows = []
    for rep, metrics in enumerate(results):
        row = metrics.row()
        rows.append([rep, config.seed] + [_fmt(row[f]) for f in fields[2:]])
    target = _write(args.out, "metrics.csv", _csv_text(fields, rows))

    print(f"scenario: {args.config} (seed {config.seed}, {args.replications} replication(s))")
    for rep, m in enumerate(results):
        print(
            f"  rep {rep}: offered={m.offered} blocked={m.blocked} "
            f"P_block={m.blocking_probability:.4f} failures={m.failures} "
            f"reconfigurations={m.reconfigurations} dropped={m.dropped}"
        )
    print(f"wrote {target}")
    return 0


def cmd_mm1(args) -> int:
    seed = _require_seed(args, "the M/M/1 trace is random")
    result = run_mm1(args.lam, args.mu, args.customers, args.queue_size, seed)
    rows = [[_fmt(getattr(r, f)) for f in (
        "clock", "inter_arrival", "next_arrival", "service_begin", "service_time",
        "service_end", "idle", "waiting")] for r in result.records()]  # fmt: skip
    target = _write(args.out, "mm1_trace.csv", _csv_text(MM1_HEADERS, rows))
    print(f"M/M/1 lambda={args.lam} mu={args.mu} customers={len(result)}")
    if result.unstable:
        print("WARNING: lambda >= mu, the queue is unstable; aggregates do not converge")
    print(f"total elapsed time      : {result.elapsed:.4f} usec")
    print(f"average waiting time    : {result.average_waiting:.4f} usec per request")
    print(f"average server idle time: {result.average_idle:.4f} usec per request")
    if result.lost:
        print(f"lost arrivals (queue full): {result.lost}")
    print(f"wrote {target}")
    return 0


def _read_signal(path: str) -> tuple[list[float], list[float] | None]:
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read signal file {path}: {exc.strerror}") from None
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "actual" not in reader.fieldnames:
        raise ConfigError(f"signal file {path} needs an 'actual' column")
    actual, measured = [], []
    try:
        for row in reader:
            actual.append(float(row["actual"]))
            if "measured" in reader.fieldnames:
                measured.append(float(row["measured"]))
    except ValueError as exc:
        raise ConfigError(f"signal file {path}: {exc}") from None
    if not actual:
        raise ConfigError(f"signal file {path} has no rows")
    return actual, (measured if "measured" in reader.fieldnames else None)


def kalman_demo_rows(actual, measured, noise: NoiseSpec, x0: float):
    """Filter ``measured`` and return the five-column trace rows plus the predictions."""
    est = ArcEstimator(x0, noise.q + noise.r, noise)
    rows, priors = [], []
    for k, (a, y) in enumerate(zip(actual, measured), start=1):
        step = kf_step(est, y)
        est = step.estimator
        priors.append(step.prior)
        rows.append((k, a, y, est.x_hat, kf_predict(est, 1).mean))
    return rows, priors


def cmd_kalman_demo(args) -> int:
    if args.q < 0 or args.r < 0:
        raise ConfigError("--q and --r must be nonnegative")
    if args.signal == "synthetic":
        if args.steps < 1:
            raise ConfigError("--steps must be at least 1")
        rng = np.random.default_rng(_require_seed(args, "synthetic signal"))
        actual = [args.start]
        for _ in range(args.steps - 1):
            actual.append(actual[-1] + args.drift + rng.normal(0.0, np.sqrt(args.q)))
        measured = None
    else:
        actual, measured = _read_signal(args.signal)
        actual = actual[: args.steps] if args.steps else actual
        rng = None
    if measured is None:
        rng = rng or np.random.default_rng(_require_seed(args, "measurement noise"))
        measured = [a + rng.normal(0.0, np.sqrt(args.r)) for a in actual]
    measured = measured[: len(actual)]
    x0 = actual[0] - args.drift if args.x0 is None else args.x0
    noise = NoiseSpec(q=args.q, r=args.r, tau=args.drift)
    rows, _ = kalman_demo_rows(actual, measured, noise, x0)
    target = _write(args.out, "kalman_trace.csv",
                    _csv_text(KALMAN_HEADERS, [[_fmt(v) for v in row] for row in rows]))
    print(f"Kalman demo q={args.q} r={args.r} drift={args.drift}")
    print(f"{'iter':>4} {'actual':>10} {'measured':>10} {'corrected':>10} {'estimated':>10}")
    for k, a, y, c, e in rows:
        print(f"{k:>4} {a:>10.4f} {y:>10.4f} {c:>10.4f} {e:>10.4f}")
    print(f"wrote {target}")
    return 0


def cmd_erlang(args) -> int:
    print(repr(erlang_b(args.servers, args.rho)))
    return 0


def cmd_repack(args) -> int:
    model = RepackingModel(args.capacity, args.occupancy, args.lam, args.mu)
    if args.mode == "closed":
        print(repr(repacking_closed_form(model)))
    elif args.mode == "ode":
        print(repr(repacking_ode_oracle(model)))
    else:
        closed = repacking_closed_form(model)
        ode = repacking_ode_oracle(model)
        print(f"closed-form: {closed!r}")
        print(f"ode:         {ode!r}")
        print(f"|difference|: {abs(closed - ode)!r}")
    return 0


def cmd_route(args) -> int:
    if args.config:
        config = load_scenario(args.config)
    else:
        config = ScenarioConfig(seed=0, topology=args.topology or "default", base_dir=Path.cwd())
    if args.converters is not None:
        config.converters = args.converters
    if args.policy:
        config.wavelength_policy = args.policy
    if config.wavelength_policy == "random":
        config.seed = _require_seed(args, "random wavelength policy")
    elif args.seed is not None:
        config.seed = args.seed
    state = SimState(config)
    if args.source not in state.topology.nodes or args.dest not in state.topology.nodes:
        raise ConfigError(f"unknown node in {args.source}->{args.dest}")
    request = LightpathRequest(0, args.source, args.dest, 0.0, config.mean_holding)
    assignment = state.route(request)
    if assignment is None:
        print(f"{args.source}->{args.dest}: blocked")
        return 0
    print(f"route       : {' '.join(assignment.route)}")
    print(f"wavelengths : {' '.join(map(str, assignment.wavelengths))}")
    print(f"cost        : {assignment.cost!r}")
    print(f"reconfig_p  : {assignment.reconfig_prob!r}")
    return 0


# -- parser ----------------------------------------------------------------


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


class _Parser(argparse.ArgumentParser):
    """Usage errors are user errors: exit 1, keeping 2 for contract violations."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mrpr",
        description="Reconfiguration-aware routing for all-optical WDM networks.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s 0.1.0 (kernels: {kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a lightpath scenario")
    p.add_argument("--config", required=True, help="scenario TOML file")
    p.add_argument("--out", required=True, help="output directory for metrics.csv")
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mm1", help="single-server FIFO trace")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--customers", type=int, default=50)
    p.add_argument("--queue-size", type=int, default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory for mm1_trace.csv")
    p.set_defaults(func=cmd_mm1)

    p = sub.add_parser("kalman-demo", help="track a time series with the scalar filter")
    p.add_argument("--q", type=float, default=0.01, help="process noise variance")
    p.add_argument("--r", type=float, default=0.02, help="measurement noise variance")
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--signal", default="synthetic",
                   help="'synthetic' or a CSV file with 'actual' (and optional 'measured')")
    p.add_argument("--drift", type=float, default=0.2, help="per-step drift tau")
    p.add_argument("--start", type=float, default=2.0, help="first synthetic actual value")
    p.add_argument("--x0", type=float, default=None,
                   help="initial estimate (default: first actual value minus drift)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory for kalman_trace.csv")
    p.set_defaults(func=cmd_kalman_demo)

    p = sub.add_parser("erlang", help="Erlang-B loss probability")
    p.add_argument("--servers", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.set_defaults(func=cmd_erlang)

    p = sub.add_parser("repack", help="link repacking probability")
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--occupancy", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--mode", choices=("closed", "ode", "both"), default="ode")
    p.set_defaults(func=cmd_repack)

    p = sub.add_parser("route", help="route one request on an idle network")
    p.add_argument("--source", required=True)
    p.add_argument("--dest", required=True)
    p.add_argument("--config", help="scenario TOML supplying topology and priors")
    p.add_argument("--topology", help="topology file (ignored with --config)")
    p.add_argument("--converters", type=_bool, default=None)
    p.add_argument("--policy", choices=("random", "first-fit"))
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_route)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContractViolation as exc:
        print(f"mrpr: internal error: {exc}", file=sys.stderr)
        return 2
    except (MrprError, ValueError, OSError) as exc:
        print(f"mrpr: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
