import csv
import io
import subprocess
import sys
from pathlib import Path

import pytest

from mrpr.cli import KALMAN_HEADERS, main
from mrpr.sim import MM1_HEADERS, SimMetrics

ROOT = Path(__file__).resolve().parents[1]
SMALL = 'seed = 3\nrequests = 400\narrival_rate = 5.0\n[failures.links]\ndist = "exponential"\nmean = 10.0\n'


def read_csv(path):
    return list(csv.reader(io.StringIO(Path(path).read_text())))


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "s.toml"
    path.write_text(SMALL)
    return path


def test_simulate_writes_one_row(scenario, tmp_path, capsys):
    assert main(["simulate", "--config", str(scenario), "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "metrics.csv")
    assert rows[0] == ["replication", "seed", *SimMetrics.CSV_FIELDS]
    assert len(rows) == 2
    assert "P_block" in capsys.readouterr().out


def test_simulate_byte_identical(scenario, tmp_path):
    for out in ("a", "b"):
        main(["simulate", "--config", str(scenario), "--out", str(tmp_path / out),
              "--replications", "2"])
    a = (tmp_path / "a" / "metrics.csv").read_bytes()
    assert a == (tmp_path / "b" / "metrics.csv").read_bytes()
    assert b"\r\n" not in a
    assert len(a.splitlines()) == 3


def test_simulate_seed_override(scenario, tmp_path):
    main(["simulate", "--config", str(scenario), "--out", str(tmp_path / "a"), "--seed", "77"])
    assert read_csv(tmp_path / "a" / "metrics.csv")[1][1] == "77"


def test_simulate_missing_topology(tmp_path, capsys):
    path = tmp_path / "s.toml"
    path.write_text('seed = 1\ntopology = "absent.topo"\n')
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
    assert "absent.topo" in capsys.readouterr().err


def test_simulate_missing_config(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "x.toml"), "--out", str(tmp_path)]) == 1
    assert "x.toml" in capsys.readouterr().err


def test_mm1_table(tmp_path, capsys):
    args = ["mm1", "--lambda", "0.8", "--mu", "1.0", "--customers", "50",
            "--queue-size", "10", "--seed", "1", "--out", str(tmp_path)]
    assert main(args) == 0
    rows = read_csv(tmp_path / "mm1_trace.csv")
    assert tuple(rows[0]) == MM1_HEADERS and len(rows) == 51
    out = capsys.readouterr().out
    assert "average waiting time" in out and "average server idle time" in out
    for row in rows[1:]:
        clock, gap, nxt, begin, service, end, idle, wait = map(float, row)
        assert end == begin + service and wait == begin - clock and idle >= 0


def test_mm1_unstable_flagged(tmp_path, capsys):
    main(["mm1", "--lambda", "2", "--mu", "1", "--seed", "1", "--out", str(tmp_path)])
    assert "unstable" in capsys.readouterr().out


def test_mm1_requires_seed(tmp_path, capsys):
    assert main(["mm1", "--lambda", "0.5", "--mu", "1", "--out", str(tmp_path)]) == 1
    assert "--seed" in capsys.readouterr().err


def test_kalman_demo_five_rows(tmp_path):
    assert main(["kalman-demo", "--seed", "4", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "kalman_trace.csv")
    assert tuple(rows[0]) == KALMAN_HEADERS
    assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4", "5"]


def test_kalman_demo_perfect_measurement(tmp_path):
    main(["kalman-demo", "--r", "0", "--steps", "8", "--seed", "2", "--out", str(tmp_path)])
    for row in read_csv(tmp_path / "kalman_trace.csv")[1:]:
        assert float(row[3]) == float(row[2])


def test_kalman_demo_signal_file(tmp_path):
    sig = tmp_path / "sig.csv"
    sig.write_text("actual,measured\n2.0,2.22\n2.2,2.31\n2.4,2.35\n")
    assert main(["kalman-demo", "--signal", str(sig), "--steps", "0", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "kalman_trace.csv")
    assert len(rows) == 4
    assert rows[1][1:3] == ["2.0", "2.22"]
    assert 2.0 < float(rows[1][3]) < 2.22


def test_kalman_demo_bad_signal(tmp_path, capsys):
    assert main(["kalman-demo", "--signal", str(tmp_path / "none.csv"), "--out", str(tmp_path)]) == 1
    assert "none.csv" in capsys.readouterr().err


def test_erlang(capsys):
    assert main(["erlang", "--servers", "2", "--rho", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.2, abs=1e-15)


def test_repack_modes(capsys):
    base = ["repack", "--capacity", "1", "--occupancy", "0", "--lambda", "1", "--mu", "1"]
    main(base + ["--mode", "ode"])
    assert float(capsys.readouterr().out) == pytest.approx(0.5, abs=1e-6)
    main(base + ["--mode", "closed"])
    assert float(capsys.readouterr().out) == pytest.approx(1.0)
    main(base + ["--mode", "both"])
    out = capsys.readouterr().out
    assert "closed-form" in out and "ode" in out and "|difference|" in out


def test_repack_invalid(capsys):
    assert main(["repack", "--capacity", "2", "--occupancy", "2", "--lambda", "1", "--mu", "1"]) == 1


def test_route(capsys):
    assert main(["route", "--source", "A", "--dest", "H", "--policy", "first-fit"]) == 0
    out = capsys.readouterr().out
    assert "A C E H" in out and "wavelengths : 0 0 0" in out


def test_route_random_needs_seed(capsys):
    assert main(["route", "--source", "A", "--dest", "H"]) == 1
    assert main(["route", "--source", "A", "--dest", "H", "--seed", "3"]) == 0


def test_route_with_config(capsys):
    cfg = ROOT / "scenarios" / "skewed_failures.toml"
    assert main(["route", "--source", "A", "--dest", "H", "--config", str(cfg)]) == 0
    assert "A D F H" in capsys.readouterr().out


def test_route_unknown_node(capsys):
    assert main(["route", "--source", "A", "--dest", "Q", "--policy", "first-fit"]) == 1


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mrpr", "erlang", "--servers", "1", "--rho", "1"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.strip() == "0.5"


def test_no_subcommand():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 1
