import subprocess
import sys

import pytest

import hybridmarket.stability as stability
from hybridmarket.cli import EXIT_ENGINE, EXIT_INPUT, EXIT_OK, EXIT_PROPERTY, main
from hybridmarket.futures import run_oia3m

SCENARIO = "n_tasks = 3\nn_workers = 8\ntrials = 4\n"


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text(SCENARIO, encoding="utf-8")
    return p


def read_all(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "timing.csv"}


def test_gen_writes_identical_bundles(tmp_path, scenario):
    assert main(["gen", "--spec", str(scenario), "--seed", "5", "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["gen", "--spec", str(scenario), "--seed", "5", "--out", str(tmp_path / "b")]) == EXIT_OK
    assert read_all(tmp_path / "a") == read_all(tmp_path / "b")
    assert set(read_all(tmp_path / "a")) == {"tasks.csv", "workers.csv", "pairs.csv"}


def test_gen_with_default_spec(tmp_path):
    assert main(["gen", "--out", str(tmp_path)]) == EXIT_OK


def test_missing_key_is_an_input_error(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("n_tasks = 3\n", encoding="utf-8")
    assert main(["gen", "--spec", str(p), "--out", str(tmp_path / "o")]) == EXIT_INPUT
    assert "n_workers" in capsys.readouterr().err


def test_bad_line_is_reported(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("n_tasks = 3\nn_workers = x\n", encoding="utf-8")
    assert main(["run", "--spec", str(p), "--out", str(tmp_path / "o")]) == EXIT_INPUT
    assert ":2:" in capsys.readouterr().err


def test_run_selected_methods(tmp_path, scenario, capsys):
    out = tmp_path / "r"
    assert main(["run", "--spec", str(scenario), "--out", str(out), "--methods", "hybrid,conventional_s",
                 "--trials", "5"]) == EXIT_OK
    rows = (out / "results.csv").read_text().splitlines()[1:]
    assert {r.split(",")[0] for r in rows} == {"hybrid", "conventional_s"} and len(rows) == 10
    table = capsys.readouterr().out.splitlines()
    assert table[0].split() == ["method", "service_quality", "RoSQ", "FoDSQ", "worker_utility", "NI", "DIP",
                                "ECIP", "runtime_ms"]


def test_zero_trials_is_an_input_error(tmp_path, scenario):
    assert main(["run", "--spec", str(scenario), "--out", str(tmp_path), "--trials", "0"]) == EXIT_INPUT


def test_unknown_method_is_an_input_error(tmp_path, scenario):
    assert main(["run", "--spec", str(scenario), "--out", str(tmp_path), "--methods", "magic"]) == EXIT_INPUT


def test_missing_spec_file_is_an_input_error(tmp_path):
    assert main(["run", "--spec", str(tmp_path / "nope"), "--out", str(tmp_path)]) == EXIT_INPUT


def test_run_twice_is_byte_identical(tmp_path, scenario):
    for name in ("a", "b"):
        assert main(["run", "--spec", str(scenario), "--seed", "3", "--out", str(tmp_path / name)]) == EXIT_OK
    assert read_all(tmp_path / "a") == read_all(tmp_path / "b")


def test_json_format(tmp_path, scenario):
    assert main(["run", "--spec", str(scenario), "--out", str(tmp_path), "--format", "json"]) == EXIT_OK
    assert (tmp_path / "results.json").exists()


def test_engine_failure_exit_code(tmp_path, scenario, monkeypatch, capsys):
    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setattr("hybridmarket.harness.run_oia3m", boom)
    assert main(["run", "--spec", str(scenario), "--out", str(tmp_path)]) == EXIT_ENGINE
    assert "kaput" in capsys.readouterr().err


def test_sweep_writes_one_directory_per_value(tmp_path, scenario):
    assert main(["sweep", "--spec", str(scenario), "--out", str(tmp_path), "--parameter", "tau",
                 "--grid", "0,0.2", "--trials", "2"]) == EXIT_OK
    assert (tmp_path / "tau=0" / "results.csv").exists() and (tmp_path / "tau=0.2" / "aggregate.json").exists()


def test_sweep_bad_grid(tmp_path, scenario):
    assert main(["sweep", "--spec", str(scenario), "--out", str(tmp_path), "--parameter", "tau",
                 "--grid", "a,b"]) == EXIT_INPUT


def test_stability_passes(capsys):
    assert main(["stability", "--instances", "10"]) == EXIT_OK
    assert "findings: 0" in capsys.readouterr().out


def test_stability_with_no_instances(capsys):
    assert main(["stability", "--instances", "0"]) == EXIT_OK
    assert "instances: 0" in capsys.readouterr().out


def test_stability_rejects_oversized_bounds():
    assert main(["stability", "--instances", "1", "--max-workers", "11"]) == EXIT_INPUT


def test_stability_flags_a_faulty_mechanism(monkeypatch, capsys):
    def lazy(vm, record_history=False):
        # forget the last worker's contracts: the task now wastes budget
        out = run_oia3m(vm, record_history)
        last = vm.n_workers - 1
        by_task = {i: ws - {last} for i, ws in out.contracts_by_task.items()}
        out.contracts_by_task.update(by_task)
        out.contracts_by_worker[last] = frozenset()
        for k in [k for k in out.locked_payments if k[1] == last]:
            del out.locked_payments[k]
        return out

    monkeypatch.setattr(stability, "run_oia3m", lazy)
    assert main(["stability", "--instances", "20"]) == EXIT_PROPERTY
    out = capsys.readouterr().out
    assert "futures type-" in out


def test_ingest(tmp_path):
    trips = tmp_path / "trips.csv"
    trips.write_text("worker_id,active_days,trip_km,pickup_km,dropoff_km\n"
                     "a,31,5,1,2\nb,20,7,2,3\nc,25,4,0.5,1\n", encoding="utf-8")
    assert main(["ingest", "--trips", str(trips), "--tasks", "2", "--out", str(tmp_path / "m")]) == EXIT_OK
    workers = (tmp_path / "m" / "workers.csv").read_text().splitlines()
    assert len(workers) == 4 and workers[1].split(",")[1] == "1.0"


def test_ingest_errors(tmp_path):
    trips = tmp_path / "trips.csv"
    trips.write_text("worker_id,active_days,trip_km,pickup_km,dropoff_km\na,31,nan,1,2\n", encoding="utf-8")
    assert main(["ingest", "--trips", str(trips), "--tasks", "2", "--out", str(tmp_path / "m")]) == EXIT_INPUT
    empty = tmp_path / "empty.csv"
    empty.write_text("worker_id,active_days,trip_km,pickup_km,dropoff_km\n", encoding="utf-8")
    assert main(["ingest", "--trips", str(empty), "--tasks", "2", "--out", str(tmp_path / "m")]) == EXIT_INPUT
    assert main(["ingest", "--trips", str(empty), "--out", str(tmp_path / "m")]) == EXIT_INPUT


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "hybridmarket.cli", "version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()


def test_run_with_a_rationality_violation_exits_4(tmp_path, scenario, monkeypatch, capsys):
    monkeypatch.setattr("hybridmarket.harness.check_ir_futures", lambda out, vm: ["task 0 overspends"])
    assert main(["run", "--spec", str(scenario), "--out", str(tmp_path / "r")]) == EXIT_PROPERTY
    assert "task 0 overspends" in capsys.readouterr().err
    assert main(["sweep", "--spec", str(scenario), "--out", str(tmp_path / "s"), "--parameter", "tau",
                 "--grid", "0.1", "--trials", "1"]) == EXIT_PROPERTY
