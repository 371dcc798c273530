import os
import subprocess
import sys

import pytest

from rdspsim.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main, parse_seeds
from rdspsim.metrics import CSV_HEADER
from rdspsim.scenario import dump_scenario, builtin_campus, load_scenario


@pytest.fixture
def campus_file(tmp_path):
    # a short campus run keeps the CLI tests quick
    text = dump_scenario(builtin_campus()).replace("duration_s = 550.0", "duration_s = 60.0") \
        .replace("request_window_s = 500.0", "request_window_s = 50.0") \
        .replace("request_count = 100", "request_count = 10")
    path = tmp_path / "campus.txt"
    path.write_text(text)
    return path


def test_run_builtin_writes_trace_and_csv(tmp_path, capsys):
    code = main(["run", "--builtin-campus", "--protocol", "rdsp", "--seed", "1",
                 "--path", "path-3", "--out", str(tmp_path)])
    assert code == EXIT_OK
    trace = tmp_path / "rdsp-path-3-seed1.trace"
    csv = tmp_path / "rdsp-path-3-seed1.csv"
    assert trace.read_text().rstrip("\n").endswith("protocol=rdsp seed=1")
    assert csv.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    assert "sha256" in capsys.readouterr().out


def test_run_missing_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.toy"), "--protocol", "rdsp"]) == EXIT_INVALID
    assert "file not found" in capsys.readouterr().err


def test_bogus_protocol_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--builtin-campus", "--protocol", "bogus"])
    assert exc.value.code == EXIT_USAGE
    assert "invalid choice" in capsys.readouterr().err


def test_needs_a_scenario(capsys):
    assert main(["run", "--protocol", "uf"]) == EXIT_USAGE


def test_invalid_scenario_file(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("[scenario]\nduration_s = -1\n")
    assert main(["run", str(bad), "--protocol", "uf"]) == EXIT_INVALID
    assert "error" in capsys.readouterr().err


def test_trace_and_csv_paths_and_env_dir(tmp_path, campus_file, monkeypatch, capsys):
    monkeypatch.setenv("RDSP_OUT_DIR", str(tmp_path / "env"))
    assert main(["run", str(campus_file), "--protocol", "uf", "--path", "path-1",
                 "--trace", str(tmp_path / "x.trace")]) == EXIT_OK
    assert (tmp_path / "x.trace").exists()
    assert (tmp_path / "env" / "uf-path-1-seed1.csv").exists()


def test_compare_single_seed(tmp_path, campus_file, capsys):
    assert main(["compare", str(campus_file), "--seeds", "1..1", "--out", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "comparison.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 4 * 7
    assert all(r.endswith(",1") for r in rows[1:])
    out = capsys.readouterr().out
    assert "single repeat" in out and "delivery_ratio" in out


def test_compare_output_independent_of_jobs(tmp_path, campus_file, capsys):
    outs = []
    for jobs in ("1", "3"):
        out = tmp_path / jobs
        assert main(["compare", str(campus_file), "--seeds", "1,2", "--jobs", jobs,
                     "--out", str(out)]) == EXIT_OK
        outs.append((out / "comparison.csv").read_bytes())
    assert outs[0] == outs[1]


def test_compare_unwritable_output(tmp_path, campus_file, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code = main(["compare", str(campus_file), "--seeds", "1", "--out", str(blocker / "sub")])
    assert code == EXIT_RUNTIME
    assert "cannot write" in capsys.readouterr().err


def test_radio_flags_reach_the_simulation(tmp_path, campus_file, capsys):
    def e2e(extra):
        out = tmp_path / "_".join(extra or ["plain"])
        main(["run", str(campus_file), "--protocol", "rdsp", "--path", "path-3", "--out",
              str(out), *extra])
        row = [r for r in (out / "rdsp-path-3-seed1.csv").read_text().splitlines()
               if ",end_to_end_delay_s," in r][0]
        return float(row.split(",")[3])

    assert e2e(["--bitrate-bps", "100000"]) > e2e([]) * 2
    assert e2e(["--calibrated"]) > e2e([])


def test_trace_fig7(capsys):
    assert main(["trace-fig7", "--seed", "1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "request route: C, a1, a2, a3, S" in out
    assert "ack route: S, a3, a2, a1, C" in out
    assert "a1=3, a2=2, a3=1" in out
    assert "a11=8, a10=7, a9=6, a8=5, a7=4, a6=3, a5=2, a4=1" in out


def test_export_campus(tmp_path):
    target = tmp_path / "campus.txt"
    assert main(["export-campus", str(target)]) == EXIT_OK
    assert len(load_scenario(target).relays) == 23


@pytest.mark.parametrize("text, seeds", [("1..5", [1, 2, 3, 4, 5]), ("3", [3]), ("1,4,9", [1, 4, 9])])
def test_parse_seeds(text, seeds):
    assert parse_seeds(text) == seeds


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rdspsim", "run", "--builtin-campus"],
                          capture_output=True, text=True, env={**os.environ})
    assert proc.returncode == EXIT_USAGE
