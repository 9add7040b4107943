import json
import subprocess
import sys

import pytest

from flashsim.cli import main


def test_run_deadlock_exit(capsys):
    assert main(["run", "bench:toy_mpath", "--max-cycles", "100000"]) == 2
    out = capsys.readouterr().out
    assert "Deadlock" in out and "f1: full" in out


def test_run_bubbles_exit():
    assert main(["run", "bench:toy_mpath", "--transform", "bubbles"]) == 0


def test_cap_exit():
    assert main(["run", "bench:toy_mpath:trip=100", "--transform", "bubbles",
                 "--max-cycles", "20"]) == 3


def test_bad_flag_exit():
    with pytest.raises(SystemExit) as ei:
        main(["run", "bench:toy_mpath", "--bogus"])
    assert ei.value.code == 1


def test_parse_error_exit(tmp_path, capsys):
    p = tmp_path / "bad.flash"
    p.write_text("design d\nfifo f depth=\n")
    assert main(["run", str(p)]) == 1
    assert "ParseError" in capsys.readouterr().err


def test_missing_file_and_bad_bench(capsys):
    assert main(["run", "/nonexistent.flash"]) == 1
    assert main(["run", "bench:unknown"]) == 1


def test_trace_and_report_files(tmp_path):
    t, r = tmp_path / "t.csv", tmp_path / "r.json"
    assert main(["run", "bench:md:trip=10", "--seed", "3", "--trace", str(t),
                 "--report", str(r)]) == 0
    assert t.read_text().startswith("cycle,kind,subject,value,detail\n")
    rep = json.loads(r.read_text())
    assert rep["meta"]["seed"] == 3 and rep["status"] == "Done"


def test_modes(capsys):
    assert main(["run", "bench:toy_mpath:trip=50", "--mode", "naive"]) == 0
    assert main(["run", "bench:toy_mpath:trip=50", "--mode", "oracle"]) == 2


def test_seed_rejected_for_seedless_bench():
    assert main(["run", "bench:toy_mpath", "--seed", "1"]) == 1


@pytest.mark.parametrize("spec", ["bench:toy_mpath:trip=200", "bench:md:trip=30",
                                  "bench:matmul:N=3", "bench:stencil:width=4,height=8"])
def test_compare_equivalent(spec, capsys):
    assert main(["compare", spec]) == 0


def test_compare_naive_md(capsys):
    assert main(["compare", "bench:md", "--naive"]) == 0
    out = capsys.readouterr().out
    assert "naive: sink sequence diverges" in out


def test_compare_deterministic(capsys):
    main(["compare", "bench:md:trip=20", "--naive"])
    a = capsys.readouterr().out
    main(["compare", "bench:md:trip=20", "--naive"])
    assert capsys.readouterr().out == a


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "flashsim.cli", "run", "bench:toy_mpath:trip=20",
                        "--transform", "bubbles"], capture_output=True, text=True)
    assert r.returncode == 0 and "status: Done" in r.stdout
