import json
import subprocess
import sys

import pytest

from vce.cli import main
from vce.convex import l1_instance


@pytest.fixture
def files(tmp_path):
    (tmp_path / "pts.json").write_text(json.dumps(
        {"alphabet": {"kind": "finite", "size": 2}, "points": [[0, 0, 0], [1, 1, 0], [0, 1, 1], [1, 0, 1]]}))
    (tmp_path / "real.csv").write_text("0.1,0.2\n-0.5,0.9\n0.7,-0.3\n0.0,0.0\n")
    (tmp_path / "cls.csv").write_text("0.1,0.5,-0.2\n-0.4,0.3,0.6\n0.8,-0.7,0.1\n0.2,0.2,0.2\n")
    (tmp_path / "sets.json").write_text(json.dumps({"n": 6, "sets": [[0, 1, 2], [2, 3, 4], [1, 4, 5]]}))
    (tmp_path / "l1.json").write_text(json.dumps(l1_instance(3).to_dict()))
    (tmp_path / "poly.json").write_text(json.dumps({"generators": [[1, 0], [0, 1]]}))
    return tmp_path


COMMANDS = [
    ["vc", "--input", "pts.json"],
    ["vc", "--input", "pts.json", "--boolean"],
    ["fat", "--class", "cls.csv", "--eps", "0.2"],
    ["cover", "--input", "real.csv", "--gauge", '{"kind":"lp","p":2}', "--radius", "0.5"],
    ["pack", "--input", "real.csv", "--gauge", '{"kind":"lp","p":"inf"}', "--radius", "0.5", "--bracket"],
    ["extract-cubes", "--input", "pts.json", "--eps", "0.3"],
    ["extract-coords", "--sets", "sets.json", "--eps", "0.5", "-k", "3"],
    ["refine", "--input", "real.csv", "--t", "0.1", "-k", "1"],
    ["elton", "--instance", "l1.json", "--trials", "2000", "--probes", "50"],
    ["minsigns", "--instance", "l1.json"],
    ["entropy", "--class", "cls.csv", "--radius", "0.3"],
    ["dudley", "--polytope", "poly.json", "--trials", "2000"],
    ["verify", "--suite", "haussler", "--trials", "2"],
]


def _run(args, cwd, capsys, monkeypatch):
    monkeypatch.chdir(cwd)
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("args", COMMANDS, ids=lambda a: a[0] + ("-" + a[-1] if a[-1].startswith("--b") else ""))
def test_commands_emit_versioned_json(args, files, capsys, monkeypatch):
    code, out, err = _run(args, files, capsys, monkeypatch)
    assert code == 0, err
    doc = json.loads(out)
    assert doc["schema"] == 1 and doc["command"] == args[0] and doc["seed"] == 0
    assert "elapsed_ms" in doc
    for path, digest in doc["inputs"].items():
        assert digest.startswith("sha256:")


@pytest.mark.parametrize("args", COMMANDS, ids=lambda a: a[0])
def test_csv_format_has_metadata_and_header(args, files, capsys, monkeypatch):
    code, out, err = _run(args + ["--format", "csv", "--seed", "3"], files, capsys, monkeypatch)
    assert code == 0, err
    lines = out.splitlines()
    assert lines[0] == "# schema: 1" and "# seed: 3" in lines
    body = [l for l in lines if not l.startswith("#")]
    assert len(body) >= 1


def test_out_file_and_thread_independence(files, capsys, monkeypatch):
    monkeypatch.chdir(files)
    docs = []
    for threads in ("1", "4"):
        assert main(["verify", "--suite", "fat-chain", "--trials", "4", "--threads", threads,
                     "--out", f"r{threads}.json"]) == 0
        doc = json.loads((files / f"r{threads}.json").read_text())
        doc.pop("elapsed_ms")
        doc["result"].pop("runtime_ms")
        docs.append(json.dumps(doc, sort_keys=True))
    assert docs[0] == docs[1]


def test_usage_and_input_errors_exit_1(files, capsys, monkeypatch):
    monkeypatch.chdir(files)
    with pytest.raises(SystemExit) as exc:
        main(["vc"])
    assert exc.value.code == 1
    assert main(["vc", "--input", "missing.json"]) == 1
    assert "no such file" in capsys.readouterr().err
    (files / "bad.json").write_text("{")
    assert main(["vc", "--input", "bad.json"]) == 1
    assert main(["cover", "--input", "real.csv", "--gauge", "{oops", "--radius", "0.5"]) == 1
    assert main(["extract-cubes", "--input", "pts.json", "--eps", "0.9"]) == 1
    assert main(["verify", "--suite", "haussler", "--config", '{"bogus": 1}']) == 1


def test_budget_exhaustion_exits_2(files, capsys, monkeypatch):
    monkeypatch.chdir(files)
    (files / "rud.json").write_text(json.dumps({"body": {"kind": "rudelson", "n": 12, "delta": 0.3, "seed": 1}}))
    assert main(["elton", "--instance", "rud.json", "--trials", "2000", "--budget-ms", "20"]) == 2
    monkeypatch.setenv("VCE_BUDGET_MS", "20")
    assert main(["elton", "--instance", "rud.json", "--trials", "2000"]) == 2


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "vce.cli", "cover", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "--gauge" in res.stdout
