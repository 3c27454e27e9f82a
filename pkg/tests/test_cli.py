import csv
import json
from pathlib import Path

import pytest

from shadowlab.cli import main

ROT = """seed = 7
operation = "estimate-set"
output = "{out}"
[model]
name = "rotation"
[schedules]
eps = [0.05, 0.1]
delta = [0.02, 0.01]
[sampling]
count = 3
[estimate]
trials = 3
n_forward = 3
n_backward = 3
[expect]
all_pass = true
"""


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.fixture(scope="module")
def rot_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("rot")
    out = tmp / "out"
    code = main(["run", str(write(tmp, ROT.format(out=out)))])
    return code, out, tmp


def test_run_writes_artifacts(rot_run):
    code, out, _ = rot_run
    assert code == 0
    rows = list(csv.DictReader((out / "results.csv").open(newline="")))
    assert len(rows) == 6 and all(r["label"] == "PASS" for r in rows)
    report = json.loads((out / "report.json").read_text())
    assert report["exit_code"] == 0 and not report["failed_checks"]
    assert report["config"]["estimate"]["max_steps"] == 4000
    assert (out / "plotdata" / "shadowable_set.csv").is_file()


def test_every_pass_row_has_replayable_certificates(rot_run):
    _, out, _ = rot_run
    for r in csv.DictReader((out / "results.csv").open(newline="")):
        stems = r["certificates"].split(";")
        assert stems and stems[0]
        for stem in stems:
            assert main(["replay", str(out / f"{stem}.json"), str(out / f"{stem}.csv"), "--eps", r["eps"]]) == 0


def test_results_are_deterministic(rot_run, tmp_path):
    _, out, _ = rot_run
    out2 = tmp_path / "again"
    assert main(["run", str(write(tmp_path, ROT.format(out=out2)))]) == 0
    assert (out / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()


def test_floats_use_17_digits(rot_run):
    _, out, _ = rot_run
    raw = (out / "results.csv").read_bytes()
    assert b"0.050000000000000003" in raw
    assert raw.count(b"\r\n") == 7


def test_replay_tampered_orbit_fails(rot_run, tmp_path):
    _, out, _ = rot_run
    stem = out / "certificates" / "p0000_e0_t00"
    rows = list(csv.reader(open(f"{stem}.csv", newline="")))
    rows[-1][2] = repr((float(rows[-1][2]) + 0.4) % 1.0)
    bad = tmp_path / "bad.csv"
    with bad.open("w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    assert main(["replay", f"{stem}.json", str(bad), "--eps", "0.05"]) == 1


def test_replay_missing_or_unparsable(rot_run, tmp_path):
    _, out, _ = rot_run
    stem = out / "certificates" / "p0000_e0_t00"
    assert main(["replay", str(tmp_path / "none.json"), f"{stem}.csv", "--eps", "0.05"]) == 2
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    assert main(["replay", str(junk), f"{stem}.csv", "--eps", "0.05"]) == 2


def test_config_errors_exit_2(tmp_path, capsys):
    bad = ROT.format(out=tmp_path / "o").replace("eps = [0.05, 0.1]", "eps = [0.1, 0.05]")
    assert main(["run", str(write(tmp_path, bad))]) == 2
    assert "schedules.eps" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.toml")]) == 2
    unknown = ROT.format(out=tmp_path / "o").replace('name = "rotation"', 'name = "pendulum"')
    assert main(["run", str(write(tmp_path, unknown))]) == 2


def test_failed_expectation_exits_1(tmp_path):
    text = ROT.format(out=tmp_path / "o").replace("all_pass = true", "all_fail = true")
    assert main(["run", str(write(tmp_path, text))]) == 1
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["failed_checks"] == ["expect.all_fail"]


def test_unknown_dominated_exits_3(tmp_path):
    text = ROT.format(out=tmp_path / "o").replace("[expect]", "[search]\nmax_cells = 10.0\n[expect]")
    assert main(["run", str(write(tmp_path, text))]) == 3


def test_verify(tmp_path):
    text = f'seed = 1\noperation = "verify"\noutput = "{tmp_path / "v"}"\n[model]\nname = "north-south"\n'
    assert main(["run", str(write(tmp_path, text))]) == 0
    rows = list(csv.DictReader((tmp_path / "v" / "results.csv").open(newline="")))
    assert {r["suite"] for r in rows} == {"metric", "flow"}


def test_discrete_estimate_writes_witnesses(tmp_path):
    text = (f'seed = 1\noperation = "estimate-point"\noutput = "{tmp_path / "d"}"\n[model]\n'
            'name = "cantor-interval-identity"\n[schedules]\neps = [0.1]\ndelta = [0.05, 0.001]\n'
            '[sampling]\npoints = [[1.5], [0.0]]\n[estimate]\nadversarial_reach = 0.2\n')
    assert main(["run", str(write(tmp_path, text))]) == 0
    rows = list(csv.DictReader((tmp_path / "d" / "results.csv").open(newline="")))
    assert [r["label"] for r in rows] == ["FAIL", "PASS"]
    assert Path(tmp_path / "d" / rows[0]["witness"]).is_file()


def test_models_list(capsys):
    assert main(["models", "list", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert {"rotation", "geometric-lorenz", "sin2"} <= {r["name"] for r in rows}
    assert main(["models", "list"]) == 0
    assert "rotation" in capsys.readouterr().out
