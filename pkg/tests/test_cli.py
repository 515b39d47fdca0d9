import json
import math

import pytest

from selfrep import classical as cl
from selfrep import quantum as qm
from selfrep.cli import EXIT_INPUT, EXIT_MISMATCH, EXIT_OK, EXIT_PROPERTY, main
from selfrep.replication import env_copy_setup

A = (1 - math.sqrt(0.19)) / 2


def write(path, obj):
    path.write_text(json.dumps(obj.to_json() if hasattr(obj, "to_json") else obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    return {
        "p": write(tmp_path / "p.json", cl.ProbVec([0.5, 0.5])),
        "q": write(tmp_path / "q.json", cl.ProbVec([1.0, 0.0])),
        "r3": write(tmp_path / "r3.json", cl.ProbVec([0.2, 0.3, 0.5])),
        "rho": write(tmp_path / "rho.json", qm.pure([1, 0])),
        "bad_channel": write(tmp_path / "bad.json", {"kind": "stochastic", "matrix": [[1.2, 0.0], [0.0, 1.0]]}),
    }


def species_config(tmp_path):
    w0, w1 = cl.ProbVec([1, 0]), cl.ProbVec([0, 1])
    write(tmp_path / "channel.json", env_copy_setup(w0).channel)
    write(tmp_path / "s0.json", cl.ProbVec([A, 1 - A]))
    write(tmp_path / "s1.json", cl.ProbVec([1 - A, A]))
    write(tmp_path / "w0.json", w0)
    write(tmp_path / "w1.json", w1)
    cfg = {
        "species": ["s0.json", "s1.json"],
        "env_policy": {"kind": "map", "envs": ["w0.json", "w1.json"]},
        "channel": "channel.json",
        "generations": 1,
        "seed": 3,
    }
    return write(tmp_path / "scenario.json", cfg)


def test_overlap(files, tmp_path, capsys):
    assert main(["overlap", files["p"], files["q"]]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["overlap"] == pytest.approx(0.7071067811865476, abs=1e-15)
    assert report["seed"] == 0 and "tolerances" in report
    assert all(v.startswith("sha256:") for v in report["inputs"].values())


def test_overlap_mismatches(files):
    assert main(["overlap", files["p"], files["r3"]]) == EXIT_MISMATCH
    assert main(["overlap", files["p"], files["rho"]]) == EXIT_MISMATCH


def test_malformed_inputs(files, tmp_path):
    assert main(["overlap", files["p"], str(tmp_path / "missing.json")]) == EXIT_INPUT
    (tmp_path / "junk.json").write_text("{not json")
    assert main(["overlap", files["p"], str(tmp_path / "junk.json")]) == EXIT_INPUT
    assert main(["broadcast-check", "--channel", files["bad_channel"]]) == EXIT_INPUT
    assert main(["--tol", "nosuch=1", "overlap", files["p"], files["q"]]) == EXIT_INPUT


def test_verify_axioms_jsonl(tmp_path):
    out = tmp_path / "axioms.jsonl"
    assert main(["verify-axioms", "--trials", "20", "--seed", "1", "--out", str(out)]) == EXIT_OK
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    assert lines[0]["record"] == "meta" and lines[0]["seed"] == 1
    assert [x["axiom"] for x in lines[1:]] == ["A1", "A2", "A3", "A4"] * 2
    assert all(x["passed"] for x in lines[1:])


def test_verify_axioms_property_failure():
    # a positive tolerance floor cannot be met by exact identities
    assert main(["verify-axioms", "--trials", "5", "--backend", "classical", "--tol", "a1=-1"]) == EXIT_PROPERTY


def test_broadcast_check_diag(capsys):
    assert main(["broadcast-check", "--builtin", "diag", "--dim", "3"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert set(report["checks"].values()) == {"pass"}
    assert report["dims"] == {"d": 3, "e": 1, "r": 1}


def test_toy_diag_fires_witness(capsys):
    assert main(["toy", "--builtin", "diag", "--search", "--restarts", "3"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["witness_fired"] is True
    assert report["search_residual"] > 0.1
    assert report["certified_separable"] is False


def test_toy_needs_something_to_do():
    assert main(["toy"]) == EXIT_INPUT


def test_species_csv(tmp_path):
    cfg = species_config(tmp_path)
    out = tmp_path / "run" / "overlaps.csv"
    assert main(["species", cfg, "--format", "csv", "--out", str(out)]) == EXIT_OK
    rows = out.read_text().splitlines()
    assert rows[0] == "generation,i,j,overlap"
    assert float(rows[-1].split(",")[-1]) == 0.0
    meta = json.loads((tmp_path / "run" / "overlaps.csv.meta.json").read_text())
    assert meta["seed"] == 3
    assert (tmp_path / "run" / "overlaps_joint.csv").exists()


def test_species_bad_config(tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps({"species": []}))
    assert main(["species", str(tmp_path / "cfg.json")]) == EXIT_INPUT


@pytest.mark.parametrize(
    "argv",
    [
        ["verify-axioms", "--trials", "10"],
        ["broadcast-check", "--builtin", "diag"],
        ["toy", "--builtin", "diag", "--search", "--restarts", "2", "--mc-samples", "50"],
        ["clone-search", "{p}", "{q}", "--restarts", "2", "--max-evals", "200"],
    ],
)
def test_reruns_are_byte_identical(argv, files, tmp_path):
    argv = [a.format(**files) for a in argv]
    outs = []
    for run in range(2):
        path = tmp_path / f"out{run}.json"
        assert main(argv + ["--seed", "7", "--out", str(path)]) in (EXIT_OK, EXIT_PROPERTY)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
