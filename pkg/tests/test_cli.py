import json

import pytest

from densify.calculus import SystemId
from densify.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from densify.density import d_rule
from densify.proofio import dump_proof, load_proof
from densify.syntax import parse_hypersequent

from .proofs import H0


@pytest.fixture
def g0_file(tmp_path, g0_proof, giul):
    """
    Fixture to provide the G0 proof as a proof document on disk.
    """
    path = tmp_path / "g0.json"
    path.write_text(dump_proof(g0_proof, giul), encoding="utf-8")
    return path


def test_d_rule(capsys):
    assert main(["d-rule", "--goal", "A => p1 | p1 => C"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "A => C"


def test_prove(capsys, tmp_path):
    assert main(["prove", "--goal", "A => A"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["proof"]["rule"] == "ID"

    out = tmp_path / "proof.json"
    assert main(["--system", "gmtl", "prove", "--goal", "A, B => A", "--out", str(out)]) == EXIT_OK
    system, d = load_proof(out.read_text())
    assert system == SystemId.from_value("gmtl")
    assert str(d.conclusion) == "A, B => A"


def test_not_proved(capsys):
    assert main(["--depth", "2", "prove", "--goal", "=> A"]) == EXIT_FAILED
    assert "not proved" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["prove"],
        ["prove", "--goal", "A => ("],
        ["--system", "nope", "prove", "--goal", "A => A"],
        ["--log-level", "loud", "prove", "--goal", "A => A"],
        ["d-rule", "--goal", "A => p1"],
        ["check", "--in", "missing.json"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_check(capsys, g0_file, g0_proof, tmp_path):
    assert main(["check", "--in", str(g0_file)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("ok: giul proof of")

    bad = tmp_path / "gul.json"
    bad.write_text(dump_proof(g0_proof, SystemId.from_value("gul")), encoding="utf-8")
    assert main(["check", "--in", str(bad)]) == EXIT_FAILED


def test_densify(g0_file, tmp_path):
    out = tmp_path / "out.json"
    trace = tmp_path / "trace"
    assert main(["densify", "--in", str(g0_file), "--out", str(out), "--emit-trace", str(trace)]) == EXIT_OK
    _, proof = load_proof(out.read_text())
    assert proof.conclusion.same_multiset(parse_hypersequent(H0))
    assert (trace / "report.txt").exists()
    assert (trace / "registry.json").exists()


def test_densify_goal(capsys):
    assert main(["densify", "--goal", "p => A | A => p"]) == EXIT_OK
    _, proof = load_proof(capsys.readouterr().out)
    assert str(proof.conclusion) == "A => A"


def test_trace(capsys, g0_file, tmp_path):
    out = tmp_path / "trace"
    assert main(["trace", "--in", str(g0_file), "--out", str(out)]) == EXIT_OK
    assert (out / "report.txt").exists()
    assert (out / "registry.json").exists()
    assert sorted(p.name for p in out.glob("*.json"))[0] == "00_tau.json"
    assert "H1 at" in capsys.readouterr().out


def test_separate_and_extract(capsys, g0_file, tmp_path):
    out = tmp_path / "separated.json"
    assert main(["separate", "--in", str(g0_file), "--entries", "1,2", "--out", str(out)]) == EXIT_OK
    assert out.exists()
    assert "split at [1, 1]: graft" in capsys.readouterr().out
    assert main(["extract", "--in", str(g0_file), "--entries", "3"]) == EXIT_OK
    assert main(["separate", "--in", str(g0_file), "--entries", "one"]) == EXIT_USAGE
    capsys.readouterr()


def test_translate(g0_trace, tmp_path):
    src = tmp_path / "labeled.json"
    src.write_text(dump_proof(g0_trace.tau_star, SystemId.from_value("giul-omega")), encoding="utf-8")
    out = tmp_path / "translated.json"
    assert main(["translate", "--in", str(src), "--out", str(out)]) == EXIT_OK
    system, d = load_proof(out.read_text())
    assert system == SystemId.from_value("giul")
    assert d.conclusion.same_multiset(d_rule(g0_trace.tau_star.conclusion))


def test_fuzz(capsys):
    assert main(["fuzz", "--seed", "3", "--count", "4", "--steps", "5"]) == EXIT_OK
    assert "0 of 4 translations failed" in capsys.readouterr().out


def test_sweep(capsys):
    assert main(["--system", "giul", "sweep", "--seed", "3", "--count", "4"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("giul: ")
    assert "0 failed" in out


def test_check_hand_written_com(capsys, tmp_path):
    doc = {
        "system": "giul",
        "proof": {
            "rule": "COM",
            "conclusion": "A => B | B => A",
            "premises": [{"rule": "ID", "conclusion": "A => A"}, {"rule": "ID", "conclusion": "B => B"}],
        },
    }
    path = tmp_path / "com.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    assert main(["check", "--in", str(path)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("ok: giul proof of")
