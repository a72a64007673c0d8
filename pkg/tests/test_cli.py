import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from beamframe import cli
from beamframe.frame import canonical_examples, frame_to_dict, serialize

MU = (1.8751040687119611664, 4.6940911329741745764)


def write(tmp_path, name, frame_or_doc):
    path = tmp_path / name
    text = serialize(frame_or_doc) if not isinstance(frame_or_doc, dict) else json.dumps(frame_or_doc)
    path.write_text(text)
    return path


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(*args):
    return cli.main([str(a) for a in args])


def released_doc():
    doc = frame_to_dict(canonical_examples("star3-planar", delta1=1.9, delta2=2.2, theta_gv=0.1, theta_omega_v=0.2))
    doc.pop("family")
    for c in doc["joints"][0]["couplings"]:
        c["theta_g"][0][0] = 0.0
        c["theta_omega"][0][0] = 0.0
        c["free_g"] = [True, False, False]
        c["free_omega"] = [True, False, False]
    return doc


def test_spectrum_two_beam(tmp_path):
    src = write(tmp_path, "tb.json", canonical_examples("two-beam-1d"))
    out = tmp_path / "s.csv"
    assert run("spectrum", "--input", src, "--output", out, "--count", 2) == 0
    r = rows(out)
    assert [int(x["index"]) for x in r] == [1, 2]
    np.testing.assert_allclose([float(x["mu"]) for x in r], MU, rtol=1e-10)
    np.testing.assert_allclose([float(x["lambda"]) for x in r], [m**4 for m in MU], rtol=1e-10)
    assert r[0]["classification"] == "in-plane" and r[0]["multiplicity"] == "1"
    assert float(r[0]["lambda"]) == float(f"{float(r[0]['lambda']):.17g}")


def test_byte_identical(tmp_path):
    src = write(tmp_path, "tb.json", canonical_examples("two-beam-1d", mass=0.4, theta_g=0.2))
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for o in outs:
        assert run("modes", "--input", src, "--output", o, "--count", 2, "--seed", 3) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()


def test_modes_match_cantilever(tmp_path):
    src = write(tmp_path, "tb.json", canonical_examples("two-beam-1d"))
    out = tmp_path / "m.csv"
    assert run("modes", "--input", src, "--output", out, "--count", 1, "--samples", 21) == 0
    r = [x for x in rows(out) if x["mode"] == "1"]
    X = np.array([float(x["x"]) if x["edge_id"] == "e1" else 1.0 - float(x["x"]) for x in r])
    w = np.array([float(x["w"]) * (1 if x["edge_id"] == "e1" else -1) for x in r])
    mu = MU[0]
    sigma = (math.cosh(mu) + math.cos(mu)) / (math.sinh(mu) + math.sin(mu))
    ref = np.cosh(mu * X) - np.cos(mu * X) - sigma * (np.sinh(mu * X) - np.sin(mu * X))
    scale = (w @ ref) / (ref @ ref)
    np.testing.assert_allclose(w, scale * ref, atol=1e-8)
    joints = json.loads((tmp_path / "m.joints.json").read_text())
    assert joints


def test_decompose_pass(tmp_path, capsys):
    f = canonical_examples("star3-planar", delta1=1.7, delta2=2.5, theta_gv=0.3, theta_omega_eta=0.2, mass=0.4)
    src = write(tmp_path, "star.json", f)
    out = tmp_path / "d.csv"
    assert run("decompose", "--input", src, "--output", out, "--count", 6, "--elements", 40) == 0
    assert "union equality: PASS" in capsys.readouterr().out
    report = json.loads((tmp_path / "d.report.json").read_text())
    assert report


def test_decompose_scalar(tmp_path, capsys):
    src = write(tmp_path, "rel.json", released_doc())
    out = tmp_path / "d.csv"
    assert run("decompose", "--input", src, "--output", out, "--count", 6, "--elements", 40) == 0
    text = capsys.readouterr().out
    assert "FAIL" not in text
    assert {x["decomposition"] for x in rows(out)} >= {"planar", "scalar"}


def test_decompose_nonplanar(tmp_path):
    src = write(tmp_path, "ant.json", canonical_examples("antenna"))
    assert run("decompose", "--input", src, "--output", tmp_path / "d.csv") == cli.EXIT_VALIDATION


def test_oracle_subcommand(tmp_path):
    src = write(tmp_path, "tb.json", canonical_examples("two-beam-1d", mass=1.0, theta_omega=1.0))
    out = tmp_path / "o.csv"
    assert run("oracle", "--input", src, "--output", out, "--count", 3, "--elements", 200) == 0
    r = rows(out)
    assert len(r) == 3
    assert max(float(x["rel_error"]) for x in r) < 1e-6


def test_spectrum_generic_frame(tmp_path):
    doc = released_doc()
    src = write(tmp_path, "gen.json", doc)
    out = tmp_path / "s.csv"
    assert run("spectrum", "--input", src, "--output", out, "--count", 4, "--elements", 60) == 0
    assert {x["method"] for x in rows(out)} == {"oracle"}


def test_validate_ok_and_bad(tmp_path):
    good = write(tmp_path, "good.json", canonical_examples("star3-planar", theta_gv=0.2))
    assert run("validate", "--input", good, "--output", tmp_path / "v.csv") == 0
    assert all(x["status"] == "PASS" for x in rows(tmp_path / "v.csv"))
    doc = frame_to_dict(canonical_examples("star3-planar"))
    doc["joints"][0]["couplings"][0]["theta_g"] = np.diag([-0.1, 0, 0]).tolist()
    bad = write(tmp_path, "bad.json", doc)
    assert run("validate", "--input", bad, "--output", tmp_path / "v2.csv") == cli.EXIT_VALIDATION
    assert any(x["status"] == "FAIL" for x in rows(tmp_path / "v2.csv"))


def test_exit_codes(tmp_path):
    src = write(tmp_path, "tb.json", canonical_examples("two-beam-1d"))
    out = tmp_path / "x.csv"
    assert run("spectrum", "--input", tmp_path / "missing.json", "--output", out) == cli.EXIT_IO
    assert run("spectrum", "--input", src, "--output", tmp_path / "no" / "dir" / "x.csv") == cli.EXIT_IO
    assert run("spectrum", "--input", src, "--output", out, "--count", 0) == cli.EXIT_VALIDATION
    assert run("frobnicate", "--input", src, "--output", out) == cli.EXIT_VALIDATION
    assert run("spectrum", "--input", src, "--output", out, "--tol", -1) == cli.EXIT_VALIDATION
    (tmp_path / "junk.json").write_text("{oops")
    assert run("spectrum", "--input", tmp_path / "junk.json", "--output", out) == cli.EXIT_VALIDATION


def test_family_mismatch(tmp_path):
    doc = frame_to_dict(canonical_examples("two-beam-1d"))
    doc["family"]["params"]["mass"] = 2.0
    src = write(tmp_path, "bad.json", doc)
    assert run("spectrum", "--input", src, "--output", tmp_path / "x.csv") == cli.EXIT_VALIDATION


def test_failed_run_leaves_no_output(tmp_path):
    out = tmp_path / "x.csv"
    run("spectrum", "--input", tmp_path / "missing.json", "--output", out)
    assert not out.exists()
    assert [p.name for p in tmp_path.iterdir()] == []


def test_console_script(tmp_path):
    src = write(tmp_path, "tb.json", canonical_examples("two-beam-1d"))
    out = tmp_path / "s.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "beamframe", "spectrum", "--input", str(src), "--output", str(out), "--count", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert float(rows(out)[0]["mu"]) == pytest.approx(MU[0], rel=1e-10)
