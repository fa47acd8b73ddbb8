import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from regcov import io
from regcov.cli import main
from regcov.detect_sim import Scenario
from regcov.exceptions import ValidationError

from conftest import random_hpd

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


# ----------------------------------------------------------------- formats


@settings(max_examples=50, deadline=None)
@given(rows=st.integers(1, 5), d=st.integers(1, 5), complex_=st.booleans(), data=st.data())
def test_rows_round_trip_exactly(rows, d, complex_, data):
    vals = data.draw(st.lists(finite, min_size=rows * d * 2, max_size=rows * d * 2))
    A = np.array(vals).reshape(rows, d, 2)
    A = A[..., 0] + 1j * A[..., 1] if complex_ else A[..., 0]
    B = io.parse_rows(io.emit_rows(A))
    assert B.dtype == A.dtype
    assert np.array_equal(B, A)


def test_header_and_encoding():
    text = io.emit_rows(np.array([[1 + 2j, 3 - 4j]]))
    assert text.splitlines() == ["# field=complex dim=2", "1,2,3,-4"]


@pytest.mark.parametrize(
    "text,line",
    [
        ("", None),
        ("field=real dim=2\n1,2\n", 1),
        ("# field=real dim=2\n1,2\n3\n", 3),
        ("# field=real dim=2\n1,x\n", 2),
        ("# field=complex dim=1\n1\n", 2),
        ("# field=real dim=2\n1,nan\n", 2),
        ("# field=real dim=2\n", None),
    ],
)
def test_malformed_files_report_line(text, line):
    with pytest.raises(ValidationError) as info:
        io.parse_rows(text, "f.csv")
    if line is not None:
        assert f"f.csv:{line}:" in str(info.value)


def test_read_matrix_requires_square(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("# field=real dim=2\n1,0\n")
    with pytest.raises(ValidationError):
        io.read_matrix(path)
    with pytest.raises(ValidationError):
        io.read_matrix(tmp_path / "missing.csv")


def test_scenario_defaults_and_round_trip(tmp_path):
    path = tmp_path / "s.json"
    path.write_text("{}")
    sc = io.read_scenario(path)
    assert (sc.d, sc.n_train, sc.p, sc.pfa) == (8, 11, 0.75, 1e-2)
    full = Scenario(d=4, steering=tuple(np.array([1, 1j, -1, -1j]) / 2), contamination=(0.2, 10.0))
    io.write_scenario(path, full)
    back = io.read_scenario(path)
    assert back == full and back.digest() == full.digest()


@pytest.mark.parametrize(
    "data",
    [
        {"bogus": 1},
        {"d": 8.5},
        {"d": True},
        {"alpha": "x"},
        {"sinr_grid_db": []},
        {"steering": [1, 0]},
        {"contamination": {"rate": 0.1}},
        {"pfa": 2.0},
        [1, 2],
    ],
)
def test_scenario_schema_rejections(data):
    with pytest.raises(ValidationError):
        io.scenario_from_dict(data)


def test_scenario_contamination_object_form():
    sc = io.scenario_from_dict({"contamination": {"rate": 0.2, "scale": 10}})
    assert sc.contamination == (0.2, 10.0)


# ----------------------------------------------------------------- commands


@pytest.fixture
def batch(tmp_path, rng):
    d = 4
    prior = random_hpd(rng, d)
    X = (rng.standard_normal((12, d)) + 1j * rng.standard_normal((12, d))) / np.sqrt(2)
    io.write_rows(tmp_path / "prior.csv", prior)
    io.write_rows(tmp_path / "x.csv", X)
    return tmp_path, prior, X


def _run(tmp_path, *args):
    return main([str(a) for a in args])


@pytest.mark.parametrize("method", ["tyler", "ptyler", "scm", "pscm", "cg", "pcg"])
def test_estimate_alpha_zero_returns_prior(batch, method):
    tmp, prior, _ = batch
    out = tmp / f"{method}.csv"
    code = _run(tmp, "estimate", "--samples", tmp / "x.csv", "--prior", tmp / "prior.csv",
                "--method", method, "--alpha", 0, "--p", 0.75, "--out", out)
    assert code == 0
    got = io.read_matrix(out)
    expected = prior / np.trace(prior).real if method in ("tyler", "ptyler") else prior
    assert np.allclose(got, expected, atol=1e-13)
    report = json.loads((tmp / f"{method}.csv.report.json").read_text())
    assert report["converged"] is True
    assert set(report) == {"iterations", "final_residual", "converged", "kept_indices"}


def test_estimate_scm_alpha_one_is_sample_covariance(batch):
    tmp, _, X = batch
    out = tmp / "scm.csv"
    assert _run(tmp, "estimate", "--samples", tmp / "x.csv", "--prior", tmp / "prior.csv",
                "--method", "scm", "--alpha", 1, "--out", out) == 0
    hand = sum(np.outer(x, x.conj()) for x in X) / len(X)
    assert np.allclose(io.read_matrix(out), hand, atol=1e-14)


def test_estimate_output_round_trips_bit_identically(batch):
    tmp, prior, X = batch
    out = tmp / "t.csv"
    _run(tmp, "estimate", "--samples", tmp / "x.csv", "--prior", tmp / "prior.csv",
         "--method", "tyler", "--alpha", 0.5, "--out", out)
    M = io.read_matrix(out)
    io.write_rows(tmp / "t2.csv", M)
    assert (tmp / "t2.csv").read_text() == out.read_text()


def test_estimate_non_convergence_exit_code(batch):
    tmp, _, _ = batch
    code = _run(tmp, "estimate", "--samples", tmp / "x.csv", "--prior", tmp / "prior.csv",
                "--method", "tyler", "--alpha", 0.9, "--kmax", 1, "--out", tmp / "o.csv")
    assert code == 2
    assert (tmp / "o.csv").exists()


def test_estimate_input_errors(batch, capsys):
    tmp, _, _ = batch
    (tmp / "bad.csv").write_text("# field=complex dim=4\n1,2\n")
    code = _run(tmp, "estimate", "--samples", tmp / "bad.csv", "--prior", tmp / "prior.csv",
                "--method", "tyler", "--alpha", 0.5, "--out", tmp / "o.csv")
    assert code == 1
    assert "bad.csv:2:" in capsys.readouterr().err
    assert _run(tmp, "estimate", "--samples", tmp / "x.csv", "--prior", tmp / "prior.csv",
                "--method", "tyler", "--alpha", 1.5, "--out", tmp / "o.csv") == 1
    assert _run(tmp, "estimate", "--samples", tmp / "x.csv", "--prior", tmp / "prior.csv",
                "--method", "kelly", "--alpha", 0.5, "--out", tmp / "o.csv") == 1
    assert _run(tmp, "estimate", "--samples", tmp / "none.csv", "--prior", tmp / "prior.csv",
                "--method", "tyler", "--alpha", 0.5, "--out", tmp / "o.csv") == 1
    io.write_rows(tmp / "ind.csv", -np.eye(4))
    assert _run(tmp, "estimate", "--samples", tmp / "x.csv", "--prior", tmp / "ind.csv",
                "--method", "scm", "--alpha", 0.5, "--out", tmp / "o.csv") == 1


def test_anscm_identity(tmp_path):
    io.write_rows(tmp_path / "i.csv", np.eye(3, dtype=complex))
    assert main(["anscm", "--matrix", str(tmp_path / "i.csv"), "--method", "closed",
                 "--out", str(tmp_path / "o.csv")]) == 0
    assert np.allclose(io.read_matrix(tmp_path / "o.csv"), np.eye(3) / 3, atol=1e-12)


def test_anscm_closed_vs_mc(tmp_path, rng):
    io.write_rows(tmp_path / "m.csv", random_hpd(rng, 4))
    n = 200_000
    main(["anscm", "--matrix", str(tmp_path / "m.csv"), "--method", "closed", "--out", str(tmp_path / "c.csv")])
    main(["anscm", "--matrix", str(tmp_path / "m.csv"), "--method", "mc", "--mc-samples", str(n),
          "--seed", "3", "--out", str(tmp_path / "mc.csv")])
    diff = io.read_matrix(tmp_path / "c.csv") - io.read_matrix(tmp_path / "mc.csv")
    assert np.max(np.abs(diff)) <= 4 / np.sqrt(n)


def test_anscm_real_closed_refused(tmp_path, capsys):
    io.write_rows(tmp_path / "r.csv", np.eye(3))
    assert main(["anscm", "--matrix", str(tmp_path / "r.csv"), "--method", "closed",
                 "--out", str(tmp_path / "o.csv")]) == 1
    assert "complex" in capsys.readouterr().err
    assert main(["anscm", "--matrix", str(tmp_path / "r.csv"), "--method", "mc", "--mc-samples", "5000",
                 "--out", str(tmp_path / "o.csv")]) == 0


def _small_scenario(path, **kw):
    data = dict(d=4, n_train=6, burn_in=5, n_states=20, n_trials_pd=2000,
                sinr_grid_db=[-40, 0, 10, 40])
    data.update(kw)
    path.write_text(json.dumps(data))
    return path


def test_calibrate_and_simulate_pipeline(tmp_path):
    sc = _small_scenario(tmp_path / "s.json")
    thr = tmp_path / "t.json"
    args = ["calibrate", "--scenario", str(sc), "--trials", "5000", "--seed", "4", "--out", str(thr)]
    assert main(args) == 0
    first = thr.read_text()
    assert main(args) == 0
    assert thr.read_text() == first
    record = json.loads(first)
    assert record["threshold"] > 0 and len(record["scenario_hash"]) == 64

    out = tmp_path / "curve.csv"
    assert main(["simulate", "--scenario", str(sc), "--threshold", str(thr), "--out", str(out)]) == 0
    text = out.read_text()
    lines = text.splitlines()
    assert lines[0] == "sinr_db,pd,trials,threshold" and len(lines) == 5
    assert float(lines[-1].split(",")[1]) >= 0.99
    assert main(["simulate", "--scenario", str(sc), "--threshold", str(thr), "--out", str(out)]) == 0
    assert out.read_text() == text


def test_calibrate_input_errors(tmp_path):
    sc = _small_scenario(tmp_path / "s.json")
    assert main(["calibrate", "--scenario", str(sc), "--trials", "500", "--out", str(tmp_path / "t")]) == 1
    assert main(["calibrate", "--scenario", str(tmp_path / "nope.json"), "--trials", "5000",
                 "--out", str(tmp_path / "t")]) == 1
    (tmp_path / "bad.json").write_text("{d: 4}")
    assert main(["calibrate", "--scenario", str(tmp_path / "bad.json"), "--trials", "5000",
                 "--out", str(tmp_path / "t")]) == 1


def test_calibrate_median_sanity(tmp_path):
    sc = _small_scenario(tmp_path / "s.json", pfa=0.5, d=8, n_train=11)
    thr = tmp_path / "t.json"
    assert main(["calibrate", "--scenario", str(sc), "--trials", "20000", "--out", str(thr)]) == 0
    from regcov.detect_sim import empirical_pfa

    pfa = empirical_pfa(io.read_scenario(sc), json.loads(thr.read_text())["threshold"], trials=20000, seed=9)
    assert abs(pfa - 0.5) <= 0.02


def test_simulate_rejects_hash_mismatch(tmp_path, capsys):
    sc = _small_scenario(tmp_path / "s.json")
    thr = tmp_path / "t.json"
    main(["calibrate", "--scenario", str(sc), "--trials", "2000", "--out", str(thr)])
    other = _small_scenario(tmp_path / "o.json", alpha=0.5)
    assert main(["simulate", "--scenario", str(other), "--threshold", str(thr),
                 "--out", str(tmp_path / "c.csv")]) == 1
    assert "different scenario" in capsys.readouterr().err


def test_bad_flags_exit_one(capsys):
    assert main(["estimate"]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["estimate", "--help"]) == 0


def test_module_entry_point(tmp_path):
    io.write_rows(tmp_path / "i.csv", np.eye(2, dtype=complex))
    proc = subprocess.run([sys.executable, "-m", "regcov", "anscm", "--matrix", str(tmp_path / "i.csv"),
                           "--method", "closed", "--out", str(tmp_path / "o.csv")], capture_output=True)
    assert proc.returncode == 0, proc.stderr
