import csv
import io
import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from korteweg.cli import DISPERSION_HEADER, main
from korteweg.linear import LinearCoeffs, char_poly, cubic_roots, high_freq_limits, sort_eigenvalues
from korteweg.spectral import GridSpec, write_kwf

ONES = ["--nu", "1", "--eps", "1", "--alpha", "1", "--beta", "1", "--gamma", "1", "--delta", "1"]


def _schema(name):
    return json.loads(resources.files("korteweg").joinpath(f"schemas/{name}.schema.json").read_text())


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _json(capsys, schema, *argv):
    code, out, _ = _run(capsys, *argv)
    doc = json.loads(out)
    jsonschema.validate(doc, _schema(schema))
    return code, doc


def test_stability_stable_and_unstable(capsys):
    code, doc = _json(capsys, "stability", "stability", *ONES)
    assert code == 0 and doc["stable"] and doc["violated"] == []
    args = ["--nu", "1", "--eps", "1", "--alpha", "1", "--beta", "-1", "--gamma", "1", "--delta", "0.5"]
    code, doc = _json(capsys, "stability", "stability", *args)
    assert code == 1 and not doc["stable"]
    assert "gammadelta_beta" in doc["violated"]


def test_stability_without_viscosity_has_no_high_limits(capsys):
    args = ["--nu", "0", "--eps", "1", "--alpha", "1", "--beta", "1", "--gamma", "1", "--delta", "1"]
    code, doc = _json(capsys, "stability", "stability", *args)
    assert doc["high_frequency_limits"] is None


def test_stability_from_model_file(capsys, tmp_path):
    p = tmp_path / "m.toml"
    p.write_text('[model]\nmu = 1.0\nlambda = 0.5\nP1 = { form = "affine", intercept = 0.0, slope = 1.0 }\n')
    from korteweg.config import load_model
    from korteweg.linear import classify_stability, from_equilibrium

    code, doc = _json(capsys, "stability", "stability", "--config", str(p))
    c = from_equilibrium(load_model(p))
    assert doc["coeffs"] == pytest.approx(c.to_dict(), rel=1e-15)
    assert doc["stable"] == classify_stability(c).stable
    assert "model" in doc


def test_stability_usage_errors(capsys):
    assert _run(capsys, "stability", "--nu", "1")[0] == 2
    code, _, err = _run(capsys, "stability", *ONES, "--config", "x.toml")
    assert code == 2


def test_stability_csv(capsys):
    code, out, _ = _run(capsys, "stability", *ONES, "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["condition", "value", "satisfied"] and len(rows) == 7


def test_dispersion_single_point_matches_cubic(capsys):
    code, out, _ = _run(capsys, "dispersion", *ONES, "--xi-min", "1", "--xi-max", "1", "--points", "1")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == DISPERSION_HEADER and len(rows) == 2
    c = LinearCoeffs.from_tuple(1, 1, 1, 1, 1, 1)
    lam = sort_eigenvalues(cubic_roots(char_poly(c, 1.0)))
    got = np.array([float(v) for v in rows[1][1:]]).reshape(3, 2)
    assert np.allclose(got[:, 0] + 1j * got[:, 1], lam, rtol=1e-14, atol=1e-15)
    # roots of the characteristic polynomial independently
    ref = np.sort_complex(np.roots(char_poly(c, 1.0)))
    assert np.allclose(np.sort_complex(got[:, 0] + 1j * got[:, 1]), ref, atol=1e-12)


def test_dispersion_high_end_approaches_limits(capsys):
    args = ["--nu", "3", "--eps", "1", "--alpha", "0.5", "--beta", "1", "--gamma", "0.3", "--delta", "0.2"]
    code, out, _ = _run(capsys, "dispersion", *args, "--xi-min", "1", "--xi-max", "1000", "--points", "7")
    last = np.array([float(v) for v in list(csv.reader(io.StringIO(out)))[-1]])
    assert last[0] == pytest.approx(1e3)
    lam = last[1::2] + 1j * last[2::2]
    lim = high_freq_limits(LinearCoeffs.from_tuple(3, 1, 0.5, 1, 0.3, 0.2))
    # match as multisets scaled by xi^2
    got = sorted(lam / 1e6, key=lambda z: (z.real, z.imag))
    want = sorted(lim, key=lambda z: (z.real, z.imag))
    for a, b in zip(got, want):
        assert abs(a - b) < 0.01 * abs(b)


def test_dispersion_json_and_errors(capsys, tmp_path):
    code, doc = _json(capsys, "dispersion", "dispersion", *ONES, "--points", "5", "--format", "json")
    assert len(doc["xi"]) == 5 and len(doc["eigenvalues"][0]) == 3
    assert _run(capsys, "dispersion", *ONES, "--xi-min", "0")[0] == 2
    assert _run(capsys, "dispersion", *ONES, "--xi-min", "5", "--xi-max", "1")[0] == 2
    code, out, _ = _run(capsys, "dispersion", *ONES, "--out", str(tmp_path), "--plot")
    assert (tmp_path / "dispersion.csv").exists() and (tmp_path / "dispersion.png").exists()


def _besov(capsys, path, *extra):
    return _json(capsys, "besov", "besov", str(path), *extra)


def test_besov_zero_field(capsys, tmp_path):
    g = GridSpec(1, 32)
    write_kwf(tmp_path / "z.kwf", g, np.zeros((1, 32)))
    code, doc = _besov(capsys, tmp_path / "z.kwf", "--s", "1", "--t", "0")
    assert code == 0 and doc["besov"] == 0 and doc["hybrid"] == 0
    assert all(b["l2"] == 0 for b in doc["blocks"])


def test_besov_consistency(capsys, tmp_path):
    g = GridSpec(2, 32)
    x, y = g.coordinates()
    write_kwf(tmp_path / "f.kwf", g, [np.sin(3 * x) * np.cos(y), np.cos(7 * y) + 0.5 * np.sin(x)])
    _, doc = _besov(capsys, tmp_path / "f.kwf", "--s", "0.5")
    assert doc["besov"] == doc["hybrid"]
    _, doc = _besov(capsys, tmp_path / "f.kwf", "--s", "1.5", "--t", "-0.5", "--component", "1")
    blocks = doc["blocks"]
    assert abs(sum(b["besov_weight"] * b["l2"] for b in blocks) - doc["besov"]) <= 1e-12 * doc["besov"]
    assert abs(sum(b["hybrid_weight"] * b["l2"] for b in blocks) - doc["hybrid"]) <= 1e-12 * doc["hybrid"]
    assert _run(capsys, "besov", str(tmp_path / "f.kwf"), "--s", "1", "--component", "2")[0] == 2
    code, out, _ = _run(capsys, "besov", str(tmp_path / "f.kwf"), "--s", "1", "--format", "csv")
    assert out.splitlines()[0] == "level,l2,besov_weight,hybrid_weight"


SIM = """
[grid]
dim = 1
points_per_dim = 32

[solver]
dt = 0.01
t_end = {t_end}
snapshot_every = {every}

[initial]
amplitude = {amp}
max_mode = 3

[diagnostics]
norms = [{{ field = "q", s = 1.0, t = 0.0 }}]

[seed]
value = 5
"""


def _sim_config(tmp_path, t_end=0.1, every=5, amp=1e-2, name="sim.toml"):
    p = tmp_path / name
    p.write_text(SIM.format(t_end=t_end, every=every, amp=amp))
    return p


def test_simulate_writes_outputs(capsys, tmp_path):
    out = tmp_path / "run"
    code, _, _ = _run(capsys, "simulate", "--config", str(_sim_config(tmp_path)), "--out", str(out))
    assert code == 0
    rows = list(csv.reader((out / "diagnostics.csv").open()))
    assert rows[0] == ["t", "energy", "dissipation", "q_hybrid_s-1_t-0"]
    assert len(rows) == 4
    manifest = json.loads((out / "manifest.json").read_text())
    jsonschema.validate(manifest, _schema("manifest"))
    assert len(manifest["snapshots"]) == 3 and (out / "snapshot_00002.kwf").exists()
    assert (out / "diagnostics.png").exists()


def test_simulate_zero_duration(capsys, tmp_path):
    code, out, _ = _run(capsys, "simulate", "--config", str(_sim_config(tmp_path, t_end=0.0, every=1)))
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2 and lines[0].startswith("t,energy,dissipation")
    assert float(lines[1].split(",")[0]) == 0.0


def test_simulate_equilibrium_has_constant_columns(capsys, tmp_path):
    _, out, _ = _run(capsys, "simulate", "--config", str(_sim_config(tmp_path, amp=0.0)))
    cols = np.array([[float(v) for v in r.split(",")] for r in out.splitlines()[1:]]).T
    assert all(np.all(c[1:] == c[0]) for c in cols[1:])


def test_simulate_is_deterministic(capsys, tmp_path):
    p = _sim_config(tmp_path)
    _run(capsys, "simulate", "--config", str(p), "--out", str(tmp_path / "a"), "--no-plot")
    _run(capsys, "simulate", "--config", str(p), "--out", str(tmp_path / "b"), "--no-plot", "--threads", "1")
    assert (tmp_path / "a" / "diagnostics.csv").read_bytes() == (tmp_path / "b" / "diagnostics.csv").read_bytes()
    _run(capsys, "simulate", "--config", str(p), "--out", str(tmp_path / "c"), "--no-plot", "--seed", "6")
    assert (tmp_path / "a" / "diagnostics.csv").read_bytes() != (tmp_path / "c" / "diagnostics.csv").read_bytes()


def test_simulate_blowup_and_usage(capsys, tmp_path):
    code, doc = _json(capsys, "blowup", "simulate", "--config", str(_sim_config(tmp_path, amp=3.0)))
    assert code == 3 and doc["step"] == 0
    assert _run(capsys, "simulate")[0] == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[grid]\nsize = 3\n")
    assert _run(capsys, "simulate", "--config", str(bad))[0] == 2


def test_check_korteweg_identity(capsys):
    code, doc = _json(capsys, "check", "check", "korteweg-identity")
    assert code == 0 and doc["passed"]


def test_check_all_exit_code_matches_results(capsys):
    code, doc = _json(capsys, "check", "check", "all")
    assert len(doc["results"]) == 5
    assert (code == 0) == all(r["passed"] for r in doc["results"])


def test_unknown_suite_lists_choices(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["check", "bogus"])
    assert exc.value.code == 2
    assert "korteweg-identity" in capsys.readouterr().err
