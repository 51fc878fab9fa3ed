"""End-to-end checks of the command line front end.

Each test writes a JSON config under a temp directory, invokes ``cli.main``
in process, and inspects the exit code and the artifacts it wrote.  One test
goes through the installed ``bornlab`` console script in a real subprocess.
"""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from bornlab import cli

C = 0.7071067811865476  # 1/sqrt(2)


def _write_cfg(tmp_path, config, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return path


def _run(tmp_path, config, extra=()):
    path = _write_cfg(tmp_path, config)
    out = tmp_path / "out"
    code = cli.main(["--config", str(path), "--out", str(out), *extra])
    return code, out / config.get("name", config["command"])


def _summary(run_dir):
    return json.loads((run_dir / "summary.json").read_text())


def _csv_columns(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return header, data


# ---------------------------------------------------------------------------
# happy paths

def test_list_states(tmp_path):
    code, run_dir = _run(tmp_path, {"command": "list-states"})
    assert code == 0
    summary = _summary(run_dir)
    kinds = {s["kind"] for s in summary["states"]}
    assert kinds == {"hydrogen", "harmonic", "gaussian", "free_gaussian",
                     "superposition"}
    assert summary["pass"] is True
    assert not (run_dir / "fields.csv").exists()
    assert not (run_dir / "histogram.csv").exists()


def test_expect_hydrogen(tmp_path):
    code, run_dir = _run(tmp_path, {
        "command": "expect",
        "state": {"kind": "hydrogen", "n": 2, "l": 1, "m": 1},
    })
    assert code == 0
    summary = _summary(run_dir)
    checks = summary["checks"]
    assert summary["failures"] == []
    for key in ("momentum_identity_body0", "energy_identity",
                "energy_variance_dirac", "L_z"):
        assert checks[key]["pass"], key
    assert checks["L_z"]["value"] == pytest.approx(1.0, abs=1e-6)
    for entry in checks.values():
        assert {"value", "tol", "provenance"} <= set(entry)
        assert entry["provenance"] in ("identity", "oracle", "threshold")

    header, data = _csv_columns(run_dir / "fields.csv")
    assert header == ["x0", "x1", "x2", "rho", "v0", "v1", "v2",
                      "energy", "mask"]
    assert data.shape == (32 ** 3, 9)
    rho = data[:, 3]
    cell = (data[1, 2] - data[0, 2]) ** 3  # x2 varies fastest
    assert rho.sum() * cell == pytest.approx(1.0, abs=1e-9)

    header, hist = _csv_columns(run_dir / "histogram.csv")
    assert header == ["bin_lo", "bin_hi", "mass"]
    assert hist[:, 2].sum() == pytest.approx(1.0, abs=1e-9)


def test_artifacts_byte_stable(tmp_path):
    config = {
        "command": "expect",
        "state": {"kind": "harmonic", "n": 2},
        "grid": {"extents": [[-8.0, 8.0]], "points": [128]},
    }
    _, first = _run(tmp_path, config)
    blobs = {f: (first / f).read_bytes()
             for f in ("summary.json", "fields.csv", "histogram.csv")}
    path = _write_cfg(tmp_path, config, "again.json")
    out2 = tmp_path / "elsewhere"
    assert cli.main(["--config", str(path), "--out", str(out2)]) == 0
    for fname, blob in blobs.items():
        assert (out2 / "expect" / fname).read_bytes() == blob, fname


def test_evolve_free_gaussian(tmp_path):
    code, run_dir = _run(tmp_path, {
        "command": "evolve",
        "state": {"kind": "gaussian", "sigma": 1.0, "k0": 1.0},
        "grid": {"extents": [[-16.0, 16.0]], "points": [128]},
        "evolution": {"dt": 0.01, "steps": 100},
    })
    assert code == 0
    summary = _summary(run_dir)
    assert summary["dt"] == 0.01
    assert summary["steps"] == 100
    assert summary["checks"]["unitarity"]["pass"]
    assert summary["checks"]["energy_conservation"]["pass"]
    assert (run_dir / "fields.csv").exists()


def test_evolve_without_evolution_section(tmp_path, capsys):
    code, _ = _run(tmp_path, {
        "command": "evolve",
        "state": {"kind": "gaussian"},
        "grid": {"extents": [[-16.0, 16.0]], "points": [128]},
    })
    assert code == 2
    assert "evolution" in capsys.readouterr().err


def test_madelung_check_superposition(tmp_path):
    code, run_dir = _run(tmp_path, {
        "command": "madelung-check",
        "state": {"kind": "superposition",
                  "coefficients": [0.8, 0.6],
                  "states": [{"kind": "harmonic", "n": 0},
                             {"kind": "harmonic", "n": 2}]},
        "grid": {"extents": [[-7.0, 7.0]], "points": [256]},
        "evolution": {"dt": 1e-6, "t": math.pi / 5},
    })
    assert code == 0
    summary = _summary(run_dir)
    assert summary["snapshots"] == "analytic"
    for key in ("continuity_residual", "force_residual",
                "vorticity_residual", "masked_fraction"):
        assert summary["checks"][key]["pass"], key


def test_madelung_center_time_needs_eigenstates(tmp_path, capsys):
    code, _ = _run(tmp_path, {
        "command": "madelung-check",
        "state": {"kind": "gaussian", "sigma": 1.0},
        "grid": {"extents": [[-16.0, 16.0]], "points": [128]},
        "evolution": {"dt": 1e-4, "t": 0.5},
    })
    assert code == 2
    assert "eigenstates" in capsys.readouterr().err


def test_sample_chi_square(tmp_path):
    code, run_dir = _run(tmp_path, {
        "command": "sample",
        "state": {"kind": "harmonic", "n": 0},
        "grid": {"extents": [[-8.0, 8.0]], "points": [256]},
        "samples": 200000,
    }, extra=("--seed", "77"))
    assert code == 0
    summary = _summary(run_dir)
    assert summary["seed"] == 77
    assert summary["checks"]["reproducible"]["pass"]
    assert summary["checks"]["chi_square_p"]["pass"]
    header, data = _csv_columns(run_dir / "histogram.csv")
    assert header == ["bin", "observed", "expected"]
    assert data[:, 1].sum() == pytest.approx(200000)


def test_moments_superposition_matches_pinned_values(tmp_path):
    # equal-weight (0, 2) oscillator pair with a -i relative phase
    code, run_dir = _run(tmp_path, {
        "command": "moments",
        "state": {"kind": "superposition",
                  "coefficients": [[C, 0.0], [0.0, -C]],
                  "states": [{"kind": "harmonic", "n": 0},
                             {"kind": "harmonic", "n": 2}]},
        "grid": {"extents": [[-10.0, 10.0]], "points": [512]},
        "k_max": 2,
    })
    assert code == 0
    checks = _summary(run_dir)["checks"]
    assert checks["energy_k1_identity"]["pass"]
    assert checks["position_moments"]["pass"]
    k2_flat = checks["energy_k2_kolmogorov"]["value"]
    k2_qm = checks["energy_k2_qm"]["value"]
    assert k2_flat == pytest.approx(2.716228473275737, abs=5e-12)
    assert k2_qm == pytest.approx(3.25, abs=1e-12)
    assert k2_qm - k2_flat == pytest.approx(0.533771526724263, abs=5e-12)


def test_uncertainty_gaussian_saturates(tmp_path):
    code, run_dir = _run(tmp_path, {
        "command": "uncertainty",
        "state": {"kind": "gaussian", "sigma": 2.0},
        "grid": {"extents": [[-16.0, 16.0]], "points": [256]},
    })
    assert code == 0
    checks = _summary(run_dir)["checks"]
    assert checks["variance_decomposition"]["pass"]
    assert checks["qm_product"]["value"] == pytest.approx(0.5, rel=1e-9)
    assert checks["m_sigma_v"]["value"] == pytest.approx(0.0, abs=1e-12)


def test_double_slit_mini_geometry(tmp_path):
    code, run_dir = _run(tmp_path, {
        "command": "double-slit",
        "name": "ds-mini",
        "double_slit": {
            "grid": {"extents": [[-24.0, 24.0], [-24.0, 24.0]],
                     "points": [128, 128]},
            "packet": {"center": [-8.0, 0.0], "sigma": [2.0, 3.5],
                       "k0": [5.0, 0.0]},
            "detector_x": 10.0,
            "evolution": {"dt": 0.01, "steps": 400},
        },
        # the shorter mini run leaves ~5e-3 of the mass mid-flight
        "tolerances": {"budget": 0.01},
    })
    assert code == 0
    summary = _summary(run_dir)
    checks = summary["checks"]
    assert checks["fringes_double"]["value"] == 3
    assert checks["fringes_mixture"]["value"] == 1
    assert checks["mixture_distance"]["value"] > 0.4
    assert checks["mirror_symmetry"]["value"] < 1e-12
    header, data = _csv_columns(run_dir / "histogram.csv")
    assert header == ["y", "double", "left", "right", "mixture"]
    mix = 0.5 * (data[:, 2] + data[:, 3])
    assert np.allclose(data[:, 4], mix, atol=1e-15)


# ---------------------------------------------------------------------------
# overrides

def test_override_typing_and_precedence(tmp_path):
    config = {
        "command": "evolve",
        "state": {"kind": "gaussian"},
        "grid": {"extents": [[-16.0, 16.0]], "points": [128]},
        "evolution": {"dt": 0.01, "steps": 20},
    }
    code, _ = _run(tmp_path, config,
                   extra=("--override", "evolution.dt=0.02",
                          "--override", "name=renamed"))
    assert code == 0
    summary = _summary(tmp_path / "out" / "renamed")
    assert summary["dt"] == 0.02  # JSON-typed number, file value beaten
    assert summary["name"] == "renamed"  # bare word stays a string


def test_override_bad_format(tmp_path, capsys):
    code, _ = _run(tmp_path, {"command": "list-states"}, extra=("--override", "dt"))
    assert code == 2
    assert "key=value" in capsys.readouterr().err


def test_override_through_scalar(tmp_path, capsys):
    code, _ = _run(tmp_path, {
        "command": "sample",
        "state": {"kind": "harmonic"},
        "grid": {"extents": [[-8.0, 8.0]], "points": [64]},
        "samples": 1000,
        "seed": 1,
    }, extra=("--override", "samples.deep=2"))
    assert code == 2
    assert "non-object" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# failure exit codes

def test_exit_1_when_a_check_fails(tmp_path):
    # zero tolerance turns the benign two-path energy disagreement into a failure
    code, run_dir = _run(tmp_path, {
        "command": "evolve",
        "state": {"kind": "gaussian", "k0": 1.0},
        "grid": {"extents": [[-16.0, 16.0]], "points": [128]},
        "evolution": {"dt": 0.01, "steps": 50},
        "tolerances": {"energy_drift": 0.0, "unitarity": 0.0},
    })
    assert code == 1
    summary = _summary(run_dir)
    assert summary["pass"] is False
    assert summary["failures"]


def test_exit_2_missing_config(tmp_path, capsys):
    code = cli.main(["--config", str(tmp_path / "absent.json")])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_exit_2_invalid_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{broken")
    assert cli.main(["--config", str(path)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_exit_2_unknown_key_names_path(tmp_path, capsys):
    code, _ = _run(tmp_path, {"command": "expect", "bogus": 1})
    assert code == 2
    err = capsys.readouterr().err
    assert "config error at $" in err
    assert "bogus" in err


def test_exit_2_nested_value_names_path(tmp_path, capsys):
    code, _ = _run(tmp_path, {
        "command": "evolve",
        "state": {"kind": "gaussian"},
        "grid": {"extents": [[-16.0, 16.0]], "points": [128]},
        "evolution": {"dt": -1.0},
    })
    assert code == 2
    assert "$.evolution.dt" in capsys.readouterr().err


def test_exit_2_sample_without_seed(tmp_path, capsys):
    code, _ = _run(tmp_path, {
        "command": "sample",
        "state": {"kind": "harmonic"},
        "grid": {"extents": [[-8.0, 8.0]], "points": [64]},
    })
    assert code == 2
    assert "$.seed" in capsys.readouterr().err


def test_exit_3_numerical_abort(tmp_path, capsys, monkeypatch):
    def blow_up(config):
        raise FloatingPointError("propagation produced non-finite values at step 7")

    monkeypatch.setattr(cli, "run", blow_up)
    code, _ = _run(tmp_path, {"command": "list-states"})
    assert code == 3
    assert "numerical abort" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# console script

def test_console_script_subprocess(tmp_path):
    path = _write_cfg(tmp_path, {"command": "list-states"})
    proc = subprocess.run(
        ["bornlab", "--config", str(path), "--out", str(tmp_path / "out")],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    summary = _summary(tmp_path / "out" / "list-states")
    assert summary["command"] == "list-states"
