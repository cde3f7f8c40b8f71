import csv
import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from multicause.cli import main

REPO = Path(__file__).resolve().parent.parent


def write_config(tmp_path: Path, payload: dict) -> Path:
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(payload))
    return path


def read_rows(path: Path) -> list[dict]:
    with path.open() as fh:
        return list(csv.DictReader(fh))


def linear_payload(**overrides):
    payload = {
        "m": 6,
        "a": 1.0,
        "b": 0.1,
        "gamma": 1.0,
        "sigma2_u": 1.0,
        "sigma2_a": 1.0,
        "sigma2_y": 1.0,
        "c_grid": {"start": 0.1, "stop": 6.0, "num": 40},
    }
    payload.update(overrides)
    return payload


def binary_payload(**overrides):
    payload = {"m": 6, "pi_u": 0.3, "p_a0": 0.1, "p_a1": 0.9, "outcome": {"slope": 0.5, "shift": 2.0}}
    payload.update(overrides)
    return payload


def estimate_payload(**overrides):
    payload = {
        "generator": {"m": 6, "pi_u": 0.3, "p_a0": 0.2, "p_a1": 0.8,
                      "outcome": {"slope": 0.5, "shift": 1.0}},
        "proxies": {"z1": [0.02, 0.98], "z2": [0.02, 0.98]},
        "target_a": [1, 1, 1, 1, 1, 0],
        "gamma_targets": [-2.0, 0.0, 2.0],
        "n": 500,
        "replications": 2,
        "lam": 0.1,
        "settings": ["standard", "proxy"],
        "fit": {"restarts": 1, "max_iters": 300, "tol": 1.0e-4},
        "seed": 5,
    }
    payload.update(overrides)
    return payload


def positivity_payload(**overrides):
    payload = {"pi_u": 0.3, "p_a0": 0.1, "p_a1": 0.9, "m_list": [2, 8],
               "n_cloud": 60, "n_rate": 5000, "seed": 7}
    payload.update(overrides)
    return payload


class TestLinearIgnorance:
    def test_headers_and_self_check(self, tmp_path):
        cfg = write_config(tmp_path, linear_payload())
        out = tmp_path / "out"
        assert main(["linear-ignorance", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_rows(out / "linear_ignorance.csv")
        assert list(rows[0].keys()) == [
            "c", "valid", "s_c", "beta_shift_norm", "sigma2_y1", "cov_match_residual",
        ]
        assert len(rows) == 40
        valid_rows = [r for r in rows if r["valid"] == "1"]
        assert valid_rows
        assert all(float(r["cov_match_residual"]) < 1e-10 for r in valid_rows)
        s_values = [float(r["s_c"]) for r in valid_rows]
        assert min(s_values) < 0.0 and max(s_values) > 1.0

    def test_gamma_zero_multiplier_is_constant_one(self, tmp_path):
        cfg = write_config(tmp_path, linear_payload(gamma=0.0))
        out = tmp_path / "out"
        assert main(["linear-ignorance", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_rows(out / "linear_ignorance.csv")
        assert all(float(r["s_c"]) == 1.0 for r in rows)
        assert all(r["valid"] == "1" for r in rows)

    def test_identity_row_has_zero_shift(self, tmp_path):
        cfg = write_config(tmp_path, linear_payload(c_grid=[0.5, 1.0, 2.0]))
        out = tmp_path / "out"
        assert main(["linear-ignorance", "--config", str(cfg), "--out", str(out)]) == 0
        row = [r for r in read_rows(out / "linear_ignorance.csv") if float(r["c"]) == 1.0][0]
        assert float(row["beta_shift_norm"]) == 0.0
        assert float(row["s_c"]) == 1.0


class TestBinaryIgnorance:
    def test_collapse_and_containment(self, tmp_path):
        cfg = write_config(tmp_path, binary_payload())
        out = tmp_path / "out"
        assert main(["binary-ignorance", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_rows(out / "binary_ignorance.csv")
        assert list(rows[0].keys()) == ["s", "lo", "hi", "pi_do_true", "pi_obs", "width"]
        assert len(rows) == 7
        assert float(rows[3]["width"]) < 1e-12  # collapse at s = m/2
        for r in rows:
            lo, hi = float(r["lo"]), float(r["hi"])
            assert lo - 1e-12 <= float(r["pi_do_true"]) <= hi + 1e-12
            assert lo - 1e-12 <= float(r["pi_obs"]) <= hi + 1e-12

    def test_width_limits_at_strong_separation(self, tmp_path):
        cfg = write_config(tmp_path, binary_payload(p_a0=0.01, p_a1=0.99))
        out = tmp_path / "out"
        assert main(["binary-ignorance", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_rows(out / "binary_ignorance.csv")
        assert abs(float(rows[0]["width"]) - 0.3) < 0.05
        assert abs(float(rows[6]["width"]) - 0.7) < 0.05


class TestEstimate:
    def test_headers_and_summary(self, tmp_path):
        cfg = write_config(tmp_path, estimate_payload())
        out = tmp_path / "out"
        assert main(["estimate", "--config", str(cfg), "--out", str(out)]) == 0
        detail = read_rows(out / "estimate.csv")
        assert list(detail[0].keys()) == [
            "setting", "gamma_target", "rep", "pi_do_hat", "gamma_hat", "converged",
        ]
        assert len(detail) == 2 * 2 * 3  # settings x reps x gamma grid
        summary = read_rows(out / "estimate_summary.csv")
        assert list(summary[0].keys()) == [
            "setting", "gamma_target", "mean_pi_do_hat", "sd_pi_do_hat",
        ]
        assert len(summary) == 2 * 3
        assert all(0.0 <= float(r["pi_do_hat"]) <= 1.0 for r in detail)

    def test_standard_only_setting(self, tmp_path):
        cfg = write_config(tmp_path, estimate_payload(settings=["standard"]))
        out = tmp_path / "out"
        assert main(["estimate", "--config", str(cfg), "--out", str(out)]) == 0
        detail = read_rows(out / "estimate.csv")
        assert {r["setting"] for r in detail} == {"standard"}

    def test_worker_pool_matches_sequential(self, tmp_path):
        blobs = {}
        for workers in (1, 2):
            base = tmp_path / f"w{workers}"
            base.mkdir()
            cfg = write_config(base, estimate_payload(workers=workers))
            out = base / "out"
            assert main(["estimate", "--config", str(cfg), "--out", str(out)]) == 0
            blobs[workers] = (out / "estimate.csv").read_bytes()
        assert blobs[1] == blobs[2]


class TestPositivity:
    def test_outputs(self, tmp_path):
        cfg = write_config(tmp_path, positivity_payload())
        out = tmp_path / "out"
        assert main(["positivity", "--config", str(cfg), "--out", str(out)]) == 0
        for m in (2, 8):
            rows = read_rows(out / f"positivity_m{m}.csv")
            assert list(rows[0].keys()) == ["u", "x1", "x2", "u_hat"]
            assert len(rows) == 60
            assert all(0.0 <= float(r["x1"]) <= 1.0 for r in rows)
        rates = read_rows(out / "positivity_rates.csv")
        assert list(rates[0].keys()) == ["m", "misclass_rate", "hoeffding_bound"]
        assert float(rates[1]["misclass_rate"]) <= float(rates[0]["misclass_rate"]) + 0.02

    def test_odd_m_rejected_before_sampling(self, tmp_path):
        cfg = write_config(tmp_path, positivity_payload(m_list=[2, 7]))
        out = tmp_path / "out"
        assert main(["positivity", "--config", str(cfg), "--out", str(out)]) == 2
        assert not out.exists()


class TestManifest:
    def test_checksums_match_emitted_files(self, tmp_path):
        cfg = write_config(tmp_path, binary_payload())
        out = tmp_path / "out"
        assert main(["binary-ignorance", "--config", str(cfg), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["experiment"] == "binary-ignorance"
        assert manifest["config"]["pi_u"] == 0.3
        assert manifest["files"]
        for name, digest in manifest["files"].items():
            assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest

    @pytest.mark.parametrize(
        "experiment,payload",
        [
            ("linear-ignorance", linear_payload(c_grid=[0.5, 1.0, 2.0])),
            ("binary-ignorance", binary_payload()),
            ("estimate", estimate_payload(gamma_targets=[0.0], replications=1)),
            ("positivity", positivity_payload(m_list=[2], n_rate=2000)),
        ],
    )
    def test_reruns_are_byte_identical(self, tmp_path, experiment, payload):
        cfg = write_config(tmp_path, payload)
        outs = []
        for tag in ("one", "two"):
            out = tmp_path / tag
            assert main([experiment, "--config", str(cfg), "--out", str(out)]) == 0
            outs.append(out)
        manifests = [json.loads((o / "manifest.json").read_text()) for o in outs]
        assert manifests[0]["files"] == manifests[1]["files"]
        for name in manifests[0]["files"]:
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


class TestErrorHandling:
    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["estimate", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) == 2
        assert "not found" in capsys.readouterr().err

    def test_malformed_yaml_reports_location(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("m: 6\n  pi_u: [unclosed\n")
        assert main(["binary-ignorance", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "line" in capsys.readouterr().err

    def test_missing_field_named(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"m": 6, "pi_u": 0.3})
        assert main(["binary-ignorance", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "p_a0" in capsys.readouterr().err

    def test_unknown_field_named(self, tmp_path, capsys):
        cfg = write_config(tmp_path, binary_payload(bogus=1))
        assert main(["binary-ignorance", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_empty_grid_rejected(self, tmp_path):
        cfg = write_config(tmp_path, linear_payload(c_grid=[]))
        assert main(["linear-ignorance", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_degenerate_posterior_is_numerical_failure(self, tmp_path, capsys):
        cfg = write_config(tmp_path, binary_payload(p_a0=1.0e-12, p_a1=0.9999))
        assert main(["binary-ignorance", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
        assert "numerical failure" in capsys.readouterr().err


def test_module_entry_point_runs(tmp_path):
    cfg = write_config(tmp_path, binary_payload())
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "multicause", "binary-ignorance",
         "--config", str(cfg), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "manifest.json").is_file()
    assert "wrote" in proc.stdout


def test_repo_configs_parse():
    from multicause.experiments import (
        BinaryIgnoranceConfig,
        EstimateConfig,
        LinearIgnoranceConfig,
        PositivityConfig,
    )

    pairs = [
        ("linear_ignorance.yaml", LinearIgnoranceConfig),
        ("binary_ignorance.yaml", BinaryIgnoranceConfig),
        ("estimate.yaml", EstimateConfig),
        ("positivity.yaml", PositivityConfig),
    ]
    for name, cls in pairs:
        raw = yaml.safe_load((REPO / "configs" / name).read_text())
        cls.from_dict(raw)
