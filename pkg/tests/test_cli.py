"""End-to-end driver tests: exit codes, file contracts, determinism."""

import csv
import json
import math
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from specflow.cli import main
from specflow.fixtures import HAM_ALPHA1

PROPS = {"alpha": "golden", "roof": "example1"}
WITNESS = {
    "alpha": "golden",
    "roof": "example1",
    "n_floor": 5,
    "pairs": [{"x": "1/7", "y": "1/7 + 1/300000"}],
}
COBOUNDARY = {
    "alpha": "golden",
    "zeta": [
        {"n": 1, "cos": 0.3, "sin": -0.2},
        {"n": 3, "sin": 0.11},
        {"n": 5, "cos": 0.07},
    ],
    "n_modes": 5,
    "grid_size": 1000,
    "tolerance": 1e-8,
}
HAM_AREA = {
    "system": "weighted_linear",
    "section": {"x0": 0.25},
    "grid_size": 16,
    "tol": 1e-10,
    "mc_samples": 2000,
    "tolerance": 0.05,
    "seed": 5,
}


def cfg_file(tmp_path: Path, obj) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def run(tmp_path: Path, subcommand: str, obj, *extra: str) -> tuple[int, Path]:
    out = tmp_path / "out"
    code = main(
        [subcommand, "--config", cfg_file(tmp_path, obj), "--out", str(out), *extra]
    )
    return code, out


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestCheckProps:
    def test_json_report(self, tmp_path, capsys):
        code, out = run(tmp_path, "check-props", PROPS)
        assert code == 0
        assert "check-props: ok" in capsys.readouterr().out
        raw = (out / "check-props.json").read_text(encoding="utf-8")
        assert raw.endswith("\n")
        report = json.loads(raw)
        assert report["p1"] == "holds"
        assert report["p2"] == "holds"
        assert report["weak_mixing"] is True
        assert report["verdict"] == "weakly_mixing"
        # canonical serialization: sorted keys, two-space indent
        assert raw == json.dumps(report, sort_keys=True, indent=2) + "\n"

    def test_csv_report(self, tmp_path):
        code, out = run(tmp_path, "check-props", PROPS, "--format", "csv")
        assert code == 0
        header, rows = read_csv(out / "check-props.csv")
        assert header == ["property", "verdict", "detail"]
        assert [r[0] for r in rows] == ["p1", "p2", "weak_mixing"]
        assert not list(out.glob("*.json"))
        assert not list(out.glob("*.svg"))

    def test_unknown_verdict_still_exits_zero(self, tmp_path):
        code, out = run(
            tmp_path, "check-props", {"alpha": "golden", "roof": "p1_fail_orbit"}
        )
        assert code == 0
        report = json.loads((out / "check-props.json").read_text())
        assert report["verdict"] == "unknown"
        assert report["reason"] == "P1 fails"
        assert report["p2"] == "skipped"
        assert report["detail"]["p1_witness"] is not None


class TestBirkhoffAudit:
    def test_csv_rows_certified(self, tmp_path):
        cfg = {
            "alpha": "golden",
            "roof": "example1",
            "n_max": 6,
            "grid_size": 1500,
            "cocycle_checks": 3,
            "seed": 11,
        }
        code, out = run(tmp_path, "birkhoff-audit", cfg, "--format", "csv")
        assert code == 0
        header, rows = read_csv(out / "birkhoff-audit.csv")
        assert header == [
            "n",
            "q_n",
            "max_deviation",
            "variation_bound",
            "float_path_max",
            "consistent",
        ]
        assert len(rows) == 6
        for r in rows:
            assert float(r[2]) <= float(r[3])
            assert r[5] == "true"

    def test_missing_field(self, tmp_path, capsys):
        code, _ = run(
            tmp_path, "birkhoff-audit", {"alpha": "golden", "roof": "example1"}
        )
        assert code == 2
        assert "config error" in capsys.readouterr().err


class TestRatnerWitness:
    def test_frozen_pair(self, tmp_path):
        code, out = run(tmp_path, "ratner-witness", WITNESS)
        assert code == 0
        report = json.loads((out / "ratner-witness.json").read_text())
        (entry,) = report["pairs"]
        assert entry["s"] == 28
        assert entry["M"] == 520854
        assert entry["L"] == 211873
        assert entry["rho_coords"] == ["0", "0", "-1", "0"]
        assert entry["rho_float"] == pytest.approx(-math.sqrt(3))
        assert entry["kappa_check"] is True
        assert entry["N_check"] is True
        assert entry["verified"] is True
        assert entry["fixups"] == 0

    def test_p1_gate_is_a_precondition(self, tmp_path, capsys):
        cfg = dict(WITNESS, roof="p1_fail_orbit")
        code, _ = run(tmp_path, "ratner-witness", cfg)
        assert code == 3
        assert "precondition violated" in capsys.readouterr().err

    def test_pair_too_close_for_certificate(self, tmp_path):
        cfg = dict(WITNESS, pairs=[{"x": "1/7", "y": "1/7 + 1/4000000"}])
        code, _ = run(tmp_path, "ratner-witness", cfg)
        assert code == 3


class TestRProperty:
    def test_shadowing_passes(self, tmp_path):
        cfg = {
            "alpha": "golden",
            "roof": "example1",
            "t0": 2.0,
            "eps": 0.05,
            "n_floor": 5,
            "trials": 2,
            "seed": 3,
        }
        code, out = run(tmp_path, "r-property", cfg)
        assert code == 0
        report = json.loads((out / "r-property.json").read_text())
        assert report["passed"] is True
        assert report["pass_fraction"] == 1.0
        assert len(report["pairs"]) == 2
        for pair in report["pairs"]:
            assert pair["fraction"] == 1.0

    def test_seed_is_mandatory(self, tmp_path, capsys):
        cfg = {
            "alpha": "golden",
            "roof": "example1",
            "t0": 2.0,
            "eps": 0.05,
            "n_floor": 5,
            "trials": 2,
        }
        code, _ = run(tmp_path, "r-property", cfg)
        assert code == 2
        assert "seed" in capsys.readouterr().err


class TestRigidityScan:
    CFG = {
        "alpha": "golden",
        "roof": "example1",
        "n_values": [6],
        "grid_size": 2000,
        "correlation": {
            "n": 6,
            "rect": [[0.1, 0.3, 0.2, 0.8]],
            "n_samples": 5000,
            "seed": 9,
        },
    }

    def test_csv_tables(self, tmp_path):
        code, out = run(tmp_path, "rigidity-scan", self.CFG, "--format", "csv")
        assert code == 0
        header, rows = read_csv(out / "rigidity-scan_qn_distribution.csv")
        assert header == ["n", "q_n", "atom_value", "mass"]
        assert all(r[0] == "6" and r[1] == "13" for r in rows)
        assert sum(Fraction(r[3]) for r in rows) == 1
        header, rows = read_csv(out / "rigidity-scan_correlation.csv")
        assert header == ["t", "estimate", "radius", "n_samples", "seed"]
        assert len(rows) == 1
        assert rows[0][3] == "5000"


class TestEigenTest:
    def test_explicit_and_enumerated_r(self, tmp_path):
        code, out = run(
            tmp_path,
            "eigen-test",
            {"alpha": "golden", "roof": "solvable_eigen", "r_values": ["1", "2"]},
        )
        assert code == 0
        report = json.loads((out / "eigen-test.json").read_text())
        assert [r["solvable"] for r in report["results"]] == [True, True]

        code, out = run(
            tmp_path,
            "eigen-test",
            {
                "alpha": "golden",
                "roof": "example1",
                "r_values": {"max_p": 3, "max_q": 3},
            },
        )
        assert code == 0
        report = json.loads((out / "eigen-test.json").read_text())
        assert len(report["results"]) > 0
        assert not any(r["solvable"] for r in report["results"])


class TestCoboundary:
    def test_solvable_target(self, tmp_path):
        code, out = run(tmp_path, "coboundary", COBOUNDARY)
        assert code == 0
        report = json.loads((out / "coboundary.json").read_text())
        assert report["residual_sup"] <= 1e-8
        assert report["truncated_modes"] == []

    def test_truncation_failure_still_writes_report(self, tmp_path, capsys):
        cfg = dict(COBOUNDARY, zeta=[{"n": 7, "cos": 0.4}], n_modes=3)
        code, out = run(tmp_path, "coboundary", cfg)
        assert code == 1
        assert "verification failed" in capsys.readouterr().err
        report = json.loads((out / "coboundary.json").read_text())
        assert report["residual_sup"] > 1e-8
        assert set(report["truncated_modes"]) == {-7, 7}


class TestHamSection:
    def test_linear_flow_profile(self, tmp_path):
        cfg = {
            "system": "linear_flow",
            "section": {"x0": 0.25},
            "grid_size": 16,
            "tol": 1e-10,
        }
        code, out = run(tmp_path, "ham-section", cfg)
        assert code == 0
        report = json.loads((out / "ham-section.json").read_text())
        assert report["rotation_estimate"] == pytest.approx(HAM_ALPHA1, abs=1e-9)
        assert report["beta_hat"] == []
        assert report["failures"] == []
        assert report["jump_sum"] == 0

    def test_csv_profile_table(self, tmp_path):
        cfg = {
            "system": "linear_flow",
            "section": {"x0": 0.25},
            "grid_size": 16,
            "tol": 1e-10,
        }
        code, out = run(tmp_path, "ham-section", cfg, "--format", "csv")
        assert code == 0
        header, rows = read_csv(out / "ham-section.csv")
        assert header == ["s", "s_return", "return_time"]
        assert len(rows) == 16
        for r in rows:
            assert float(r[2]) == pytest.approx(1.0, abs=1e-9)


class TestHamArea:
    def test_identity_within_tolerance(self, tmp_path):
        code, out = run(tmp_path, "ham-area", HAM_AREA)
        assert code == 0
        report = json.loads((out / "ham-area.json").read_text())
        assert report["discrepancy"] <= 0.05
        assert report["ec_fraction"] == 1.0
        assert report["trap_count"] == 0
        assert report["seed"] == 5

    def test_seed_flag_overrides_config(self, tmp_path):
        code, out = run(tmp_path, "ham-area", HAM_AREA, "--seed", "7")
        assert code == 0
        report = json.loads((out / "ham-area.json").read_text())
        assert report["seed"] == 7

    def test_absurd_tolerance_fails_but_reports(self, tmp_path, capsys):
        cfg = dict(HAM_AREA, tolerance=1e-12)
        code, out = run(tmp_path, "ham-area", cfg)
        assert code == 1
        assert "verification failed" in capsys.readouterr().err
        report = json.loads((out / "ham-area.json").read_text())
        assert report["discrepancy"] > 1e-12


class TestDeterminism:
    def test_same_seed_byte_identical_svg_run(self, tmp_path):
        cfg_path = cfg_file(tmp_path, TestRigidityScan.CFG)
        dirs = (tmp_path / "run1", tmp_path / "run2")
        for d in dirs:
            code = main(
                [
                    "rigidity-scan",
                    "--config",
                    cfg_path,
                    "--out",
                    str(d),
                    "--format",
                    "svg",
                ]
            )
            assert code == 0
        names = sorted(p.name for p in dirs[0].iterdir())
        assert names == sorted(p.name for p in dirs[1].iterdir())
        assert any(n.endswith(".svg") for n in names)
        assert any(n.endswith(".csv") for n in names)
        for name in names:
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()

    def test_same_seed_identical_json(self, tmp_path):
        cfg_path = cfg_file(tmp_path, HAM_AREA)
        outs = []
        for d in ("a", "b"):
            code = main(
                ["ham-area", "--config", cfg_path, "--out", str(tmp_path / d)]
            )
            assert code == 0
            outs.append((tmp_path / d / "ham-area.json").read_bytes())
        assert outs[0] == outs[1]


class TestArgumentErrors:
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main(["renormalize", "--config", "x.json"])
        assert exc.value.code == 2

    def test_config_flag_required(self):
        with pytest.raises(SystemExit) as exc:
            main(["check-props"])
        assert exc.value.code == 2

    def test_malformed_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        code = main(["check-props", "--config", str(path)])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_config_root_must_be_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]", encoding="utf-8")
        assert main(["check-props", "--config", str(path)]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["check-props", "--config", str(tmp_path / "nope.json")]) == 2

    def test_unknown_preset(self, tmp_path):
        code, _ = run(tmp_path, "check-props", {"alpha": "golden", "roof": "example9"})
        assert code == 2

    def test_nested_out_dir_created(self, tmp_path):
        out = tmp_path / "a" / "b" / "c"
        code = main(
            [
                "eigen-test",
                "--config",
                cfg_file(
                    tmp_path,
                    {"alpha": "golden", "roof": "solvable_eigen", "r_values": ["1"]},
                ),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert (out / "eigen-test.json").exists()


class TestConsoleScript:
    def test_installed_entry_point(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {"alpha": "golden", "roof": "solvable_eigen", "r_values": ["1"]}
            ),
            encoding="utf-8",
        )
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "specflow.cli",
                "eigen-test",
                "--config",
                str(cfg),
                "--out",
                str(tmp_path / "out"),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "eigen-test: ok" in proc.stdout
