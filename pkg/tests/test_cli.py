"""
Tests for the command-line entry point

Covers:
- Body and density tokens
- Listings, schemas and exit codes
- End-to-end runs into a temporary output directory
"""

import json
import math

import numpy as np
import pytest

from src.cli import (
    EXIT_FAILURE,
    EXIT_OK,
    RunConfig,
    main,
    parse_body,
    parse_density,
)
from src.errors import ConfigError

FAST = ["--sphere-nodes", "200", "--subsphere-nodes", "16", "--radial-tol", "1e-8"]


@pytest.mark.unit
class TestTokens:
    """Tests for body and density tokens"""

    @pytest.mark.parametrize(
        "token,family,dim",
        [
            ("ball:3", "lp_ball", 3),
            ("ball:4:2.5", "lp_ball", 4),
            ("cube:5", "lp_ball", 5),
            ("cross:3", "lp_ball", 3),
            ("lp:inf:3", "lp_ball", 3),
            ("ellipsoid:2,1,0.5", "ellipsoid", 3),
            ("clp:1:2", "complex_lp", 4),
            ("ccube:3", "complex_lp", 6),
            ("zonal:1,0.2", "zonal", 3),
        ],
    )
    def test_bodies(self, token, family, dim):
        """Test each body token"""
        body = parse_body(token)
        assert body.family.family == family
        assert body.dim == dim

    def test_ball_radius(self):
        """Test the optional radius"""
        assert parse_body("ball:3:2.5").radial(np.array([1.0, 0.0, 0.0])) == 2.5

    @pytest.mark.parametrize("token", ["sphere:3", "cube", "cube:x", "lp:nan:3", "ball:3:1:1"])
    def test_bad_bodies(self, token):
        """Test unknown and malformed body tokens"""
        with pytest.raises(ConfigError):
            parse_body(token)

    def test_densities(self):
        """Test density tokens"""
        assert parse_density("cauchy:4", 3).family == "cauchy"
        assert parse_density("student", 5).descriptor.beta == 3.0
        assert parse_density("student:2", 3).descriptor.beta == 2.0
        assert parse_density("lebesgue", 2).dim == 2

    @pytest.mark.parametrize("token", ["uniform", "cauchy", "gaussian:2", "cauchy:abc"])
    def test_bad_densities(self, token):
        """Test unknown and malformed density tokens"""
        with pytest.raises(ConfigError):
            parse_density(token, 3)


@pytest.mark.unit
class TestRunConfig:
    """Tests for configuration validation"""

    def test_defaults(self):
        """Test the default t grid and rules"""
        cfg = RunConfig(kind="counterexample", seed=3)
        assert cfg.t[0] == 10.0
        assert cfg.t[-1] == 1000.0
        assert cfg.rules().seed == 3

    def test_rule_overrides(self):
        """Test node counts flow into the rule set"""
        rules = RunConfig(kind="radon", sphere_nodes=300, radial_tol=1e-6).rules()
        assert rules.sphere_nodes == 300
        assert rules.radial_tol == 1e-6


@pytest.mark.cli
class TestMain:
    """Tests for main and its exit codes"""

    def test_list_bodies(self, capsys):
        """Test the body listing"""
        assert main(["--list-bodies"]) == EXIT_OK
        assert "clp:P:N" in capsys.readouterr().out

    def test_list_densities(self, capsys):
        """Test the density listing"""
        assert main(["--list-densities"]) == EXIT_OK
        assert "student[:BETA]" in capsys.readouterr().out

    def test_no_command(self, capsys):
        """Test help and a failure code without a subcommand"""
        assert main([]) == EXIT_FAILURE

    def test_schema(self, capsys):
        """Test the RunConfig schema"""
        assert main(["schema", "RunConfig"]) == EXIT_OK
        schema = json.loads(capsys.readouterr().out)
        assert "kind" in schema["properties"]

    def test_schema_needs_model_or_write(self, capsys):
        """Test a bare schema subcommand"""
        assert main(["schema"]) == EXIT_FAILURE

    def test_invalid_config(self, output_dir):
        """Test validation failures exit with 2"""
        argv = ["counterexample", "--sphere-nodes", "1", "--output-dir", str(output_dir)]
        assert main(argv) == EXIT_FAILURE

    def test_missing_body(self, output_dir):
        """Test a bp-check without K"""
        assert main(["bp-check", "--M", "ball:3", "--output-dir", str(output_dir)]) == EXIT_FAILURE

    def test_unreadable_config_file(self, tmp_path):
        """Test a broken config file"""
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["hyperplane", "--config", str(path)]) == EXIT_FAILURE


@pytest.mark.cli
@pytest.mark.integration
class TestRuns:
    """Tests for end-to-end runs"""

    def test_const_section(self, output_dir, capsys):
        """Test the Lebesgue constant-section ball"""
        argv = ["const-section", "--density", "lebesgue", "--Lambda", str(math.pi)]
        assert main(argv + FAST + ["--output-dir", str(output_dir)]) == EXIT_OK

        summary = json.loads(capsys.readouterr().out)
        assert summary["verdict"] == "holds"
        report = json.loads((output_dir / "const-section-seed0.json").read_text())
        assert report["details"]["t"] == pytest.approx(1.0, abs=1e-8)
        assert report["config"]["run"]["density"] == "lebesgue"

    def test_counterexample_files(self, output_dir):
        """Test report, table and plot of a scan"""
        argv = ["counterexample", "--n", "3", "--p", "1", "--t", "2,4,8", "--plot"]
        assert main(argv + FAST + ["--output-dir", str(output_dir)]) == EXIT_OK
        names = sorted(p.name for p in output_dir.iterdir())
        assert names == [
            "counterexample-seed0-table.csv",
            "counterexample-seed0.json",
            "counterexample-seed0.svg",
        ]

    def test_counterexample_rerun_csv(self, tmp_path):
        """Test reruns with the same seed write identical tables"""
        argv = ["counterexample", "--n", "3", "--p", "1", "--t", "2,4,8"] + FAST
        main(argv + ["--output-dir", str(tmp_path / "a")])
        main(argv + ["--output-dir", str(tmp_path / "b")])
        name = "counterexample-seed0-table.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_config_file_with_flag_override(self, tmp_path):
        """Test flags take precedence over the config file"""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"kind": "radon", "body": "zonal:1,0.2", "seed": 1}))
        out = tmp_path / "out"
        assert main(["radon", "--config", str(path), "--seed", "4", "--output-dir", str(out)]) == 0
        report = json.loads((out / "radon-seed4.json").read_text())
        assert report["details"]["verdict"] == "certified-positive"

    def test_bp_check(self, output_dir, capsys):
        """Test a dominated pair of balls holds and writes its direction table"""
        argv = ["bp-check", "--K", "ball:3", "--M", "ball:3:1.2", "--dirs", "6"]
        assert main(argv + FAST + ["--output-dir", str(output_dir)]) == EXIT_OK

        assert json.loads(capsys.readouterr().out)["verdict"] == "holds"
        report = json.loads((output_dir / "bp-check-seed0.json").read_text())
        assert report["domination"] == "verified"
        assert report["ratio"]["value"] < 1.0
        rows = (output_dir / "bp-check-seed0-directions.csv").read_text().splitlines()
        assert rows[0].startswith("xi_1,xi_2,xi_3,section_K")
        assert len(rows) == 7

    def test_bp_suite(self, output_dir):
        """Test --suite writes the suite report and its pair table"""
        argv = ["bp-check", "--suite", "--pairs", "2", "--dirs", "4"]
        assert main(argv + FAST + ["--output-dir", str(output_dir)]) == EXIT_OK

        report = json.loads((output_dir / "bp-suite-seed0.json").read_text())
        assert report["verdict"] == "holds"
        assert report["details"]["all_hold"]
        assert len(report["details"]["pairs"]) == 2
        assert (output_dir / "bp-suite-seed0-pairs.csv").exists()

    def test_radon_sweep(self, output_dir):
        """Test a non-zonal body gets a Radon sweep with intersection-body radii"""
        argv = ["radon", "--body", "cube:3", "--dirs", "4"]
        assert main(argv + FAST + ["--output-dir", str(output_dir)]) == EXIT_OK

        report = json.loads((output_dir / "radon-seed0.json").read_text())
        assert report["details"] == {"directions": 4}
        assert report["verdict"] == "not-assessed"
        rows = (output_dir / "radon-seed0-radon.csv").read_text().splitlines()
        assert rows[0].endswith(",intersection_radius")
        assert len(rows) == 5

    def test_ballbody(self, output_dir):
        """Test norm axioms, identity residuals and ratios of K_f for a cube"""
        argv = ["ballbody", "--body", "cube:3", "--density", "gaussian", "--dirs", "3"]
        argv += ["--trials", "200"] + FAST + ["--radial-tol", "1e-11"]
        assert main(argv + ["--output-dir", str(output_dir)]) == EXIT_OK

        report = json.loads((output_dir / "ballbody-seed0.json").read_text())
        details = report["details"]
        assert report["verdict"] == "holds"
        assert details["norm_axioms"]["trials"] == 200
        assert details["norm_axioms"]["triangle_violations"] == 0
        assert len(details["identity_residuals"]) == 3
        assert 0.0 < details["ratio_min"] <= details["ratio_max"]
        assert (output_dir / "ballbody-seed0-identity.csv").exists()
