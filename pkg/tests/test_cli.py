"""
Test cases for the command-line surface
"""

import json
import os

import pandas as pd
import pytest

from src.api.cli import build_parser, main, resolve_config
from src.core.errors import EXIT_CHECK_FAILED, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE

FAST_SWEEP = """\
# five-point prediction-only sweep
domain.kind=ellipse
hgrid.min=0.002
hgrid.max=0.01
hgrid.count=5
oracles.effective1d=false
oracles.boundary2d=false
"""


@pytest.fixture
def sweep_config(tmp_path):
    path = tmp_path / "run.txt"
    path.write_text(FAST_SWEEP)
    return str(path)


class TestArguments:
    def test_overrides(self, sweep_config, tmp_path):
        args = build_parser().parse_args(
            ["sweep", "--config", sweep_config, "--out", str(tmp_path / "out"), "--grid-n", "2000", "--fit-alpha0"]
        )
        config = resolve_config(args)
        assert config.degennes.n == 2000
        assert config.output.dir == str(tmp_path / "out")
        assert config.splitting.fit_alpha0
        assert config.hgrid.count == 5

    def test_sign_flag_and_config_key(self, tmp_path):
        for flag in ("--strict-paper-signs", "--literal-signs"):
            assert resolve_config(build_parser().parse_args(["geometry", flag])).output.strict_paper_signs
        path = tmp_path / "signs.txt"
        path.write_text("output.strict_paper_signs=true\n")
        assert resolve_config(build_parser().parse_args(["geometry", "--config", str(path)])).output.strict_paper_signs

    def test_unknown_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main(["transmogrify"])
        assert info.value.code == EXIT_USAGE

    def test_unknown_config_key(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("domain.eccentricity=0.5\n")
        assert main(["geometry", "--config", str(path), "--quiet"]) == EXIT_USAGE

    def test_missing_config_file(self, tmp_path):
        assert main(["geometry", "--config", str(tmp_path / "absent.txt"), "--quiet"]) == EXIT_USAGE


class TestCommands:
    """Exit codes and outputs of the subcommands"""

    def test_coarse_constants_fail_checks(self):
        assert main(["constants", "--grid-n", "500", "--quiet"]) == EXIT_CHECK_FAILED

    def test_circle_has_no_wells(self, tmp_path):
        path = tmp_path / "circle.txt"
        path.write_text("domain.kind=ellipse\ndomain.a=1.0\ndomain.b=1.0\n")
        assert main(["geometry", "--config", str(path), "--quiet"]) == EXIT_NUMERICAL

    def test_geometry_json(self, capsys):
        assert main(["geometry", "--json", "--quiet", "--strict-paper-signs"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["domain"]["kappa_max"] == pytest.approx(2.0, abs=1e-8)
        assert payload["A_u_plus_g"] == "divergent"

    def test_sweep_writes_deterministic_csv(self, sweep_config, tmp_path):
        outputs = []
        for name in ("first", "second"):
            out = tmp_path / name
            assert main(["sweep", "--config", sweep_config, "--out", str(out), "--quiet"]) == EXIT_OK
            outputs.append((out / "sweep.csv").read_bytes())
            assert os.path.exists(out / "resolved_config.txt")
        assert outputs[0] == outputs[1]
        assert outputs[0].startswith(b"# ")

        table = pd.read_csv(tmp_path / "first" / "sweep.csv", comment="#")
        assert len(table) == 5
        assert table["inv_h"].is_monotonic_increasing

    def test_resolved_config_reloads(self, sweep_config, tmp_path):
        out = tmp_path / "out"
        assert main(["sweep", "--config", sweep_config, "--out", str(out), "--quiet"]) == EXIT_OK
        echo = str(out / "resolved_config.txt")
        assert main(["sweep", "--config", echo, "--out", str(tmp_path / "again"), "--quiet"]) == EXIT_OK
        assert (out / "sweep.csv").read_bytes() == (tmp_path / "again" / "sweep.csv").read_bytes()

    def test_fit_alpha0_without_oracle(self, sweep_config, tmp_path):
        code = main(["fit-alpha0", "--config", sweep_config, "--out", str(tmp_path), "--quiet"])
        assert code == EXIT_NUMERICAL

    def test_validate_splitting(self, capsys):
        assert main(["validate", "--only", "splitting", "--json", "--quiet"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["passed"]
        assert all(check["module"] == "splitting" for check in payload["checks"])
