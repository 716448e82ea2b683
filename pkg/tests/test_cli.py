"""
End-to-end tests of the gmi command line.
"""

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.core.gmi_estimator import survival_gmi_curve
from src.data.csv_loader import parse_csv
from src.main import build_parser, main

TOY_CSV = "t0,time1,status1\n2,3,1\n4,4,0\n8,12,1\n"


@pytest.fixture
def cli_config(tmp_path: Path) -> Path:
    """Settings file with a small bootstrap."""
    path = tmp_path / "settings.yaml"
    path.write_text(
        "bootstrap:\n  resamples: 20\n  seed: 3\nsimulation:\n  calibration_samples: 20000\n",
        encoding="utf-8",
    )
    return path


def run(*argv: str) -> int:
    return main(list(argv))


class TestParser:
    """Tests for argument parsing."""

    def test_command_required(self) -> None:
        """Test a missing subcommand is a usage error."""
        with pytest.raises(SystemExit) as exc_info:
            build_parser().parse_args([])
        assert exc_info.value.code == 2

    def test_bandwidth_preset(self) -> None:
        """Test preset names resolve to exponents."""
        args = build_parser().parse_args(["estimate", "--bandwidth-exponent", "square_root"])
        assert args.bandwidth_exponent == 0.5

    def test_bad_bandwidth_exponent(self) -> None:
        """Test an unknown preset is rejected by the parser."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["estimate", "--bandwidth-exponent", "wide"])


class TestEstimateCommand:
    """Tests for gmi estimate."""

    def test_writes_csv(self, cli_config: Path, tmp_path: Path) -> None:
        """Test a successful run writes one row per method and threshold."""
        out = tmp_path / "estimates.csv"
        assert run("estimate", "--synthetic", "--config", str(cli_config), "-o", str(out)) == 0
        frame = pd.read_csv(out)
        assert len(frame) == 12
        assert set(frame["r"]) == {1.3, 1.5, 1.7}

    def test_json_from_suffix(self, cli_config: Path, tmp_path: Path) -> None:
        """Test a .json output path selects JSON."""
        out = tmp_path / "estimates.json"
        assert run("estimate", "--synthetic", "--config", str(cli_config), "-o", str(out)) == 0
        assert out.read_text(encoding="utf-8").lstrip().startswith("{")

    def test_table_on_terminal(self, cli_config: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test the default output is a table on stdout."""
        code = run("estimate", "--synthetic", "--config", str(cli_config), "--thresholds", "1.3")
        assert code == 0
        assert "GMI survival" in capsys.readouterr().out

    def test_byte_identical_runs(self, cli_config: Path, tmp_path: Path) -> None:
        """Test two runs with the same seed write the same bytes."""
        outputs = [tmp_path / "one.csv", tmp_path / "two.csv"]
        for out in outputs:
            assert run("estimate", "--synthetic", "--config", str(cli_config), "-o", str(out)) == 0
        assert outputs[0].read_bytes() == outputs[1].read_bytes()

    def test_data_and_synthetic_conflict(
        self, cli_config: Path, csv_file: Callable[..., Path]
    ) -> None:
        """Test --data with --synthetic exits with the usage code."""
        path = csv_file(TOY_CSV)
        assert run("estimate", "--data", str(path), "--synthetic", "--config", str(cli_config)) == 2

    def test_no_data_source(self, cli_config: Path) -> None:
        """Test omitting both data options exits with the usage code."""
        assert run("estimate", "--config", str(cli_config)) == 2

    def test_missing_data_file(
        self, cli_config: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test a missing CSV exits with the data error code."""
        code = run("estimate", "--data", str(tmp_path / "none.csv"), "--config", str(cli_config))
        assert code == 1
        assert "DATA_FILE_NOT_FOUND" in capsys.readouterr().err

    def test_table_format_with_output(self, cli_config: Path, tmp_path: Path) -> None:
        """Test --format table cannot be written to a file."""
        code = run(
            "estimate",
            "--synthetic",
            "--config",
            str(cli_config),
            "--format",
            "table",
            "-o",
            str(tmp_path / "x.txt"),
        )
        assert code == 2

    def test_invalid_config_value(self, tmp_path: Path) -> None:
        """Test configuration problems exit with the usage code."""
        bad = tmp_path / "bad.yaml"
        bad.write_text("bootstrap:\n  resamples: 1\n", encoding="utf-8")
        assert run("estimate", "--synthetic", "--config", str(bad)) == 2


class TestCurveCommand:
    """Tests for gmi curve."""

    def test_toy_curve_matches_estimator(
        self, cli_config: Path, csv_file: Callable[..., Path], tmp_path: Path
    ) -> None:
        """Test the exported proposed curve equals the estimator's step values."""
        data_path = csv_file(TOY_CSV)
        out = tmp_path / "curve.csv"
        code = run(
            "curve",
            "--data",
            str(data_path),
            "--methods",
            "proposed",
            "--config",
            str(cli_config),
            "-o",
            str(out),
        )
        assert code == 0
        exported = pd.read_csv(out, comment="#")
        expected = survival_gmi_curve(parse_csv(data_path))
        np.testing.assert_allclose(exported["r"], expected.thresholds)
        np.testing.assert_allclose(exported["estimate"], expected.values)
        assert out.read_text(encoding="utf-8").startswith("# GMI survival curves")


class TestCompareCommand:
    """Tests for gmi compare."""

    def test_compare_writes_tests(self, cli_config: Path, tmp_path: Path) -> None:
        """Test the Wald table has three comparisons per threshold."""
        out = tmp_path / "tests.csv"
        code = run(
            "compare",
            "--synthetic",
            "--config",
            str(cli_config),
            "--thresholds",
            "1.3",
            "-o",
            str(out),
        )
        assert code == 0
        assert len(pd.read_csv(out)) == 3

    def test_invalid_null_proportion(self, cli_config: Path) -> None:
        """Test a null proportion outside (0, 1) is a usage error."""
        code = run(
            "compare", "--synthetic", "--config", str(cli_config), "--null-proportion", "1.5"
        )
        assert code == 2


class TestSimulationCommands:
    """Tests for gmi simulate and gmi calibrate."""

    def test_calibrate(self, cli_config: Path, tmp_path: Path) -> None:
        """Test alpha and tau rows are written."""
        out = tmp_path / "calibration.csv"
        code = run(
            "calibrate",
            "--sigma",
            "0.3",
            "--correlation",
            "0.5",
            "--censoring",
            "0.2",
            "--config",
            str(cli_config),
            "-o",
            str(out),
        )
        assert code == 0
        frame = pd.read_csv(out)
        assert list(frame["parameter"]) == ["alpha", "tau"]
        assert frame["achieved"].iloc[0] == pytest.approx(0.5, abs=0.005)

    def test_simulate_small_grid(self, cli_config: Path, tmp_path: Path) -> None:
        """Test a two-replicate scenario produces the table layout."""
        grid = tmp_path / "grid.yaml"
        grid.write_text("grid:\n  thresholds: [1.3]\n", encoding="utf-8")
        out = tmp_path / "sim.csv"
        code = run(
            "simulate",
            "--scenarios",
            str(grid),
            "--sigma",
            "0.3",
            "--correlation",
            "0.5",
            "--censoring",
            "0.2",
            "--n",
            "30",
            "--replicates",
            "2",
            "--bootstrap-b",
            "4",
            "--truth",
            "closed_form",
            "--workers",
            "1",
            "--config",
            str(cli_config),
            "-o",
            str(out),
        )
        assert code == 0
        frame = pd.read_csv(out)
        assert len(frame) == 4
        assert set(frame["method"]) == {"Proposed", "KM", "lognormal", "loglogistic"}

    def test_missing_scenario_file(self, cli_config: Path, tmp_path: Path) -> None:
        """Test a nonexistent scenario file is a usage error."""
        code = run(
            "simulate", "--scenarios", str(tmp_path / "none.yaml"), "--config", str(cli_config)
        )
        assert code == 2
