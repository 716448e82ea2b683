"""
Tests for CSV/JSON export of results.
"""

import io
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.core.analysis_service import AnalysisService
from src.core.export_service import CURVE_HEADER, ExportService
from src.core.simulation import CalibrationResult
from src.data.models import Dataset, EstimatorMethod
from src.utils.config import Config
from src.utils.exceptions import ErrorCode, ExportError


@pytest.fixture
def frame() -> pd.DataFrame:
    return pd.DataFrame({"r": [1.3, 1.5], "estimate": [0.25, np.nan]})


class TestExportFrame:
    """Tests for ExportService.export_frame."""

    def test_csv_to_stream(self, frame: pd.DataFrame) -> None:
        """Test CSV goes to the stream when no path is given."""
        stream = io.StringIO()
        rows = ExportService(stream).export_frame(frame)
        assert rows == 2
        assert stream.getvalue().splitlines() == ["r,estimate", "1.3,0.25", "1.5,"]

    def test_csv_header_lines(self, frame: pd.DataFrame) -> None:
        """Test header lines precede the column row."""
        stream = io.StringIO()
        ExportService(stream).export_frame(frame, header=("# one", "# two"))
        assert stream.getvalue().splitlines()[:3] == ["# one", "# two", "r,estimate"]

    def test_json_nan_is_null(self, frame: pd.DataFrame) -> None:
        """Test NaN becomes null and metadata sits beside the rows."""
        stream = io.StringIO()
        ExportService(stream).export_frame(frame, fmt="json", metadata={"n": np.int64(12)})
        payload = json.loads(stream.getvalue())
        assert payload["metadata"] == {"n": 12}
        assert payload["rows"][1] == {"r": 1.5, "estimate": None}

    def test_writes_file(self, frame: pd.DataFrame, tmp_path: Path) -> None:
        """Test a path creates parent directories and the file."""
        target = tmp_path / "nested" / "out.csv"
        ExportService().export_frame(frame, target)
        assert target.read_text(encoding="utf-8").startswith("r,estimate\n")

    def test_unknown_format(self, frame: pd.DataFrame) -> None:
        """Test an unsupported format raises an export error."""
        with pytest.raises(ExportError) as exc_info:
            ExportService(io.StringIO()).export_frame(frame, fmt="xlsx")
        assert exc_info.value.code == ErrorCode.DATA_EXPORT_FAILED

    def test_unwritable_path(self, frame: pd.DataFrame, tmp_path: Path) -> None:
        """Test an OS error while writing becomes an export error."""
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        with pytest.raises(ExportError):
            ExportService().export_frame(frame, blocker / "out.csv")


class TestResultExports:
    """Tests for the report-specific writers."""

    def test_estimates_are_byte_identical(
        self, fast_config: Config, small_dataset: Dataset, tmp_path: Path
    ) -> None:
        """Test repeated runs with one seed write identical bytes."""
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            report = AnalysisService(fast_config).estimate(small_dataset, [1.2, 1.5])
            ExportService().export_estimates(report, path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_estimates_json_metadata(self, fast_config: Config, small_dataset: Dataset) -> None:
        """Test the JSON estimates carry the sample summary."""
        stream = io.StringIO()
        report = AnalysisService(fast_config).estimate(small_dataset, [1.2])
        ExportService(stream).export_estimates(report, fmt="json")
        payload = json.loads(stream.getvalue())
        assert payload["metadata"]["n"] == 12
        assert payload["metadata"]["reference"] == "proposed"
        assert len(payload["rows"]) == 4

    def test_curves_document_step_semantics(
        self, fast_config: Config, small_dataset: Dataset
    ) -> None:
        """Test the curve CSV starts with the step-function header."""
        stream = io.StringIO()
        curves = AnalysisService(fast_config).curves(small_dataset, [EstimatorMethod.KM])
        ExportService(stream).export_curves(curves)
        lines = stream.getvalue().splitlines()
        assert tuple(lines[: len(CURVE_HEADER)]) == CURVE_HEADER
        assert lines[len(CURVE_HEADER)] == "method,r,estimate,ci_low,ci_high"
        assert pd.read_csv(io.StringIO(stream.getvalue()), comment="#")["method"].eq("km").all()

    def test_calibration_table(self) -> None:
        """Test one row per calibrated parameter."""
        stream = io.StringIO()
        result = CalibrationResult("alpha", 8.1, 0.5, 0.501, ((10.0, 0.45), (8.1, 0.501)))
        ExportService(stream).export_calibration([result])
        lines = stream.getvalue().splitlines()
        assert lines[0] == "parameter,value,target,achieved,steps"
        assert lines[1] == "alpha,8.1,0.5,0.501,2"
