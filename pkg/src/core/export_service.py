"""Export service for estimates, curves and simulation tables."""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import IO, Any

import pandas as pd

from src.core.analysis_service import CompareReport, CurveExport, EstimateReport
from src.core.scenario_runner import ScenarioResult, grid_frame
from src.core.simulation import CalibrationResult
from src.utils.exceptions import ExportError
from src.utils.logging import get_logger

logger = get_logger(__name__)

CURVE_HEADER = (
    "# GMI survival curves: S(r) = P(T1/T0 > r)",
    "# Each row is a jump point. The estimate holds on [r, next r) for that method",
    "# and the curve equals 1 for r below the first row (right-continuous steps).",
    "# ci_low/ci_high are pointwise log-log intervals.",
)


def _clean(value: Any) -> Any:
    """JSON-safe scalar: NaN and infinities become null, numpy scalars become Python."""
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    return value


class ExportService:
    """Writes results as CSV or JSON to a file or to stdout.

    Output carries no timestamps, so identical inputs and seeds produce
    byte-identical files.
    """

    FORMATS = ("csv", "json")

    def __init__(self, stream: IO[str] | None = None) -> None:
        self._stream = stream
        logger.debug("ExportService initialized")

    @property
    def stream(self) -> IO[str]:
        return self._stream if self._stream is not None else sys.stdout

    def _check_format(self, fmt: str) -> str:
        fmt = fmt.lower()
        if fmt not in self.FORMATS:
            formats = ", ".join(self.FORMATS)
            raise ExportError(f"unknown export format '{fmt}' (use one of {formats})")
        return fmt

    def _write(self, text: str, path: Path | None, what: str) -> None:
        if path is None:
            self.stream.write(text)
            self.stream.flush()
            return
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="", encoding="utf-8") as f:
                f.write(text)
        except OSError as e:
            logger.error(f"Failed to export {what}: {e}")
            raise ExportError(f"{what} export failed: {e}", cause=e) from e
        logger.info(f"Exported {what} to {path}")

    def export_frame(
        self,
        frame: pd.DataFrame,
        path: Path | str | None = None,
        fmt: str = "csv",
        header: tuple[str, ...] = (),
        metadata: dict[str, Any] | None = None,
        what: str = "table",
    ) -> int:
        """Write a table; returns the number of data rows.

        CSV keeps full float precision and prefixes any ``header`` lines.
        JSON nests the rows under ``rows`` next to the optional ``metadata``.
        """
        fmt = self._check_format(fmt)
        target = Path(path) if path is not None else None
        if fmt == "csv":
            body = frame.to_csv(index=False, lineterminator="\n")
            text = "".join(f"{line}\n" for line in header) + body
        else:
            payload: dict[str, Any] = {}
            if metadata:
                payload["metadata"] = _clean(metadata)
            payload["rows"] = [_clean(row) for row in frame.to_dict(orient="records")]
            text = json.dumps(payload, indent=2) + "\n"
        self._write(text, target, what)
        return len(frame)

    def export_estimates(
        self, report: EstimateReport, path: Path | str | None = None, fmt: str = "csv"
    ) -> int:
        """Estimates, SEs, CIs, %Dif and Wald p-values per method and threshold."""
        metadata = {key: value for key, value in report.to_dict().items() if key != "rows"}
        return self.export_frame(
            report.to_frame(), path, fmt, metadata=metadata, what="estimates"
        )

    def export_comparison(
        self, report: CompareReport, path: Path | str | None = None, fmt: str = "csv"
    ) -> int:
        metadata = {"thresholds": report.thresholds, "groups": report.groups}
        return self.export_frame(report.to_frame(), path, fmt, metadata=metadata, what="tests")

    def export_curves(
        self, curves: CurveExport, path: Path | str | None = None, fmt: str = "csv"
    ) -> int:
        """Step curves with the step semantics documented in the CSV header."""
        frame = curves.to_frame()
        metadata = {"semantics": " ".join(line.lstrip("# ") for line in CURVE_HEADER)}
        return self.export_frame(
            frame, path, fmt, header=CURVE_HEADER, metadata=metadata, what="curves"
        )

    def export_scenarios(
        self, results: list[ScenarioResult], path: Path | str | None = None, fmt: str = "csv"
    ) -> int:
        """One row per scenario, method and threshold (the simulation table layout)."""
        return self.export_frame(grid_frame(results), path, fmt, what="scenario table")

    def export_calibration(
        self,
        results: list[CalibrationResult],
        path: Path | str | None = None,
        fmt: str = "csv",
    ) -> int:
        frame = pd.DataFrame(
            [
                {
                    "parameter": result.parameter,
                    "value": result.value,
                    "target": result.target,
                    "achieved": result.achieved,
                    "steps": len(result.trace),
                }
                for result in results
            ]
        )
        return self.export_frame(frame, path, fmt, what="calibration")
