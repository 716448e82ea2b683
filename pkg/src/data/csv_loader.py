"""CSV ingestion and export of paired-time datasets, plus follow-up restriction."""

from __future__ import annotations

import math
import re
from dataclasses import replace
from pathlib import Path

import pandas as pd

from src.data.models import ColumnMap, Dataset, SubjectRecord
from src.utils.exceptions import DataError, ErrorCode, EstimationError
from src.utils.logging import get_logger

logger = get_logger(__name__)

_STATUS_VALUES = {"0": 0, "1": 1, "0.0": 0, "1.0": 1}


def detect_covariates(columns: list[str], prefix: str) -> tuple[str, ...]:
    """Return columns named ``<prefix><digits>`` ordered by their index."""
    if not prefix:
        return ()
    pattern = re.compile(rf"^{re.escape(prefix)}(\d+)$")
    matched = [(int(m.group(1)), col) for col in columns if (m := pattern.match(col))]
    return tuple(col for _, col in sorted(matched))


def _parse_time(raw: str, column: str, line: int) -> float:
    text = raw.strip()
    if not text:
        raise DataError(f"missing value in column '{column}'", line=line)
    try:
        value = float(text)
    except ValueError as e:
        raise DataError(
            f"non-numeric value {text!r} in column '{column}'", line=line, cause=e
        ) from e
    if not math.isfinite(value) or value <= 0:
        raise DataError(f"{column} must be a positive number, got {text}", line=line)
    return value


def parse_csv(
    path: Path | str,
    column_map: ColumnMap | None = None,
    continuous_prefix: str = "z",
    categorical_prefix: str = "v",
) -> Dataset:
    """Read a paired-time CSV into a validated Dataset.

    Args:
        path: CSV file with a header row
        column_map: Names of the t0/time1/status1 columns. Covariate columns
            are auto-detected from the prefixes when the map lists none.
        continuous_prefix: Prefix of continuous covariate columns (z1, z2, ...)
        categorical_prefix: Prefix of categorical covariate columns (v1, ...)

    Returns:
        Dataset whose records keep file order

    Raises:
        DataError: On a missing or empty file, a missing column, or a bad row.
            Row errors carry the 1-based file line number (header is line 1).
    """
    path = Path(path)
    cmap = column_map or ColumnMap()

    if not path.exists():
        raise DataError(f"Data file not found: {path}", code=ErrorCode.DATA_FILE_NOT_FOUND)

    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            encoding="utf-8-sig",
        )
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{path} is empty", code=ErrorCode.DATA_EMPTY, cause=e) from e

    # blank lines stay as empty rows so enumeration matches physical file lines
    frame = frame.fillna("")
    frame.columns = [str(col).strip() for col in frame.columns]
    columns = list(frame.columns)

    for required in (cmap.t0, cmap.time1, cmap.status1):
        if required not in columns:
            raise DataError(
                f"Required column '{required}' not found in {path}",
                code=ErrorCode.DATA_MISSING_COLUMN,
            )

    if frame.empty:
        raise DataError(f"{path} has a header but no data rows", code=ErrorCode.DATA_EMPTY)

    continuous = cmap.continuous or detect_covariates(columns, continuous_prefix)
    categorical = cmap.categorical or detect_covariates(columns, categorical_prefix)
    cmap = replace(cmap, continuous=continuous, categorical=categorical)

    records: list[SubjectRecord] = []
    for line, row in enumerate(frame.to_dict(orient="records"), start=2):
        if all(not str(value).strip() for value in row.values()):
            continue
        t0 = _parse_time(row[cmap.t0], cmap.t0, line)
        y1 = _parse_time(row[cmap.time1], cmap.time1, line)

        status_text = row[cmap.status1].strip()
        if status_text not in _STATUS_VALUES:
            raise DataError(
                f"unknown status code {status_text!r} in column '{cmap.status1}' (expected 0 or 1)",
                code=ErrorCode.DATA_INVALID_STATUS,
                line=line,
            )

        z_values: list[float] = []
        for col in continuous:
            text = row[col].strip()
            try:
                value = float(text)
            except ValueError as e:
                raise DataError(
                    f"non-numeric covariate {text!r} in column '{col}'", line=line, cause=e
                ) from e
            if not math.isfinite(value):
                raise DataError(f"covariate '{col}' must be finite", line=line)
            z_values.append(value)

        v_values = tuple(row[col].strip() for col in categorical)

        records.append(
            SubjectRecord(
                t0=t0,
                y1=y1,
                delta1=_STATUS_VALUES[status_text],
                z=tuple(z_values),
                v=v_values,
            )
        )

    if not records:
        raise DataError(f"{path} has a header but no data rows", code=ErrorCode.DATA_EMPTY)

    dataset = Dataset(records=tuple(records), source=str(path), column_map=cmap)
    logger.info(
        f"Loaded {dataset.n} records from {path} "
        f"({dataset.n_events} events, {dataset.n_censored} censored)"
    )
    return dataset


def write_csv(dataset: Dataset, path: Path | str) -> Path:
    """Write a dataset in the format parse_csv reads, at full float precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset.to_frame().to_csv(path, index=False)
    logger.info(f"Wrote {dataset.n} records to {path}")
    return path


def restrict_followup(dataset: Dataset, cap: float) -> Dataset:
    """Administratively censor follow-up at ``cap`` months.

    Records with y1 > cap become (cap, censored); t0 is never touched.
    """
    if not (math.isfinite(cap) and cap > 0):
        raise EstimationError(f"follow-up cap must be positive, got {cap}")

    records = tuple(
        replace(rec, y1=float(cap), delta1=0) if rec.y1 > cap else rec for rec in dataset.records
    )
    restricted = Dataset(records=records, source=dataset.source, column_map=dataset.column_map)
    logger.info(
        f"Restricted follow-up to {cap:g} months: censoring "
        f"{dataset.censoring_rate:.0%} -> {restricted.censoring_rate:.0%}"
    )
    return restricted
