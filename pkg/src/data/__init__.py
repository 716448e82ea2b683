"""Data layer - domain models and CSV ingestion."""

from src.data.csv_loader import parse_csv, restrict_followup, write_csv
from src.data.models import (
    ColumnMap,
    Dataset,
    EstimatorMethod,
    GmiEstimate,
    SubjectRecord,
    SurvivalCurve,
)

__all__ = [
    "ColumnMap",
    "Dataset",
    "EstimatorMethod",
    "GmiEstimate",
    "SubjectRecord",
    "SurvivalCurve",
    "parse_csv",
    "restrict_followup",
    "write_csv",
]
