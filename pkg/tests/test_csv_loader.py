"""
Unit tests for CSV ingestion, export and follow-up restriction.
"""

from collections.abc import Callable
from pathlib import Path

import pytest

from src.data.csv_loader import detect_covariates, parse_csv, restrict_followup, write_csv
from src.data.models import ColumnMap, Dataset
from src.utils.exceptions import DataError, ErrorCode, EstimationError

CsvFactory = Callable[..., Path]


class TestParseCsv:
    """Tests for parse_csv."""

    def test_single_record(self, csv_file: CsvFactory) -> None:
        """Test a one-row file becomes one record."""
        data = parse_csv(csv_file("t0,time1,status1\n2.5,5.0,1\n"))
        assert data.n == 1
        record = data.records[0]
        assert (record.t0, record.y1, record.delta1) == (2.5, 5.0, 1)
        assert record.ratio == 2.0

    def test_keeps_file_order(self, csv_file: CsvFactory) -> None:
        """Test records keep the order of the rows."""
        data = parse_csv(csv_file("t0,time1,status1\n3,1,0\n1,2,1\n2,3,1\n"))
        assert [rec.t0 for rec in data.records] == [3.0, 1.0, 2.0]

    def test_negative_t0_names_line(self, csv_file: CsvFactory) -> None:
        """Test a bad value is reported with its file line."""
        with pytest.raises(DataError) as exc_info:
            parse_csv(csv_file("t0,time1,status1\n-1,5,1\n"))
        assert exc_info.value.details["line"] == 2
        assert "line 2" in str(exc_info.value)

    def test_later_line_number(self, csv_file: CsvFactory) -> None:
        """Test the line number counts the header as line 1."""
        with pytest.raises(DataError) as exc_info:
            parse_csv(csv_file("t0,time1,status1\n1,2,1\n1,abc,0\n"))
        assert exc_info.value.details["line"] == 3

    def test_blank_line_counts_toward_line_number(self, csv_file: CsvFactory) -> None:
        """Test a blank line before a bad row does not shift the reported line."""
        with pytest.raises(DataError) as exc_info:
            parse_csv(csv_file("t0,time1,status1\n10,13,1\n\n-1,13,1\n"))
        assert exc_info.value.details["line"] == 4
        assert "line 4" in str(exc_info.value)

    def test_blank_lines_skipped(self, csv_file: CsvFactory) -> None:
        """Test blank lines between rows are ignored."""
        data = parse_csv(csv_file("t0,time1,status1\n1,2,1\n\n\n2,3,0\n\n"))
        assert [(rec.t0, rec.delta1) for rec in data.records] == [(1.0, 1), (2.0, 0)]

    def test_only_blank_rows_rejected(self, csv_file: CsvFactory) -> None:
        """Test a header followed by blank lines counts as no data."""
        with pytest.raises(DataError) as exc_info:
            parse_csv(csv_file("t0,time1,status1\n\n\n"))
        assert exc_info.value.code == ErrorCode.DATA_EMPTY

    def test_bad_status_code(self, csv_file: CsvFactory) -> None:
        """Test status values other than 0/1 are rejected."""
        with pytest.raises(DataError) as exc_info:
            parse_csv(csv_file("t0,time1,status1\n1,2,2\n"))
        assert exc_info.value.code == ErrorCode.DATA_INVALID_STATUS

    def test_float_status_accepted(self, csv_file: CsvFactory) -> None:
        """Test 1.0 and 0.0 are read as status codes."""
        data = parse_csv(csv_file("t0,time1,status1\n1,2,1.0\n2,2,0.0\n"))
        assert [rec.delta1 for rec in data.records] == [1, 0]

    def test_missing_column(self, csv_file: CsvFactory) -> None:
        """Test a missing required column is named."""
        with pytest.raises(DataError, match="status1") as exc_info:
            parse_csv(csv_file("t0,time1\n1,2\n"))
        assert exc_info.value.code == ErrorCode.DATA_MISSING_COLUMN

    def test_empty_file(self, csv_file: CsvFactory) -> None:
        """Test an empty file is rejected."""
        with pytest.raises(DataError) as exc_info:
            parse_csv(csv_file(""))
        assert exc_info.value.code == ErrorCode.DATA_EMPTY

    def test_header_only(self, csv_file: CsvFactory) -> None:
        """Test a header without rows is rejected."""
        with pytest.raises(DataError) as exc_info:
            parse_csv(csv_file("t0,time1,status1\n"))
        assert exc_info.value.code == ErrorCode.DATA_EMPTY

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test a nonexistent path is rejected."""
        with pytest.raises(DataError) as exc_info:
            parse_csv(tmp_path / "absent.csv")
        assert exc_info.value.code == ErrorCode.DATA_FILE_NOT_FOUND

    def test_custom_column_names(self, csv_file: CsvFactory) -> None:
        """Test a column map renames the required fields."""
        cmap = ColumnMap(t0="pfs0", time1="pfs1", status1="event1")
        data = parse_csv(csv_file("pfs0,pfs1,event1\n4,6,1\n"), column_map=cmap)
        assert data.records[0].ratio == 1.5
        assert data.column_map.t0 == "pfs0"

    def test_covariates_detected(self, csv_file: CsvFactory) -> None:
        """Test z<k> and v<k> columns become covariates in index order."""
        text = "t0,time1,status1,z2,z1,v1,notes\n1,2,1,0.5,-1,A,x\n2,3,0,1.5,2,B,y\n"
        data = parse_csv(csv_file(text))
        assert data.column_map.continuous == ("z1", "z2")
        assert data.column_map.categorical == ("v1",)
        assert data.records[0].z == (-1.0, 0.5)
        assert data.records[1].v == ("B",)
        assert data.q == 2

    def test_non_numeric_covariate(self, csv_file: CsvFactory) -> None:
        """Test a text value in a continuous covariate is rejected."""
        with pytest.raises(DataError):
            parse_csv(csv_file("t0,time1,status1,z1\n1,2,1,high\n"))

    def test_detect_covariates(self) -> None:
        """Test prefix matching requires digits."""
        assert detect_covariates(["z10", "z2", "zeta", "z"], "z") == ("z2", "z10")
        assert detect_covariates(["z1"], "") == ()


class TestWriteCsv:
    """Tests for write_csv."""

    def test_written_file_reads_back(
        self, tmp_path: Path, random_dataset: Callable[..., Dataset]
    ) -> None:
        """Test a written dataset parses to the same records."""
        data = random_dataset(1, 15, continuous=2, categorical=True, integer_times=False)
        path = write_csv(data, tmp_path / "out" / "data.csv")
        assert parse_csv(path) == data

    def test_unnamed_covariates_written_with_default_names(self, tmp_path: Path) -> None:
        """Test covariates built from arrays are written as z1.. and v1.. columns."""
        data = Dataset.from_arrays(
            [1.0, 2.0, 3.0],
            [2.0, 3.0, 4.0],
            [1, 0, 1],
            z=[[0.1], [0.2], [0.3]],
            v=[["a"], ["b"], ["a"]],
        )
        path = write_csv(data, tmp_path / "data.csv")
        assert path.read_text().splitlines()[0] == "t0,time1,status1,z1,v1"
        back = parse_csv(path)
        assert back.q == 1
        assert [rec.v for rec in back.records] == [("a",), ("b",), ("a",)]
        assert back == data

    def test_named_covariates_keep_their_names(self, tmp_path: Path) -> None:
        """Test a column map's covariate names are used when present."""
        data = Dataset.from_arrays([1.0, 2.0], [2.0, 3.0], [1, 0], z=[[0.5], [0.7]])
        data.column_map = ColumnMap(continuous=("z3",))
        path = write_csv(data, tmp_path / "data.csv")
        assert path.read_text().splitlines()[0] == "t0,time1,status1,z3"


class TestRestrictFollowup:
    """Tests for restrict_followup."""

    def test_caps_long_follow_up(self) -> None:
        """Test (12, event) at cap 9 becomes (9, censored)."""
        data = Dataset.from_arrays([3.0, 4.0], [12.0, 5.0], [1, 1])
        restricted = restrict_followup(data, 9)
        assert (restricted.records[0].y1, restricted.records[0].delta1) == (9.0, 0)
        assert restricted.records[1] == data.records[1]
        assert restricted.records[0].t0 == 3.0

    def test_idempotent(self, small_dataset: Dataset) -> None:
        """Test applying the same cap twice changes nothing."""
        once = restrict_followup(small_dataset, 6.0)
        assert restrict_followup(once, 6.0) == once

    def test_censoring_grows_as_cap_shrinks(self, random_dataset: Callable[..., Dataset]) -> None:
        """Test the censored count is monotone in the cap."""
        data = random_dataset(3, 60, integer_times=False)
        counts = [restrict_followup(data, cap).n_censored for cap in (20.0, 10.0, 6.0, 3.0, 1.0)]
        assert counts == sorted(counts)
        assert counts[0] >= data.n_censored

    @pytest.mark.parametrize("cap", [0.0, -9.0, float("inf")])
    def test_invalid_cap(self, small_dataset: Dataset, cap: float) -> None:
        """Test nonpositive or infinite caps are rejected."""
        with pytest.raises(EstimationError):
            restrict_followup(small_dataset, cap)

    def test_trial_pipeline(self, trial_dataset: Dataset) -> None:
        """Test restricting the trial stand-in to 9 months raises censoring."""
        restricted = restrict_followup(trial_dataset, 9.0)
        assert restricted.n == trial_dataset.n
        assert restricted.censoring_rate >= trial_dataset.censoring_rate
        assert max(rec.y1 for rec in restricted.records) <= 9.0
