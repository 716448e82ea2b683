"""Domain models shared by the estimators, the simulation harness and the CLI."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd

from src.utils.exceptions import DataError, ErrorCode, EstimationError


class EstimatorMethod(Enum):
    """Estimators of the GMI survival function."""

    PROPOSED = "proposed"
    COVARIATE = "covariate"
    KM = "km"
    LOGNORMAL = "lognormal"
    LOGLOGISTIC = "loglogistic"

    @property
    def label(self) -> str:
        """Display label used in printed tables."""
        return {
            EstimatorMethod.PROPOSED: "Proposed",
            EstimatorMethod.COVARIATE: "Proposed (covariate)",
            EstimatorMethod.KM: "KM",
            EstimatorMethod.LOGNORMAL: "lognormal",
            EstimatorMethod.LOGLOGISTIC: "loglogistic",
        }[self]


@dataclass(frozen=True)
class SubjectRecord:
    """One patient's paired observation.

    ``t0`` is the prior-line event time (always observed), ``y1`` the
    current-line follow-up min(T1, C1) and ``delta1`` its event flag.
    """

    t0: float
    y1: float
    delta1: int
    z: tuple[float, ...] = ()
    v: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not (isinstance(self.t0, (int, float)) and math.isfinite(self.t0) and self.t0 > 0):
            raise DataError(f"t0 must be a positive finite number, got {self.t0!r}")
        if not (isinstance(self.y1, (int, float)) and math.isfinite(self.y1) and self.y1 > 0):
            raise DataError(f"y1 must be a positive finite number, got {self.y1!r}")
        if self.delta1 not in (0, 1):
            raise DataError(
                f"delta1 must be 0 or 1, got {self.delta1!r}", code=ErrorCode.DATA_INVALID_STATUS
            )
        if any(not math.isfinite(value) for value in self.z):
            raise DataError(f"continuous covariates must be finite, got {self.z!r}")

    @property
    def ratio(self) -> float:
        """Observed (possibly censored) GMI, y1 / t0."""
        return self.y1 / self.t0


@dataclass(frozen=True)
class ColumnMap:
    """CSV column names for the record fields."""

    t0: str = "t0"
    time1: str = "time1"
    status1: str = "status1"
    continuous: tuple[str, ...] = ()
    categorical: tuple[str, ...] = ()

    @property
    def columns(self) -> list[str]:
        """All mapped columns in output order."""
        return [self.t0, self.time1, self.status1, *self.continuous, *self.categorical]


@dataclass(frozen=True)
class SampleArrays:
    """Column-oriented view of a dataset used by the numerical code."""

    t0: np.ndarray
    y1: np.ndarray
    delta: np.ndarray
    z: np.ndarray
    strata: np.ndarray
    has_categorical: bool

    @property
    def ratio(self) -> np.ndarray:
        return self.y1 / self.t0

    @property
    def log_t0(self) -> np.ndarray:
        return np.log(self.t0)

    def take(self, indices: np.ndarray) -> SampleArrays:
        return SampleArrays(
            t0=self.t0[indices],
            y1=self.y1[indices],
            delta=self.delta[indices],
            z=self.z[indices],
            strata=self.strata[indices],
            has_categorical=self.has_categorical,
        )


def _build_arrays(records: Sequence[SubjectRecord]) -> SampleArrays:
    n = len(records)
    q = len(records[0].z) if n else 0
    strata_ids: dict[tuple[str, ...], int] = {}
    strata = np.empty(n, dtype=np.int64)
    for i, rec in enumerate(records):
        strata[i] = strata_ids.setdefault(rec.v, len(strata_ids))
    return SampleArrays(
        t0=np.array([rec.t0 for rec in records], dtype=float),
        y1=np.array([rec.y1 for rec in records], dtype=float),
        delta=np.array([rec.delta1 for rec in records], dtype=np.int64),
        z=np.array([rec.z for rec in records], dtype=float).reshape(n, q),
        strata=strata,
        has_categorical=bool(n and records[0].v),
    )


@dataclass(eq=False)
class Dataset:
    """An ordered collection of subject records with its provenance."""

    records: tuple[SubjectRecord, ...]
    source: str | None = None
    column_map: ColumnMap = field(default_factory=ColumnMap)
    _arrays: SampleArrays | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.records = tuple(self.records)
        if self._arrays is None:
            if self.records:
                q, p = len(self.records[0].z), len(self.records[0].v)
                for index, rec in enumerate(self.records):
                    if len(rec.z) != q or len(rec.v) != p:
                        raise DataError(
                            f"record {index} has {len(rec.z)} continuous and {len(rec.v)} "
                            f"categorical covariates, expected {q} and {p}",
                            code=ErrorCode.DATA_COVARIATE_ARITY,
                        )
            self._arrays = _build_arrays(self.records)

    @classmethod
    def from_arrays(
        cls,
        t0: Iterable[float],
        y1: Iterable[float],
        delta1: Iterable[int],
        z: Iterable[Iterable[float]] | None = None,
        v: Iterable[Iterable[str]] | None = None,
        source: str | None = None,
    ) -> Dataset:
        """Build a validated dataset from parallel columns."""
        t0_list, y1_list, d_list = list(t0), list(y1), list(delta1)
        z_list = [tuple(float(x) for x in row) for row in z] if z is not None else None
        v_list = [tuple(str(x) for x in row) for row in v] if v is not None else None
        records = tuple(
            SubjectRecord(
                t0=float(t0_list[i]),
                y1=float(y1_list[i]),
                delta1=int(d_list[i]),
                z=z_list[i] if z_list is not None else (),
                v=v_list[i] if v_list is not None else (),
            )
            for i in range(len(t0_list))
        )
        return cls(records=records, source=source)

    @property
    def arrays(self) -> SampleArrays:
        assert self._arrays is not None
        return self._arrays

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def q(self) -> int:
        """Number of continuous covariates."""
        return self.arrays.z.shape[1]

    @property
    def p(self) -> int:
        """Number of categorical covariates."""
        return len(self.records[0].v) if self.records else 0

    @property
    def n_events(self) -> int:
        return int(self.arrays.delta.sum())

    @property
    def n_censored(self) -> int:
        return self.n - self.n_events

    @property
    def censoring_rate(self) -> float:
        return self.n_censored / self.n if self.n else 0.0

    def take(self, indices: Sequence[int] | np.ndarray) -> Dataset:
        """Subset (with repetition) by position, e.g. for a bootstrap resample."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            records=tuple(self.records[i] for i in idx),
            source=self.source,
            column_map=self.column_map,
            _arrays=self.arrays.take(idx),
        )

    def to_frame(self) -> pd.DataFrame:
        """Tabular view using the dataset's column names."""
        cmap = self.column_map
        data: dict[str, Any] = {
            cmap.t0: self.arrays.t0,
            cmap.time1: self.arrays.y1,
            cmap.status1: self.arrays.delta,
        }
        continuous = cmap.continuous or tuple(f"z{j + 1}" for j in range(self.q))
        categorical = cmap.categorical or tuple(f"v{j + 1}" for j in range(self.p))
        for j, name in enumerate(continuous):
            data[name] = self.arrays.z[:, j]
        for j, name in enumerate(categorical):
            data[name] = [rec.v[j] for rec in self.records]
        return pd.DataFrame(data)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.records == other.records


def as_dataset(data: Dataset | Sequence[SubjectRecord]) -> Dataset:
    """Accept either a Dataset or a plain record sequence."""
    if isinstance(data, Dataset):
        return data
    return Dataset(records=tuple(data))


@dataclass(frozen=True)
class SurvivalCurve:
    """Right-continuous nonincreasing step function on ratio thresholds.

    ``values[k]`` holds on ``[thresholds[k], thresholds[k + 1])``; the curve
    equals 1 below the first threshold.
    """

    thresholds: np.ndarray
    values: np.ndarray
    method: EstimatorMethod = EstimatorMethod.PROPOSED

    def __post_init__(self) -> None:
        thresholds = np.asarray(self.thresholds, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "thresholds", thresholds)
        object.__setattr__(self, "values", values)
        if thresholds.shape != values.shape or thresholds.ndim != 1:
            raise EstimationError("thresholds and values must be 1-d arrays of equal length")
        if thresholds.size > 1 and np.any(np.diff(thresholds) <= 0):
            raise EstimationError("curve thresholds must be strictly increasing")

    @property
    def value_at_zero(self) -> float:
        return 1.0

    def evaluate(self, r: float | np.ndarray) -> np.ndarray | float:
        """Step-function value at one threshold or an array of thresholds."""
        r_arr = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.thresholds, r_arr, side="right") - 1
        padded = np.concatenate(([1.0], self.values))
        out = padded[idx + 1]
        return float(out) if out.ndim == 0 else out

    __call__ = evaluate

    def is_valid(self, atol: float = 0.0) -> bool:
        """Check monotonicity and the [0, 1] range."""
        if self.values.size == 0:
            return True
        in_range = bool(np.all(self.values >= -atol) and np.all(self.values <= 1.0 + atol))
        monotone = bool(np.all(np.diff(np.concatenate(([1.0], self.values))) <= atol))
        return in_range and monotone

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"r": self.thresholds, "estimate": self.values})


@dataclass(frozen=True)
class GmiEstimate:
    """Point estimate of S_G(r) with its standard error and log-log interval."""

    r: float
    estimate: float
    se: float
    ci_low: float
    ci_high: float
    method: EstimatorMethod = EstimatorMethod.PROPOSED
    degenerate: bool = False

    def __post_init__(self) -> None:
        bounds = (self.estimate, self.ci_low, self.ci_high)
        if not any(math.isnan(b) for b in bounds) and not (
            self.ci_low <= self.estimate <= self.ci_high
        ):
            raise EstimationError(
                f"interval [{self.ci_low}, {self.ci_high}] does not contain {self.estimate}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method.value,
            "r": self.r,
            "estimate": self.estimate,
            "se": self.se,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "degenerate": self.degenerate,
        }
