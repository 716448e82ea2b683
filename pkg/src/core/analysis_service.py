"""Estimate, compare and curve workflows on a loaded dataset."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd

from src.core.estimators import (
    STANDARD_METHODS,
    CovariateEstimator,
    GmiEstimator,
    KaplanMeierEstimator,
    ProposedEstimator,
    make_estimator,
)
from src.core.kernel import BandwidthRule, default_bandwidth
from src.core.uncertainty import (
    BootstrapConfig,
    ThresholdTestResult,
    WaldResult,
    bootstrap_distribution,
    loglog_ci,
    threshold_test,
    two_group_wald,
    wald_test,
)
from src.data.models import Dataset, EstimatorMethod, GmiEstimate, SurvivalCurve
from src.utils.config import Config
from src.utils.exceptions import AppException, ErrorCode, EstimationError, UsageError
from src.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ComparisonRow:
    """One method at one threshold, laid out like the trial results table."""

    estimate: GmiEstimate
    pct_diff: float | None = None
    wald: WaldResult | None = None

    def to_dict(self) -> dict[str, Any]:
        row = self.estimate.to_dict()
        row["pct_diff"] = self.pct_diff
        row["wald_p"] = self.wald.p if self.wald else None
        return row


@dataclass
class EstimateReport:
    """Estimates of every method with differences relative to the reference method."""

    thresholds: list[float]
    rows: list[ComparisonRow]
    n: int
    n_events: int
    bandwidth: float
    reference: EstimatorMethod = EstimatorMethod.PROPOSED
    skipped: dict[str, str] = field(default_factory=dict)

    @property
    def censoring_rate(self) -> float:
        return 1.0 - self.n_events / self.n

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.to_dict() for row in self.rows])

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "events": self.n_events,
            "censoring_rate": self.censoring_rate,
            "bandwidth": self.bandwidth,
            "reference": self.reference.value,
            "thresholds": self.thresholds,
            "rows": [row.to_dict() for row in self.rows],
            "skipped": self.skipped,
        }


@dataclass
class CompareReport:
    """Wald tests against the reference method, plus optional supplementary tests."""

    thresholds: list[float]
    tests: dict[str, list[WaldResult]]
    threshold_tests: list[ThresholdTestResult] = field(default_factory=list)
    group_tests: list[WaldResult] = field(default_factory=list)
    groups: tuple[str, str] | None = None

    def to_frame(self) -> pd.DataFrame:
        rows: list[dict[str, Any]] = []
        for method, results in self.tests.items():
            for r, res in zip(self.thresholds, results):
                rows.append({"test": f"{method} vs proposed", "r": r, **res.to_dict()})
        for r, res in zip(self.thresholds, self.threshold_tests):
            rows.append(
                {
                    "test": f"S(r) > {res.null_proportion:g}",
                    "r": r,
                    "diff": res.estimate - res.null_proportion,
                    "se_diff": None,
                    "z": res.z,
                    "p": res.p,
                }
            )
        if self.groups:
            label = f"{self.groups[0]} vs {self.groups[1]}"
            for r, res in zip(self.thresholds, self.group_tests):
                rows.append({"test": label, "r": r, **res.to_dict()})
        return pd.DataFrame(rows)


@dataclass(frozen=True)
class CurveExport:
    """Step curves with pointwise log-log intervals at each jump."""

    curves: dict[EstimatorMethod, pd.DataFrame]

    def to_frame(self) -> pd.DataFrame:
        frames = [frame.assign(method=method.value) for method, frame in self.curves.items()]
        columns = ["method", "r", "estimate", "ci_low", "ci_high"]
        if not frames:
            return pd.DataFrame(columns=columns)
        return pd.concat(frames, ignore_index=True)[columns]


def percent_difference(other: float, reference: float) -> float:
    """100 * (other - reference) / reference."""
    if reference == 0 or math.isnan(reference):
        return math.nan
    return 100.0 * (other - reference) / reference


def split_by_group(dataset: Dataset, column: str) -> dict[str, Dataset]:
    """Split on a categorical covariate column that has exactly two levels."""
    categorical = dataset.column_map.categorical
    if column not in categorical:
        raise UsageError(
            f"group column '{column}' is not a categorical column "
            f"(available: {', '.join(categorical) or 'none'})"
        )
    j = categorical.index(column)
    levels = sorted({rec.v[j] for rec in dataset.records})
    if len(levels) != 2:
        raise UsageError(f"group column '{column}' must have exactly 2 levels, found {len(levels)}")
    return {
        level: Dataset(
            records=tuple(rec for rec in dataset.records if rec.v[j] == level),
            source=dataset.source,
            column_map=dataset.column_map,
        )
        for level in levels
    }


class AnalysisService:
    """Runs the estimation workflows with settings from the loaded configuration."""

    def __init__(self, config: Config, bandwidth: float | None = None) -> None:
        if bandwidth is not None and not bandwidth > 0:
            raise UsageError(f"bandwidth must be positive, got {bandwidth}")
        self._config = config
        self._rule = BandwidthRule(config.estimation.bandwidth_exponent)
        self._bandwidth = bandwidth
        boot = config.bootstrap
        self._bootstrap = BootstrapConfig(
            resamples=boot.resamples,
            seed=boot.seed,
            rebandwidth=boot.rebandwidth,
            workers=boot.workers,
        )
        logger.debug(f"AnalysisService initialized (B={boot.resamples}, seed={boot.seed})")

    @property
    def bootstrap_config(self) -> BootstrapConfig:
        return self._bootstrap

    def _reference(self, adjust_covariates: bool) -> ProposedEstimator:
        cls = CovariateEstimator if adjust_covariates else ProposedEstimator
        return cls(rule=self._rule, bandwidth=self._bandwidth)

    def _estimators(self, adjust_covariates: bool) -> list[GmiEstimator]:
        others = [make_estimator(m, self._rule) for m in STANDARD_METHODS[1:]]
        return [self._reference(adjust_covariates), *others]

    @staticmethod
    def _check(dataset: Dataset) -> None:
        if dataset.n < 2:
            raise EstimationError(
                f"at least 2 records are needed, got {dataset.n}",
                code=ErrorCode.ESTIMATION_INSUFFICIENT_DATA,
            )

    def _usable(
        self, estimators: list[GmiEstimator], dataset: Dataset, thresholds: np.ndarray
    ) -> tuple[list[GmiEstimator], np.ndarray, dict[str, str]]:
        """Point estimates of every method; methods that cannot be fitted are dropped."""
        kept: list[GmiEstimator] = []
        points: list[np.ndarray] = []
        skipped: dict[str, str] = {}
        for index, estimator in enumerate(estimators):
            try:
                points.append(estimator(dataset, thresholds))
            except AppException as exc:
                if index == 0:
                    raise
                logger.warning(f"{estimator.label} skipped: {exc.message}")
                skipped[estimator.method.value] = exc.message
                continue
            kept.append(estimator)
        return kept, np.array(points), skipped

    def estimate(
        self,
        dataset: Dataset,
        thresholds: Sequence[float],
        adjust_covariates: bool = False,
    ) -> EstimateReport:
        """Every method at each threshold with SEs, CIs, %Dif and Wald p-values.

        SEs are bootstrap for the proposed and parametric methods (plug-in for
        the proposed method if so configured) and Greenwood for KM. Wald tests
        use the paired bootstrap differences against the proposed method.
        """
        self._check(dataset)
        r = np.asarray(thresholds, dtype=float)
        level = self._config.estimation.confidence_level
        estimators, points, skipped = self._usable(self._estimators(adjust_covariates), dataset, r)

        dist = bootstrap_distribution(estimators, dataset, r, self._bootstrap)
        boot_se = dist.se()

        rows: list[ComparisonRow] = []
        for e, estimator in enumerate(estimators):
            if isinstance(estimator, KaplanMeierEstimator):
                se = estimator.greenwood_se(dataset, r)
            elif e == 0 and self._config.estimation.se_method == "plugin":
                se = estimator.plugin_se(dataset, r)  # type: ignore[attr-defined]
            else:
                se = boot_se[e]
            diff_se = dist.difference_se(e, 0) if e else None

            for k, threshold in enumerate(r):
                value, err = float(points[e, k]), float(se[k])
                ci = loglog_ci(value, err, level)
                estimate = GmiEstimate(
                    r=float(threshold),
                    estimate=value,
                    se=err,
                    ci_low=ci.low,
                    ci_high=ci.high,
                    method=estimator.method,
                    degenerate=ci.degenerate,
                )
                if e == 0:
                    rows.append(ComparisonRow(estimate))
                    continue
                rows.append(
                    ComparisonRow(
                        estimate,
                        pct_diff=percent_difference(value, float(points[0, k])),
                        wald=wald_test(value - float(points[0, k]), float(diff_se[k])),
                    )
                )

        rows.sort(key=lambda row: row.estimate.r)
        report = EstimateReport(
            thresholds=r.tolist(),
            rows=rows,
            n=dataset.n,
            n_events=dataset.n_events,
            bandwidth=self._bandwidth or default_bandwidth(dataset, self._rule),
            reference=estimators[0].method,
            skipped=skipped,
        )
        logger.info_ctx(
            f"Estimated {len(estimators)} methods at {len(r)} thresholds "
            f"(n={dataset.n}, censoring {report.censoring_rate:.0%})",
            ctx={"source": dataset.source, "bandwidth": report.bandwidth, "skipped": skipped},
        )
        return report

    def compare(
        self,
        dataset: Dataset,
        thresholds: Sequence[float],
        adjust_covariates: bool = False,
        null_proportion: float | None = None,
        group_column: str | None = None,
    ) -> CompareReport:
        """Wald tests only: each comparison method against the proposed estimator."""
        self._check(dataset)
        r = np.asarray(thresholds, dtype=float)
        estimators, points, _ = self._usable(self._estimators(adjust_covariates), dataset, r)
        dist = bootstrap_distribution(estimators, dataset, r, self._bootstrap)

        tests: dict[str, list[WaldResult]] = {}
        for e, estimator in enumerate(estimators[1:], start=1):
            diff_se = dist.difference_se(e, 0)
            tests[estimator.method.value] = [
                wald_test(float(points[e, k] - points[0, k]), float(diff_se[k]))
                for k in range(r.size)
            ]

        report = CompareReport(thresholds=r.tolist(), tests=tests)

        if null_proportion is not None:
            if self._config.estimation.se_method == "plugin":
                se = estimators[0].plugin_se(dataset, r)  # type: ignore[attr-defined]
            else:
                se = dist.se()[0]
            report.threshold_tests = [
                threshold_test(float(points[0, k]), float(se[k]), null_proportion)
                for k in range(r.size)
            ]

        if group_column is not None:
            groups = split_by_group(dataset, group_column)
            (name_a, data_a), (name_b, data_b) = groups.items()
            reference = estimators[0]
            report.groups = (name_a, name_b)
            report.group_tests = [
                two_group_wald(reference, data_a, data_b, float(threshold), self._bootstrap)
                for threshold in r
            ]

        return report

    def curves(
        self,
        dataset: Dataset,
        methods: Sequence[EstimatorMethod] | None = None,
        adjust_covariates: bool = False,
    ) -> CurveExport:
        """Step curves with log-log intervals at each jump point."""
        self._check(dataset)
        level = self._config.estimation.confidence_level
        chosen = list(methods) if methods else list(STANDARD_METHODS)
        exported: dict[EstimatorMethod, pd.DataFrame] = {}

        for method in chosen:
            if method is EstimatorMethod.PROPOSED:
                estimator: GmiEstimator = self._reference(adjust_covariates)
            else:
                estimator = make_estimator(method, self._rule)
            try:
                curve: SurvivalCurve = estimator.curve(dataset)
            except AppException as exc:
                logger.warning(f"{estimator.label} curve skipped: {exc.message}")
                continue

            grid = curve.thresholds
            if grid.size == 0:
                se = np.empty(0)
            elif isinstance(estimator, KaplanMeierEstimator):
                se = estimator.greenwood_se(dataset, grid)
            elif isinstance(estimator, ProposedEstimator) and (
                self._config.estimation.se_method == "plugin"
                and not isinstance(estimator, CovariateEstimator)
            ):
                se = estimator.plugin_se(dataset, grid)
            else:
                se = bootstrap_distribution([estimator], dataset, grid, self._bootstrap).se()[0]

            intervals = [loglog_ci(float(s), float(h), level) for s, h in zip(curve.values, se)]
            exported[estimator.method] = pd.DataFrame(
                {
                    "r": grid,
                    "estimate": curve.values,
                    "ci_low": [ci.low for ci in intervals],
                    "ci_high": [ci.high for ci in intervals],
                }
            )
        return CurveExport(curves=exported)
