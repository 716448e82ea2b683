"""Estimator objects with a common call signature.

Bootstrap, the scenario runner and the CLI treat every method the same way:
``estimator(dataset, thresholds) -> array of S(r)``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Sequence

import numpy as np

from src.core.baselines import AftFamily, aft_fit, aft_survival, km_naive
from src.core.gmi_estimator import (
    covariate_survival_gmi,
    covariate_survival_gmi_curve,
    influence_values,
    survival_gmi,
    survival_gmi_curve,
)
from src.core.kernel import BandwidthRule, KernelSpec, default_bandwidth
from src.data.models import Dataset, EstimatorMethod, SurvivalCurve
from src.utils.exceptions import EstimationError


class GmiEstimator(ABC):
    """A method that maps a dataset to S(r) at the requested thresholds."""

    method: EstimatorMethod

    @abstractmethod
    def estimate(self, data: Dataset, thresholds: Sequence[float] | np.ndarray) -> np.ndarray:
        """Estimates at each threshold, shape (len(thresholds),)."""

    @abstractmethod
    def curve(self, data: Dataset) -> SurvivalCurve:
        """The full fitted survival curve."""

    def freeze(self, data: Dataset) -> GmiEstimator:
        """Copy with data-driven tuning fixed at its value on ``data``."""
        return self

    def __call__(self, data: Dataset, thresholds: Sequence[float] | np.ndarray) -> np.ndarray:
        return self.estimate(data, thresholds)

    @property
    def label(self) -> str:
        return self.method.label

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class ProposedEstimator(GmiEstimator):
    """Average of kernel conditional product-limit curves over the observed t0."""

    method = EstimatorMethod.PROPOSED

    def __init__(
        self,
        rule: BandwidthRule | None = None,
        bandwidth: float | None = None,
        kernel: KernelSpec | None = None,
    ) -> None:
        self.rule = rule or BandwidthRule()
        self.bandwidth = bandwidth
        self.kernel = kernel

    def estimate(self, data: Dataset, thresholds: Sequence[float] | np.ndarray) -> np.ndarray:
        return np.atleast_1d(survival_gmi(thresholds, data, self.bandwidth, self.kernel, self.rule))

    def curve(self, data: Dataset) -> SurvivalCurve:
        return survival_gmi_curve(data, self.bandwidth, self.kernel, self.rule)

    def freeze(self, data: Dataset) -> ProposedEstimator:
        bandwidth = self.bandwidth
        if bandwidth is None:
            bandwidth = default_bandwidth(data, self.rule)
        return type(self)(rule=self.rule, bandwidth=bandwidth, kernel=self.kernel)

    def plugin_se(self, data: Dataset, thresholds: Sequence[float] | np.ndarray) -> np.ndarray:
        """Influence-function standard errors at each threshold."""
        return np.array(
            [
                np.sqrt(influence_values(r, data, self.bandwidth, self.kernel, self.rule).variance)
                for r in np.atleast_1d(thresholds)
            ]
        )

    def __repr__(self) -> str:
        return f"{type(self).__name__}(exponent={self.rule.exponent:g}, bandwidth={self.bandwidth})"


class CovariateEstimator(ProposedEstimator):
    """Proposed estimator with kernel weights on (log t0, z) within V strata."""

    method = EstimatorMethod.COVARIATE

    def estimate(self, data: Dataset, thresholds: Sequence[float] | np.ndarray) -> np.ndarray:
        return np.atleast_1d(
            covariate_survival_gmi(thresholds, data, self.bandwidth, self.kernel, self.rule)
        )

    def curve(self, data: Dataset) -> SurvivalCurve:
        return covariate_survival_gmi_curve(data, self.bandwidth, self.kernel, self.rule)

    def plugin_se(self, data: Dataset, thresholds: Sequence[float] | np.ndarray) -> np.ndarray:
        raise EstimationError(
            "plug-in standard errors are only available for the unadjusted estimator"
        )


class KaplanMeierEstimator(GmiEstimator):
    """Naive product-limit estimator on the censored ratios."""

    method = EstimatorMethod.KM

    def estimate(self, data: Dataset, thresholds: Sequence[float] | np.ndarray) -> np.ndarray:
        return np.atleast_1d(km_naive(data).evaluate(np.asarray(thresholds, dtype=float)))

    def curve(self, data: Dataset) -> SurvivalCurve:
        return km_naive(data)

    def greenwood_se(self, data: Dataset, thresholds: Sequence[float] | np.ndarray) -> np.ndarray:
        fit = km_naive(data)
        return np.sqrt(np.atleast_1d(fit.variance_at(np.asarray(thresholds, dtype=float))))


class ParametricEstimator(GmiEstimator):
    """Lognormal or loglogistic fit to the censored ratios."""

    def __init__(self, family: AftFamily | str) -> None:
        self.family = AftFamily(family)
        self.method = self.family.method

    def estimate(self, data: Dataset, thresholds: Sequence[float] | np.ndarray) -> np.ndarray:
        fit = aft_fit(self.family, data, raise_on_failure=True)
        return np.atleast_1d(aft_survival(fit, np.asarray(thresholds, dtype=float)))

    def curve(self, data: Dataset) -> SurvivalCurve:
        """The fitted survival evaluated at the observed event ratios."""
        fit = aft_fit(self.family, data, raise_on_failure=True)
        arrays = data.arrays
        grid = np.unique(arrays.ratio[arrays.delta == 1])
        return SurvivalCurve(grid, np.atleast_1d(aft_survival(fit, grid)), self.method)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.family.value!r})"


def make_estimator(
    method: EstimatorMethod | str, rule: BandwidthRule | None = None
) -> GmiEstimator:
    """Build the estimator for a method tag."""
    method = EstimatorMethod(method)
    if method is EstimatorMethod.PROPOSED:
        return ProposedEstimator(rule=rule)
    if method is EstimatorMethod.COVARIATE:
        return CovariateEstimator(rule=rule)
    if method is EstimatorMethod.KM:
        return KaplanMeierEstimator()
    return ParametricEstimator(AftFamily(method.value))


STANDARD_METHODS: tuple[EstimatorMethod, ...] = (
    EstimatorMethod.PROPOSED,
    EstimatorMethod.KM,
    EstimatorMethod.LOGNORMAL,
    EstimatorMethod.LOGLOGISTIC,
)


def standard_estimators(rule: BandwidthRule | None = None) -> list[GmiEstimator]:
    """The proposed estimator followed by the three comparison methods."""
    return [make_estimator(method, rule) for method in STANDARD_METHODS]
