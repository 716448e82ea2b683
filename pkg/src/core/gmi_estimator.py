"""Kernel conditional and averaged estimators of the GMI survival function.

The conditional curve at t0 is a product-limit estimator over the observed
ratios y1/t0 in which subject j carries weight K((log t0_j - log t0) / a_n).
Averaging the conditional curves at every subject's own t0 gives the
marginal estimate of P(T1/T0 > r).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from src.core.kernel import BandwidthRule, KernelSpec, default_bandwidth, default_kernel
from src.core.product_limit import RiskSetTable, exclusive_products, risk_set_table
from src.data.models import (
    Dataset,
    EstimatorMethod,
    SampleArrays,
    SubjectRecord,
    SurvivalCurve,
    as_dataset,
)
from src.utils.exceptions import ErrorCode, EstimationError
from src.utils.logging import get_logger

logger = get_logger(__name__)

MAX_CONTINUOUS_COVARIATES = 2

Data = Dataset | Sequence[SubjectRecord]
Threshold = float | Sequence[float] | np.ndarray


def _check_thresholds(r: Threshold) -> np.ndarray:
    r_arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r_arr)) or np.any(r_arr < 0):
        raise EstimationError(
            f"thresholds must be finite and nonnegative, got {r}",
            code=ErrorCode.ESTIMATION_INVALID_THRESHOLD,
        )
    return r_arr


def _scalar_or_array(values: np.ndarray) -> float | np.ndarray:
    return float(values) if values.ndim == 0 else values


def _resolve(
    data: Data,
    bandwidth: float | None,
    kernel: KernelSpec | None,
    rule: BandwidthRule | None = None,
) -> tuple[Dataset, float, KernelSpec]:
    dataset = as_dataset(data)
    if dataset.n == 0:
        raise EstimationError("dataset has no records", code=ErrorCode.ESTIMATION_INSUFFICIENT_DATA)
    if bandwidth is None:
        bandwidth = default_bandwidth(dataset, rule)
    elif not (np.isfinite(bandwidth) and bandwidth > 0):
        raise EstimationError(
            f"bandwidth must be positive, got {bandwidth}",
            code=ErrorCode.ESTIMATION_DEGENERATE_BANDWIDTH,
        )
    return dataset, float(bandwidth), kernel or default_kernel()


def kernel_weights(
    target_log_t0: np.ndarray,
    log_t0: np.ndarray,
    bandwidth: float,
    kernel: KernelSpec,
) -> np.ndarray:
    """Weight matrix w[i, j] = K((log t0_j - target_i) / a_n)."""
    u = (log_t0[None, :] - np.asarray(target_log_t0, dtype=float)[:, None]) / bandwidth
    return kernel(u)


def conditional_table(
    arrays: SampleArrays,
    bandwidth: float,
    kernel: KernelSpec,
    target_log_t0: np.ndarray | None = None,
) -> RiskSetTable:
    """Conditional curves at each target log t0 (default: every subject's own)."""
    targets = arrays.log_t0 if target_log_t0 is None else target_log_t0
    weights = kernel_weights(targets, arrays.log_t0, bandwidth, kernel)
    return risk_set_table(weights, arrays.ratio, arrays.delta)


def conditional_survival_gmi(
    r: Threshold,
    t0: float,
    data: Data,
    bandwidth: float | None = None,
    kernel: KernelSpec | None = None,
) -> float | np.ndarray:
    """Estimate P(T1/T0 > r | T0 = t0)."""
    r_arr = _check_thresholds(r)
    if not (np.isfinite(t0) and t0 > 0):
        raise EstimationError(f"t0 must be positive, got {t0}")
    dataset, bw, spec = _resolve(data, bandwidth, kernel)
    table = conditional_table(dataset.arrays, bw, spec, np.array([np.log(t0)]))
    return _scalar_or_array(table.evaluate(r_arr)[0])


def survival_gmi(
    r: Threshold,
    data: Data,
    bandwidth: float | None = None,
    kernel: KernelSpec | None = None,
    rule: BandwidthRule | None = None,
) -> float | np.ndarray:
    """Estimate P(T1/T0 > r) by averaging the conditional curves."""
    r_arr = _check_thresholds(r)
    dataset, bw, spec = _resolve(data, bandwidth, kernel, rule)
    table = conditional_table(dataset.arrays, bw, spec)
    return _scalar_or_array(table.evaluate(r_arr).mean(axis=0))


def survival_gmi_curve(
    data: Data,
    bandwidth: float | None = None,
    kernel: KernelSpec | None = None,
    rule: BandwidthRule | None = None,
) -> SurvivalCurve:
    """The averaged estimator as a step function over all event ratios."""
    dataset, bw, spec = _resolve(data, bandwidth, kernel, rule)
    table = conditional_table(dataset.arrays, bw, spec)
    return SurvivalCurve(table.event_ratios, table.values.mean(axis=0), EstimatorMethod.PROPOSED)


def covariate_weights(arrays: SampleArrays, bandwidth: float, kernel: KernelSpec) -> np.ndarray:
    """Weights K(||(X_j - X_i)/a_n||) restricted to subjects in the same V stratum.

    X = (log t0, z). With no continuous covariates the norm is |u|, which
    keeps the weights identical to the unadjusted estimator's.
    """
    q = arrays.z.shape[1]
    if q > MAX_CONTINUOUS_COVARIATES:
        raise EstimationError(
            f"{q} continuous covariates supplied; "
            f"at most {MAX_CONTINUOUS_COVARIATES} are supported. "
            "Reduce the covariates to a lower-dimensional summary score first.",
            code=ErrorCode.ESTIMATION_COVARIATE_DIMENSION,
        )
    x = np.column_stack((arrays.log_t0, arrays.z))
    u = (x[None, :, :] - x[:, None, :]) / bandwidth
    dist = np.abs(u[:, :, 0]) if q == 0 else np.sqrt(np.sum(u * u, axis=2))
    weights = kernel(dist)
    if arrays.has_categorical:
        weights = np.where(arrays.strata[None, :] == arrays.strata[:, None], weights, 0.0)
    return weights


def _warn_sparse_strata(arrays: SampleArrays, r_arr: np.ndarray) -> None:
    if not arrays.has_categorical:
        return
    ratio = arrays.ratio
    for stratum in np.unique(arrays.strata):
        members = arrays.strata == stratum
        size = int(members.sum())
        if size == 1:
            logger.warning(
                f"Covariate stratum {stratum} has a single subject; "
                "its conditional curve is that subject's own step function"
            )
        event_ratios = ratio[members & (arrays.delta == 1)]
        first_event = float(event_ratios.min()) if event_ratios.size else np.inf
        uncovered = np.unique(r_arr[r_arr < first_event])
        if uncovered.size:
            listed = ", ".join(f"{value:g}" for value in uncovered)
            logger.warning(
                f"Covariate stratum {stratum} ({size} subjects) has no events "
                f"at or below r = {listed}"
            )


def covariate_survival_gmi(
    r: Threshold,
    data: Data,
    bandwidth: float | None = None,
    kernel: KernelSpec | None = None,
    rule: BandwidthRule | None = None,
) -> float | np.ndarray:
    """Covariate-adjusted estimate of P(T1/T0 > r).

    Each subject's conditional curve uses kernel weights on (log t0, z) and
    only the subjects sharing its categorical covariate values.
    """
    r_arr = _check_thresholds(r)
    dataset, bw, spec = _resolve(data, bandwidth, kernel, rule)
    arrays = dataset.arrays
    weights = covariate_weights(arrays, bw, spec)
    _warn_sparse_strata(arrays, np.atleast_1d(r_arr))
    table = risk_set_table(weights, arrays.ratio, arrays.delta)
    return _scalar_or_array(table.evaluate(r_arr).mean(axis=0))


def covariate_survival_gmi_curve(
    data: Data,
    bandwidth: float | None = None,
    kernel: KernelSpec | None = None,
    rule: BandwidthRule | None = None,
) -> SurvivalCurve:
    dataset, bw, spec = _resolve(data, bandwidth, kernel, rule)
    arrays = dataset.arrays
    weights = covariate_weights(arrays, bw, spec)
    _warn_sparse_strata(arrays, np.empty(0))
    table = risk_set_table(weights, arrays.ratio, arrays.delta)
    return SurvivalCurve(table.event_ratios, table.values.mean(axis=0), EstimatorMethod.COVARIATE)


@dataclass(frozen=True)
class InfluenceVector:
    """Per-subject influence values at threshold r."""

    r: float
    xi: np.ndarray
    flagged: np.ndarray

    @property
    def n(self) -> int:
        return self.xi.size

    @property
    def variance(self) -> float:
        """Plug-in variance n^-2 * sum(xi^2)."""
        return float(np.sum(self.xi**2) / self.n**2)


def influence_values(
    r: float,
    data: Data,
    bandwidth: float | None = None,
    kernel: KernelSpec | None = None,
    rule: BandwidthRule | None = None,
) -> InfluenceVector:
    """Influence value of each subject on the averaged estimate at r.

    xi_i = S(r; t0_i) - S_G(r) + W_i * sum_k g_ik * prod_{l != k} f_il, the sum
    running over event ratios s_k <= r of subject i's conditional curve, with
    W_i the total kernel weight of that curve, f_il its product-limit factors
    and g_ik = -delta_i 1{s_i = s_k} / Y_ik + 1{s_i >= s_k} D_ik / Y_ik^2 the
    change of factor k when subject i's mass grows.
    """
    r_val = float(_check_thresholds(r))
    dataset, bw, spec = _resolve(data, bandwidth, kernel, rule)
    arrays = dataset.arrays
    weights = kernel_weights(arrays.log_t0, arrays.log_t0, bw, spec)
    table = risk_set_table(weights, arrays.ratio, arrays.delta)

    conditional = table.evaluate(r_val)
    xi = conditional - conditional.mean()
    flagged = np.zeros(dataset.n, dtype=bool)

    k_r = table.jumps_through(r_val)
    if k_r:
        jumps = table.event_ratios[:k_r]
        at_risk = table.at_risk[:, :k_r]
        events = table.events[:, :k_r]
        ratio = arrays.ratio[:, None]

        own_event = ((arrays.delta[:, None] == 1) & (ratio == jumps[None, :])).astype(float)
        own_at_risk = ratio >= jumps[None, :]
        positive = at_risk > 0
        safe = np.where(positive, at_risk, 1.0)
        change = np.where(positive, own_at_risk * events / safe**2 - own_event / safe, 0.0)

        total_weight = weights.sum(axis=1)
        others = exclusive_products(table.factors[:, :k_r])
        xi = xi + total_weight * np.sum(change * others, axis=1)

        flagged = np.any(~positive & own_at_risk, axis=1)
        if flagged.any():
            logger.warning(
                f"{int(flagged.sum())} subject(s) have zero weighted at-risk mass on their "
                f"path up to r = {r_val:g}; their path terms were skipped"
            )

    return InfluenceVector(r=r_val, xi=xi, flagged=flagged)


def plugin_variance(
    r: float,
    data: Data,
    bandwidth: float | None = None,
    kernel: KernelSpec | None = None,
    rule: BandwidthRule | None = None,
) -> float:
    """Variance of the averaged estimate at r from the influence values."""
    return influence_values(r, data, bandwidth, kernel, rule).variance
