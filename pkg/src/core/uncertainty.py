"""Bootstrap standard errors, log-log confidence intervals and Wald tests."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from src.core.estimators import GmiEstimator
from src.data.models import Dataset
from src.utils.exceptions import AppException, BootstrapError, ErrorCode, EstimationError
from src.utils.logging import get_logger

logger = get_logger(__name__)

CLAMP = 1e-10

Resampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class BootstrapConfig:
    """Resampling settings; B = ``resamples``."""

    resamples: int = 5000
    seed: int = 20240101
    rebandwidth: bool = True
    workers: int = 1

    def __post_init__(self) -> None:
        if self.resamples < 2:
            raise BootstrapError(
                f"at least 2 bootstrap resamples are needed, got {self.resamples}",
                code=ErrorCode.BOOTSTRAP_INVALID_RESAMPLES,
                resamples=self.resamples,
            )
        if self.seed < 0:
            raise BootstrapError(
                f"bootstrap seed must be nonnegative, got {self.seed}",
                code=ErrorCode.BOOTSTRAP_INVALID_RESAMPLES,
            )


def iteration_rng(seed: int, iteration: int, stream: int = 0) -> np.random.Generator:
    """Generator for one resample, independent of scheduling order."""
    return np.random.default_rng(np.random.SeedSequence([seed, stream, iteration]))


def uniform_resampler(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n subject indices with replacement."""
    return rng.integers(0, n, size=n)


@dataclass(frozen=True)
class BootstrapDistribution:
    """Resampled estimates, shape (B, n_estimators, n_thresholds); NaN where undefined."""

    thresholds: np.ndarray
    estimates: np.ndarray

    @property
    def resamples(self) -> int:
        return self.estimates.shape[0]

    def defined(self) -> np.ndarray:
        """Count of defined resamples per (estimator, threshold)."""
        return np.sum(np.isfinite(self.estimates), axis=0)

    def se(self) -> np.ndarray:
        """Sample SD (divisor B' - 1) over the defined resamples."""
        n_est, n_thr = self.estimates.shape[1:]
        out = np.empty((n_est, n_thr))
        for e in range(n_est):
            for k in range(n_thr):
                out[e, k] = _sample_sd(self.estimates[:, e, k], self.thresholds[k])
        return out

    def difference_se(self, first: int, second: int) -> np.ndarray:
        """SD of the paired differences between two estimators, per threshold."""
        diffs = self.estimates[:, first, :] - self.estimates[:, second, :]
        return np.array(
            [_sample_sd(diffs[:, k], self.thresholds[k]) for k in range(self.thresholds.size)]
        )


def _sample_sd(values: np.ndarray, r: float) -> float:
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        raise BootstrapError(
            f"every bootstrap resample gave an undefined estimate at r = {r:g}",
            resamples=values.size,
        )
    if finite.size < values.size:
        logger.warning(
            f"{values.size - finite.size} of {values.size} bootstrap resamples "
            f"undefined at r = {r:g}"
        )
    if finite.size == 1 or np.all(finite == finite[0]):
        return 0.0
    return float(np.std(finite, ddof=1))


def bootstrap_distribution(
    estimators: Sequence[GmiEstimator],
    data: Dataset,
    thresholds: Sequence[float] | np.ndarray,
    cfg: BootstrapConfig,
    resampler: Resampler | None = None,
    stream: int = 0,
) -> BootstrapDistribution:
    """Re-run every estimator on the same B subject-level resamples.

    Subjects (t0, y1, delta1) are resampled as units. With ``cfg.rebandwidth``
    off, data-driven tuning is fixed at its full-sample value first.
    """
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    if data.n < 2:
        raise EstimationError(
            "bootstrap needs at least 2 subjects", code=ErrorCode.ESTIMATION_INSUFFICIENT_DATA
        )
    draw = resampler or uniform_resampler
    fitted = list(estimators) if cfg.rebandwidth else [est.freeze(data) for est in estimators]

    def one_resample(iteration: int) -> np.ndarray:
        indices = draw(iteration_rng(cfg.seed, iteration, stream), data.n)
        sample = data.take(indices)
        out = np.full((len(fitted), thresholds.size), np.nan)
        for e, estimator in enumerate(fitted):
            try:
                out[e] = estimator(sample, thresholds)
            except AppException as exc:
                logger.debug(f"resample {iteration}: {estimator.label} undefined ({exc.message})")
        return out

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(one_resample, range(cfg.resamples)))
    else:
        rows = [one_resample(b) for b in range(cfg.resamples)]

    return BootstrapDistribution(thresholds=thresholds, estimates=np.stack(rows))


def bootstrap_se(
    estimator: GmiEstimator,
    data: Dataset,
    r: float | Sequence[float] | np.ndarray,
    cfg: BootstrapConfig,
    resampler: Resampler | None = None,
) -> float | np.ndarray:
    """Bootstrap standard error of one estimator at r."""
    dist = bootstrap_distribution([estimator], data, r, cfg, resampler)
    se = dist.se()[0]
    return float(se[0]) if np.ndim(r) == 0 else se


@dataclass(frozen=True)
class ConfidenceInterval:
    low: float
    high: float
    degenerate: bool = False


def normal_quantile(level: float) -> float:
    if not 0 < level < 1:
        raise EstimationError(f"confidence level must be in (0, 1), got {level}")
    return float(stats.norm.ppf(1 - (1 - level) / 2))


def loglog_ci(estimate: float, se: float, level: float = 0.95) -> ConfidenceInterval:
    """Interval S^exp(+-z * se / (S log S)) built on log(-log S).

    Estimates of exactly 0 or 1 give the degenerate interval [S, S]; others
    are clamped to [1e-10, 1 - 1e-10] before the transform.
    """
    z = normal_quantile(level)
    if math.isnan(estimate) or math.isnan(se):
        return ConfidenceInterval(math.nan, math.nan, degenerate=True)
    if estimate <= 0.0 or estimate >= 1.0:
        s = min(max(estimate, 0.0), 1.0)
        return ConfidenceInterval(s, s, degenerate=True)

    s = min(max(estimate, CLAMP), 1.0 - CLAMP)
    shift = z * se / (s * math.log(s))
    first, second = s ** math.exp(shift), s ** math.exp(-shift)
    low, high = min(first, second), max(first, second)
    return ConfidenceInterval(min(low, estimate), max(high, estimate))


@dataclass(frozen=True)
class WaldResult:
    """Two-sided Wald test of a difference."""

    diff: float
    se_diff: float
    z: float
    p: float

    def to_dict(self) -> dict[str, float]:
        return {"diff": self.diff, "se_diff": self.se_diff, "z": self.z, "p": self.p}


def wald_test(diff: float, se_diff: float) -> WaldResult:
    """p = 2(1 - Phi(|z|)) with z = diff / se_diff; p = 1 when diff = 0."""
    if diff == 0:
        return WaldResult(diff=0.0, se_diff=se_diff, z=0.0, p=1.0)
    if se_diff <= 0:
        return WaldResult(diff=diff, se_diff=se_diff, z=math.copysign(math.inf, diff), p=0.0)
    z = diff / se_diff
    return WaldResult(diff=diff, se_diff=se_diff, z=z, p=float(2 * stats.norm.sf(abs(z))))


def wald_difference(
    estimator_a: GmiEstimator,
    estimator_b: GmiEstimator,
    data: Dataset,
    r: float,
    cfg: BootstrapConfig,
    resampler: Resampler | None = None,
) -> WaldResult:
    """Test S_A(r) = S_B(r) with the paired-bootstrap SD of the difference."""
    diff = float(estimator_a(data, [r])[0] - estimator_b(data, [r])[0])
    dist = bootstrap_distribution([estimator_a, estimator_b], data, [r], cfg, resampler)
    return wald_test(diff, float(dist.difference_se(0, 1)[0]))


@dataclass(frozen=True)
class ThresholdTestResult:
    """One-sided test of H0: S_G(r) <= p0 against S_G(r) > p0."""

    estimate: float
    null_proportion: float
    z: float
    p: float


def threshold_test(estimate: float, se: float, null_proportion: float) -> ThresholdTestResult:
    """One-sided Wald test that P(GMI > r) exceeds a prespecified proportion."""
    if not 0 < null_proportion < 1:
        raise EstimationError(f"null proportion must be in (0, 1), got {null_proportion}")
    diff = estimate - null_proportion
    if se <= 0:
        z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    else:
        z = diff / se
    return ThresholdTestResult(estimate, null_proportion, z, float(stats.norm.sf(z)))


def two_group_wald(
    estimator: GmiEstimator,
    data_a: Dataset,
    data_b: Dataset,
    r: float,
    cfg: BootstrapConfig,
) -> WaldResult:
    """Compare two independent groups at r; se_diff = sqrt(se_A^2 + se_B^2)."""
    est_a = float(estimator(data_a, [r])[0])
    est_b = float(estimator(data_b, [r])[0])
    se_a = bootstrap_distribution([estimator], data_a, [r], cfg, stream=1).se()[0, 0]
    se_b = bootstrap_distribution([estimator], data_b, [r], cfg, stream=2).se()[0, 0]
    return wald_test(est_a - est_b, float(math.hypot(se_a, se_b)))
