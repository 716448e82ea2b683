"""Weibull gamma-frailty model for paired event times.

Given a frailty theta ~ Gamma(shape alpha, rate alpha), the prior-line time
T0 ~ Weibull(scale e^mu * theta, shape 1/sigma) and the current-line time
T1 ~ Weibull(scale e^mu * theta * R, shape 1/sigma) are independent, where
Weibull(scale l, shape k) has survival exp(-(t/l)^k). Current-line follow-up
is censored at C1 ~ Uniform(0.85 tau, tau).
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import special, stats

from src.data.models import Dataset
from src.utils.exceptions import CalibrationError, ErrorCode, SimulationError
from src.utils.logging import get_logger

logger = get_logger(__name__)

CENSORING_LOWER_FRACTION = 0.85
TRUTH_SEED = 20_240_501
TRUTH_DRAWS = 10_000_000
CALIBRATION_SEED = 4_862
ALPHA_BRACKET = (0.01, 100.0)


@dataclass(frozen=True)
class FrailtyModel:
    """Parameters of the paired-time generator.

    ``ratio_median`` is R, the ratio of the conditional medians of T1 and T0.
    ``alpha`` may be left unset until it is calibrated.
    """

    sigma: float
    ratio_median: float = 1.0
    mu: float = 3.0
    alpha: float | None = None

    def __post_init__(self) -> None:
        for name in ("sigma", "ratio_median"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise SimulationError(f"{name} must be positive, got {value}")
        if not math.isfinite(self.mu):
            raise SimulationError(f"mu must be finite, got {self.mu}")
        if self.alpha is not None and not (math.isfinite(self.alpha) and self.alpha > 0):
            raise SimulationError(f"alpha must be positive, got {self.alpha}")

    @property
    def shape(self) -> float:
        """Weibull shape k = 1/sigma."""
        return 1.0 / self.sigma

    def with_alpha(self, alpha: float) -> FrailtyModel:
        return replace(self, alpha=alpha)

    def require_alpha(self) -> float:
        if self.alpha is None:
            raise SimulationError("frailty model has no alpha; calibrate it first")
        return self.alpha


def _frailty_from_uniform(u: np.ndarray, alpha: float) -> np.ndarray:
    return stats.gamma.ppf(u, alpha, scale=1.0 / alpha)


def sample_pairs(
    model: FrailtyModel, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw n paired event times (t0, t1)."""
    alpha = model.require_alpha()
    theta = rng.gamma(shape=alpha, scale=1.0 / alpha, size=n)
    base = math.exp(model.mu) * theta
    t0 = base * rng.weibull(model.shape, size=n)
    t1 = base * model.ratio_median * rng.weibull(model.shape, size=n)
    return t0, t1


def apply_censoring(
    t0: np.ndarray, t1: np.ndarray, tau: float, rng: np.random.Generator
) -> Dataset:
    """Censor t1 at C ~ Uniform(0.85 tau, tau); t0 stays fully observed."""
    if not (math.isfinite(tau) and tau > 0):
        raise SimulationError(f"censoring horizon tau must be positive, got {tau}")
    c1 = rng.uniform(CENSORING_LOWER_FRACTION * tau, tau, size=t1.size)
    observed = t1 <= c1
    y1 = np.where(observed, t1, c1)
    return Dataset.from_arrays(t0, y1, observed.astype(int))


def simulate_dataset(model: FrailtyModel, tau: float, n: int, rng: np.random.Generator) -> Dataset:
    t0, t1 = sample_pairs(model, n, rng)
    return apply_censoring(t0, t1, tau, rng)


@dataclass(frozen=True)
class CalibrationResult:
    """Calibrated parameter value with the bisection trace of (value, achieved)."""

    parameter: str
    value: float
    target: float
    achieved: float
    trace: tuple[tuple[float, float], ...]


def _bisect(
    evaluate: Callable[[float], float],
    lower: float,
    upper: float,
    target: float,
    tolerance: float,
    parameter: str,
    decreasing: bool,
    max_iterations: int = 100,
) -> CalibrationResult:
    """Geometric bisection of a monotone function of a positive parameter."""
    trace: list[tuple[float, float]] = []
    for _ in range(max_iterations):
        mid = math.sqrt(lower * upper)
        achieved = evaluate(mid)
        trace.append((mid, achieved))
        if abs(achieved - target) < tolerance:
            logger.debug(f"{parameter} = {mid:.6g} gives {achieved:.4f} (target {target})")
            return CalibrationResult(parameter, mid, target, achieved, tuple(trace))
        if (achieved > target) == decreasing:
            lower = mid
        else:
            upper = mid
    raise CalibrationError(
        f"{parameter} did not reach {target} within {tolerance} after {max_iterations} steps",
        code=ErrorCode.CALIBRATION_NOT_CONVERGED,
        parameter=parameter,
        target=target,
    )


def calibrate_alpha(
    model: FrailtyModel,
    target_corr: float,
    samples: int = 200_000,
    seed: int = CALIBRATION_SEED,
    tolerance: float = 0.005,
) -> CalibrationResult:
    """Find the frailty shape alpha giving corr(T0, T1) = target.

    Every evaluation reuses the same uniforms (mapped through the gamma
    quantile function) and the same Weibull draws.
    """
    if not 0 < target_corr < 1:
        raise CalibrationError(
            f"target correlation must be in (0, 1), got {target_corr}",
            parameter="alpha",
            target=target_corr,
        )
    rng = np.random.default_rng(seed)
    u = rng.random(samples)
    w0 = rng.weibull(model.shape, size=samples)
    w1 = rng.weibull(model.shape, size=samples) * model.ratio_median
    scale = math.exp(model.mu)

    def correlation(alpha: float) -> float:
        theta = _frailty_from_uniform(u, alpha) * scale
        return float(np.corrcoef(theta * w0, theta * w1)[0, 1])

    lower, upper = ALPHA_BRACKET
    at_lower, at_upper = correlation(lower), correlation(upper)
    if not at_upper < target_corr < at_lower:
        raise CalibrationError(
            f"correlation {target_corr} is outside [{at_upper:.3f}, {at_lower:.3f}] "
            f"reachable for alpha in [{lower}, {upper}]",
            parameter="alpha",
            target=target_corr,
        )
    result = _bisect(correlation, lower, upper, target_corr, tolerance, "alpha", decreasing=True)
    logger.info(f"Calibrated alpha = {result.value:.4g} for correlation {target_corr}")
    return result


def calibrate_tau(
    model: FrailtyModel,
    target_cens: float,
    samples: int = 200_000,
    seed: int = CALIBRATION_SEED,
    tolerance: float = 0.002,
) -> CalibrationResult:
    """Find the censoring horizon tau giving P(C1 < T1) = target."""
    if not 0 < target_cens < 1:
        raise CalibrationError(
            f"target censoring rate must be in (0, 1), got {target_cens}",
            parameter="tau",
            target=target_cens,
        )
    rng = np.random.default_rng(seed)
    _, t1 = sample_pairs(model, samples, rng)
    fraction = CENSORING_LOWER_FRACTION + (1 - CENSORING_LOWER_FRACTION) * rng.random(samples)

    def censoring_rate(tau: float) -> float:
        return float(np.mean(tau * fraction < t1))

    lower = upper = float(np.median(t1))
    for _ in range(200):
        if censoring_rate(lower) > target_cens:
            break
        lower /= 2
    for _ in range(200):
        if censoring_rate(upper) < target_cens:
            break
        upper *= 2
    if not censoring_rate(upper) < target_cens < censoring_rate(lower):
        raise CalibrationError(
            f"could not bracket censoring rate {target_cens}", parameter="tau", target=target_cens
        )
    result = _bisect(censoring_rate, lower, upper, target_cens, tolerance, "tau", decreasing=True)
    logger.info(f"Calibrated tau = {result.value:.4g} for censoring rate {target_cens}")
    return result


@lru_cache(maxsize=64)
def _true_survival_cached(
    model: FrailtyModel, thresholds: tuple[float, ...], draws: int, seed: int
) -> tuple[float, ...]:
    rng = np.random.default_rng(seed)
    r = np.asarray(thresholds)
    exceed = np.zeros(r.size, dtype=np.int64)
    chunk = 1_000_000
    remaining = draws
    while remaining > 0:
        size = min(chunk, remaining)
        t0, t1 = sample_pairs(model, size, rng)
        ratio = np.sort(t1 / t0)
        exceed += size - np.searchsorted(ratio, r, side="right")
        remaining -= size
    return tuple(float(x) for x in exceed / draws)


def true_survival(
    model: FrailtyModel,
    r: float | np.ndarray,
    draws: int = TRUTH_DRAWS,
    seed: int = TRUTH_SEED,
) -> float | np.ndarray:
    """Monte Carlo value of S_G(r) = P(T1/T0 > r) with a fixed seed."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    values = np.array(_true_survival_cached(model, tuple(r_arr.tolist()), draws, seed))
    return float(values[0]) if np.ndim(r) == 0 else values


def closed_form_survival(model: FrailtyModel, r: float | np.ndarray) -> float | np.ndarray:
    """S_G(r) = 1 / (1 + (r/R)^(1/sigma)); the frailty cancels in T1/T0."""
    r_arr = np.asarray(r, dtype=float)
    out = 1.0 / (1.0 + (r_arr / model.ratio_median) ** model.shape)
    return float(out) if out.ndim == 0 else out


def frailty_correlation(sigma: float, alpha: float) -> float:
    """Exact Pearson correlation of T0 and T1 under the model."""
    m1 = special.gamma(1 + sigma)
    m2 = special.gamma(1 + 2 * sigma)
    variance = 1.0 / alpha
    return float(variance * m1**2 / ((1 + variance) * m2 - m1**2))


def alpha_for_correlation(sigma: float, target_corr: float) -> float:
    """Invert frailty_correlation for alpha."""
    m1sq = special.gamma(1 + sigma) ** 2
    m2 = special.gamma(1 + 2 * sigma)
    ceiling = m1sq / m2
    if not 0 < target_corr < ceiling:
        raise CalibrationError(
            f"correlation {target_corr} is not reachable with sigma = {sigma} (max {ceiling:.3f})",
            parameter="alpha",
            target=target_corr,
        )
    variance = target_corr * (m2 - m1sq) / (m1sq - target_corr * m2)
    return float(1.0 / variance)


def synthetic_trial_dataset(seed: int = 2012, n: int = 34, censoring: float = 0.21) -> Dataset:
    """A small trial-sized dataset from the model (sigma 0.5, R 1.3, corr 0.5).

    Times are on a months scale with a prior-line median near 4 months.
    """
    base = FrailtyModel(sigma=0.5, ratio_median=1.3, mu=1.6)
    model = base.with_alpha(alpha_for_correlation(base.sigma, 0.5))
    tau = calibrate_tau(model, censoring, samples=100_000, seed=seed).value
    dataset = simulate_dataset(model, tau, n, np.random.default_rng(seed))
    return Dataset(records=dataset.records, source=f"synthetic(seed={seed})")
