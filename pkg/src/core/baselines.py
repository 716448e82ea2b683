"""Comparison estimators that treat y1/t0 as independently censored.

Naive Kaplan-Meier with Greenwood variance, and lognormal / loglogistic
location-scale models fitted by censored maximum likelihood on log(y1/t0).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import optimize, special, stats

from src.core.product_limit import greenwood_terms, risk_set_table
from src.data.models import Dataset, EstimatorMethod, SubjectRecord, SurvivalCurve, as_dataset
from src.utils.exceptions import ErrorCode, OptimizationError
from src.utils.logging import get_logger

logger = get_logger(__name__)

GRADIENT_TOLERANCE = 1e-8
MAX_NEWTON_ITERATIONS = 100
MAX_STEP_HALVINGS = 40


@dataclass(frozen=True)
class KaplanMeierCurve(SurvivalCurve):
    """Product-limit curve with pointwise Greenwood variance."""

    variance: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self) -> None:
        super().__post_init__()
        object.__setattr__(self, "variance", np.asarray(self.variance, dtype=float))

    def variance_at(self, r: float | np.ndarray) -> np.ndarray | float:
        """Greenwood variance, 0 before the first event and carried past the last."""
        idx = np.searchsorted(self.thresholds, np.asarray(r, dtype=float), side="right")
        padded = np.concatenate(([0.0], self.variance))
        out = padded[idx]
        return float(out) if out.ndim == 0 else out


def km_naive(data: Dataset | Sequence[SubjectRecord]) -> KaplanMeierCurve:
    """Kaplan-Meier estimate of P(y1/t0 > r) ignoring the dependence on t0."""
    arrays = as_dataset(data).arrays
    table = risk_set_table(np.ones(arrays.t0.size), arrays.ratio, arrays.delta)
    values = table.values[0]
    variance = values**2 * greenwood_terms(table)[0]
    return KaplanMeierCurve(
        thresholds=table.event_ratios,
        values=values,
        method=EstimatorMethod.KM,
        variance=variance,
    )


class AftFamily(Enum):
    """Error distributions of the log-ratio location-scale model."""

    LOGNORMAL = "lognormal"
    LOGLOGISTIC = "loglogistic"

    @property
    def method(self) -> EstimatorMethod:
        return EstimatorMethod(self.value)


@dataclass(frozen=True)
class AftFit:
    """Fitted location and scale of log(y1/t0)."""

    family: AftFamily
    location: float
    scale: float
    converged: bool
    loglik: float
    gradient_norm: float = 0.0
    iterations: int = 0

    def survival(self, r: float | np.ndarray) -> float | np.ndarray:
        return aft_survival(self, r)


def _score_terms(
    family: AftFamily, z: np.ndarray, events: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-observation log-likelihood (without -log scale) and its z-derivatives."""
    cens = ~events
    ll = np.empty_like(z)
    u1 = np.empty_like(z)
    u2 = np.empty_like(z)

    if family is AftFamily.LOGNORMAL:
        ze, zc = z[events], z[cens]
        ll[events] = stats.norm.logpdf(ze)
        u1[events] = -ze
        u2[events] = -1.0
        log_sf = stats.norm.logsf(zc)
        hazard = np.exp(stats.norm.logpdf(zc) - log_sf)
        ll[cens] = log_sf
        u1[cens] = -hazard
        u2[cens] = -hazard * (hazard - zc)
    else:
        cdf = special.expit(z)
        ll[events] = stats.logistic.logpdf(z[events])
        u1[events] = 1.0 - 2.0 * cdf[events]
        u2[events] = -2.0 * cdf[events] * (1.0 - cdf[events])
        ll[cens] = stats.logistic.logsf(z[cens])
        u1[cens] = -cdf[cens]
        u2[cens] = -cdf[cens] * (1.0 - cdf[cens])

    return ll, u1, u2


def aft_loglik(
    family: AftFamily, theta: np.ndarray, y: np.ndarray, delta: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Censored log-likelihood in theta = (location, log scale), with gradient and Hessian."""
    mu, eta = float(theta[0]), float(theta[1])
    sigma = np.exp(eta)
    events = delta == 1
    z = (y - mu) / sigma
    ll, u1, u2 = _score_terms(family, z, events)

    loglik = float(np.sum(ll) - eta * events.sum())
    grad = np.array(
        [
            -np.sum(u1) / sigma,
            -np.sum(u1 * z) - events.sum(),
        ]
    )
    h_mu_eta = np.sum(u2 * z + u1) / sigma
    hess = np.array(
        [
            [np.sum(u2) / sigma**2, h_mu_eta],
            [h_mu_eta, np.sum(u2 * z**2 + u1 * z)],
        ]
    )
    return loglik, grad, hess


def _newton(
    family: AftFamily,
    theta: np.ndarray,
    y: np.ndarray,
    delta: np.ndarray,
) -> tuple[np.ndarray, float, np.ndarray, int, bool]:
    """Damped Newton ascent; returns (theta, loglik, gradient, iterations, ok)."""
    loglik, grad, hess = aft_loglik(family, theta, y, delta)
    for iteration in range(1, MAX_NEWTON_ITERATIONS + 1):
        if np.max(np.abs(grad)) < GRADIENT_TOLERANCE:
            return theta, loglik, grad, iteration - 1, True

        try:
            np.linalg.cholesky(-hess)
            direction = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            # Not concave here: fall back to a scaled gradient step.
            direction = grad / max(1.0, float(np.max(np.abs(grad))))

        step = 1.0
        for _ in range(MAX_STEP_HALVINGS):
            candidate = theta + step * direction
            cand_ll, cand_grad, cand_hess = aft_loglik(family, candidate, y, delta)
            if not np.isfinite(cand_ll):
                step /= 2.0
                continue
            # Near the optimum the loglik change drops below rounding; the gradient decides.
            flat = cand_ll >= loglik - 1e-12 * max(1.0, abs(loglik))
            if cand_ll > loglik or (flat and np.max(np.abs(cand_grad)) < np.max(np.abs(grad))):
                break
            step /= 2.0
        else:
            return theta, loglik, grad, iteration, False

        theta, loglik, grad, hess = candidate, cand_ll, cand_grad, cand_hess

    return theta, loglik, grad, MAX_NEWTON_ITERATIONS, np.max(np.abs(grad)) < GRADIENT_TOLERANCE


def aft_fit(
    family: AftFamily | str,
    data: Dataset | Sequence[SubjectRecord],
    raise_on_failure: bool = False,
) -> AftFit:
    """Fit a lognormal or loglogistic model to the censored ratios.

    Newton iterations with step-halving start from the mean and SD of the
    uncensored log-ratios. If Newton stalls, a Nelder-Mead search is run and
    its optimum polished with Newton again.

    Raises:
        OptimizationError: If every ratio is censored, fewer than two events
            are observed, or (with ``raise_on_failure``) the fit does not
            reach a gradient norm below 1e-8.
    """
    family = AftFamily(family)
    arrays = as_dataset(data).arrays
    y = np.log(arrays.ratio)
    delta = arrays.delta
    n_events = int(delta.sum())

    if n_events == 0:
        raise OptimizationError(
            "every ratio is censored; the likelihood has no maximum",
            code=ErrorCode.OPTIMIZATION_ALL_CENSORED,
            family=family.value,
        )
    if n_events < 2:
        raise OptimizationError(
            f"{family.value} fit needs at least 2 events, got {n_events}",
            code=ErrorCode.OPTIMIZATION_TOO_FEW_EVENTS,
            family=family.value,
        )

    observed = y[delta == 1]
    spread = float(np.std(observed, ddof=1))
    start = np.array([float(np.mean(observed)), np.log(spread if spread > 0 else 1.0)])

    theta, loglik, grad, iterations, ok = _newton(family, start, y, delta)

    if not ok:
        logger.debug(
            f"{family.value}: Newton stalled after {iterations} iterations, trying Nelder-Mead"
        )
        result = optimize.minimize(
            lambda t: -aft_loglik(family, t, y, delta)[0],
            theta,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 5000},
        )
        theta, loglik, grad, extra, ok = _newton(family, result.x, y, delta)
        iterations += extra

    gradient_norm = float(np.max(np.abs(grad)))
    fit = AftFit(
        family=family,
        location=float(theta[0]),
        scale=float(np.exp(theta[1])),
        converged=bool(ok),
        loglik=loglik,
        gradient_norm=gradient_norm,
        iterations=iterations,
    )

    if not ok:
        message = f"{family.value} fit did not converge (gradient norm {gradient_norm:.2e})"
        if raise_on_failure:
            raise OptimizationError(message, family=family.value, gradient_norm=gradient_norm)
        logger.warning(message)

    return fit


def aft_survival(fit: AftFit, r: float | np.ndarray) -> float | np.ndarray:
    """Fitted P(ratio > r); equals 1 at r = 0."""
    r_arr = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        z = (np.log(r_arr) - fit.location) / fit.scale
    if fit.family is AftFamily.LOGNORMAL:
        out = stats.norm.sf(z)
    else:
        out = special.expit(-z)
    return float(out) if np.ndim(out) == 0 else out
