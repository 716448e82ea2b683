"""Weighted risk-set engine behind every product-limit curve in the package.

Each row of a weight matrix defines one weighted Kaplan-Meier curve over the
same observations; the unweighted estimator is the single row of ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RiskSetTable:
    """Weighted at-risk and event totals at the distinct event ratios.

    Attributes:
        event_ratios: Sorted distinct event locations, shape (K,)
        at_risk: Weighted at-risk totals Y, shape (m, K)
        events: Weighted event totals D, shape (m, K)
        factors: Product-limit factors 1 - D/Y (1 where Y = 0), shape (m, K)
        values: Curve values after each jump, shape (m, K)
    """

    event_ratios: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray
    factors: np.ndarray
    values: np.ndarray

    @property
    def n_curves(self) -> int:
        return self.values.shape[0]

    def jumps_through(self, r: float) -> int:
        """Number of event ratios at or below r."""
        return int(np.searchsorted(self.event_ratios, r, side="right"))

    def evaluate(self, r: float | np.ndarray) -> np.ndarray:
        """Right-continuous curve values; shape (m,) for scalar r, else (m, len(r))."""
        idx = np.searchsorted(self.event_ratios, np.asarray(r, dtype=float), side="right")
        padded = np.concatenate((np.ones((self.n_curves, 1)), self.values), axis=1)
        return padded[:, idx]


def risk_set_table(weights: np.ndarray, ratio: np.ndarray, delta: np.ndarray) -> RiskSetTable:
    """Build weighted product-limit curves for every row of ``weights``.

    Args:
        weights: Observation weights, shape (m, n) or (n,)
        ratio: Observed ratios y1/t0, shape (n,)
        delta: Event indicators, shape (n,)

    Exactly equal event ratios share one factor. A jump whose weighted
    at-risk total is zero contributes a factor of 1.
    """
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    ratio = np.asarray(ratio, dtype=float)
    is_event = np.asarray(delta) == 1
    m, n = weights.shape

    event_ratios = np.unique(ratio[is_event])
    if event_ratios.size == 0:
        empty = np.empty((m, 0))
        return RiskSetTable(event_ratios, empty, empty, empty, empty)

    order = np.argsort(ratio, kind="stable")
    sorted_ratio = ratio[order]
    tail = np.cumsum(weights[:, order][:, ::-1], axis=1)[:, ::-1]
    tail = np.concatenate((tail, np.zeros((m, 1))), axis=1)
    at_risk = tail[:, np.searchsorted(sorted_ratio, event_ratios, side="left")]

    incidence = np.zeros((n, event_ratios.size))
    event_idx = np.flatnonzero(is_event)
    incidence[event_idx, np.searchsorted(event_ratios, ratio[event_idx])] = 1.0
    events = weights @ incidence

    hazard = np.divide(events, at_risk, out=np.zeros_like(events), where=at_risk > 0)
    factors = np.clip(1.0 - hazard, 0.0, 1.0)
    values = np.cumprod(factors, axis=1)
    return RiskSetTable(event_ratios, at_risk, events, factors, values)


def exclusive_products(factors: np.ndarray) -> np.ndarray:
    """For each column k, the row product of all other columns.

    Computed from prefix and suffix products, so a zero factor elsewhere
    does not need a division.
    """
    m, k = factors.shape
    if k == 0:
        return factors.copy()
    ones = np.ones((m, 1))
    prefix = np.concatenate((ones, np.cumprod(factors, axis=1)[:, :-1]), axis=1)
    suffix = np.concatenate(
        (np.cumprod(factors[:, ::-1], axis=1)[:, ::-1][:, 1:], ones), axis=1
    )
    return prefix * suffix


def greenwood_terms(table: RiskSetTable) -> np.ndarray:
    """Cumulative Greenwood sums D / (Y (Y - D)) for each curve.

    Terms with Y <= D (a factor of zero) are left out; the variance there is 0.
    """
    y, d = table.at_risk, table.events
    denom = y * (y - d)
    terms = np.divide(d, denom, out=np.zeros_like(d), where=denom > 0)
    return np.cumsum(terms, axis=1)
