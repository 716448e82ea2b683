"""Monte Carlo operating characteristics of the four estimators.

For every replicate a dataset is drawn from the frailty model, each method is
evaluated at the thresholds with its standard error and log-log interval,
and the replicates are aggregated into Bias / SE / SEE / CP cells.
"""

from __future__ import annotations

import os
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Any

import numpy as np
import pandas as pd

from src.core.estimators import STANDARD_METHODS, KaplanMeierEstimator, standard_estimators
from src.core.kernel import BandwidthRule
from src.core.simulation import (
    TRUTH_DRAWS,
    FrailtyModel,
    calibrate_alpha,
    calibrate_tau,
    closed_form_survival,
    simulate_dataset,
    true_survival,
)
from src.core.uncertainty import BootstrapConfig, bootstrap_distribution, loglog_ci
from src.data.models import EstimatorMethod
from src.utils.exceptions import AppException, ErrorCode, SimulationError
from src.utils.logging import get_logger

logger = get_logger(__name__)

DEFAULT_THRESHOLDS = (1.3, 1.5, 1.7)


@dataclass(frozen=True)
class SimScenario:
    """One cell of the simulation grid."""

    model: FrailtyModel
    tau: float
    n: int
    replicates: int = 500
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    bootstrap_b: int = 300
    seed: int = 1
    bandwidth_exponent: float = 0.4
    truth: str = "monte_carlo"
    truth_draws: int = TRUTH_DRAWS
    failure_threshold: float = 0.01
    target_corr: float | None = None
    target_cens: float | None = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise SimulationError(f"sample size must be at least 2, got {self.n}")
        if self.replicates < 1:
            raise SimulationError(f"replicates must be positive, got {self.replicates}")
        if not self.tau > 0:
            raise SimulationError(f"tau must be positive, got {self.tau}")
        if self.truth not in ("monte_carlo", "closed_form"):
            raise SimulationError(f"unknown truth source '{self.truth}'")
        self.model.require_alpha()

    def truth_values(self) -> np.ndarray:
        r = np.asarray(self.thresholds, dtype=float)
        if self.truth == "closed_form":
            return np.atleast_1d(closed_form_survival(self.model, r))
        return np.atleast_1d(true_survival(self.model, r, draws=self.truth_draws))


@dataclass
class ReplicateRecord:
    """Per-replicate estimates and SEs, shape (methods, thresholds)."""

    index: int
    estimates: np.ndarray
    ses: np.ndarray
    censoring_rate: float
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def run_replicate(scenario: SimScenario, index: int) -> ReplicateRecord:
    """Draw one dataset and evaluate every method on it.

    Module-level so a process pool can pickle it. SEs are bootstrap for the
    proposed and parametric methods and Greenwood for KM.
    """
    rng = np.random.default_rng(np.random.SeedSequence([scenario.seed, index]))
    thresholds = np.asarray(scenario.thresholds, dtype=float)
    shape = (len(STANDARD_METHODS), thresholds.size)
    estimates = np.full(shape, np.nan)
    ses = np.full(shape, np.nan)

    data = simulate_dataset(scenario.model, scenario.tau, scenario.n, rng)
    estimators = standard_estimators(BandwidthRule(scenario.bandwidth_exponent))

    try:
        for e, estimator in enumerate(estimators):
            estimates[e] = estimator(data, thresholds)

        km_index = STANDARD_METHODS.index(EstimatorMethod.KM)
        km = estimators[km_index]
        assert isinstance(km, KaplanMeierEstimator)
        ses[km_index] = km.greenwood_se(data, thresholds)

        boot_index = [e for e in range(len(estimators)) if e != km_index]
        cfg = BootstrapConfig(
            resamples=scenario.bootstrap_b,
            seed=int(rng.integers(0, 2**63 - 1)),
        )
        dist = bootstrap_distribution([estimators[e] for e in boot_index], data, thresholds, cfg)
        ses[boot_index] = dist.se()
    except AppException as exc:
        return ReplicateRecord(index, estimates, ses, data.censoring_rate, error=exc.message)

    return ReplicateRecord(index, estimates, ses, data.censoring_rate)


def _run_replicate_args(args: tuple[SimScenario, int]) -> ReplicateRecord:
    return run_replicate(*args)


@dataclass(frozen=True)
class CellResult:
    """Bias / SE / SEE / CP of one method at one threshold."""

    method: EstimatorMethod
    r: float
    truth: float
    bias: float
    se: float
    see: float
    cp: float


@dataclass
class ScenarioResult:
    """Aggregated operating characteristics of one scenario."""

    scenario: SimScenario
    truth: np.ndarray
    cells: list[CellResult]
    achieved_censoring: float
    replicates_used: int
    replicates_failed: int
    se_degenerate: bool = False
    failures: list[str] = field(default_factory=list)

    def cell(self, method: EstimatorMethod, r: float) -> CellResult:
        for cell in self.cells:
            if cell.method is method and np.isclose(cell.r, r):
                return cell
        raise KeyError(f"no cell for {method.value} at r = {r}")

    def to_frame(self) -> pd.DataFrame:
        """One row per (sigma, r, censoring, n, method), in table column order."""
        s = self.scenario
        rows = [
            {
                "sigma": s.model.sigma,
                "R": s.model.ratio_median,
                "corr": s.target_corr,
                "r": cell.r,
                "censoring": s.target_cens,
                "n": s.n,
                "method": cell.method.label,
                "truth": cell.truth,
                "bias": cell.bias,
                "se": cell.se,
                "see": cell.see,
                "cp": cell.cp,
                "achieved_censoring": self.achieved_censoring,
                "replicates": self.replicates_used,
            }
            for cell in self.cells
        ]
        return pd.DataFrame(rows)


def aggregate(
    scenario: SimScenario, records: Sequence[ReplicateRecord], truth: np.ndarray
) -> ScenarioResult:
    """Combine replicate records into cells.

    Raises:
        SimulationError: If the failed fraction exceeds the scenario threshold.
    """
    failed = [rec for rec in records if rec.failed]
    used = [rec for rec in records if not rec.failed]
    fraction = len(failed) / len(records)
    if fraction > scenario.failure_threshold:
        raise SimulationError(
            f"{len(failed)} of {len(records)} replicates failed "
            f"(limit {scenario.failure_threshold:.0%}); first error: {failed[0].error}",
            code=ErrorCode.SIMULATION_FAILURE_THRESHOLD,
        )
    if failed:
        logger.warning(f"Excluded {len(failed)} failed replicate(s) of {len(records)}")
    if not used:
        raise SimulationError("no replicate succeeded", code=ErrorCode.SIMULATION_FAILURE_THRESHOLD)

    estimates = np.stack([rec.estimates for rec in used])
    ses = np.stack([rec.ses for rec in used])
    single = len(used) == 1

    cells: list[CellResult] = []
    for e, method in enumerate(STANDARD_METHODS):
        for k, r in enumerate(scenario.thresholds):
            est = estimates[:, e, k]
            se_hat = ses[:, e, k]
            covered = [
                (ci := loglog_ci(float(s), float(h))).low <= truth[k] <= ci.high
                for s, h in zip(est, se_hat)
            ]
            cells.append(
                CellResult(
                    method=method,
                    r=float(r),
                    truth=float(truth[k]),
                    bias=float(np.mean(est) - truth[k]),
                    se=0.0 if single else float(np.std(est, ddof=1)),
                    see=float(np.mean(se_hat)),
                    cp=float(np.mean(covered)),
                )
            )

    return ScenarioResult(
        scenario=scenario,
        truth=truth,
        cells=cells,
        achieved_censoring=float(np.mean([rec.censoring_rate for rec in used])),
        replicates_used=len(used),
        replicates_failed=len(failed),
        se_degenerate=single,
        failures=[f"replicate {rec.index}: {rec.error}" for rec in failed],
    )


def _resolve_workers(workers: int) -> int:
    return workers if workers > 0 else (os.cpu_count() or 1)


def run_scenario(
    scenario: SimScenario,
    workers: int = 1,
    on_progress: Callable[[int], None] | None = None,
) -> ScenarioResult:
    """Run every replicate and aggregate.

    Results do not depend on ``workers``: each replicate seeds its own
    generator from (scenario seed, replicate index) and records are
    collected in index order.
    """
    workers = _resolve_workers(workers)
    logger.info_ctx(
        f"Scenario sigma={scenario.model.sigma} R={scenario.model.ratio_median} "
        f"n={scenario.n}: {scenario.replicates} replicates on {workers} worker(s)",
        ctx={"sigma": scenario.model.sigma, "R": scenario.model.ratio_median, "n": scenario.n},
    )
    args = [(scenario, index) for index in range(scenario.replicates)]

    records: list[ReplicateRecord] = []
    if workers == 1:
        for arg in args:
            records.append(_run_replicate_args(arg))
            if on_progress:
                on_progress(1)
    else:
        chunksize = max(1, scenario.replicates // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as executor:
            for record in executor.map(_run_replicate_args, args, chunksize=chunksize):
                records.append(record)
                if on_progress:
                    on_progress(1)

    return aggregate(scenario, records, scenario.truth_values())


@dataclass(frozen=True)
class ScenarioGrid:
    """Cartesian grid of scenario settings, as read from a scenario file."""

    sigma: tuple[float, ...] = (0.3, 0.5)
    ratio_median: tuple[float, ...] = (1.0,)
    correlation: tuple[float, ...] = (0.5,)
    censoring: tuple[float, ...] = (0.2, 0.3)
    n: tuple[int, ...] = (50, 70, 90)
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    mu: float = 3.0
    replicates: int = 500
    bootstrap_b: int = 300
    seed: int = 1
    bandwidth_exponent: float = 0.4
    truth: str = "monte_carlo"
    truth_draws: int = TRUTH_DRAWS
    calibration_samples: int = 200_000
    failure_threshold: float = 0.01

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ScenarioGrid:
        """Build a grid from a mapping; scalars become one-element axes."""
        axes = ("sigma", "ratio_median", "correlation", "censoring", "n", "thresholds")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise SimulationError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
        values: dict[str, Any] = {}
        for key, value in data.items():
            if key in axes:
                seq = value if isinstance(value, (list, tuple)) else [value]
                values[key] = tuple(int(v) if key == "n" else float(v) for v in seq)
            else:
                values[key] = value
        return cls(**values)


def build_scenarios(grid: ScenarioGrid) -> list[SimScenario]:
    """Calibrate alpha and tau for every cell and return the scenarios.

    Scenario seeds are derived from the grid seed and the cell position.
    """
    alpha_cache: dict[tuple[float, float], float] = {}
    tau_cache: dict[tuple[float, float, float, float], float] = {}
    scenarios: list[SimScenario] = []

    cells = product(grid.sigma, grid.ratio_median, grid.correlation, grid.censoring, grid.n)
    for position, (sigma, ratio_median, corr, cens, n) in enumerate(cells):
        base = FrailtyModel(sigma=sigma, ratio_median=ratio_median, mu=grid.mu)
        alpha_key = (sigma, corr)
        if alpha_key not in alpha_cache:
            alpha_cache[alpha_key] = calibrate_alpha(
                base, corr, samples=grid.calibration_samples
            ).value
        model = base.with_alpha(alpha_cache[alpha_key])

        tau_key = (sigma, ratio_median, corr, cens)
        if tau_key not in tau_cache:
            tau_cache[tau_key] = calibrate_tau(model, cens, samples=grid.calibration_samples).value

        scenarios.append(
            SimScenario(
                model=model,
                tau=tau_cache[tau_key],
                n=n,
                replicates=grid.replicates,
                thresholds=grid.thresholds,
                bootstrap_b=grid.bootstrap_b,
                seed=int(np.random.SeedSequence([grid.seed, position]).generate_state(1)[0]),
                bandwidth_exponent=grid.bandwidth_exponent,
                truth=grid.truth,
                truth_draws=grid.truth_draws,
                failure_threshold=grid.failure_threshold,
                target_corr=corr,
                target_cens=cens,
            )
        )
    return scenarios


def run_grid(
    scenarios: Iterable[SimScenario],
    workers: int = 1,
    on_progress: Callable[[int], None] | None = None,
) -> list[ScenarioResult]:
    """Run scenarios in grid order; ``on_progress`` ticks once per replicate."""
    return [run_scenario(scenario, workers, on_progress) for scenario in scenarios]


def grid_frame(results: Sequence[ScenarioResult]) -> pd.DataFrame:
    """Stack the tables of several scenario results."""
    frames = [result.to_frame() for result in results]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
