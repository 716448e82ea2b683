"""Modified Silverman kernel and the log-T0 bandwidth rule."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from src.data.models import Dataset, SubjectRecord, as_dataset
from src.utils.exceptions import ErrorCode, EstimationError
from src.utils.logging import get_logger

logger = get_logger(__name__)

_SQRT2 = math.sqrt(2.0)

# Beyond |u| = 60 the envelope e^(-|u|/sqrt2)/2 is below 1e-18.
QUADRATURE_LIMIT = 60.0


def _unnormalized(u: np.ndarray | float) -> np.ndarray:
    a = np.abs(u) / _SQRT2
    return np.abs(0.5 * np.exp(-a) * np.sin(a + math.pi / 4))


def kernel_zeros(limit: float = QUADRATURE_LIMIT) -> list[float]:
    """Positive zeros sqrt2 * (k*pi - pi/4) of the kernel up to ``limit``."""
    zeros = []
    k = 1
    while (u := _SQRT2 * (k * math.pi - math.pi / 4)) < limit:
        zeros.append(u)
        k += 1
    return zeros


@lru_cache(maxsize=4)
def _normalization_constant(limit: float) -> float:
    half, abserr = integrate.quad(
        _unnormalized,
        0.0,
        limit,
        points=kernel_zeros(limit),
        limit=500,
        epsabs=1e-12,
        epsrel=1e-12,
    )
    logger.debug(f"Kernel normalization 2*{half:.15f} (quadrature error {abserr:.2e})")
    return 2.0 * half


@dataclass(frozen=True)
class KernelSpec:
    """The modified Silverman kernel with its quadrature normalization."""

    normalization_constant: float

    def __call__(self, u: np.ndarray | float) -> np.ndarray:
        return _unnormalized(u) / self.normalization_constant

    def unnormalized(self, u: np.ndarray | float) -> np.ndarray:
        return _unnormalized(u)


@lru_cache(maxsize=1)
def default_kernel() -> KernelSpec:
    """Process-wide kernel; the constant is computed once."""
    return KernelSpec(normalization_constant=_normalization_constant(QUADRATURE_LIMIT))


def silverman_kernel(u: np.ndarray | float, kernel: KernelSpec | None = None) -> np.ndarray | float:
    """K(u) = |1/2 e^(-|u|/sqrt2) sin(|u|/sqrt2 + pi/4)| / normalization."""
    value = (kernel or default_kernel())(u)
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class BandwidthRule:
    """a_n = SD(log t0) * n^(-exponent)."""

    exponent: float = 0.4

    def __post_init__(self) -> None:
        if not (math.isfinite(self.exponent) and self.exponent > 0):
            raise EstimationError(f"bandwidth exponent must be positive, got {self.exponent}")

    @classmethod
    def preset(cls, name: str) -> BandwidthRule:
        """Named presets: ``default`` (2/5), ``cube_root`` (1/3), ``square_root`` (1/2)."""
        try:
            return cls(BANDWIDTH_PRESETS[name])
        except KeyError as e:
            raise EstimationError(
                f"Unknown bandwidth preset '{name}' (choose from {', '.join(BANDWIDTH_PRESETS)})"
            ) from e

    def bandwidth(self, log_t0: np.ndarray) -> float:
        n = log_t0.size
        if n < 2:
            raise EstimationError(
                f"bandwidth needs at least 2 subjects, got {n}",
                code=ErrorCode.ESTIMATION_INSUFFICIENT_DATA,
            )
        if np.ptp(log_t0) == 0:
            raise EstimationError(
                "all t0 values are equal, so the sample SD of log t0 is zero",
                code=ErrorCode.ESTIMATION_DEGENERATE_BANDWIDTH,
            )
        sd = float(np.std(log_t0, ddof=1))
        return sd * n ** (-self.exponent)


BANDWIDTH_PRESETS: dict[str, float] = {
    "default": 0.4,
    "cube_root": 1.0 / 3.0,
    "square_root": 0.5,
}

DEFAULT_RULE = BandwidthRule()


def default_bandwidth(
    data: Dataset | Sequence[SubjectRecord],
    rule: BandwidthRule | None = None,
) -> float:
    """Bandwidth from the sample SD (divisor n-1) of log t0."""
    dataset = as_dataset(data)
    return (rule or DEFAULT_RULE).bandwidth(dataset.arrays.log_t0)
