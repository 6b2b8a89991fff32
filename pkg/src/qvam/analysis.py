"""Closed-form performance estimates for the identifying perceptron."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .codec import Dimensions, required_digits


class NoSignalError(ValueError):
    """Raised when the probe carries no undistorted components (b = 1)."""


@dataclass(frozen=True)
class TheoryInput:
    N: int
    M: int
    q: int
    b: float = 0.0
    n: int | None = None
    P0: float = 1e-3

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise ValueError("N and M must be >= 1")
        if self.q < 2:
            raise ValueError("q must be >= 2")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"distortion b must lie in [0, 1], got {self.b}")
        if not 0.0 < self.P0 < 1.0:
            raise ValueError(f"target error P0 must lie in (0, 1), got {self.P0}")
        if self.n is None:
            object.__setattr__(self, "n", required_digits(self.M, self.q))
        elif self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def N_e(self) -> float:
        return effective_dim(self.N, self.b)


@dataclass(frozen=True)
class ErrorEstimate:
    raw: float
    clamped: float
    # the asymptotic form is only trusted while raw <= 0.5
    trusted: bool


def effective_dim(N: float, b: float) -> float:
    return N * (1.0 - b) ** 2


def error_probability(t: TheoryInput) -> ErrorEstimate:
    """Identification error probability n * sqrt(M / (pi N_e)) * exp(-N_e q^2 / 4M)."""
    Ne = t.N_e
    if Ne <= 0.0:
        raise NoSignalError("N_e = 0: every component is distorted")
    raw = t.n * math.sqrt(t.M / (math.pi * Ne)) * math.exp(-Ne * t.q**2 / (4.0 * t.M))
    return ErrorEstimate(raw, min(max(raw, 0.0), 1.0), raw <= 0.5)


def capacity(t: TheoryInput) -> float:
    """Largest M identified with error below ``t.P0`` at the same N_e and q."""
    Ne = t.N_e
    if Ne <= 0.0:
        raise NoSignalError("N_e = 0: every component is distorted")
    return Ne * t.q**2 / (4.0 * abs(math.log(t.P0)))


@dataclass(frozen=True)
class Threshold:
    raw: float
    clamped: float


def critical_distortion(N: float, M: float, q: float) -> Threshold:
    """Noise level 1 - 2 sqrt(M) / (q sqrt(N)) above which recall collapses."""
    if q * math.sqrt(N) <= 0:
        raise ValueError("q * sqrt(N) must be positive")
    raw = 1.0 - 2.0 * math.sqrt(M) / (q * math.sqrt(N))
    return Threshold(raw, min(max(raw, 0.0), 1.0))


def max_output_neurons(N_e: float, q: int) -> tuple[float, int]:
    """Output-layer size estimate 2 + ln N_e / ln q and its ceiling."""
    if N_e < 1:
        raise ValueError(f"N_e must be >= 1, got {N_e}")
    if q < 2:
        raise ValueError("q must be >= 2")
    value = 2.0 + math.log(N_e) / math.log(q)
    return value, math.ceil(value - 1e-12)


def op_counts(dims: Dimensions) -> dict[str, int]:
    """Analytic cost of one recall (n N q) against an exhaustive scan (N M)."""
    return {
        "perceptron": dims.n * dims.N * dims.q,
        "direct_scan": dims.N * dims.M,
    }


def theory_report(t: TheoryInput) -> dict:
    """Every closed-form quantity for one parameter set, JSON-ready."""
    Ne = t.N_e
    P = error_probability(t)
    b_max = critical_distortion(t.N, t.M, t.q)
    report = {
        "N": t.N,
        "M": t.M,
        "q": t.q,
        "b": t.b,
        "n": t.n,
        "P0": t.P0,
        "N_e": Ne,
        "P_raw": P.raw,
        "P_clamped": P.clamped,
        "P_trusted": P.trusted,
        "reliability": 1.0 - P.clamped,
        "M_max": capacity(t),
        "b_max_raw": b_max.raw,
        "b_max": b_max.clamped,
    }
    if Ne >= 1:
        n_max, n_layer = max_output_neurons(Ne, t.q)
        report["n_max"] = n_max
        report["n_max_ceil"] = n_layer
    else:
        report["n_max"] = None
        report["n_max_ceil"] = None
    # n may be set below required_digits here, so no Dimensions round trip
    report["perceptron_ops"] = t.n * t.N * t.q
    report["direct_scan_ops"] = t.N * t.M
    return report
