"""Failure-rate estimation and exponential decay fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import RejectedInputError
from .config import ExperimentConfig

#: cells with fewer failures than this are left out of decay fits
MIN_FAILURES = 5
Z95 = 1.959963984540054


@dataclass(frozen=True)
class CellStats:
    """Aggregate over all trials at one sketch size ``n``.

    ``trials`` counts the trials that entered the rate; ``degenerate`` and
    ``excluded`` (vacuous bound) trials are reported separately.
    """

    n: int
    trials: int
    failures: int
    p_hat: float
    wilson_lo: float
    wilson_hi: float
    degenerate: int = 0
    excluded: int = 0


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float
    points: int


@dataclass(frozen=True)
class ConcentrationReport:
    config: ExperimentConfig
    cells: tuple
    fit: Optional[DecayFit] = None

    def cell(self, n: int) -> CellStats:
        for c in self.cells:
            if c.n == n:
                return c
        raise KeyError(n)


def wilson_interval(failures: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise RejectedInputError("Wilson interval needs at least one trial")
    p = failures / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if failures == 0 else max(0.0, centre - half)
    hi = 1.0 if failures == trials else min(1.0, centre + half)
    return lo, hi


def make_cell(n: int, failures: int, trials: int, degenerate: int = 0, excluded: int = 0) -> CellStats:
    if trials > 0:
        lo, hi = wilson_interval(failures, trials)
        p = failures / trials
    else:
        lo, hi, p = 0.0, 1.0, math.nan
    return CellStats(n, trials, failures, p, lo, hi, degenerate, excluded)


def failure_rate(records: Sequence, epsilon: float) -> tuple[float, float, float]:
    """``(p_hat, wilson_lo, wilson_hi)`` for the event ``normalized_deviation > epsilon``.

    Degenerate and zero-slack records are skipped.
    """
    valid = [r for r in records if not r.degenerate and not r.excluded]
    if not valid:
        raise RejectedInputError("no non-degenerate records to estimate a rate from")
    k = sum(1 for r in valid if r.normalized_deviation > epsilon)
    lo, hi = wilson_interval(k, len(valid))
    return k / len(valid), lo, hi


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - intercept - slope * x) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def fit_decay(report: ConcentrationReport) -> tuple[float, float, float]:
    """Least-squares line through ``(n, ln p_hat)``.

    Only cells with at least ``MIN_FAILURES`` failures are used.

    Returns
    -------
    slope, intercept, r2
    """
    pts = [(c.n, c.p_hat) for c in report.cells if c.failures >= MIN_FAILURES and c.trials > 0]
    if len(pts) < 2 or len({n for n, _ in pts}) < 2:
        raise RejectedInputError(
            f"decay fit needs >= 2 grid points with >= {MIN_FAILURES} failures, have {len(pts)}"
        )
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.log(np.array([p[1] for p in pts]))
    return _ols(x, y)


def try_fit(report: ConcentrationReport) -> Optional[DecayFit]:
    try:
        slope, intercept, r2 = fit_decay(report)
    except RejectedInputError:
        return None
    points = sum(1 for c in report.cells if c.failures >= MIN_FAILURES and c.trials > 0)
    return DecayFit(slope, intercept, r2, points)
