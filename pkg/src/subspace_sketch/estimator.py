"""Closed-form predictions for sketched subspace geometry.

After a Gaussian sketch to R^n the squared affinity of a pair with
dimensions ``d1 <= d2`` concentrates around::

    aff_sq + (d2 / n) * (d1 - aff_sq)

and, equivalently, the squared distance around::

    D_sq - (d2 / n) * (D_sq - (d2 - d1) / 2)

Deviations are measured against ``d1 - aff_sq`` (the same quantity as
``D_sq - (d2 - d1)/2``).  The constants governing how large ``n`` must be
and how fast failures decay are not known in closed form, so they are
fitted from Monte Carlo reports by :func:`calibrate_constants`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

from .errors import CalibrationMismatchError, RejectedInputError, UnreliableCalibrationError
from .subspace import affinity_to_distance_sq

_SLACK = 1e-10
#: minimum R^2 of the decay fit for a calibration to be usable
MIN_R2 = 0.9


@dataclass(frozen=True)
class RipEstimate:
    oaff_sq: float
    od_sq: float
    slack: float


@dataclass(frozen=True)
class CalibrationResult:
    """Empirical threshold and decay constants for one band width ``epsilon``.

    ``c1_hat`` is in units of sketch size per subspace dimension, ``c2_hat``
    is the exponential decay rate of the failure probability per unit ``n``.
    """

    c1_hat: float
    c2_hat: float
    epsilon: float
    fit_r2: float
    grid: dict = field(default_factory=dict)
    reliable: bool = True
    diagnostic: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CalibrationResult":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        missing = {"c1_hat", "c2_hat", "epsilon", "fit_r2"} - known.keys()
        if missing:
            raise RejectedInputError(f"calibration record lacks {sorted(missing)}")
        return cls(**known)


def _check_dims(d1: int, d2: int, n: int) -> None:
    if not (1 <= d1 <= d2 < n):
        raise RejectedInputError(f"need 1 <= d1 <= d2 < n, got d1={d1}, d2={d2}, n={n}")


def projected_affinity_estimate(aff_sq: float, d1: int, d2: int, n: int) -> float:
    _check_dims(d1, d2, n)
    if not (-_SLACK <= aff_sq <= d1 + _SLACK):
        raise RejectedInputError(f"aff_sq={aff_sq} outside [0, {d1}]")
    return aff_sq + (d2 / n) * (d1 - aff_sq)


def projected_distance_estimate(d_sq: float, d1: int, d2: int, n: int) -> float:
    _check_dims(d1, d2, n)
    floor = (d2 - d1) / 2.0
    if not (floor - _SLACK <= d_sq <= (d1 + d2) / 2.0 + _SLACK):
        raise RejectedInputError(f"d_sq={d_sq} outside [{floor}, {(d1 + d2) / 2.0}]")
    return d_sq - (d2 / n) * (d_sq - floor)


def estimate_pair(aff_x_sq: float, d1: int, d2: int, n: int, epsilon: float) -> RipEstimate:
    """Both estimates for one pair plus the band radius ``epsilon * (d1 - aff_x_sq)``."""
    oaff = projected_affinity_estimate(aff_x_sq, d1, d2, n)
    return RipEstimate(
        oaff_sq=oaff,
        od_sq=affinity_to_distance_sq(oaff, d1, d2),
        slack=epsilon * max(d1 - aff_x_sq, 0.0),
    )


def rip_band(d_sq: float, epsilon: float) -> tuple[float, float]:
    if not (0.0 < epsilon < 1.0):
        raise RejectedInputError(f"epsilon must lie in (0, 1), got {epsilon}")
    if d_sq < 0.0:
        raise RejectedInputError(f"d_sq must be non-negative, got {d_sq}")
    return (1.0 - epsilon) * d_sq, (1.0 + epsilon) * d_sq


def explain_plan(
    d: int, l_count: int, epsilon: float, target_failure: float, cal: CalibrationResult
) -> tuple[int, str]:
    """Planned sketch size and which requirement decided it.

    The binding constraint is ``"dimension"`` (``n >= c1 max(d, ln L)``) or
    ``"union-bound"`` (``exp(-c2 n) L (L-1)/2 <= target``).
    """
    if abs(cal.epsilon - epsilon) > 1e-12:
        raise CalibrationMismatchError(
            f"calibration is for epsilon={cal.epsilon}, requested epsilon={epsilon}"
        )
    if not cal.reliable or not (cal.c2_hat > 0.0) or cal.fit_r2 < MIN_R2:
        raise UnreliableCalibrationError(
            "calibration is unreliable"
            + (f": {cal.diagnostic}" if cal.diagnostic else f" (c2={cal.c2_hat}, r2={cal.fit_r2})")
        )
    if d < 1 or l_count < 1:
        raise RejectedInputError("d and L must be positive")
    if not (0.0 < target_failure < 1.0):
        raise RejectedInputError(f"target failure must lie in (0, 1), got {target_failure}")

    n_dim = max(math.ceil(cal.c1_hat * max(d, math.log(l_count))), d + 1)
    pairs = l_count * (l_count - 1) / 2.0
    n_union = 0
    if pairs > target_failure:
        n_union = max(math.ceil(math.log(pairs / target_failure) / cal.c2_hat), 0)
        # guard against ceil landing one off through rounding
        while n_union > 0 and math.exp(-cal.c2_hat * (n_union - 1)) * pairs <= target_failure:
            n_union -= 1
        while math.exp(-cal.c2_hat * n_union) * pairs > target_failure:
            n_union += 1
    if n_union > n_dim:
        return n_union, "union-bound"
    return n_dim, "dimension"


def plan_sketch_dimension(
    d: int, l_count: int, epsilon: float, target_failure: float, cal: CalibrationResult
) -> int:
    """Smallest sketch size meeting both the dimension and union-bound requirements."""
    return explain_plan(d, l_count, epsilon, target_failure, cal)[0]


def calibrate_constants(report) -> CalibrationResult:
    """Fit ``c2`` from the decay of failure rates and read ``c1`` off the grid.

    ``c2_hat`` is minus the least-squares slope of ``ln p_hat`` against ``n``
    over cells with at least 5 failures.  ``c1_hat`` is the smallest ``n/d``
    on the grid from which every larger grid point satisfies
    ``p_hat <= exp(-c2_hat n)``, rounded up to two decimals; ``d`` is the
    larger subspace dimension of the experiment.
    """
    from .conclab.stats import MIN_FAILURES, fit_decay

    cfg = report.config
    grid = {
        "n_grid": [c.n for c in report.cells],
        "d": cfg.d2,
        "trials": cfg.trials,
        "lemma": cfg.lemma_id,
    }
    usable = [c for c in report.cells if c.failures >= MIN_FAILURES and c.trials > 0]
    if len(usable) < 2:
        return CalibrationResult(
            c1_hat=math.nan,
            c2_hat=math.nan,
            epsilon=cfg.epsilon,
            fit_r2=math.nan,
            grid=grid,
            reliable=False,
            diagnostic=f"only {len(usable)} grid point(s) with >= {MIN_FAILURES} failures",
        )
    slope, _, r2 = fit_decay(report)
    c2 = -slope
    cells = sorted(report.cells, key=lambda c: c.n)
    c1 = math.nan
    for i, cell in enumerate(cells):
        tail = cells[i:]
        if all(c.p_hat <= math.exp(-c2 * c.n) * (1.0 + 1e-9) for c in tail):
            c1 = math.ceil(cell.n / cfg.d2 * 100.0 - 1e-9) / 100.0
            break
    problems = []
    if not c2 > 0.0:
        problems.append(f"decay rate not positive (c2={c2:.4g})")
    if r2 < MIN_R2:
        problems.append(f"poor fit (r2={r2:.3f} < {MIN_R2})")
    if math.isnan(c1):
        problems.append("no grid point meets the fitted decay curve")
    return CalibrationResult(
        c1_hat=c1,
        c2_hat=c2,
        epsilon=cfg.epsilon,
        fit_r2=r2,
        grid=grid,
        reliable=not problems,
        diagnostic="; ".join(problems),
    )
