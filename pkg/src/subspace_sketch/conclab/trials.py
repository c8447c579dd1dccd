"""Single Monte Carlo trials.

Every trial is a pure function of ``(config, n, trial_index)``: the stream
key is ``derive_key(master_seed, n, trial_index)`` and the pieces of a trial
(first subspace, second subspace, sketch) use fixed sub-keys of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .. import rng
from ..errors import DegenerateGeometryError, DegenerateSketchError, RejectedInputError
from ..estimator import projected_affinity_estimate
from ..linalg import extreme_singular_values
from ..sketch import SketchedPair, apply, gaussian_operator, sketch_pair
from ..subspace import (
    PrincipalBases,
    Subspace,
    affinity_sq,
    affinity_to_distance_sq,
    generate_pair_with_angles,
    generate_random_subspace,
    principal_bases,
)
from .config import ExperimentConfig

#: below this ``d1 - aff_X^2`` the deviation bound is vacuous and the trial is excluded
ZERO_SLACK = 1e-12
_UNIT_TOL = 1e-14

KEY_X1, KEY_X2, KEY_SKETCH = 1, 2, 3


def trial_key(config: ExperimentConfig, n: int, trial_index: int) -> int:
    return rng.derive_key(config.master_seed, n, trial_index)


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    n: int
    aff_x_sq: float
    aff_y_sq: float
    oaff_sq: float
    d_x_sq: float
    d_y_sq: float
    od_sq: float
    normalized_deviation: float
    violated: bool
    degenerate: bool = False
    excluded: bool = False
    line_identity_residual: float = math.nan


def _nan_record(trial_index: int, n: int, aff_x: float, d_x: float) -> TrialRecord:
    nan = math.nan
    return TrialRecord(trial_index, n, aff_x, nan, nan, d_x, nan, nan, nan, False, degenerate=True)


def draw_pair(config: ExperimentConfig, key: int, need_bases: bool = False):
    """The trial's subspace pair as ``(x1, x2, bases_or_None)``."""
    if config.haar:
        x1 = generate_random_subspace(config.ambient, config.d1, rng.derive_key(key, KEY_X1))
        x2 = generate_random_subspace(config.ambient, config.d2, rng.derive_key(key, KEY_X2))
        bases = principal_bases(x1, x2) if need_bases else None
        return x1, x2, bases
    return generate_pair_with_angles(
        config.ambient, config.cosines, config.d2, rng.derive_key(key, KEY_X1)
    )


def line_identity(pair: SketchedPair, op_entries: np.ndarray) -> float:
    """Post-sketch squared affinity of a line and a subspace from the decomposition
    ``u = lam u2_1 + sqrt(1 - lam^2) u0``::

        1 - (1 - lam^2) (||a0||^2 - ||V^T a0||^2) / ||a||^2

    with ``a = Φ u``, ``a0 = Φ u0`` and ``V`` an orthonormal basis of the
    sketched subspace.
    """
    src = pair.source
    if src is None or src.u0 is None or src.d1 != 1:
        raise RejectedInputError("line identity needs a d1 = 1 pair with complement direction")
    lam = float(src.lam[0])
    a = pair.a1[:, 0]
    a0 = op_entries @ src.u0[:, 0]
    va0 = pair.v2.T @ a0
    return 1.0 - (1.0 - lam * lam) * (a0 @ a0 - va0 @ va0) / (a @ a)


def run_pair_trial(config: ExperimentConfig, n: int, trial_index: int) -> TrialRecord:
    """Sketch one pair and compare the measured affinity with its estimate."""
    key = trial_key(config, n, trial_index)
    d1, d2 = config.d1, config.d2
    line_case = d1 == 1
    x1, x2, bases = draw_pair(config, key, need_bases=line_case)
    aff_x = affinity_sq(x1, x2)
    d_x = affinity_to_distance_sq(aff_x, d1, d2)
    try:
        op = gaussian_operator(n, config.ambient, rng.derive_key(key, KEY_SKETCH))
        line_resid = math.nan
        if line_case and bases.u0 is not None:
            pair = sketch_pair(op, bases)
            aff_y = affinity_sq(pair.y1, pair.y2)
            line_resid = abs(aff_y - line_identity(pair, op.entries))
        else:
            aff_y = affinity_sq(apply(op, x1), apply(op, x2))
    except DegenerateSketchError:
        return _nan_record(trial_index, n, aff_x, d_x)

    oaff = projected_affinity_estimate(min(aff_x, d1), d1, d2, n)
    slack = d1 - aff_x
    if slack <= ZERO_SLACK:
        dev, excluded = 0.0, True
    else:
        dev, excluded = abs(aff_y - oaff) / slack, False
    return TrialRecord(
        trial_index=trial_index,
        n=n,
        aff_x_sq=aff_x,
        aff_y_sq=aff_y,
        oaff_sq=oaff,
        d_x_sq=d_x,
        d_y_sq=(d1 + d2) / 2.0 - aff_y,
        od_sq=(d1 + d2) / 2.0 - oaff,
        normalized_deviation=dev,
        violated=(not excluded) and dev > config.epsilon,
        excluded=excluded,
        line_identity_residual=line_resid,
    )


@dataclass(frozen=True)
class PairRatio:
    i: int
    j: int
    d_x_sq: float
    d_y_sq: float
    ratio: float
    in_band: bool
    excluded: bool = False
    degenerate: bool = False


def set_ratios(subspaces: Sequence[Subspace], op, epsilon: float) -> list[PairRatio]:
    """Distance ratios ``D_Y^2 / D_X^2`` for all ``L (L-1) / 2`` pairs under one sketch.

    Pairs with ``D_X^2 = 0`` (duplicates) are excluded; a rank collapse marks
    every pair degenerate.
    """
    pairs = [(i, j) for i in range(len(subspaces)) for j in range(i + 1, len(subspaces))]
    d_x = {
        (i, j): affinity_to_distance_sq(affinity_sq(subspaces[i], subspaces[j]),
                                        subspaces[i].dim, subspaces[j].dim)
        for i, j in pairs
    }
    try:
        ys = [apply(op, x) for x in subspaces]
    except DegenerateSketchError:
        nan = math.nan
        return [PairRatio(i, j, d_x[i, j], nan, nan, False, degenerate=True) for i, j in pairs]
    out = []
    for i, j in pairs:
        dy = affinity_to_distance_sq(affinity_sq(ys[i], ys[j]), ys[i].dim, ys[j].dim)
        dx = d_x[i, j]
        if dx <= ZERO_SLACK:
            out.append(PairRatio(i, j, dx, dy, math.nan, False, excluded=True))
            continue
        ratio = dy / dx
        out.append(PairRatio(i, j, dx, dy, ratio, 1.0 - epsilon < ratio < 1.0 + epsilon))
    return out


def run_set_trial(config: ExperimentConfig, n: int, trial_index: int) -> list[PairRatio]:
    """``L`` Haar subspaces of dimension ``d2`` sketched by one shared operator."""
    if config.l_count < 2:
        raise RejectedInputError("set trials need L >= 2")
    key = trial_key(config, n, trial_index)
    subspaces = [
        generate_random_subspace(config.ambient, config.d2, rng.derive_key(key, KEY_X1, i))
        for i in range(config.l_count)
    ]
    op = gaussian_operator(n, config.ambient, rng.derive_key(key, KEY_SKETCH))
    return set_ratios(subspaces, op, config.epsilon)


@dataclass(frozen=True)
class ProofIntermediates:
    """Gram-Schmidt quantities for column ``k`` (1-based) of the sketched first basis.

    ``alpha_k``: cosine between ``abar_1k`` and the span of the earlier columns;
    ``beta_k``: norm of the projection of the unit vector ``b_k`` (direction of
    that projection) onto the second sketched subspace; ``lambda_hat_k``: norm
    of the projection of ``abar_1k`` onto it; ``cross_inner``: inner product of
    the unit components of ``abar_1k`` and ``b_k`` orthogonal to it.
    """

    k: int
    alpha_k: float
    beta_k: float
    lambda_hat_k: float
    cross_inner: float
    identity_residual: float
    v_proj_sq: float
    abar_proj_sq: float


def _unit_or_zero(x: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(x)
    return x / nrm if nrm > _UNIT_TOL else np.zeros_like(x)


def proof_intermediates(pair: SketchedPair, k: int) -> ProofIntermediates:
    """Evaluate the column-``k`` quantities and the residual of the norm identity

    ``(1 - alpha^2) ||P_perp v_1k||^2
      = 1 - lhat^2 + alpha^2 (1 - beta^2) - 2 alpha sqrt(1 - lhat^2) sqrt(1 - beta^2) <abar_perp, b_perp>``

    where ``P_perp`` projects onto the orthogonal complement of the second
    sketched subspace.
    """
    d1 = pair.abar1.shape[1]
    if not (2 <= k <= d1):
        raise RejectedInputError(f"k must lie in [2, {d1}], got {k}")
    v1, v2 = pair.v1, pair.v2
    abar = pair.abar1[:, k - 1]
    prefix = v1[:, : k - 1]
    p = prefix @ (prefix.T @ abar)
    alpha = float(np.linalg.norm(p))
    if alpha >= 1.0 - 1e-10:
        raise DegenerateGeometryError(f"column {k} lies in the span of the earlier columns")
    if alpha <= _UNIT_TOL:
        raise DegenerateGeometryError(f"column {k} is exactly orthogonal to the earlier columns")
    b = p / alpha

    abar_in = v2.T @ abar
    b_in = v2.T @ b
    lam_hat = float(np.linalg.norm(abar_in))
    beta = float(np.linalg.norm(b_in))
    abar_perp = _unit_or_zero(abar - v2 @ abar_in)
    b_perp = _unit_or_zero(b - v2 @ b_in)
    cross = float(abar_perp @ b_perp)

    v = v1[:, k - 1]
    v_in = v2.T @ v
    v_perp_sq = float(v @ v - v_in @ v_in)
    one_m_lh = max(1.0 - lam_hat * lam_hat, 0.0)
    one_m_b = max(1.0 - beta * beta, 0.0)
    lhs = (1.0 - alpha * alpha) * v_perp_sq
    rhs = (
        one_m_lh
        + alpha * alpha * one_m_b
        - 2.0 * alpha * math.sqrt(one_m_lh) * math.sqrt(one_m_b) * cross
    )
    return ProofIntermediates(
        k=k,
        alpha_k=alpha,
        beta_k=beta,
        lambda_hat_k=lam_hat,
        cross_inner=cross,
        identity_residual=abs(lhs - rhs),
        v_proj_sq=float(v_in @ v_in),
        abar_proj_sq=lam_hat * lam_hat,
    )


@dataclass(frozen=True)
class TailProbe:
    t: float
    n_rows: int
    n_cols: int
    exceed_max_rate: float
    exceed_min_rate: float


def tail_exceedances(key: int, rows: int, cols: int, t: float) -> tuple[bool, bool]:
    """Does one unit-variance ``rows x cols`` Gaussian draw cross the upper / lower edge?"""
    a = rng.normal_matrix(key, rows, cols)
    smin, smax = extreme_singular_values(a)
    hi = math.sqrt(rows) + math.sqrt(cols)
    lo = math.sqrt(rows) - math.sqrt(cols)
    return smax >= hi + t, smin <= lo - t


def tail_probe(rows: int, cols: int, t: float, trials: int, master_seed: int) -> TailProbe:
    """Empirical rates of the two singular-value tail events for Gaussian matrices."""
    if rows < cols:
        raise RejectedInputError("tail probe expects rows >= cols")
    if t < 0 or trials < 1:
        raise RejectedInputError("need t >= 0 and trials >= 1")
    over = under = 0
    for i in range(trials):
        hi, lo = tail_exceedances(rng.derive_key(master_seed, rows, cols, i), rows, cols, t)
        over += hi
        under += lo
    return TailProbe(t, rows, cols, over / trials, under / trials)
