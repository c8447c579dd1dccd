"""Dense linear algebra kernel.

Matrices are plain 2-D ``float64`` numpy arrays.  The routines here are the
few pieces the rest of the package needs and that benefit from being written
out explicitly: Gram-Schmidt with reorthogonalization, a one-sided Jacobi SVD
for the small cross-Gram matrices that carry principal angles, and extreme
singular values.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DegenerateInputError, NumericalFailureError, RejectedInputError

#: relative residual below which a Gram-Schmidt column counts as dependent
RANK_TOL = 1e-12
#: rotation threshold on |w_p . w_q| / (|w_p| |w_q|) for one-sided Jacobi
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 60
#: column count above which extreme singular values use power iteration
SMALL_SVD_LIMIT = 64
POWER_TOL = 1e-10
POWER_MAX_ITER = 20000


class SvdResult(NamedTuple):
    """Thin SVD ``a = left_vectors @ diag(singular_values) @ right_vectors.T``."""

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and convert ``a`` to a finite 2-D float64 array.

    1-D input is treated as a single column.
    """
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise RejectedInputError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise RejectedInputError(f"{name} has non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise RejectedInputError(
            f"dimension mismatch: {a.shape[0]}x{a.shape[1]} times {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def gram_schmidt(a) -> np.ndarray:
    """Orthonormalize the columns of ``a`` in order.

    Modified Gram-Schmidt followed by one full reorthogonalization pass per
    column.  Column order is preserved, so ``Q[:, :k]`` spans the same space
    as ``a[:, :k]`` and the first column is just ``a[:, 0]`` normalized.

    Raises
    ------
    DegenerateInputError
        If a column's residual after elimination falls below
        ``RANK_TOL`` times its original norm.
    """
    a = as_matrix(a, "a")
    rows, cols = a.shape
    if cols > rows:
        raise RejectedInputError(f"cannot orthonormalize {cols} columns in dimension {rows}")
    q = np.empty_like(a)
    for j in range(cols):
        v = a[:, j].copy()
        norm0 = np.linalg.norm(v)
        if norm0 == 0.0:
            raise DegenerateInputError(f"column {j} is zero", column=j)
        for _ in range(2):
            for i in range(j):
                v -= (q[:, i] @ v) * q[:, i]
        r = np.linalg.norm(v)
        if r <= RANK_TOL * norm0:
            raise DegenerateInputError(
                f"column {j} is numerically dependent on columns 0..{j - 1} "
                f"(relative residual {r / norm0:.3e})",
                column=j,
            )
        q[:, j] = v / r
    return q


def _round_robin(k: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # tournament schedule: every round is a set of disjoint column pairs
    m = k + (k % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [
            (min(players[i], players[m - 1 - i]), max(players[i], players[m - 1 - i]))
            for i in range(m // 2)
        ]
        pairs = [(p, q) for p, q in pairs if q < k]
        if pairs:
            p_idx, q_idx = zip(*pairs)
            rounds.append((np.array(p_idx), np.array(q_idx)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def complete_basis(u: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace columns of ``u`` not flagged in ``keep`` so all columns are orthonormal.

    The kept columns must already be orthonormal.  Each fill-in is the
    standard basis vector with the largest residual against the columns placed
    so far (ties go to the lowest index), orthogonalized twice.
    """
    rows, cols = u.shape
    basis = [u[:, j] for j in range(cols) if keep[j]]
    out = u.copy()
    for j in range(cols):
        if keep[j]:
            continue
        cand = np.eye(rows)
        for _ in range(2):
            for b in basis:
                cand -= np.outer(b, b @ cand)
        # residual norms of all candidates sum to rows - len(basis) >= 1
        pick = int(np.argmax(np.linalg.norm(cand, axis=0)))
        v = cand[:, pick]
        v = v / np.linalg.norm(v)
        basis.append(v)
        out[:, j] = v
    return out


def svd_small(a) -> SvdResult:
    """Thin SVD by one-sided (Hestenes) Jacobi rotations.

    Intended for matrices with ``min(rows, cols) <= 64``, typically the
    ``d1 x d2`` cross-Gram matrix of two orthonormal bases.  Disjoint column
    pairs are rotated together in a round-robin order, which keeps the Python
    overhead per sweep at ``O(cols)`` vectorized steps.
    """
    a = as_matrix(a, "a")
    rows, cols = a.shape
    if min(rows, cols) > SMALL_SVD_LIMIT:
        raise RejectedInputError(
            f"svd_small handles min(rows, cols) <= {SMALL_SVD_LIMIT}, got {a.shape}"
        )
    if cols > rows:
        u, s, v = svd_small(a.T)
        return SvdResult(v, s, u)
    peak = float(np.max(np.abs(a)))
    if peak == 0.0:
        return _svd_jacobi(a)
    if not (2.0**-500 < peak < 2.0**500):
        # squared norms would under/overflow; a power-of-two scale is exact
        scale = 2.0 ** np.round(np.log2(peak))
        u, s, v = svd_small(a / scale)
        return SvdResult(u, s * scale, v)
    if rows > 2 * cols:
        # tall input: rotate the triangular factor instead of the full columns
        q, r = np.linalg.qr(a)
        u, s, v = svd_small(r)
        return SvdResult(q @ u, s, v)
    return _svd_jacobi(a)


def _svd_jacobi(a: np.ndarray) -> SvdResult:
    rows, cols = a.shape
    # row j of z is [column j of W | column j of V]; gathers are contiguous
    # and one rotation updates both factors
    z = np.hstack([a.T, np.eye(cols)])
    # columns with norm below this are roundoff noise and are not rotated
    floor = (np.finfo(float).eps * np.linalg.norm(a)) ** 2
    rounds = _round_robin(cols)
    off = 0.0
    for _ in range(JACOBI_MAX_SWEEPS):
        off = 0.0
        rotated = False
        sq = np.einsum("ij,ij->i", z[:, :rows], z[:, :rows])
        for p, q in rounds:
            zp, zq = z[p], z[q]
            alpha, beta = sq[p], sq[q]
            gamma = np.einsum("ij,ij->i", zp[:, :rows], zq[:, :rows])
            live = (alpha > floor) & (beta > floor)
            rel = np.abs(gamma) / np.sqrt(np.where(live, alpha * beta, np.inf))
            top = rel.max()
            if top > off:
                off = float(top)
            if top <= JACOBI_TOL:
                continue
            rotated = True
            act = rel > JACOBI_TOL
            zeta = (beta - alpha) / (2.0 * np.where(act, gamma, 1.0))
            t = np.where(act, np.copysign(1.0, zeta) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta)), 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = (c * t)[:, None]
            c = c[:, None]
            z[p], z[q] = c * zp - s * zq, s * zp + c * zq
            sq[p] = alpha - t * gamma
            sq[q] = beta + t * gamma
        if not rotated:
            break
    else:
        raise NumericalFailureError(
            f"one-sided Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps "
            f"(largest relative off-diagonal {off:.3e})",
            residual=off,
        )
    w = z[:, :rows].T
    v = z[:, rows:].T

    sigma = np.linalg.norm(w, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    w = w[:, order]
    v = v[:, order]
    keep = sigma > np.finfo(float).eps * max(rows, cols) * max(sigma[0], np.finfo(float).tiny)
    u = np.zeros_like(w)
    u[:, keep] = w[:, keep] / sigma[keep]
    if not keep.all():
        u = complete_basis(u, keep)
    return SvdResult(u, np.maximum(sigma, 0.0), v)


def normalize_columns(a) -> np.ndarray:
    a = as_matrix(a, "a")
    norms = np.linalg.norm(a, axis=0)
    bad = np.flatnonzero(norms <= 1e-300)
    if bad.size:
        raise DegenerateInputError(f"column {bad[0]} has zero norm", column=int(bad[0]))
    return a / norms


def _power_top_eigenvalue(apply, dim: int) -> float:
    x = np.ones(dim) + np.arange(dim) / dim
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(POWER_MAX_ITER):
        y = apply(x)
        new = float(x @ y)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
        if abs(new - lam) <= POWER_TOL * abs(new):
            return new
        lam = new
    raise NumericalFailureError(
        f"power iteration did not converge in {POWER_MAX_ITER} steps", residual=abs(new - lam)
    )


def extreme_singular_values(a) -> tuple[float, float]:
    """Smallest and largest singular values of ``a``.

    Small matrices go through :func:`svd_small`.  Otherwise power iteration
    on the smaller Gram matrix gives the largest value and inverse iteration
    (Cholesky solves) the smallest; a singular Gram matrix yields 0.
    """
    a = as_matrix(a, "a")
    rows, cols = a.shape
    if cols <= SMALL_SVD_LIMIT or rows <= SMALL_SVD_LIMIT:
        s = svd_small(a).singular_values
        return float(s[-1]), float(s[0])
    g = a.T @ a if rows >= cols else a @ a.T
    dim = g.shape[0]
    top = _power_top_eigenvalue(lambda x: g @ x, dim)
    try:
        factor = scipy.linalg.cho_factor(g)
    except np.linalg.LinAlgError:
        return 0.0, float(np.sqrt(max(top, 0.0)))
    inv_top = _power_top_eigenvalue(lambda x: scipy.linalg.cho_solve(factor, x), dim)
    low = 1.0 / inv_top if inv_top > 0 else 0.0
    return float(np.sqrt(max(low, 0.0))), float(np.sqrt(max(top, 0.0)))
