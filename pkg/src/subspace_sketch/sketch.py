"""Gaussian sketch operators and their action on subspaces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng
from .errors import DegenerateInputError, DegenerateSketchError, RejectedInputError
from .linalg import extreme_singular_values, gram_schmidt, normalize_columns
from .subspace import PrincipalBases, Subspace

#: smallest singular value of the sketched basis below which rank is considered lost
RANK_COLLAPSE_TOL = 1e-10

_TAG_SKETCH = 0x534B54  # "SKT"


@dataclass(frozen=True, eq=False)
class SketchOperator:
    """``n x ambient`` matrix with i.i.d. N(0, 1/n) entries, fully determined by ``seed``."""

    n: int
    ambient: int
    entries: np.ndarray
    seed: int

    def moments_ok(self) -> bool:
        """Sample mean and variance of the entries agree with N(0, 1/n).

        Mean within ``4 / sqrt(n N)`` standard deviations' worth of zero and
        variance within 20% of ``1/n``.  Only meaningful for ``n N >= 1e4``.
        """
        e = self.entries
        sd = 1.0 / np.sqrt(self.n)
        mean_ok = abs(e.mean()) <= 4.0 * sd / np.sqrt(e.size)
        var_ok = abs(e.var() * self.n - 1.0) <= 0.2
        return bool(mean_ok and var_ok)


@dataclass(frozen=True, eq=False)
class SketchedPair:
    """Images of a principal-basis pair under one sketch.

    ``a*`` are the raw images ``Φ U_i``, ``abar*`` their column-normalized
    versions and ``v*`` the Gram-Schmidt orthonormalization of ``abar*``
    (column order preserved, so prefixes span the prefix images).
    """

    a1: np.ndarray
    a2: np.ndarray
    abar1: np.ndarray
    abar2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    y1: Subspace
    y2: Subspace
    source: Optional[PrincipalBases] = None


def gaussian_operator(n: int, ambient: int, seed: int) -> SketchOperator:
    if not (0 < n < ambient):
        raise RejectedInputError(f"need 0 < n < ambient, got n={n}, ambient={ambient}")
    key = rng.derive_key(seed, _TAG_SKETCH)
    entries = rng.normal_matrix(key, n, ambient, scale=1.0 / np.sqrt(n))
    entries.setflags(write=False)
    return SketchOperator(n=n, ambient=ambient, entries=entries, seed=seed)


def _image(op: SketchOperator, basis: np.ndarray) -> np.ndarray:
    if basis.shape[0] != op.ambient:
        raise RejectedInputError(
            f"subspace lives in R^{basis.shape[0]} but the sketch expects R^{op.ambient}"
        )
    if basis.shape[1] >= op.n:
        raise RejectedInputError(
            f"subspace dimension {basis.shape[1]} must be below sketch size {op.n}"
        )
    a = op.entries @ basis
    smin, _ = extreme_singular_values(a)
    if smin <= RANK_COLLAPSE_TOL:
        raise DegenerateSketchError(
            f"sketch with seed {op.seed} collapsed rank (s_min = {smin:.3e})", seed=op.seed
        )
    return a


def _orthonormalize(op: SketchOperator, a: np.ndarray) -> np.ndarray:
    try:
        return gram_schmidt(a)
    except DegenerateInputError as exc:
        raise DegenerateSketchError(f"sketch with seed {op.seed}: {exc}", seed=op.seed) from exc


def apply(op: SketchOperator, x: Subspace) -> Subspace:
    """The sketched subspace ``span(Φ U)`` with an orthonormal basis."""
    a = _image(op, x.basis)
    return Subspace(op.n, x.dim, _orthonormalize(op, normalize_columns(a)))


def sketch_pair(op: SketchOperator, bases: PrincipalBases) -> SketchedPair:
    a1 = _image(op, bases.u1)
    a2 = _image(op, bases.u2)
    abar1 = normalize_columns(a1)
    abar2 = normalize_columns(a2)
    v1 = _orthonormalize(op, abar1)
    v2 = _orthonormalize(op, abar2)
    return SketchedPair(
        a1=a1,
        a2=a2,
        abar1=abar1,
        abar2=abar2,
        v1=v1,
        v2=v2,
        y1=Subspace(op.n, v1.shape[1], v1),
        y2=Subspace(op.n, v2.shape[1], v2),
        source=bases,
    )
