"""Linear subspaces of R^N and their relative geometry.

Principal angles come from the singular values of the cross-Gram matrix
``U1.T @ U2``; affinity and projection F-norm distance follow from them.
The direct projector formula for the distance is kept as an independent
cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import rng
from .errors import DegenerateGeometryError, RejectedInputError
from .linalg import as_matrix, complete_basis, gram_schmidt, svd_small

ORTHO_TOL = 1e-10
#: cosines at or above 1 - this are treated as shared directions
SHARED_TOL = 1e-10

_TAG_FRAME = 0x46524D  # "FRM"
_TAG_RANDOM = 0x524E44  # "RND"


@dataclass(frozen=True, eq=False)
class Subspace:
    """A ``dim``-dimensional subspace of R^``ambient_dim`` with an orthonormal basis."""

    ambient_dim: int
    dim: int
    basis: np.ndarray

    def __post_init__(self):
        b = as_matrix(self.basis, "basis")
        if b.shape != (self.ambient_dim, self.dim):
            raise RejectedInputError(
                f"basis shape {b.shape} does not match ({self.ambient_dim}, {self.dim})"
            )
        if self.dim > self.ambient_dim:
            raise RejectedInputError("subspace dimension exceeds ambient dimension")
        err = np.linalg.norm(b.T @ b - np.eye(self.dim))
        if err > ORTHO_TOL:
            raise RejectedInputError(f"basis is not orthonormal (||B^T B - I||_F = {err:.3e})")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def from_basis(cls, basis) -> "Subspace":
        """Wrap an already orthonormal ``N x d`` matrix."""
        b = as_matrix(basis, "basis")
        return cls(b.shape[0], b.shape[1], b)

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T


@dataclass(frozen=True, eq=False)
class PairGeometry:
    """Principal angles, affinity and distance of a subspace pair (``d1 <= d2``)."""

    d1: int
    d2: int
    cosines: np.ndarray
    angles: np.ndarray
    affinity_sq: float
    distance_sq: float

    @property
    def affinity(self) -> float:
        return float(np.sqrt(self.affinity_sq))

    @property
    def distance(self) -> float:
        return float(np.sqrt(max(self.distance_sq, 0.0)))


@dataclass(frozen=True, eq=False)
class PrincipalBases:
    """Bases with ``u2.T @ u1`` equal to ``diag(lam)`` stacked over zeros.

    ``u0`` (when present) holds unit vectors orthogonal to span(u2) with
    ``u1 = u2[:, :d1] @ diag(lam) + u0 @ diag(sqrt(1 - lam**2))``.
    """

    u1: np.ndarray
    u2: np.ndarray
    lam: np.ndarray
    u0: Optional[np.ndarray] = None

    @property
    def d1(self) -> int:
        return self.u1.shape[1]

    @property
    def d2(self) -> int:
        return self.u2.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.u1.shape[0]


def make_subspace(raw_basis) -> Subspace:
    """Subspace spanned by the columns of ``raw_basis`` (must have full column rank)."""
    return Subspace.from_basis(gram_schmidt(raw_basis))


def _check_same_ambient(x1: Subspace, x2: Subspace) -> None:
    if x1.ambient_dim != x2.ambient_dim:
        raise RejectedInputError(
            f"ambient dimensions differ: {x1.ambient_dim} vs {x2.ambient_dim}"
        )


def _ordered(x1: Subspace, x2: Subspace) -> tuple[Subspace, Subspace]:
    return (x1, x2) if x1.dim <= x2.dim else (x2, x1)


def affinity_to_distance_sq(affinity_sq: float, d1: int, d2: int) -> float:
    """Squared projection F-norm distance from squared affinity: ``(d1 + d2)/2 - aff^2``."""
    if d1 > d2:
        d1, d2 = d2, d1
    if d1 < 1:
        raise RejectedInputError("dimensions must be positive")
    if not (-1e-10 <= affinity_sq <= d1 + 1e-10):
        raise RejectedInputError(f"affinity_sq={affinity_sq} outside [0, {d1}]")
    return (d1 + d2) / 2.0 - affinity_sq


def affinity_sq(x1: Subspace, x2: Subspace) -> float:
    """Squared affinity ``||U1^T U2||_F^2``, without computing the angles."""
    _check_same_ambient(x1, x2)
    g = x1.basis.T @ x2.basis
    return float(np.einsum("ij,ij->", g, g))


def distance_sq(x1: Subspace, x2: Subspace) -> float:
    return affinity_to_distance_sq(affinity_sq(x1, x2), x1.dim, x2.dim)


def principal_angles(x1: Subspace, x2: Subspace) -> PairGeometry:
    _check_same_ambient(x1, x2)
    a, b = _ordered(x1, x2)
    s = svd_small(a.basis.T @ b.basis).singular_values[: a.dim]
    cos = np.clip(s, 0.0, 1.0)
    aff = float(np.sum(cos * cos))
    return PairGeometry(
        d1=a.dim,
        d2=b.dim,
        cosines=cos,
        angles=np.arccos(cos),
        affinity_sq=aff,
        distance_sq=affinity_to_distance_sq(aff, a.dim, b.dim),
    )


def pf_distance_direct(x1: Subspace, x2: Subspace) -> float:
    """``||P1 - P2||_F / sqrt(2)`` from explicit projectors."""
    _check_same_ambient(x1, x2)
    return float(np.linalg.norm(x1.projector() - x2.projector()) / np.sqrt(2.0))


def principal_bases(x1: Subspace, x2: Subspace, complement: Optional[bool] = None) -> PrincipalBases:
    """Rotate both bases so the cross-Gram matrix is diagonal.

    With ``Ũ2^T Ũ1 = Q2 Λ Q1^T`` the returned bases are ``Ũ1 Q1`` and
    ``Ũ2 Q2``.  The arguments are reordered if needed so ``d1 <= d2``.

    ``complement=None`` fills ``u0`` whenever it is defined, ``True``
    demands it and ``False`` skips it.
    """
    _check_same_ambient(x1, x2)
    a, b = _ordered(x1, x2)
    d1, d2, n = a.dim, b.dim, a.ambient_dim
    left, s, right = svd_small(b.basis.T @ a.basis)
    q2 = np.zeros((d2, d2))
    q2[:, :d1] = left
    keep = np.arange(d2) < d1
    q2 = complete_basis(q2, keep)
    u1 = a.basis @ right
    u2 = b.basis @ q2
    lam = np.clip(s, 0.0, 1.0)

    u0 = None
    definable = d1 + d2 <= n and bool(np.all(lam < 1.0 - SHARED_TOL))
    if complement and not definable:
        raise DegenerateGeometryError(
            "complement directions undefined: "
            + ("d1 + d2 exceeds the ambient dimension" if d1 + d2 > n else "a principal cosine is 1")
        )
    if complement is not False and definable:
        resid = u1 - u2[:, :d1] * lam
        u0 = resid / np.sqrt(1.0 - lam * lam)
    return PrincipalBases(u1=u1, u2=u2, lam=lam, u0=u0)


def _check_cosines(cosines: Sequence[float]) -> np.ndarray:
    c = np.asarray(cosines, dtype=np.float64).reshape(-1)
    if c.size == 0:
        raise RejectedInputError("need at least one cosine")
    if np.any(c < 0.0) or np.any(c > 1.0):
        raise RejectedInputError("cosines must lie in [0, 1]")
    if np.any(np.diff(c) > 0.0):
        raise RejectedInputError("cosines must be non-increasing")
    return c


def generate_pair_with_angles(
    ambient: int, cosines: Sequence[float], d2: int, seed: int
) -> tuple[Subspace, Subspace, PrincipalBases]:
    """Random pair whose principal cosines are exactly ``cosines``.

    A random orthonormal ``(d1 + d2)``-frame is split into ``U2`` (first
    ``d2`` columns) and ``U0`` (remaining ``d1``), and
    ``U1 = U2[:, :d1] Λ + U0 sqrt(I - Λ^2)``.
    """
    lam = _check_cosines(cosines)
    d1 = lam.size
    if d1 > d2:
        raise RejectedInputError(f"len(cosines)={d1} exceeds d2={d2}")
    if d1 + d2 > ambient:
        raise RejectedInputError(f"d1 + d2 = {d1 + d2} exceeds ambient dimension {ambient}")
    raw = rng.normal_matrix(rng.derive_key(seed, _TAG_FRAME), ambient, d1 + d2)
    frame = gram_schmidt(raw)
    u2 = frame[:, :d2]
    u0 = frame[:, d2:]
    u1 = u2[:, :d1] * lam + u0 * np.sqrt(1.0 - lam * lam)
    x1 = Subspace(ambient, d1, u1)
    x2 = Subspace(ambient, d2, u2)
    return x1, x2, PrincipalBases(u1=x1.basis, u2=x2.basis, lam=lam, u0=u0)


def generate_random_subspace(ambient: int, dim: int, seed: int) -> Subspace:
    """Haar-distributed ``dim``-dimensional subspace (orthonormalized Gaussian)."""
    if not (1 <= dim <= ambient):
        raise RejectedInputError(f"need 1 <= dim <= ambient, got dim={dim}, ambient={ambient}")
    raw = rng.normal_matrix(rng.derive_key(seed, _TAG_RANDOM), ambient, dim)
    return Subspace(ambient, dim, gram_schmidt(raw))
