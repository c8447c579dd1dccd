from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Union

from ..errors import RejectedInputError

HAAR = "haar-random"

#: lemma id -> short description of the event counted as a failure
LEMMAS = {
    "lemma5": "s_max >= sqrt(n)+sqrt(d)+t or s_min <= sqrt(n)-sqrt(d)-t (unit-variance n x d)",
    "lemma6": "| ||a||^2 - 1 | > eps for a standard Gaussian vector in R^n",
    "cor2": "| ||V^T a||^2 - d/n | > eps for a fixed orthonormal n x d V",
    "cor3": "s_min^2(Abar) < 1-eps or s_max^2(Abar) > 1+eps, Abar column-normalized n x d",
    "lemma7": "||V2^T a1||^2 > eps with u1 orthogonal to U2",
    "cor4": "||V2^T abar1||^2 > eps with u1 orthogonal to U2",
    "lemma4": "|aff_Y^2 - est| > (1 - lambda^2) eps for a line and a d-dim subspace",
    "thm2": "|aff_Y^2 - est| > (d1 - aff_X^2) eps",
    "cor1": "|D_Y^2 - est| > (D_X^2 - (d2-d1)/2) eps",
    "lemma8": "| ||V2^T v1k||^2 - ||V2^T abar1k||^2 | > (1 - lambda_k^2) eps for some k",
    "lemma9": "1 - beta_k^2 > (1 - lambda_k^2)(1 + eps) for some k >= 2",
    "lemma10": "<abar1k_perp, bk_perp>^2 > eps for some k >= 2",
    "thm1": "some pairwise ratio D_Y^2 / D_X^2 outside (1-eps, 1+eps) among L subspaces",
}

#: lemmas whose trials do not draw a sketch of R^ambient
_NO_SKETCH = {"lemma5", "lemma6", "cor2", "cor3"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of a Monte Carlo sweep.

    ``cosines`` is either a tuple of ``d1`` principal cosines or the marker
    ``"haar-random"`` for independent Haar subspaces.  ``tail_t`` is only
    used by ``lemma5``.
    """

    ambient: int
    n_grid: tuple
    d1: int
    d2: int
    cosines: Union[tuple, str] = HAAR
    l_count: int = 2
    epsilon: float = 0.3
    trials: int = 1000
    master_seed: int = 0
    lemma_id: str = "thm2"
    tail_t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.cosines != HAAR:
            object.__setattr__(self, "cosines", tuple(float(c) for c in self.cosines))
        if self.lemma_id not in LEMMAS:
            raise RejectedInputError(
                f"unknown lemma id {self.lemma_id!r}; valid ids: {', '.join(LEMMAS)}"
            )
        if not self.n_grid:
            raise RejectedInputError("n_grid is empty")
        if self.trials < 1:
            raise RejectedInputError("trials must be >= 1")
        if not (0.0 < self.epsilon < 1.0):
            raise RejectedInputError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not (1 <= self.d1 <= self.d2):
            raise RejectedInputError(f"need 1 <= d1 <= d2, got d1={self.d1}, d2={self.d2}")
        if self.tail_t < 0.0:
            raise RejectedInputError("tail_t must be non-negative")
        for n in self.n_grid:
            if n <= self.d2:
                raise RejectedInputError(f"grid value n={n} must exceed d2={self.d2}")
            if self.lemma_id not in _NO_SKETCH and n >= self.ambient:
                raise RejectedInputError(f"grid value n={n} must be below ambient={self.ambient}")
        if self.cosines != HAAR:
            if len(self.cosines) != self.d1:
                raise RejectedInputError(
                    f"{len(self.cosines)} cosines given for d1={self.d1}"
                )
            if self.d1 + self.d2 > self.ambient:
                raise RejectedInputError("prescribed angles need d1 + d2 <= ambient")

    @property
    def haar(self) -> bool:
        return self.cosines == HAAR

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["n_grid"] = list(self.n_grid)
        d["cosines"] = self.cosines if self.haar else list(self.cosines)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)
