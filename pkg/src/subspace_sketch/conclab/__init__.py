"""Monte Carlo verification of the concentration statements."""

from .config import HAAR, LEMMAS, ExperimentConfig
from .lemmas import sweep, thread_count, verify_lemma
from .stats import (
    CellStats,
    ConcentrationReport,
    DecayFit,
    failure_rate,
    fit_decay,
    wilson_interval,
)
from .trials import (
    PairRatio,
    ProofIntermediates,
    TailProbe,
    TrialRecord,
    line_identity,
    proof_intermediates,
    run_pair_trial,
    run_set_trial,
    set_ratios,
    tail_probe,
)

__all__ = [
    "HAAR",
    "LEMMAS",
    "CellStats",
    "ConcentrationReport",
    "DecayFit",
    "ExperimentConfig",
    "PairRatio",
    "ProofIntermediates",
    "TailProbe",
    "TrialRecord",
    "failure_rate",
    "fit_decay",
    "line_identity",
    "proof_intermediates",
    "run_pair_trial",
    "run_set_trial",
    "set_ratios",
    "sweep",
    "tail_probe",
    "thread_count",
    "verify_lemma",
    "wilson_interval",
]
