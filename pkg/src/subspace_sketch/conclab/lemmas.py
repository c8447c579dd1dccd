"""Per-lemma failure events and the sweep engine."""

from __future__ import annotations

import functools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, NamedTuple, Optional

import numpy as np

from .. import rng
from ..errors import DegenerateGeometryError, DegenerateSketchError, RejectedInputError
from ..linalg import extreme_singular_values, gram_schmidt, normalize_columns
from ..sketch import gaussian_operator, sketch_pair
from ..subspace import generate_pair_with_angles, generate_random_subspace
from .config import HAAR, LEMMAS, ExperimentConfig
from .stats import ConcentrationReport, make_cell, try_fit
from .trials import (
    KEY_SKETCH,
    KEY_X1,
    ZERO_SLACK,
    draw_pair,
    proof_intermediates,
    run_pair_trial,
    run_set_trial,
    tail_exceedances,
    trial_key,
)

THREADS_ENV = "SUBSPACE_SKETCH_THREADS"
_KEY_FIXED_V = 0x46495856  # "FIXV"


class Outcome(NamedTuple):
    violated: bool
    degenerate: bool = False
    excluded: bool = False


DEGENERATE = Outcome(False, degenerate=True)
EXCLUDED = Outcome(False, excluded=True)


def _lemma5(cfg: ExperimentConfig, n: int, i: int) -> Outcome:
    over, under = tail_exceedances(trial_key(cfg, n, i), n, cfg.d2, cfg.tail_t)
    return Outcome(over or under)


def _gaussian_vector(cfg, n, i):
    return rng.normals(trial_key(cfg, n, i), n) / math.sqrt(n)


def _lemma6(cfg, n, i):
    a = _gaussian_vector(cfg, n, i)
    return Outcome(abs(a @ a - 1.0) > cfg.epsilon)


@functools.lru_cache(maxsize=64)
def _fixed_basis(n: int, d: int, master: int) -> np.ndarray:
    return generate_random_subspace(n, d, rng.derive_key(master, _KEY_FIXED_V, n)).basis


def _cor2(cfg, n, i):
    a = _gaussian_vector(cfg, n, i)
    va = _fixed_basis(n, cfg.d2, cfg.master_seed).T @ a
    return Outcome(abs(va @ va - cfg.d2 / n) > cfg.epsilon)


def _cor3(cfg, n, i):
    a = rng.normal_matrix(trial_key(cfg, n, i), n, cfg.d2, scale=1.0 / math.sqrt(n))
    smin, smax = extreme_singular_values(normalize_columns(a))
    return Outcome(smin * smin < 1.0 - cfg.epsilon or smax * smax > 1.0 + cfg.epsilon)


def _perpendicular(cfg, n, i, normalized):
    key = trial_key(cfg, n, i)
    _, _, bases = generate_pair_with_angles(cfg.ambient, [0.0], cfg.d2, rng.derive_key(key, KEY_X1))
    op = gaussian_operator(n, cfg.ambient, rng.derive_key(key, KEY_SKETCH))
    a1 = op.entries @ bases.u1[:, 0]
    try:
        v2 = gram_schmidt(op.entries @ bases.u2)
    except ArithmeticError:
        return DEGENERATE
    except ValueError:
        return DEGENERATE
    if normalized:
        a1 = a1 / np.linalg.norm(a1)
    p = v2.T @ a1
    return Outcome(p @ p > cfg.epsilon)


def _lemma7(cfg, n, i):
    return _perpendicular(cfg, n, i, normalized=False)


def _cor4(cfg, n, i):
    return _perpendicular(cfg, n, i, normalized=True)


def _pair_event(cfg, n, i):
    rec = run_pair_trial(cfg, n, i)
    if rec.degenerate:
        return DEGENERATE
    if rec.excluded:
        return EXCLUDED
    return Outcome(rec.violated)


def _cor1(cfg, n, i):
    rec = run_pair_trial(cfg, n, i)
    if rec.degenerate:
        return DEGENERATE
    slack = rec.d_x_sq - (cfg.d2 - cfg.d1) / 2.0
    if slack <= ZERO_SLACK:
        return EXCLUDED
    return Outcome(abs(rec.d_y_sq - rec.od_sq) > slack * cfg.epsilon)


def _sketched_principal_pair(cfg, n, i):
    key = trial_key(cfg, n, i)
    _, _, bases = draw_pair(cfg, key, need_bases=True)
    op = gaussian_operator(n, cfg.ambient, rng.derive_key(key, KEY_SKETCH))
    return sketch_pair(op, bases)


def _column_events(cfg, n, i, first_k, event):
    """Run ``event(pair, k, one_minus_lam_sq)`` for k in first_k..d1; any True is a failure."""
    try:
        pair = _sketched_principal_pair(cfg, n, i)
    except DegenerateSketchError:
        return DEGENERATE
    lam = pair.source.lam
    considered = False
    for k in range(first_k, cfg.d1 + 1):
        gap = 1.0 - lam[k - 1] ** 2
        if gap <= ZERO_SLACK:
            continue
        considered = True
        try:
            if event(pair, k, gap):
                return Outcome(True)
        except DegenerateGeometryError:
            return DEGENERATE
    return Outcome(False) if considered else EXCLUDED


def _lemma8(cfg, n, i):
    def event(pair, k, gap):
        v2 = pair.v2
        pv = v2.T @ pair.v1[:, k - 1]
        pa = v2.T @ pair.abar1[:, k - 1]
        return abs(pv @ pv - pa @ pa) > gap * cfg.epsilon

    return _column_events(cfg, n, i, 1, event)


def _lemma9(cfg, n, i):
    def event(pair, k, gap):
        beta = proof_intermediates(pair, k).beta_k
        return 1.0 - beta * beta > gap * (1.0 + cfg.epsilon)

    return _column_events(cfg, n, i, 2, event)


def _lemma10(cfg, n, i):
    def event(pair, k, gap):
        return proof_intermediates(pair, k).cross_inner ** 2 > cfg.epsilon

    return _column_events(cfg, n, i, 2, event)


def _thm1(cfg, n, i):
    ratios = run_set_trial(cfg, n, i)
    if any(r.degenerate for r in ratios):
        return DEGENERATE
    live = [r for r in ratios if not r.excluded]
    if not live:
        return EXCLUDED
    return Outcome(not all(r.in_band for r in live))


EVENTS: dict[str, Callable[[ExperimentConfig, int, int], Outcome]] = {
    "lemma5": _lemma5,
    "lemma6": _lemma6,
    "cor2": _cor2,
    "cor3": _cor3,
    "lemma7": _lemma7,
    "cor4": _cor4,
    "lemma4": _pair_event,
    "thm2": _pair_event,
    "cor1": _cor1,
    "lemma8": _lemma8,
    "lemma9": _lemma9,
    "lemma10": _lemma10,
    "thm1": _thm1,
}
assert EVENTS.keys() == LEMMAS.keys()


def thread_count(threads: Optional[int] = None) -> int:
    """Worker count: explicit argument, else ``SUBSPACE_SKETCH_THREADS``, else 1."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError:
            raise RejectedInputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if threads < 1:
        raise RejectedInputError(f"thread count must be positive, got {threads}")
    return threads


def sweep(config: ExperimentConfig, threads: Optional[int] = None) -> ConcentrationReport:
    """Run ``trials`` trials at every grid point and aggregate per ``n``.

    Trials are independent pure functions, so they may run on a thread pool;
    results are gathered in ``(n, trial_index)`` order, which makes the
    report identical for any worker count.
    """
    event = EVENTS[config.lemma_id]
    tasks = [(n, i) for n in config.n_grid for i in range(config.trials)]
    workers = thread_count(threads)

    def run(task):
        return event(config, *task)

    if workers == 1:
        outcomes = [run(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, tasks, chunksize=1))

    cells = []
    for g, n in enumerate(config.n_grid):
        chunk = outcomes[g * config.trials : (g + 1) * config.trials]
        degenerate = sum(o.degenerate for o in chunk)
        excluded = sum(o.excluded for o in chunk)
        valid = len(chunk) - degenerate - excluded
        failures = sum(o.violated for o in chunk if not (o.degenerate or o.excluded))
        cells.append(make_cell(n, failures, valid, degenerate, excluded))
    report = ConcentrationReport(config=config, cells=tuple(cells))
    return ConcentrationReport(config=config, cells=report.cells, fit=try_fit(report))


def _check_lemma_config(cfg: ExperimentConfig) -> None:
    lid = cfg.lemma_id
    if lid == "lemma4" and cfg.d1 != 1:
        raise RejectedInputError("lemma4 concerns a line: set d1 = 1 (and one cosine)")
    if lid in ("lemma9", "lemma10") and cfg.d1 < 2:
        raise RejectedInputError(f"{lid} looks at columns k >= 2: set d1 >= 2")
    if lid == "thm1":
        if cfg.l_count < 2:
            raise RejectedInputError("thm1 needs L >= 2 subspaces")
        if not cfg.haar:
            raise RejectedInputError("thm1 draws Haar subspaces; prescribed cosines do not apply")
    if lid in ("lemma7", "cor4") and cfg.d2 + 1 > cfg.ambient:
        raise RejectedInputError(f"{lid} needs d2 + 1 <= ambient")
    if lid in ("lemma5", "lemma6", "cor2", "cor3") and not cfg.haar:
        raise RejectedInputError(f"{lid} does not use subspace angles; leave cosines at {HAAR!r}")


def verify_lemma(config: ExperimentConfig, threads: Optional[int] = None) -> ConcentrationReport:
    """Empirical failure rates of the event belonging to ``config.lemma_id``."""
    _check_lemma_config(config)
    return sweep(config, threads)
