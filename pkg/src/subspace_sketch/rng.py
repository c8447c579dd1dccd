"""Deterministic, splittable random streams.

Every random quantity in the package is a pure function of a 64-bit key.
Keys for sub-experiments are derived with :func:`mix64`, the splitmix64
finalizer::

    z = (x + 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    z =  z ^ (z >> 31)

A key then selects a Philox-4x64 counter-based stream (numpy's
``Philox(key=...)``; the first block uses counter 1, the word order is
the block order), whose raw 64-bit words are
turned into normals with the Box-Muller transform, both outputs used.
Because a stream depends only on its key, trials can be generated in any
order or on any number of threads with identical results.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX_C1 = 0xBF58476D1CE4E5B9
MIX_C2 = 0x94D049BB133111EB

_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / (1 << 53)


def mix64(x: int) -> int:
    """splitmix64 finalizer of ``x`` (taken modulo 2**64)."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * MIX_C1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_C2) & MASK64
    return z ^ (z >> 31)


def derive_key(master: int, *path: int) -> int:
    """Fold integer indices into ``master``: ``mix64(mix64(master) ^ i) ...``.

    ``derive_key(seed, n, trial)`` is the stream key for one trial.
    """
    key = mix64(master & MASK64)
    for i in path:
        key = mix64(key ^ (int(i) & MASK64))
    return key


def raw_words(key: int, count: int) -> np.ndarray:
    """First ``count`` 64-bit outputs of the Philox stream for ``key``."""
    return np.random.Philox(key=key & MASK64).random_raw(count)


def uniforms(key: int, count: int) -> np.ndarray:
    """Doubles in [0, 1) from the top 53 bits of each word."""
    return (raw_words(key, count) >> np.uint64(11)).astype(np.float64) * _INV_2_53


def normals(key: int, count: int) -> np.ndarray:
    """``count`` standard normal variates via Box-Muller.

    Word pairs ``(w0, w1)`` become ``u1 in (0, 1]`` and ``u2 in [0, 1)``;
    the outputs ``r cos(2 pi u2)`` and ``r sin(2 pi u2)`` with
    ``r = sqrt(-2 ln u1)`` are interleaved.
    """
    pairs = (count + 1) // 2
    u = uniforms(key, 2 * pairs).reshape(pairs, 2)
    u1 = 1.0 - u[:, 0]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = _TWO_PI * u[:, 1]
    out = np.empty((pairs, 2))
    out[:, 0] = r * np.cos(theta)
    out[:, 1] = r * np.sin(theta)
    return out.reshape(-1)[:count]


def normal_matrix(key: int, rows: int, cols: int, scale: float = 1.0) -> np.ndarray:
    """Row-major ``rows x cols`` matrix of i.i.d. ``N(0, scale**2)`` entries."""
    z = normals(key, rows * cols).reshape(rows, cols)
    if scale != 1.0:
        z *= scale
    return z
