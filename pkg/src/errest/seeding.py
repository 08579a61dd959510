"""Deterministic seed derivation.

Every randomized operation in the package takes an explicit 64-bit seed;
nothing reads global RNG state.  Independent substreams (per trial, per
bootstrap replicate, per calibration repetition) are derived by hashing
the parent seed together with a role path, so serial and parallel
execution consume identical randomness.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *path: int | str) -> int:
    """Derive a child seed from ``seed`` and a role path.

    ``path`` elements may be ints (e.g. trial indices) or short role
    strings (e.g. "data", "train").  The derivation is a stable hash:
    it does not depend on Python's randomized ``hash()`` and produces
    the same value on every platform and run.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(int(seed & _MASK64).to_bytes(8, "little"))
    for part in path:
        if isinstance(part, str):
            h.update(b"s" + part.encode("utf-8") + b"\x00")
        else:
            h.update(b"i" + int(part & _MASK64).to_bytes(8, "little"))
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed; the package-wide RNG choice."""
    return np.random.Generator(np.random.PCG64(seed & _MASK64))
