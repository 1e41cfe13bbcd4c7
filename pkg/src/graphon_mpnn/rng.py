"""Deterministic, purpose-tagged random streams.

Every stochastic routine in this package takes an integer seed and derives
an independent counter-based (Philox) stream per purpose tag. Adding draws
in one stage ("edges") therefore never perturbs another ("positions").
"""

from __future__ import annotations

import hashlib

import numpy as np


def _tag_entropy(tag: str) -> int:
    digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, tag: str) -> np.random.Generator:
    """Return the Philox stream keyed by ``(seed, tag)``.

    Streams for distinct tags (or seeds) are statistically independent, and
    a given (seed, tag) pair always yields the same sequence of draws.
    """
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    ss = np.random.SeedSequence(entropy=[seed, _tag_entropy(tag)])
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, tag: str) -> int:
    """Derive an integer seed for a sub-task, stable in ``(seed, tag)``."""
    payload = f"{int(seed)}/{tag}".encode("utf-8")
    digest = hashlib.blake2b(payload, digest_size=6).digest()
    return int.from_bytes(digest, "little")
