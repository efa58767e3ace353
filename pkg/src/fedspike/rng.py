"""Deterministic random-number streams.

All stochastic operations in the library draw from numpy's Philox
counter-based generator. Independent sub-streams are derived from a root
seed plus string/integer labels; labels are hashed with SHA-256 so the
derivation is stable across processes and interpreter hash randomization.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_key(labels: tuple) -> tuple[int, ...]:
    """Map a tuple of labels to four 32-bit words."""
    h = hashlib.sha256()
    for lab in labels:
        h.update(repr(lab).encode("utf-8"))
        h.update(b"\x1f")
    digest = h.digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))


def seed_sequence(seed: int, *labels) -> np.random.SeedSequence:
    """SeedSequence for the stream identified by (seed, labels)."""
    entropy = int(seed) & _MASK64
    if labels:
        return np.random.SeedSequence(entropy=entropy, spawn_key=_label_key(labels))
    return np.random.SeedSequence(entropy=entropy)


def rng_from(seed: int, *labels) -> np.random.Generator:
    """Philox generator seeded for the stream (seed, labels)."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *labels)))


def derive_seed(seed: int, *labels) -> int:
    """A 64-bit child seed for the stream (seed, labels).

    Used where an API takes a plain integer seed rather than a generator.
    """
    state = seed_sequence(seed, *labels).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
