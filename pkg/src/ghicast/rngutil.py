"""Named substreams: all randomness flows from one 64-bit seed."""

from __future__ import annotations

import hashlib

import numpy as np


def _label_words(label: str) -> list[int]:
    digest = hashlib.sha256(label.encode()).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def substream(seed: int, label: str) -> np.random.Generator:
    """Counter-based generator for the given stream label."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), *_label_words(label)]))
    )


def derive_seed(seed: int, label: str) -> int:
    """A 63-bit seed for a named sub-task (training runs, suites)."""
    data = seed.to_bytes(8, "little", signed=False) + label.encode()
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "little") >> 1
