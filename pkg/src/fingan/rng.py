"""Seed derivation.

Every random stream in the package comes from a root integer seed plus a
string label. The label is hashed with CRC32 and the pair is fed to
``numpy.random.SeedSequence``, so ``derive(7, "init")`` and
``derive(7, "noise")`` are independent while both remain reproducible.
Nested labels are joined with ``/`` (e.g. ``"simulate/rp/12"``).
"""

from __future__ import annotations

import zlib

import numpy as np


def label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def derive(seed: int, label: str) -> np.random.Generator:
    """Return a generator for the ``(seed, label)`` stream."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, label_key(label)]))


def derive_seed(seed: int, label: str) -> int:
    """Integer child seed, for APIs that take a seed rather than a generator."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, label_key(label)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])
