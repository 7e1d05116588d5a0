"""Deterministic sub-stream derivation from one master seed.

Every random decision in a run flows from `sub_rng(master, *tokens)` where the
tokens name the component and an optional index, e.g. ``sub_rng(seed, "mrs", 7)``.
String tokens hash through crc32, so derivation is stable across platforms and
process runs.
"""

from __future__ import annotations

import zlib

import numpy as np


def _token_int(token) -> int:
    if isinstance(token, str):
        return zlib.crc32(token.encode("utf-8"))
    return int(token) & 0xFFFFFFFF


def seed_sequence(master_seed: int, *tokens) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed)] + [_token_int(t) for t in tokens])


def sub_rng(master_seed: int, *tokens) -> np.random.Generator:
    """Generator for the sub-stream named by `tokens` under `master_seed`."""
    return np.random.default_rng(seed_sequence(master_seed, *tokens))
