"""Sub-seed derivation.

Every random stream in a run is keyed by ``(master seed, role, *index)`` so
that adding a client or a round never reshuffles an unrelated stream::

    derive_seed(master, role, *index)
        = int.from_bytes(blake2b(f"{master}/{role}/{i0}/{i1}...", digest_size=8), "little")
"""
from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, role: str, *index: int) -> int:
    key = "/".join([str(master), role, *(str(i) for i in index)])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(master: int, role: str, *index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, role, *index))
