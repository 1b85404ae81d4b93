"""Purpose-tagged seed splitting.

One user seed fans out to independent streams by hashing it together with
a purpose tag and any indices, so that e.g. the group elements drawn by
``verify`` do not depend on how many input tuples were drawn before them.
"""

from __future__ import annotations

import hashlib
import os

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(seed: int, purpose: str, *index: int) -> int:
    """64-bit seed for ``(seed, purpose, *index)``."""
    tag = f"{seed & SEED_MASK}:{purpose}:" + ",".join(str(i) for i in index)
    digest = hashlib.blake2b(tag.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(seed: int, purpose: str, *index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, purpose, *index))


def worker_count() -> int:
    """Worker cap from ``EQUIVAR_THREADS`` (default: CPU count)."""
    raw = os.environ.get("EQUIVAR_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
