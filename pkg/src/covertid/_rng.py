"""Deterministic stream derivation.

Every random draw in the package comes from a Philox generator keyed by
(master_seed, tag words). Philox is counter based, so a stream depends only
on its key, never on how many other streams were consumed first; results are
identical for a fixed seed at any worker count. Chunked estimators key each
fixed-size chunk separately: (seed, tag, indices..., chunk_index).
"""

import hashlib

import numpy as np

CHUNK = 4096


def stream(master_seed: int, *tags: object) -> np.random.Generator:
    label = repr((int(master_seed),) + tags).encode()
    digest = hashlib.sha256(label).digest()
    key = int.from_bytes(digest[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def chunk_sizes(total: int, chunk: int = CHUNK) -> list[int]:
    full, rem = divmod(total, chunk)
    sizes = [chunk] * full
    if rem:
        sizes.append(rem)
    return sizes
