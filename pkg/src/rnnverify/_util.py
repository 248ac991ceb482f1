"""Small shared helpers: atomic file writes and seed derivation."""

from __future__ import annotations

import hashlib
import os
import tempfile

import numpy as np


def write_text_atomic(path, text: str) -> None:
    """Write text so readers never observe a half-written file."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _tag_to_int(tag) -> int:
    if isinstance(tag, int):
        return tag & 0xFFFFFFFF
    digest = hashlib.sha256(str(tag).encode()).digest()
    return int.from_bytes(digest[:4], "big")


def derive_seed(master_seed: int, *tags) -> int:
    """Stable per-stage seed derived from a master seed and string/int tags.

    The same (master_seed, tags) always gives the same result, across runs
    and platforms, so every pipeline stage can be reproduced in isolation.
    """
    seq = np.random.SeedSequence([master_seed] + [_tag_to_int(t) for t in tags])
    return int(seq.generate_state(1, np.uint64)[0])


def derive_rng(master_seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *tags))
