"""Deterministic hashing shared by the forge and the mock backend."""

from __future__ import annotations

import hashlib


def stable_hash_u64(*parts) -> int:
    """64-bit hash of the string forms of `parts`, stable across runs and platforms.

    Used to derive per-task RNG seeds: independent of scheduling order,
    corpus ordering, and PYTHONHASHSEED.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
