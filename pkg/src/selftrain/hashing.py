"""Stable hashing shared by feature extraction and seed derivation.

Python's builtin ``hash`` is salted per process, so everything that must be
reproducible across runs (hashed n-gram indices, per-document augmentation
seeds, per-generation training seeds) goes through blake2b instead.
"""
from __future__ import annotations

import hashlib
from functools import lru_cache

_SEP = "\x1f"


def stable_hash64(*parts: object) -> int:
    """Deterministic 64-bit hash of the string forms of *parts*."""
    data = _SEP.join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


@lru_cache(maxsize=1 << 20)
def keyed_hash64(seed: int, key: str) -> int:
    """64-bit hash of *key* under an 8-byte blake2b key derived from *seed*."""
    kb = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8, key=kb).digest()
    return int.from_bytes(digest, "little")


def derive_seed(base: int, *scope: object) -> int:
    """Derive an independent RNG seed for a named scope of a run.

    Adding new scopes (extra generations, extra augmenters) never perturbs
    seeds already handed out for existing scopes.
    """
    return stable_hash64(base, *scope)
