"""Deterministic seed derivation for independent Monte Carlo streams.

Splitting rule: the per-stream seed is the first 8 bytes (little-endian)
of SHA-256 over ``repr((master, *parts))``.  Parts are typically sweep
coordinates and the trial index; ``repr`` of ints/floats/strings is
stable across platforms, so streams are reproducible bit-for-bit.
"""

from __future__ import annotations

import hashlib

__all__ = ["derive_seed"]


def derive_seed(master: int, *parts) -> int:
    key = repr((int(master),) + tuple(parts)).encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")
