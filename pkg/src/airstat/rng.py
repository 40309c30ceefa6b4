"""Portable counter-based random source.

Every random number in the toolkit is a pure function of a 64-bit stream key
and a counter, so both kernel backends (and any other implementation) yield
the same words for the same seed:

    word(key, i) = splitmix64_mix(key + (i + 1) * 0x9E3779B97F4A7C15)  mod 2**64
    uniform(key, i) = ((word(key, i) >> 11) + 0.5) * 2**-53            in (0, 1)

Stream keys are split from a top-level seed by hashing labels:

    key = mix(seed);  key = mix(key ^ fnv1a64(label))  for each label
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

ALGORITHM = "splitmix64-counter"


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def word(key: int, i: int) -> int:
    return mix64(key + (i + 1) * GOLDEN)


def uniform(key: int, i: int) -> float:
    return ((word(key, i) >> 11) + 0.5) * 2.0**-53


def fnv1a64(label: str) -> int:
    h = _FNV_OFFSET
    for b in label.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & MASK64
    return h


def derive_key(seed: int, *labels: str | int) -> int:
    """Split an independent stream key off ``seed`` for the given label path."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    key = mix64(seed)
    for label in labels:
        key = mix64(key ^ fnv1a64(str(label)))
    return key
