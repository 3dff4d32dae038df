"""64-bit polynomial verification hash over GF(2).

The key is split into 64-bit words which are read as the coefficients of a
polynomial over GF(2^64); the digest is that polynomial evaluated at a
seeded random point. Two distinct keys of n bits collide with probability at
most ceil(n/64) / 2^64.
"""

from __future__ import annotations

import numpy as np

from qfhss.seeds import rng

# x^64 + x^4 + x^3 + x + 1 (irreducible), low 64 bits only.
_REDUCTION = 0x1B
_MASK = (1 << 64) - 1


def gf64_mul(a: int, b: int) -> int:
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        carry = a >> 63
        a = (a << 1) & _MASK
        if carry:
            a ^= _REDUCTION
    return result


def _words(bits: np.ndarray) -> list[int]:
    bits = np.asarray(bits, dtype=np.uint8)
    pad = (-len(bits)) % 64
    packed = np.packbits(np.concatenate([bits, np.zeros(pad, np.uint8)]))
    return [int(w) for w in packed.view(">u8")]


def key_digest(bits: np.ndarray, seed: int) -> int:
    point = int(rng(seed).integers(1, 2**63, dtype=np.int64)) << 1 | 1
    # length is folded in so that zero padding cannot hide trailing bits
    acc = len(bits) & _MASK
    for word in _words(bits):
        acc = gf64_mul(acc, point) ^ word
    return gf64_mul(acc, point)
