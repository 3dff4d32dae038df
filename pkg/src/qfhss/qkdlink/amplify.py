"""Toeplitz-hash privacy amplification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qfhss.qkdlink.cascade import ReconciledKey
from qfhss.qkdlink.exchange import QkdError, binary_entropy
from qfhss.seeds import rng


class UnverifiedKeyError(QkdError):
    pass


class ZeroKeyError(QkdError):
    pass


@dataclass
class SecretKey:
    octets: bytes
    n_bits: int
    source_leak_bits: int
    epsilon_exponent: int

    def bits(self) -> np.ndarray:
        return np.unpackbits(np.frombuffer(self.octets, dtype=np.uint8))[: self.n_bits]


def output_length(n: int, qber: float, leak_bits: int, epsilon_exponent: int) -> int:
    """floor(n*(1 - h2(qber)) - leak - 2*epsilon_exponent), clamped at 0."""
    m = math.floor(n * (1.0 - binary_entropy(qber)) - leak_bits - 2 * epsilon_exponent)
    return max(m, 0)


def toeplitz_seed_bits(m: int, n: int, seed: int) -> np.ndarray:
    """The m+n-1 bits defining T[i, j] = t[i - j + n - 1]."""
    return rng(seed).integers(0, 2, size=m + n - 1, dtype=np.uint8)


def toeplitz_hash(bits: np.ndarray, m: int, seed: int) -> np.ndarray:
    """Multiply the m x n seeded Toeplitz matrix by ``bits`` over GF(2).

    The product is row i of the linear convolution t * bits at offset n-1, so
    it is computed with one real FFT; integer sums stay below 2^53.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    n = len(bits)
    if m == 0:
        return np.zeros(0, dtype=np.uint8)
    t = toeplitz_seed_bits(m, n, seed)
    size = 1 << (len(t) + n - 1).bit_length()
    conv = np.fft.irfft(np.fft.rfft(t.astype(np.float64), size) * np.fft.rfft(bits.astype(np.float64), size), size)
    window = conv[n - 1 : n - 1 + m]
    return (np.rint(window).astype(np.int64) & 1).astype(np.uint8)


def privacy_amplify(
    key: ReconciledKey,
    qber: float,
    epsilon_exponent: int = 64,
    seed: int = 0,
    party: str = "alice",
) -> SecretKey:
    """Compress a verified reconciled key to its secret length.

    ``party="bob"`` hashes Bob's corrected copy; with the same ``seed`` both
    parties obtain the same octets.
    """
    if not key.verified:
        raise UnverifiedKeyError("refusing to amplify an unverified key")
    if not 0.0 <= qber < 0.5:
        raise ValueError(f"qber={qber} outside [0, 0.5)")
    if epsilon_exponent < 1:
        raise ValueError("epsilon_exponent must be a positive integer")
    if party == "alice":
        bits = key.key
    elif party == "bob":
        bits = key.bob_key
    else:
        raise ValueError(f"unknown party {party!r}")
    n = len(bits)
    m = output_length(n, qber, key.leak_bits, epsilon_exponent)
    if m <= 0:
        raise ZeroKeyError(f"no secret key left (n={n}, leak={key.leak_bits}, qber={qber})")
    out = toeplitz_hash(bits, m, seed)
    return SecretKey(
        octets=np.packbits(out).tobytes(),
        n_bits=m,
        source_leak_bits=key.leak_bits,
        epsilon_exponent=epsilon_exponent,
    )
