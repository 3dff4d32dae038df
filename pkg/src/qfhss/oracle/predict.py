"""Linear-complexity prediction of hop bit streams (Berlekamp-Massey over GF(2))."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PredictabilityReport:
    linear_complexity: int
    next_symbol_accuracy: float
    sequence_length: int
    training_complexity: int


def berlekamp_massey(bits) -> tuple[int, np.ndarray]:
    """Shortest LFSR generating ``bits``.

    Returns ``(L, c)`` with ``c[0] == 1`` and
    ``bits[i] == XOR_{k=1..L} c[k] & bits[i-k]`` for every ``i >= L``.
    """
    s = np.asarray(bits, dtype=np.uint8)
    n = len(s)
    c = np.zeros(n + 1, dtype=np.uint8)
    b = np.zeros(n + 1, dtype=np.uint8)
    c[0] = b[0] = 1
    length, m = 0, -1
    for i in range(n):
        window = s[i - length : i][::-1] if length else s[:0]
        d = (int(s[i]) + int(np.count_nonzero(c[1 : length + 1] & window))) & 1
        if not d:
            continue
        shift = i - m
        prev = c.copy()
        c[shift:] ^= b[: n + 1 - shift]
        if 2 * length <= i:
            length = i + 1 - length
            m = i
            b = prev
    return length, c[: length + 1].copy()


def lfsr_sequence(taps: list[int], state: list[int], n: int) -> np.ndarray:
    """Fibonacci LFSR output: ``s[k+d] = XOR_{e in taps} s[k+e]`` with ``d = len(state)``.

    For a feedback polynomial x^d + sum(x^e), pass its lower exponents as ``taps``.
    """
    d = len(state)
    out = np.zeros(max(n, d), dtype=np.uint8)
    out[:d] = state
    for k in range(n - d):
        acc = 0
        for e in taps:
            acc ^= int(out[k + e])
        out[k + d] = acc
    return out[:n]


def predict_next(train_c: np.ndarray, bits: np.ndarray, start: int) -> np.ndarray:
    """One-step-ahead predictions of ``bits[start:]`` from the recurrence ``train_c``."""
    taps = np.asarray(train_c[1:], dtype=np.int64)
    if taps.size == 0:
        return np.zeros(len(bits) - start, dtype=np.uint8)
    # full[i] = sum_k taps[k-1] * bits[i-k]
    full = np.convolve(bits.astype(np.int64), np.concatenate([[0], taps]))
    return (full[start : len(bits)] & 1).astype(np.uint8)


def linear_complexity_predictor(bits) -> PredictabilityReport:
    """Linear complexity of the whole sequence plus held-out prediction accuracy.

    The recurrence is recovered from the first half and scored on the second.
    """
    s = np.asarray(bits, dtype=np.uint8)
    if len(s) < 4:
        raise ValueError("need at least 4 bits")
    half = len(s) // 2
    l_train, c_train = berlekamp_massey(s[:half])
    predicted = predict_next(c_train, s, half)
    accuracy = float(np.mean(predicted == s[half:]))
    l_full, _ = berlekamp_massey(s)
    return PredictabilityReport(l_full, accuracy, len(s), l_train)


def bytes_to_bits(data: bytes | np.ndarray, width: int = 8) -> np.ndarray:
    """MSB-first bits of each value, ``width`` bits per value."""
    vals = np.frombuffer(bytes(data), dtype=np.uint8) if isinstance(data, (bytes, bytearray)) else np.asarray(data)
    shifts = np.arange(width - 1, -1, -1)
    return ((vals.astype(np.int64)[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)
