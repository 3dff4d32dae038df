"""Simulated COW QKD link and its classical post-processing."""

from qfhss.qkdlink.amplify import (
    SecretKey,
    UnverifiedKeyError,
    ZeroKeyError,
    output_length,
    privacy_amplify,
    toeplitz_hash,
)
from qfhss.qkdlink.cascade import ReconciledKey, default_initial_block, reconcile
from qfhss.qkdlink.exchange import (
    EmptyExchangeError,
    EstimationError,
    QkdError,
    QkdLinkConfig,
    RawExchange,
    SiftedKeyPair,
    binary_entropy,
    sift_and_estimate,
    simulate_exchange,
)
from qfhss.qkdlink.pipeline import QkdRun, ReconciliationFailed, run_qkd

__all__ = [
    "EmptyExchangeError",
    "EstimationError",
    "QkdError",
    "QkdLinkConfig",
    "QkdRun",
    "RawExchange",
    "ReconciledKey",
    "ReconciliationFailed",
    "SecretKey",
    "SiftedKeyPair",
    "UnverifiedKeyError",
    "ZeroKeyError",
    "binary_entropy",
    "default_initial_block",
    "output_length",
    "privacy_amplify",
    "reconcile",
    "run_qkd",
    "sift_and_estimate",
    "simulate_exchange",
    "toeplitz_hash",
]
