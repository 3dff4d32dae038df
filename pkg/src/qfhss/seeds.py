"""Counter-based seed fan-out.

Every pipeline stage owns a fixed counter; its seed is the first 64-bit word
produced by ``numpy.random.SeedSequence(master_seed, spawn_key=(counter,))``.
A stage can therefore be rerun on its own from ``(master_seed, stage)``.
"""

from __future__ import annotations

import numpy as np

STAGES = {
    "qkd_exchange": 0,
    "qkd_sift": 1,
    "qkd_reconcile": 2,
    "qkd_amplify": 3,
    "kms": 4,
    "eve": 5,
    "jam": 6,
    "oracle_eve": 7,
    "oracle_jam": 8,
    "link": 9,
}

MASK64 = (1 << 64) - 1


def stage_seed(master_seed: int, stage: str) -> int:
    """Return the 64-bit seed for ``stage`` derived from ``master_seed``."""
    try:
        counter = STAGES[stage]
    except KeyError:
        raise ValueError(f"unknown stage {stage!r}") from None
    ss = np.random.SeedSequence(int(master_seed) & MASK64, spawn_key=(counter,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & MASK64)
