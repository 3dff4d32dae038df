"""Cascade-style interactive reconciliation.

Alice's key is the reference; Bob's copy is corrected in place. Every parity
Alice discloses (block parities at the start of a pass and the left-half
parities of each binary search) is charged to ``leak_bits``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qfhss.qkdlink.digest import key_digest
from qfhss.qkdlink.exchange import SiftedKeyPair
from qfhss.seeds import rng


@dataclass
class ReconciledKey:
    key: np.ndarray
    leak_bits: int
    verified: bool
    bob_key: np.ndarray | None = None
    block_sizes: list[int] = field(default_factory=list)
    # (block parities, binary-search parities) disclosed during each pass
    parities_by_pass: list[tuple[int, int]] = field(default_factory=list)
    corrected: int = 0
    aborted: bool = False

    @property
    def n(self) -> int:
        return len(self.key)


def default_initial_block(qber: float, n: int) -> int:
    k = math.ceil(0.73 / qber) if qber > 0 else n
    upper = max(2, n // 4)
    return min(max(k, 8), upper)


class _Pass:
    __slots__ = ("perm", "size", "starts", "block_of", "alice_par", "bob_par")

    def __init__(self, perm: np.ndarray, size: int, alice: np.ndarray, bob: np.ndarray):
        n = len(perm)
        self.perm = perm
        self.size = size
        self.starts = np.arange(0, n, size)
        self.block_of = np.empty(n, dtype=np.int64)
        self.block_of[perm] = np.arange(n) // size
        self.alice_par = np.add.reduceat(alice[perm], self.starts) & 1
        self.bob_par = np.add.reduceat(bob[perm], self.starts) & 1

    @property
    def n_blocks(self) -> int:
        return len(self.starts)

    def bounds(self, block: int) -> tuple[int, int]:
        lo = block * self.size
        return lo, min(lo + self.size, len(self.perm))


def reconcile(
    pair: SiftedKeyPair,
    passes: int = 4,
    initial_block: int | None = None,
    seed: int = 0,
    digest_seed: int | None = None,
    leak_budget: int | None = None,
) -> ReconciledKey:
    """Correct Bob's sifted key against Alice's and verify with a 64-bit digest.

    Block size starts at ``initial_block`` (default ``ceil(0.73/Q)`` clamped to
    ``[8, n/4]``) and doubles each pass; pass 1 keeps natural order, later
    passes use a seeded permutation. Disclosure stops once ``leak_budget``
    parities (default: the key length) have been revealed, since nothing
    secret would remain. A residual mismatch yields ``verified=False`` and the
    caller must discard the key.
    """
    alice = np.asarray(pair.alice_key, dtype=np.uint8)
    bob = np.array(pair.bob_key, dtype=np.uint8)
    n = len(alice)
    if n == 0:
        raise ValueError("reconcile: empty keys")
    if passes < 1:
        raise ValueError("reconcile: passes must be >= 1")
    if initial_block is None:
        initial_block = default_initial_block(pair.qber_estimate, n)
    if initial_block < 2:
        raise ValueError("reconcile: initial_block must be >= 2")

    budget = n if leak_budget is None else leak_budget
    g = rng(seed)
    done: list[_Pass] = []
    parities: list[tuple[int, int]] = []
    corrected = 0
    leaked = 0
    aborted = False

    for p in range(passes):
        size = min(initial_block << p, n)
        perm = np.arange(n) if p == 0 else g.permutation(n)
        cur = _Pass(perm, size, alice, bob)
        if leaked + cur.n_blocks > budget:
            aborted = True
            break
        leaked += cur.n_blocks
        done.append(cur)
        searched = 0
        queue = [(p, int(b)) for b in np.flatnonzero(cur.alice_par != cur.bob_par)]
        while queue and not aborted:
            q, b = queue.pop()
            ps = done[q]
            if ps.alice_par[b] == ps.bob_par[b]:
                continue
            lo, hi = ps.bounds(b)
            perm_q = ps.perm
            while hi - lo > 1:
                if leaked >= budget:
                    aborted = True
                    break
                mid = lo + (hi - lo) // 2
                seg = perm_q[lo:mid]
                searched += 1
                leaked += 1
                if (int(alice[seg].sum()) ^ int(bob[seg].sum())) & 1:
                    hi = mid
                else:
                    lo = mid
            if aborted:
                break
            pos = int(perm_q[lo])
            bob[pos] ^= 1
            corrected += 1
            for r, other in enumerate(done):
                blk = int(other.block_of[pos])
                other.bob_par[blk] ^= 1
                if other.alice_par[blk] != other.bob_par[blk]:
                    queue.append((r, blk))
        parities.append((cur.n_blocks, searched))
        if aborted:
            break

    dseed = seed ^ 0x5EED if digest_seed is None else digest_seed
    verified = key_digest(alice, dseed) == key_digest(bob, dseed)
    return ReconciledKey(
        key=alice.copy(),
        leak_bits=sum(a + b for a, b in parities),
        verified=verified,
        bob_key=bob,
        block_sizes=[d.size for d in done],
        parities_by_pass=parities,
        corrected=corrected,
        aborted=aborted,
    )
