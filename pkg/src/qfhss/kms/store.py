"""In-memory key store with ETSI GS QKD 014 delivery semantics.

The master SAE calls :meth:`KeyStore.get_enc_keys` and forwards the key IDs
to the slave SAE, which redeems them with :meth:`KeyStore.get_dec_keys`.
Each record moves ``stored -> delivered_enc -> consumed`` exactly once.
"""

from __future__ import annotations

import enum
import logging
import random
import threading
import uuid
from collections import OrderedDict, deque
from dataclasses import dataclass
from typing import Iterable

log = logging.getLogger(__name__)


class KeyState(str, enum.Enum):
    STORED = "stored"
    DELIVERED_ENC = "delivered_enc"
    CONSUMED = "consumed"


class KmsError(Exception):
    status = 500
    message = "internal error"

    def __init__(self, detail: str | None = None):
        super().__init__(detail or self.message)
        self.detail = detail

    def body(self) -> dict:
        return {"message": self.message}


class InsufficientKeysError(KmsError):
    status = 503
    message = "insufficient keys"


class UnknownKeyError(KmsError):
    status = 400
    message = "unknown or consumed key_ID"


class InvalidRequestError(KmsError):
    status = 400
    message = "invalid request"


class CapacityError(KmsError):
    status = 507
    message = "key store capacity exceeded"


@dataclass
class KeyRecord:
    key_id: str
    octets: bytes
    state: KeyState
    created_at: int


@dataclass(frozen=True)
class KeyContainer:
    keys: tuple[tuple[str, bytes], ...]

    def key_ids(self) -> list[str]:
        return [k for k, _ in self.keys]

    def octets(self) -> list[bytes]:
        return [o for _, o in self.keys]


class KeyStore:
    """Thread-safe FIFO key pool.

    ``id_seed`` makes key IDs reproducible (version-4 UUIDs drawn from a
    seeded generator); by default IDs come from :func:`uuid.uuid4`.
    """

    def __init__(self, record_size_bits: int = 256, max_key_count: int = 100_000, id_seed: int | None = None):
        if record_size_bits <= 0 or record_size_bits % 8:
            raise ValueError("record_size_bits must be a positive multiple of 8")
        self.record_size_bits = record_size_bits
        self.max_key_count = max_key_count
        self._records: OrderedDict[str, KeyRecord] = OrderedDict()
        self._stored: deque[str] = deque()
        self._lock = threading.Lock()
        self._counter = 0
        self._id_rng = random.Random(id_seed) if id_seed is not None else None

    @property
    def record_size_bytes(self) -> int:
        return self.record_size_bits // 8

    def _new_id(self) -> str:
        if self._id_rng is None:
            return str(uuid.uuid4())
        while True:
            key_id = str(uuid.UUID(int=self._id_rng.getrandbits(128), version=4))
            if key_id not in self._records:
                return key_id

    def store_keys(self, keys: Iterable) -> list[str]:
        """Slice each key into records; trailing bytes short of a record are dropped.

        Accepts ``SecretKey`` objects (only whole octets of key material are
        used) or raw ``bytes``.
        """
        size = self.record_size_bytes
        chunks = []
        for key in keys:
            octets = bytes(getattr(key, "octets", key))
            n_bits = getattr(key, "n_bits", None)
            if n_bits is not None:
                octets = octets[: n_bits // 8]  # never hand out the zero padding
            if not octets:
                raise InvalidRequestError("empty key")
            chunks.extend(octets[i : i + size] for i in range(0, len(octets) - size + 1, size))
        with self._lock:
            if len(self._stored) + len(chunks) > self.max_key_count:
                raise CapacityError(f"{len(chunks)} records would exceed max_key_count={self.max_key_count}")
            ids = []
            for chunk in chunks:
                key_id = self._new_id()
                self._records[key_id] = KeyRecord(key_id, chunk, KeyState.STORED, self._counter)
                self._counter += 1
                self._stored.append(key_id)
                ids.append(key_id)
        return ids

    def get_enc_keys(self, slave_sae_id: str, number: int = 1, size: int | None = None) -> KeyContainer:
        if size is None:
            size = self.record_size_bits
        if number < 1 or size != self.record_size_bits:
            raise InvalidRequestError(f"number={number}, size={size} (record size {self.record_size_bits})")
        with self._lock:
            if len(self._stored) < number:
                raise InsufficientKeysError(f"{number} requested, {len(self._stored)} stored")
            out = []
            for _ in range(number):
                rec = self._records[self._stored.popleft()]
                rec.state = KeyState.DELIVERED_ENC
                out.append((rec.key_id, rec.octets))
        for key_id, _ in out:
            log.info("enc delivery key_id=%s sae_id=%s", key_id, slave_sae_id)
        return KeyContainer(tuple(out))

    def get_dec_keys(self, master_sae_id: str, key_ids: list[str]) -> KeyContainer:
        if not key_ids:
            raise InvalidRequestError("key_IDs must be nonempty")
        with self._lock:
            recs = [self._records.get(k) for k in key_ids]
            if len(set(key_ids)) != len(key_ids) or any(
                r is None or r.state is not KeyState.DELIVERED_ENC for r in recs
            ):
                raise UnknownKeyError()
            for r in recs:
                r.state = KeyState.CONSUMED
            out = tuple((r.key_id, r.octets) for r in recs)
        for key_id, _ in out:
            log.info("dec delivery key_id=%s sae_id=%s", key_id, master_sae_id)
        return KeyContainer(out)

    def get_status(self, slave_sae_id: str | None = None) -> dict:
        with self._lock:
            return {
                "stored_key_count": len(self._stored),
                "key_size_bits": self.record_size_bits,
                "max_key_count": self.max_key_count,
            }

    def state_of(self, key_id: str) -> KeyState:
        with self._lock:
            return self._records[key_id].state
