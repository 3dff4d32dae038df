"""Key management service with ETSI GS QKD 014 style delivery."""

from qfhss.kms.client import KmsClient, KmsHttpError
from qfhss.kms.server import KmsServer, dispatch
from qfhss.kms.store import (
    CapacityError,
    InsufficientKeysError,
    InvalidRequestError,
    KeyContainer,
    KeyRecord,
    KeyState,
    KeyStore,
    KmsError,
    UnknownKeyError,
)

__all__ = [
    "CapacityError",
    "InsufficientKeysError",
    "InvalidRequestError",
    "KeyContainer",
    "KeyRecord",
    "KeyState",
    "KeyStore",
    "KmsClient",
    "KmsError",
    "KmsHttpError",
    "KmsServer",
    "UnknownKeyError",
    "dispatch",
]
