"""Minimal synchronous client for the KMS REST endpoints."""

from __future__ import annotations

import base64
import json
import urllib.error
import urllib.request
from urllib.parse import quote, urlencode

from qfhss.kms.server import ADMIN_STORE, container_from_json
from qfhss.kms.store import KeyContainer


class KmsHttpError(Exception):
    def __init__(self, status: int, body: dict):
        super().__init__(f"HTTP {status}: {body}")
        self.status = status
        self.body = body


class KmsClient:
    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _call(self, method: str, path: str, body: dict | None = None) -> dict:
        data = None if body is None else json.dumps(body).encode()
        req = urllib.request.Request(self.base_url + path, data=data, method=method)
        if data is not None:
            req.add_header("Content-Type", "application/json")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read())
        except urllib.error.HTTPError as exc:
            raise KmsHttpError(exc.code, json.loads(exc.read() or b"{}")) from None

    def status(self, slave_sae_id: str) -> dict:
        return self._call("GET", f"/api/v1/keys/{quote(slave_sae_id)}/status")

    def enc_keys(self, slave_sae_id: str, number: int = 1, size: int | None = None) -> KeyContainer:
        params = {"number": number}
        if size is not None:
            params["size"] = size
        path = f"/api/v1/keys/{quote(slave_sae_id)}/enc_keys?{urlencode(params)}"
        return container_from_json(self._call("GET", path))

    def dec_keys(self, master_sae_id: str, key_ids: list[str]) -> KeyContainer:
        body = {"key_IDs": [{"key_ID": k} for k in key_ids]}
        return container_from_json(self._call("POST", f"/api/v1/keys/{quote(master_sae_id)}/dec_keys", body))

    def store(self, keys: list[bytes]) -> list[str]:
        body = {"keys": [base64.b64encode(k).decode("ascii") for k in keys]}
        return self._call("POST", ADMIN_STORE, body)["key_IDs"]
