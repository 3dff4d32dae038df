"""ETSI GS QKD 014 style REST surface over a :class:`KeyStore`.

``dispatch`` maps (method, path, query, body) to (status, payload) and is
usable in-process; :class:`KmsServer` serves it over HTTP with the stdlib
threading server.
"""

from __future__ import annotations

import base64
import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from qfhss.kms.store import InvalidRequestError, KeyContainer, KeyStore, KmsError

log = logging.getLogger(__name__)

_ROUTE = re.compile(r"^/api/v1/keys/(?P<sae>[^/]+)/(?P<op>enc_keys|dec_keys|status)$")
ADMIN_STORE = "/api/v1/admin/store"


def container_json(container: KeyContainer) -> dict:
    return {
        "keys": [
            {"key_ID": key_id, "key": base64.b64encode(octets).decode("ascii")}
            for key_id, octets in container.keys
        ]
    }


def container_from_json(payload: dict) -> KeyContainer:
    return KeyContainer(tuple((k["key_ID"], base64.b64decode(k["key"], validate=True)) for k in payload["keys"]))


def _int_param(query: dict, name: str, default: int | None) -> int | None:
    values = query.get(name)
    if not values:
        return default
    try:
        return int(values[0])
    except ValueError:
        raise InvalidRequestError(f"{name} must be an integer") from None


def dispatch(store: KeyStore, method: str, path: str, query: dict | None = None, body: dict | None = None) -> tuple[int, dict]:
    query = query or {}
    try:
        if method == "POST" and path == ADMIN_STORE:
            if not isinstance(body, dict) or not isinstance(body.get("keys"), list):
                raise InvalidRequestError("body must be {\"keys\": [<base64>, ...]}")
            raw = [base64.b64decode(k, validate=True) for k in body["keys"]]
            return 200, {"key_IDs": store.store_keys(raw)}
        m = _ROUTE.match(path)
        if m is None:
            return 404, {"message": "not found"}
        sae, op = m.group("sae"), m.group("op")
        if op == "status" and method == "GET":
            st = store.get_status(sae)
            return 200, {
                "stored_key_count": st["stored_key_count"],
                "key_size": st["key_size_bits"],
                "max_key_count": st["max_key_count"],
            }
        if op == "enc_keys" and method == "GET":
            number = _int_param(query, "number", 1)
            size = _int_param(query, "size", store.record_size_bits)
            return 200, container_json(store.get_enc_keys(sae, number, size))
        if op == "dec_keys" and method == "POST":
            try:
                ids = [entry["key_ID"] for entry in body["key_IDs"]]
            except (TypeError, KeyError):
                raise InvalidRequestError("body must be {\"key_IDs\": [{\"key_ID\": ...}]}") from None
            return 200, container_json(store.get_dec_keys(sae, ids))
        return 405, {"message": "method not allowed"}
    except KmsError as exc:
        return exc.status, exc.body()
    except (ValueError, TypeError):
        return 400, InvalidRequestError().body()


class _Handler(BaseHTTPRequestHandler):
    server: "KmsServer"

    def _respond(self, status: int, payload: dict) -> None:
        data = json.dumps(payload, separators=(",", ":")).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _handle(self, method: str) -> None:
        url = urlsplit(self.path)
        body = None
        if method == "POST":
            length = int(self.headers.get("Content-Length") or 0)
            try:
                body = json.loads(self.rfile.read(length) or b"null")
            except json.JSONDecodeError:
                self._respond(400, InvalidRequestError().body())
                return
        status, payload = dispatch(self.server.store, method, url.path, parse_qs(url.query), body)
        self._respond(status, payload)

    def do_GET(self):
        self._handle("GET")

    def do_POST(self):
        self._handle("POST")

    def log_message(self, fmt, *args):
        log.debug("%s %s", self.address_string(), fmt % args)


class KmsServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, store: KeyStore, host: str = "127.0.0.1", port: int = 0):
        self.store = store
        super().__init__((host, port), _Handler)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "KmsServer":
        self._thread = threading.Thread(target=self.serve_forever, name="kms-http", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
