"""Label-only oracle access.

An :class:`OracleHandle` is the adversary's view of a target model: it
returns class indices and nothing else. Handles cache labels by input
fingerprint and count every distinct input sent to the backend in a
:class:`QueryLedger`.

The HTTP service speaks a deliberately tiny JSON protocol::

    POST /v1/label  {"input": [f64, ...]}  -> 200 {"label": int}
                                              400 {"error": "malformed"}
                                              422 {"error": "dimension"}
                                              429 {"error": "budget_exhausted"}
    GET  /v1/meta                           -> 200 {"in_dim": int, "classes": int}
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


class OracleError(RuntimeError):
    pass


class BudgetExhausted(OracleError):
    """The query budget does not cover another novel input.

    ``completed`` holds the labels obtained before the failure when raised
    from a batch query.
    """

    def __init__(self, message="query budget exhausted", completed=None):
        super().__init__(message)
        self.completed = list(completed or [])


class RemoteUnreachable(OracleError):
    pass


class MalformedResponse(OracleError):
    pass


def fingerprint(x) -> bytes:
    """Digest of the canonical little-endian float64 encoding of ``x``."""
    return hashlib.blake2b(np.ascontiguousarray(x, dtype="<f8").tobytes(), digest_size=20).digest()


@dataclass
class QueryLedger:
    budget: int | None = None
    per_epoch: list = field(default_factory=lambda: [0])

    @property
    def total_queries(self) -> int:
        return sum(self.per_epoch)

    @property
    def remaining(self):
        return None if self.budget is None else self.budget - self.total_queries

    def new_epoch(self):
        self.per_epoch.append(0)

    def charge(self, n: int = 1):
        self.per_epoch[-1] += n

    def to_dict(self):
        return {"total_queries": self.total_queries, "budget": self.budget, "per_epoch": list(self.per_epoch)}


class LocalBackend:
    def __init__(self, model):
        self._model = model
        self.in_dim = model.in_dim
        self.classes = model.classes

    def labels(self, X) -> list[int]:
        return [int(v) for v in self._model.predict(X)]


class RemoteBackend:
    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url.rstrip("/")
        self.timeout = timeout
        meta = self._call("GET", "/v1/meta")
        try:
            self.in_dim, self.classes = int(meta["in_dim"]), int(meta["classes"])
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedResponse(f"bad /v1/meta response: {meta!r}") from e

    def _call(self, method, path, body=None):
        data = None if body is None else json.dumps(body).encode()
        req = urllib.request.Request(self.url + path, data=data, method=method,
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                raw = resp.read()
        except urllib.error.HTTPError as e:
            if e.code == 429:
                raise BudgetExhausted("remote oracle budget exhausted") from e
            raise MalformedResponse(f"HTTP {e.code}: {e.read()[:200]!r}") from e
        except (urllib.error.URLError, OSError) as e:
            raise RemoteUnreachable(f"{self.url}: {e}") from e
        try:
            return json.loads(raw)
        except ValueError as e:
            raise MalformedResponse(f"non-JSON response: {raw[:200]!r}") from e

    def labels(self, X) -> list[int]:
        out = []
        for x in X:
            try:
                resp = self._call("POST", "/v1/label", {"input": [float(v) for v in x]})
            except BudgetExhausted as e:
                raise BudgetExhausted(str(e), out) from e
            if not isinstance(resp, dict) or set(resp) != {"label"} or not isinstance(resp["label"], int):
                raise MalformedResponse(f"unexpected label response: {resp!r}")
            out.append(resp["label"])
        return out


class OracleHandle:
    """Cached, budgeted label queries against a local model or a remote URL."""

    def __init__(self, backend, budget: int | None = None):
        if not hasattr(backend, "labels"):
            backend = LocalBackend(backend)
        self.backend = backend
        self.ledger = QueryLedger(budget)
        self.label_cache: dict[bytes, int] = {}

    @classmethod
    def local(cls, model, budget=None):
        return cls(LocalBackend(model), budget)

    @classmethod
    def remote(cls, url, budget=None, timeout=10.0):
        return cls(RemoteBackend(url, timeout), budget)

    @property
    def in_dim(self):
        return self.backend.in_dim

    @property
    def classes(self):
        return self.backend.classes

    def evaluation_view(self) -> "OracleHandle":
        """A handle on the same backend with its own ledger and cache, for
        measuring results without touching the attack budget."""
        return OracleHandle(self.backend)

    def query_label(self, x) -> int:
        return self.batch_query([x])[0]

    def batch_query(self, xs, chunk: int = 1024) -> list[int]:
        """Labels for every row of ``xs``, in order.

        Only cache misses reach the backend and the ledger. When the budget
        runs out part-way, :class:`BudgetExhausted` is raised carrying the
        labels of the completed prefix.
        """
        X = np.asarray(xs, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1) if X.size else X.reshape(0, 0)
        if len(X) == 0:
            return []
        if X.shape[1] != self.in_dim:
            raise ValueError(f"oracle expects inputs of length {self.in_dim}, got {X.shape[1]}")
        keys = [fingerprint(x) for x in X]
        # distinct misses in first-seen order
        pending, seen = [], set()
        for i, k in enumerate(keys):
            if k not in self.label_cache and k not in seen:
                seen.add(k)
                pending.append(i)
        allowed = len(pending) if self.ledger.remaining is None else max(0, min(len(pending), self.ledger.remaining))
        for s in range(0, allowed, chunk):
            idx = pending[s:min(s + chunk, allowed)]
            try:
                labels = self.backend.labels(X[idx])
            except BudgetExhausted as e:
                # keep whatever the backend answered before refusing
                self._store(keys, idx, e.completed)
                raise BudgetExhausted(str(e), self._prefix(keys)) from e
            self._store(keys, idx, labels)
        if allowed < len(pending):
            raise BudgetExhausted(
                f"budget of {self.ledger.budget} queries exhausted", self._prefix(keys)
            )
        return [self.label_cache[k] for k in keys]

    def _store(self, keys, idx, labels):
        for i, lab in zip(idx, labels):
            self.label_cache[keys[i]] = int(lab)
        self.ledger.charge(len(labels))

    def _prefix(self, keys):
        out = []
        for k in keys:
            if k not in self.label_cache:
                break
            out.append(self.label_cache[k])
        return out

    def cached_label(self, x):
        return self.label_cache.get(fingerprint(x))


# -- HTTP service -------------------------------------------------------------


class _ServiceState:
    def __init__(self, model, budget, ledger_path):
        self.model = model
        self.budget = budget
        self.ledger_path = Path(ledger_path) if ledger_path else None
        self.total = 0
        self.lock = threading.Lock()

    def flush(self):
        if self.ledger_path is not None:
            with self.lock:
                data = {"total_queries": self.total, "budget": self.budget}
            self.ledger_path.write_text(json.dumps(data, sort_keys=True))


class _Handler(BaseHTTPRequestHandler):
    state: _ServiceState
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # route through logging instead of stderr
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, code, obj):
        body = json.dumps(obj).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path.rstrip("/") == "/v1/meta":
            self._send(200, {"in_dim": int(self.state.model.in_dim), "classes": int(self.state.model.classes)})
        else:
            self._send(404, {"error": "not_found"})

    def do_POST(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length)
        if self.path.rstrip("/") != "/v1/label":
            self._send(404, {"error": "not_found"})
            return
        try:
            body = json.loads(raw)
            vec = body["input"]
            if not isinstance(body, dict) or set(body) != {"input"} or not isinstance(vec, list):
                raise ValueError
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vec):
                raise ValueError
            x = np.array(vec, dtype=np.float64)
            if not np.all(np.isfinite(x)):
                raise ValueError
        except (ValueError, KeyError, TypeError):
            self._send(400, {"error": "malformed"})
            return
        st = self.state
        if len(x) != st.model.in_dim:
            self._send(422, {"error": "dimension"})
            return
        with st.lock:
            if st.budget is not None and st.total >= st.budget:
                exhausted = True
            else:
                exhausted = False
                st.total += 1
                count = st.total
        if exhausted:
            self._send(429, {"error": "budget_exhausted"})
            return
        label = int(st.model.predict(x.reshape(1, -1))[0])
        log.info("query %d -> label %d", count, label)
        self._send(200, {"label": label})


class OracleService:
    """A running label service; use as a context manager or call
    :meth:`shutdown`."""

    def __init__(self, model, host="127.0.0.1", port=0, budget=None, ledger_path=None):
        self.state = _ServiceState(model, budget, ledger_path)
        handler = type("Handler", (_Handler,), {"state": self.state})
        self.server = ThreadingHTTPServer((host, port), handler)
        self.server.daemon_threads = True
        self._thread = None

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    @property
    def total_queries(self) -> int:
        return self.state.total

    def start(self) -> "OracleService":
        if self._thread is not None:
            return self
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self):
        try:
            self.server.serve_forever()
        finally:
            self.state.flush()

    def shutdown(self):
        if self._thread is not None:
            self.server.shutdown()
            self._thread.join()
            self._thread = None
        self.server.server_close()
        self.state.flush()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.shutdown()


def serve(model, bind: str = "127.0.0.1:0", budget: int | None = None, ledger_path=None) -> OracleService:
    """Start a label service for ``model`` in a background thread."""
    host, _, port = bind.rpartition(":")
    return OracleService(model, host or "127.0.0.1", int(port or 0), budget, ledger_path).start()
