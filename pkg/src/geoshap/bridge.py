"""Wire protocol for explaining models that run in an external process.

Transport is line-delimited UTF-8 JSON over the child's stdin/stdout:

    server -> {"type":"ready","n_columns":int,"trainable":bool}
    client -> {"type":"predict","id":int,"rows":[[...]]}
    server -> {"type":"prediction","id":int,"values":[...]}
    client -> {"type":"fit","id":int,"rows":[[...]],"targets":[...]}
    server -> {"type":"fit_ok","id":int}
    client -> {"type":"shutdown"}

Requests carry monotonically increasing ids and are strictly serialized per
session; numbers travel as shortest round-trip decimals (JSON defaults on
both ends).
"""

from __future__ import annotations

import json
import shlex
import subprocess
import sys
import threading
from dataclasses import dataclass
from queue import Empty, Queue

import numpy as np

from .errors import (
    BridgeHandshakeError,
    BridgeProtocolError,
    BridgeTimeoutError,
    BridgeTransportError,
)

DEFAULT_TIMEOUT = 60.0
_EOF = object()


@dataclass(frozen=True)
class Capabilities:
    n_columns: int
    trainable: bool
    concurrency_safe: bool = False


class BridgeSession:
    """Exclusive-owner session over one model-server process."""

    def __init__(self, proc: subprocess.Popen, capabilities: Capabilities,
                 command: str, timeout: float):
        self._proc = proc
        self.capabilities = capabilities
        self.command = command
        self.timeout = timeout
        self._next_id = 1
        self._lock = threading.Lock()
        self._lines: Queue = Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        finally:
            self._lines.put(_EOF)

    def _read_line(self, timeout: float, request_id):
        try:
            line = self._lines.get(timeout=timeout)
        except Empty:
            raise BridgeTimeoutError(
                f"no response within {timeout:.0f}s (request id {request_id})"
            ) from None
        if line is _EOF:
            code = self._proc.poll()
            raise BridgeTransportError(
                f"model server exited (code {code}) during request id {request_id}"
            )
        return line

    def _send(self, payload: dict):
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BridgeTransportError(
                f"cannot write to model server (request id {payload.get('id')}): {exc}"
            ) from exc

    def request(self, payload: dict, expect_type: str, timeout: float | None = None) -> dict:
        """Send one request and read exactly one matching response."""
        timeout = self.timeout if timeout is None else timeout
        with self._lock:
            request_id = self._next_id
            self._next_id += 1
            payload = {**payload, "id": request_id}
            self._send(payload)
            line = self._read_line(timeout, request_id)
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            raise BridgeProtocolError(
                f"model server sent invalid JSON for request id {request_id}: {line!r}"
            ) from None
        if msg.get("type") == "error":
            raise BridgeProtocolError(
                f"model server error for request id {msg.get('id')}: {msg.get('message')}"
            )
        if msg.get("id") != request_id:
            raise BridgeProtocolError(
                f"response id {msg.get('id')} does not match request id {request_id}"
            )
        if msg.get("type") != expect_type:
            raise BridgeProtocolError(
                f"expected {expect_type!r} response, got {msg.get('type')!r} "
                f"for request id {request_id}"
            )
        return msg

    def close(self):
        """Send shutdown and reap the child; kill it if it lingers."""
        if self._proc.poll() is None:
            try:
                self._send({"type": "shutdown"})
                self._proc.stdin.close()
            except BridgeTransportError:
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def handshake(command, expect_columns: int | None = None,
              timeout: float = DEFAULT_TIMEOUT) -> BridgeSession:
    """Spawn a model server and validate its ready message.

    ``command`` is a shell-style string or an argv list. When
    ``expect_columns`` is given, a column-count mismatch is refused before
    any predict is issued.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    try:
        proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=sys.stderr.fileno() if hasattr(sys.stderr, "fileno") else None,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
    except OSError as exc:
        raise BridgeHandshakeError(f"cannot spawn model server {argv!r}: {exc}") from exc

    def fail(message):
        proc.kill()
        proc.wait()
        raise BridgeHandshakeError(message)

    ready_box: Queue = Queue()

    def read_first():
        ready_box.put(proc.stdout.readline())

    t = threading.Thread(target=read_first, daemon=True)
    t.start()
    try:
        first = ready_box.get(timeout=timeout)
    except Empty:
        fail(f"model server sent no ready message within {timeout:.0f}s")
    if not first:
        fail(f"model server exited before handshake (code {proc.poll()})")
    try:
        msg = json.loads(first)
    except json.JSONDecodeError:
        fail(f"handshake expected a ready message, got line: {first.rstrip()!r}")
    if msg.get("type") != "ready" or not isinstance(msg.get("n_columns"), int) \
            or not isinstance(msg.get("trainable"), bool):
        fail(f"malformed ready message: {first.rstrip()!r}")
    caps = Capabilities(
        n_columns=msg["n_columns"],
        trainable=msg["trainable"],
        concurrency_safe=bool(msg.get("concurrency_safe", False)),
    )
    if expect_columns is not None and caps.n_columns != expect_columns:
        fail(
            f"model server declares {caps.n_columns} columns, dataset rows have {expect_columns}"
        )
    shown = command if isinstance(command, str) else " ".join(argv)
    return BridgeSession(proc, caps, shown, timeout)


def predict_batch(session: BridgeSession, X: np.ndarray) -> np.ndarray:
    """One predict round-trip; output length must match the row count."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise BridgeProtocolError(f"predict rows must be 2-dimensional, got shape {X.shape}")
    msg = session.request({"type": "predict", "rows": X.tolist()}, "prediction")
    values = np.asarray(msg.get("values", []), dtype=np.float64).reshape(-1)
    if values.shape[0] != X.shape[0]:
        raise BridgeProtocolError(
            f"server returned {values.shape[0]} values for {X.shape[0]} rows "
            f"(request id {msg.get('id')})"
        )
    if values.size and not np.isfinite(values).all():
        raise BridgeProtocolError(
            f"server returned non-finite predictions (request id {msg.get('id')})"
        )
    return values


def fit_remote(session: BridgeSession, X: np.ndarray, y: np.ndarray):
    """Retrain the remote model; requires the trainable capability."""
    if not session.capabilities.trainable:
        raise BridgeProtocolError("model server does not declare the trainable capability")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise BridgeProtocolError(
            f"fit rows/targets mismatch: {X.shape[0]} rows vs {y.shape[0]} targets"
        )
    session.request({"type": "fit", "rows": X.tolist(), "targets": y.tolist()}, "fit_ok")


class BridgedOracle:
    """PredictionOracle over a bridge session."""

    concurrency_safe = False

    def __init__(self, session: BridgeSession):
        self.session = session

    @property
    def trainable(self) -> bool:
        return self.session.capabilities.trainable

    def predict(self, X: np.ndarray) -> np.ndarray:
        return predict_batch(self.session, X)

    def fit(self, X: np.ndarray, y: np.ndarray):
        fit_remote(self.session, X, y)
        return self

    def close(self):
        self.session.close()
