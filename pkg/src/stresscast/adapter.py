"""Client side of the external-model wire protocol (v1).

The external model runs as a child process speaking line-delimited JSON
on its standard streams: hello/ready handshake, then strictly
sequential predict/prediction exchanges, then shutdown. Only the
handshake is time-bounded; predictions may take as long as the model
needs.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading

import numpy as np

from .errors import AdapterCrashed, AdapterError, HandshakeTimeout, ProtocolViolation
from .forecast import Forecaster

PROTOCOL_VERSION = 1
ADAPTER_BATCH = 64

_EOF = object()


class AdapterClient:
    """Own one adapter process; one request in flight at a time."""

    def __init__(
        self,
        command: str,
        t: int,
        horizon: int,
        n_sensors: int,
        model_config: dict | None = None,
        timeout: float = 60.0,
    ):
        self.command = command
        self.t = t
        self.horizon = horizon
        self.n_sensors = n_sensors
        self.timeout = timeout
        self.name = None
        self._lock = threading.Lock()
        self._next_id = 0
        self._lines: queue.Queue = queue.Queue()
        argv = shlex.split(command)
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except FileNotFoundError:
            raise AdapterError(f"adapter command not found: {argv[0]!r}") from None
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._handshake(model_config or {})

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def _send(self, message: dict) -> None:
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError):
            raise AdapterCrashed(self._proc.wait()) from None

    def _recv(self, timeout: float | None = None) -> dict:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise HandshakeTimeout(
                f"adapter did not complete the handshake within {timeout:g} s"
            ) from None
        if line is _EOF:
            raise AdapterCrashed(self._proc.wait())
        try:
            message = json.loads(line)
        except json.JSONDecodeError:
            self._abort()
            raise ProtocolViolation(f"adapter sent a non-JSON line: {line.rstrip()!r}") from None
        if not isinstance(message, dict) or "type" not in message:
            self._abort()
            raise ProtocolViolation(f"adapter message lacks a type: {line.rstrip()!r}")
        return message

    def _handshake(self, model_config: dict) -> None:
        self._send(
            {
                "type": "hello",
                "protocol": PROTOCOL_VERSION,
                "t": self.t,
                "horizon": self.horizon,
                "n_sensors": self.n_sensors,
                "model_config": model_config,
            }
        )
        try:
            message = self._recv(timeout=self.timeout)
        except HandshakeTimeout:
            self._abort()
            raise
        if message.get("type") != "ready":
            self._abort()
            raise ProtocolViolation(f"expected ready during handshake, got {message!r}")
        self.name = str(message.get("name", "external"))

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        """One predict/prediction round trip for a [B, t, n] batch."""
        with self._lock:
            request_id = self._next_id
            self._next_id += 1
            self._send({"type": "predict", "id": request_id, "inputs": inputs.tolist()})
            message = self._recv(timeout=None)
            if message.get("type") != "prediction":
                self._abort()
                raise ProtocolViolation(f"expected prediction, got {message!r}")
            if message.get("id") != request_id:
                self._abort()
                raise ProtocolViolation(
                    f"prediction id {message.get('id')!r} does not match request id "
                    f"{request_id}: {message!r}"
                )
            outputs = np.asarray(message.get("outputs"), dtype=np.float64)
            expected = (inputs.shape[0], self.horizon, self.n_sensors)
            if outputs.shape != expected:
                self._abort()
                raise ProtocolViolation(
                    f"prediction outputs have shape {outputs.shape}, expected {expected}"
                )
            if not np.isfinite(outputs).all():
                self._abort()
                raise ProtocolViolation("prediction outputs contain non-finite values")
            return outputs

    def shutdown(self) -> None:
        if self._proc.poll() is None:
            try:
                self._send({"type": "shutdown"})
            except AdapterCrashed:
                pass
            try:
                self._proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self._abort()
        if self._proc.stdin and not self._proc.stdin.closed:
            self._proc.stdin.close()

    def _abort(self) -> None:
        if self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()
        return False


class ExternalForecaster(Forecaster):
    """Forecaster backed by an adapter process; requests chunked by 64."""

    kind = "External"

    def __init__(self, client: AdapterClient, batch_size: int = ADAPTER_BATCH):
        super().__init__(client.t, client.horizon, client.n_sensors)
        self.client = client
        self.batch_size = batch_size

    def hyperparams(self):
        return {"adapter": self.client.name, "adapter_cmd": self.client.command}

    def _forward(self, XB):
        chunks = [
            self.client.predict(XB[start : start + self.batch_size])
            for start in range(0, XB.shape[0], self.batch_size)
        ]
        return np.concatenate(chunks, axis=0)
