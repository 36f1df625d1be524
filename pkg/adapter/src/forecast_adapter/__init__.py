"""Reference implementation of the stresscast external-model protocol (v1).

The benchmarking engine talks to external forecasters over line-delimited
JSON on standard streams. One conversation:

    -> {"type": "hello", "protocol": 1, "t": 90, "horizon": 30,
        "n_sensors": 7, "model_config": {}}
    <- {"type": "ready", "name": "forecast-adapter/persistence"}
    -> {"type": "predict", "id": 0, "inputs": [[...t rows of n values...]]}
    <- {"type": "prediction", "id": 0, "outputs": [[...horizon rows...]]}
    ...
    -> {"type": "shutdown"}           (process exits 0)

Requests are strictly sequential; responses are never reordered and every
predict id is answered exactly once. A malformed or out-of-protocol line
is answered with {"type": "error", "message": ...}, a diagnostic is
written to standard error, and the process exits with code 3.

Wrapping your own model
-----------------------
`serve` accepts any callable mapping a nested-list batch [B][t][n] to
forecasts [B][horizon][n]; the declared dimensions arrive in the hello
and are exposed on the session. A minimal wrapper:

    from forecast_adapter import serve

    def my_predictor(inputs):
        return my_model.forecast(inputs)   # [B][horizon][n] lists

    raise SystemExit(serve(my_predictor, name="my-model"))

With no predictor the built-in persistence rule is served: the last
observed input row repeated across the horizon. No third-party
dependencies are required.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from enum import Enum
from numbers import Real
from typing import Callable, Optional

PROTOCOL_VERSION = 1

__all__ = [
    "PROTOCOL_VERSION",
    "AdapterSession",
    "ProtocolError",
    "SessionState",
    "persistence_predictor",
    "serve",
]


class SessionState(Enum):
    AWAIT_HELLO = "AwaitHello"
    READY = "Ready"
    CLOSED = "Closed"


class ProtocolError(Exception):
    """An incoming message violates protocol v1."""


def persistence_predictor(horizon: int) -> Callable[[list], list]:
    """Forecast by repeating each window's last observed row."""

    def predict(inputs: list) -> list:
        return [[window[-1]] * horizon for window in inputs]

    return predict


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ProtocolError(message)


def _check_matrix(rows: object, n_rows: int, n_cols: int, label: str) -> None:
    _require(isinstance(rows, list) and len(rows) == n_rows, f"{label} must have {n_rows} rows")
    for row in rows:
        _require(
            isinstance(row, list) and len(row) == n_cols,
            f"{label} rows must have {n_cols} values",
        )
        for value in row:
            _require(
                isinstance(value, Real) and not isinstance(value, bool),
                f"{label} values must be numbers",
            )


@dataclass
class AdapterSession:
    """One protocol conversation: declared dimensions, predictor, state.

    The predictor maps [B][t][n] nested lists to [B][horizon][n]; when
    None, the persistence rule is installed at handshake time (it needs
    the declared horizon).
    """

    predictor: Optional[Callable[[list], list]] = None
    name: str = "forecast-adapter"
    state: SessionState = SessionState.AWAIT_HELLO
    t: int = 0
    horizon: int = 0
    n_sensors: int = 0

    def handle(self, message: dict) -> Optional[dict]:
        """Advance the state machine by one message; return the reply.

        Returns None for shutdown (the caller exits cleanly). Raises
        ProtocolError for anything protocol v1 does not allow here.
        """
        _require(isinstance(message, dict), "messages must be JSON objects")
        kind = message.get("type")
        if self.state is SessionState.AWAIT_HELLO:
            _require(kind == "hello", f"expected hello first, got {kind!r}")
            return self._handle_hello(message)
        if self.state is SessionState.READY:
            if kind == "predict":
                return self._handle_predict(message)
            if kind == "shutdown":
                self.state = SessionState.CLOSED
                return None
            raise ProtocolError(f"unexpected message type {kind!r} while ready")
        raise ProtocolError("session is closed")

    def _handle_hello(self, message: dict) -> dict:
        _require(
            message.get("protocol") == PROTOCOL_VERSION,
            f"unsupported protocol version {message.get('protocol')!r}",
        )
        for key in ("t", "horizon", "n_sensors"):
            value = message.get(key)
            _require(
                isinstance(value, int) and not isinstance(value, bool) and value >= 1,
                f"hello field {key!r} must be a positive integer",
            )
        self.t = message["t"]
        self.horizon = message["horizon"]
        self.n_sensors = message["n_sensors"]
        if self.predictor is None:
            self.predictor = persistence_predictor(self.horizon)
        self.state = SessionState.READY
        return {"type": "ready", "name": self.name}

    def _handle_predict(self, message: dict) -> dict:
        request_id = message.get("id")
        _require(
            isinstance(request_id, int) and not isinstance(request_id, bool),
            "predict id must be an integer",
        )
        inputs = message.get("inputs")
        _require(isinstance(inputs, list) and len(inputs) >= 1, "inputs must be a non-empty list")
        for window in inputs:
            _check_matrix(window, self.t, self.n_sensors, "input window")
        outputs = self.predictor(inputs)
        for forecast in outputs:
            _check_matrix(forecast, self.horizon, self.n_sensors, "forecast")
        _require(len(outputs) == len(inputs), "one forecast per input window")
        return {"type": "prediction", "id": request_id, "outputs": outputs}


def serve(
    predictor: Optional[Callable[[list], list]] = None,
    name: str = "forecast-adapter",
    stdin=None,
    stdout=None,
) -> int:
    """Run the single-threaded request loop; return the process exit code.

    Reads one JSON message per line, writes one reply per request, exits
    0 after shutdown. Stream handles are injectable for tests.
    """
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    session = AdapterSession(predictor=predictor, name=name)

    for line in stdin:
        if not line.strip():
            continue
        try:
            message = json.loads(line)
            reply = session.handle(message)
        except (json.JSONDecodeError, ProtocolError) as err:
            stdout.write(json.dumps({"type": "error", "message": str(err)}) + "\n")
            stdout.flush()
            print(f"protocol violation: {err}", file=sys.stderr)
            return 3
        except Exception as err:
            stdout.write(json.dumps({"type": "error", "message": f"predictor failed: {err}"}) + "\n")
            stdout.flush()
            print(f"predictor failed: {err}", file=sys.stderr)
            return 3
        if reply is None:
            return 0
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()

    if session.state is SessionState.CLOSED:
        return 0
    print("input stream closed before shutdown", file=sys.stderr)
    return 3
