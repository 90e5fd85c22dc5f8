"""Bridge to external forecasters over line-delimited JSON on stdin/stdout.

Protocol (one JSON object per line, UTF-8):
  parent -> child   {"type": "hello", "lookback": b, "horizon": h,
                     "channels": d, "version": 1}
  child  -> parent  {"type": "ready"}
  parent -> child   {"type": "predict", "id": <uint>, "batch": [<window>...]}
                    where a window is a channel-major list of d lists of b
                    numbers
  child  -> parent  {"type": "forecast", "id": <same uint>,
                     "batch": [<forecast>...]} with d x h numbers per entry,
                    batch order preserved
  parent -> child   {"type": "bye"}, after which the child exits 0.

Anything else on the child's stdout is a protocol violation and kills the
handle.  The child's stderr is captured and attached to error messages.
"""

import collections
import json
import queue
import subprocess
import threading

import numpy as np

from .forecasters import Forecaster

PROTOCOL_VERSION = 1


class BridgeError(RuntimeError):
    """The external model failed or misbehaved; the handle is dead."""


class ProtocolError(BridgeError):
    """The child sent something outside the wire protocol."""


class BridgeTimeout(BridgeError):
    """The child did not answer within the configured timeout."""


class BridgedForecaster(Forecaster):
    """A child process speaking the wire protocol; one request in flight."""

    def __init__(self, command: list[str], lookback: int, horizon: int, channels: int,
                 timeout: float = 30.0):
        super().__init__(f"extern:{' '.join(command)}", lookback, horizon, channels,
                         concurrent_safe=False)
        self.command = list(command)
        self.timeout = timeout
        self._dead: str | None = None
        self._next_id = 0
        self._io_lock = threading.Lock()
        self._stderr_tail: collections.deque[str] = collections.deque(maxlen=50)
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise BridgeError(f"failed to spawn {self.command!r}: {exc}") from exc
        self._lines: queue.Queue[str | None] = queue.Queue()
        threading.Thread(target=self._pump_stdout, daemon=True).start()
        threading.Thread(target=self._pump_stderr, daemon=True).start()
        self._handshake()

    # -- plumbing ---------------------------------------------------------

    def _pump_stdout(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _pump_stderr(self):
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip("\n"))

    def _diagnostics(self) -> str:
        code = self._proc.poll()
        parts = [f"command={self.command!r}"]
        if code is not None:
            parts.append(f"exit_code={code}")
        if self._stderr_tail:
            parts.append("stderr:\n" + "\n".join(self._stderr_tail))
        return "; ".join(parts)

    def _fail(self, error_cls, message: str):
        self._dead = message
        try:
            self._proc.kill()
        except OSError:
            pass
        raise error_cls(f"{message} ({self._diagnostics()})")

    def _send(self, obj: dict):
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._fail(BridgeError, "child closed its stdin")

    def _recv(self) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self._fail(BridgeTimeout, f"no response within {self.timeout}s")
        if line is None:
            self._fail(BridgeError, "child closed stdout mid-conversation")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            self._fail(ProtocolError, f"child sent a non-JSON line: {line!r}")
        if not isinstance(obj, dict) or "type" not in obj:
            self._fail(ProtocolError, f"child sent a JSON value without a type: {line!r}")
        return obj

    def _handshake(self):
        self._send({
            "type": "hello",
            "lookback": self.lookback,
            "horizon": self.horizon,
            "channels": self.channels,
            "version": PROTOCOL_VERSION,
        })
        reply = self._recv()
        if reply.get("type") != "ready":
            self._fail(ProtocolError, f"expected a ready reply, got {reply!r}")

    # -- forecasting ------------------------------------------------------

    def predict(self, x) -> np.ndarray:
        return self.predict_batch([x])[0]

    def predict_batch(self, xs) -> list[np.ndarray]:
        with self._io_lock:
            if self._dead is not None:
                raise BridgeError(f"bridge already failed: {self._dead}")
            inputs = [self._check_input(x) for x in xs]
            request_id = self._next_id
            self._next_id += 1
            self._send({
                "type": "predict",
                "id": request_id,
                "batch": [x.tolist() for x in inputs],
            })
            self._count(len(inputs))
            reply = self._recv()
            if reply.get("type") != "forecast":
                self._fail(ProtocolError, f"expected a forecast reply, got type {reply.get('type')!r}")
            if reply.get("id") != request_id:
                self._fail(ProtocolError, f"response id {reply.get('id')!r} does not match request id {request_id}")
            batch = reply.get("batch")
            if not isinstance(batch, list) or len(batch) != len(inputs):
                got = len(batch) if isinstance(batch, list) else type(batch).__name__
                self._fail(ProtocolError, f"expected a batch of {len(inputs)} forecasts, got {got}")
            out = []
            for i, forecast in enumerate(batch):
                try:
                    arr = np.asarray(forecast, dtype=np.float64)
                except (ValueError, TypeError):
                    self._fail(ProtocolError, f"forecast {i} is not a rectangular numeric array")
                if arr.shape != (self.channels, self.horizon):
                    self._fail(ProtocolError,
                               f"forecast {i} has shape {arr.shape}, expected "
                               f"({self.channels}, {self.horizon})")
                if not np.all(np.isfinite(arr)):
                    self._fail(ProtocolError, f"forecast {i} contains non-finite values")
                out.append(arr)
            return out

    # -- lifecycle --------------------------------------------------------

    def close(self) -> int | None:
        """Send bye and reap the child; returns its exit code."""
        with self._io_lock:
            if self._proc.poll() is None and self._dead is None:
                try:
                    self._send({"type": "bye"})
                except BridgeError:
                    pass
            try:
                return self._proc.wait(timeout=self.timeout)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                return self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
        return False


def bridge_spawn(command: list[str], lookback: int, horizon: int, channels: int,
                 timeout: float = 30.0) -> BridgedForecaster:
    """Start an external model process and complete the handshake."""
    return BridgedForecaster(command, lookback, horizon, channels, timeout=timeout)
