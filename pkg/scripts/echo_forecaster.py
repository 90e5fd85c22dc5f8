#!/usr/bin/env python3
"""Minimal external forecaster speaking the line-delimited JSON protocol.

Repeats each channel's last observed value across the horizon (same
behavior as the built-in naive model).  Useful as a bridge smoke test and
as a template for wrapping real models: read one JSON object per stdin
line, write one JSON object per stdout line, log to stderr only.
"""

import json
import sys


def main() -> int:
    lookback = horizon = channels = None
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
        except json.JSONDecodeError:
            print(f"echo-forecaster: bad JSON line: {line!r}", file=sys.stderr)
            return 1
        kind = message.get("type")
        if kind == "hello":
            lookback = int(message["lookback"])
            horizon = int(message["horizon"])
            channels = int(message["channels"])
            sys.stdout.write(json.dumps({"type": "ready"}) + "\n")
            sys.stdout.flush()
        elif kind == "predict":
            forecasts = []
            for window in message["batch"]:
                if len(window) != channels or any(len(row) != lookback for row in window):
                    print("echo-forecaster: window shape mismatch", file=sys.stderr)
                    return 1
                forecasts.append([[row[-1]] * horizon for row in window])
            sys.stdout.write(json.dumps({"type": "forecast", "id": message["id"],
                                         "batch": forecasts}) + "\n")
            sys.stdout.flush()
        elif kind == "bye":
            return 0
        else:
            print(f"echo-forecaster: unknown message type {kind!r}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
