#!/usr/bin/env python3
"""Generate a seasonal synthetic dataset (sine + trend + noise) as CSV.

The default settings produce the desk-benchmark dataset: 600 monthly-style
steps with period 12.  The seed is fixed so the file is reproducible.
"""

import argparse

import numpy as np


def synthetic_values(n: int, period: int, channels: int, trend: float, noise: float,
                     seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    rows = []
    for c in range(channels):
        phase = 2.0 * np.pi * c / max(channels, 1)
        row = (
            10.0
            + 3.0 * np.sin(2.0 * np.pi * t / period + phase)
            + trend * t
            + noise * rng.standard_normal(n)
        )
        rows.append(row)
    return np.stack(rows)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--n", type=int, default=600)
    parser.add_argument("--period", type=int, default=12)
    parser.add_argument("--channels", type=int, default=1)
    parser.add_argument("--trend", type=float, default=0.01)
    parser.add_argument("--noise", type=float, default=0.25)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    values = synthetic_values(args.n, args.period, args.channels, args.trend, args.noise, args.seed)
    names = [f"ch{c}" for c in range(args.channels)]
    with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(names) + "\n")
        for step in range(args.n):
            handle.write(",".join(repr(float(v)) for v in values[:, step]) + "\n")
    print(f"wrote {args.out}: {args.channels} channel(s), {args.n} steps, period {args.period}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
