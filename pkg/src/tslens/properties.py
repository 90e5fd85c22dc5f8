"""Scalar properties of a sequence: extrema, moments, trend, point values.

A Property addresses exactly one channel of a multivariate sequence via
target_channel.  Step and value indices are 1-based, channels 0-based.
CLI token forms: "min", "max", "mean", "var", "trend", "step:<n>", each
optionally suffixed with "@<channel>".
"""

from dataclasses import dataclass

import numpy as np

from .perturb import trend_slope

KINDS = ("min", "max", "mean", "variance", "trend", "value_at")

_TOKEN_KINDS = {"min": "min", "max": "max", "mean": "mean", "var": "variance", "trend": "trend"}
_KIND_TOKENS = {v: k for k, v in _TOKEN_KINDS.items()}


@dataclass(frozen=True)
class Property:
    """A named scalar summary of a 1-D sequence."""

    kind: str
    n: int | None = None  # 1-based step, value_at only
    k: int = 1  # deseasonalization length, trend only
    target_channel: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown property kind {self.kind!r}, expected one of {KINDS}")
        if self.kind == "value_at":
            if self.n is None or self.n < 1:
                raise ValueError(f"value_at needs a 1-based step index, got {self.n}")
        elif self.n is not None:
            raise ValueError(f"step index only applies to value_at, not {self.kind!r}")
        if self.kind == "trend" and self.k < 1:
            raise ValueError(f"trend needs k >= 1, got {self.k}")

    def token(self) -> str:
        base = f"step:{self.n}" if self.kind == "value_at" else _KIND_TOKENS[self.kind]
        if self.target_channel is not None:
            return f"{base}@{self.target_channel}"
        return base


def eval_property(prop: Property, seq) -> float:
    """Evaluate a property on a 1-D sequence of length >= 1."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 1 or seq.size < 1:
        raise ValueError(f"expected a non-empty 1-D sequence, got shape {seq.shape}")
    if prop.kind == "min":
        return float(seq.min())
    if prop.kind == "max":
        return float(seq.max())
    if prop.kind == "mean":
        return float(seq.mean())
    if prop.kind == "variance":
        return float(seq.var())
    if prop.kind == "trend":
        return trend_slope(seq, prop.k)
    if prop.n > seq.size:
        raise ValueError(f"step {prop.n} out of range for a sequence of length {seq.size}")
    return float(seq[prop.n - 1])


def property_set_output_steps(h: int, target_channel: int | None = None) -> list[Property]:
    """One value_at property per forecast step 1..h."""
    if h < 1:
        raise ValueError(f"horizon must be >= 1, got {h}")
    return [Property(kind="value_at", n=n, target_channel=target_channel) for n in range(1, h + 1)]


def parse_property_token(token: str) -> Property:
    """Parse a CLI property token; raises ValueError on malformed input."""
    text = token.strip()
    channel = None
    if "@" in text:
        text, _, channel_text = text.partition("@")
        try:
            channel = int(channel_text)
        except ValueError:
            raise ValueError(f"bad channel suffix in property token {token!r}") from None
        if channel < 0:
            raise ValueError(f"channel must be >= 0 in property token {token!r}")
    if text.startswith("step:"):
        try:
            n = int(text[len("step:") :])
        except ValueError:
            raise ValueError(f"bad step index in property token {token!r}") from None
        return Property(kind="value_at", n=n, target_channel=channel)
    if text in _TOKEN_KINDS:
        return Property(kind=_TOKEN_KINDS[text], target_channel=channel)
    valid = ", ".join(sorted(_TOKEN_KINDS)) + ", step:<n>"
    raise ValueError(f"unknown property token {token!r}; valid tokens: {valid}")
