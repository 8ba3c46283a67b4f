"""Splittable random streams keyed by (seed, stream_id).

Identical (seed, stream_id, draw sequence) yields identical outputs across
runs and thread schedules, so episodes and grid cells stay reproducible no
matter how work is scheduled.  Substream ids are derived with splitmix64, the
same documented mix used for harness cell seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the splitmix64 mixing function (public-domain constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def mix64(*parts: int) -> int:
    """Fold integers into one 64-bit value by iterated splitmix64 rounds."""
    acc = 0
    for p in parts:
        acc = splitmix64(acc ^ (int(p) & _MASK64))
    return acc


def hash_label(label: str) -> int:
    """FNV-1a 64-bit hash of a text label, for string-keyed substreams."""
    h = 0xCBF29CE484222325
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


@dataclass(frozen=True)
class RngStream:
    """A named position in seed space; materialize a generator with :meth:`generator`."""

    seed: int
    stream_id: int = 0

    def substream(self, *keys: int | str) -> "RngStream":
        """Child stream keyed by integers and/or labels; deterministic and order-sensitive."""
        parts = [hash_label(k) if isinstance(k, str) else int(k) for k in keys]
        return RngStream(seed=self.seed, stream_id=mix64(self.stream_id, *parts))

    def generator(self) -> np.random.Generator:
        """Fresh PCG64 generator at this stream's fixed starting point."""
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.seed & _MASK64, self.stream_id]))
        )
