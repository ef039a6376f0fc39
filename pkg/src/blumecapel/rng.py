"""Counter-based random streams keyed by ``(seed, stream_id)``.

Each stream is a Philox4x64 generator whose 128-bit key is the pair
``(seed, stream_id)``, so streams never need to coordinate: replica ``r`` of
an experiment simply uses ``stream.child(r)``. Uniforms are 53-bit doubles.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


class RngStream:
    """Reproducible uniform stream; ``counter`` counts the uniforms drawn."""

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed) & _MASK
        self.stream_id = int(stream_id) & _MASK
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))
        self.counter = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, counter={self.counter})"

    def uniform(self):
        self.counter += 1
        return float(self._gen.random())

    def uniforms(self, size):
        out = self._gen.random(size)
        self.counter += int(np.prod(size))
        return out

    def child(self, index):
        """Independent stream for replica ``index`` under the same seed."""
        return RngStream(self.seed, _splitmix64(self.stream_id ^ _splitmix64(int(index) & _MASK)))

    def children(self, count):
        return [self.child(i) for i in range(count)]
