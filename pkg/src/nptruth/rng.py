"""Seedable random streams.

Every scientist, replicate or study batch draws from its own ``RngStream``.
Streams are keyed by ``(seed, stream_id)`` and built on the counter-based
Philox generator, so two streams never share state and a given key always
replays the same sequence.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


class RngStream:
    """Independent uniform/normal/Poisson source addressed by ``(seed, stream_id)``.

    A stream is single-owner: do not hand the same instance to concurrent tasks,
    derive a ``child`` for each of them instead.
    """

    __slots__ = ("seed", "stream_id", "_path", "_gen")

    def __init__(self, seed: int, stream_id: int = 0, _path: tuple[int, ...] = ()):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self._path = tuple(_path)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self._path))
        self._gen = np.random.Generator(np.random.Philox(ss))

    def child(self, key: int) -> "RngStream":
        """Deterministic sub-stream; does not advance this stream."""
        return RngStream(self.seed, self.stream_id, (*self._path, int(key)))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, size=None):
        return self._gen.random(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def poisson(self, lam, size=None):
        return self._gen.poisson(lam, size)

    def binomial(self, n, p, size=None):
        return self._gen.binomial(n, p, size)

    def chisquare(self, df, size=None):
        return self._gen.chisquare(df, size)

    def choice(self, a, size=None, p=None):
        return self._gen.choice(a, size=size, p=p)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, path={self._path})"
