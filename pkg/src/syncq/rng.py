"""Seedable random streams with reproducible substreams.

A stream is identified by a 64-bit seed plus an integer stream id; the pair
fully determines the draw sequence (PCG64 keyed through ``SeedSequence``).
Distinct ids give statistically independent streams, so parallel consumers
take one substream each and never share a generator.
"""
from __future__ import annotations

import numpy as np

__all__ = ["RandomStream"]


class RandomStream:
    """One sequential source of randomness.

    ``RandomStream(seed, stream)`` always reproduces the same sequence.
    ``substream(i)`` derives an independent child stream; ``keyed_generator``
    exposes a generator addressed by an integer path, used to freeze the
    randomness of tree nodes so a truncated structure can be re-expanded
    consistently.  Substream keys and node keys live in disjoint namespaces.
    """

    def __init__(self, seed: int, stream: int = 0, _key: tuple[int, ...] | None = None):
        self.seed = int(seed)
        self.stream = int(stream)
        self._key = _key if _key is not None else (self.stream,)
        self._gen: np.random.Generator | None = None

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self._key)
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def substream(self, index: int) -> "RandomStream":
        """Independent child stream number ``index`` (namespace tag 0)."""
        return RandomStream(self.seed, self.stream, _key=self._key + (0, int(index)))

    def keyed_generator(self, path: tuple[int, ...]) -> np.random.Generator:
        """Fresh generator addressed by ``path`` (namespace tag 1).

        The generator state is a pure function of (seed, stream, path); it does
        not consume or disturb this stream's own generator.
        """
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self._key + (1,) + tuple(int(p) for p in path))
        return np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:  # pragma: no cover
        return f"RandomStream(seed={self.seed}, stream={self.stream}, key={self._key})"
