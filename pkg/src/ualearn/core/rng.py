"""Seeded, splittable random number generation.

Built on numpy's Philox counter-based generator so that identical seeds
give bit-identical draw sequences and child streams can be derived without
consuming state from the parent. Children are addressed by integer paths
(`child(3, 0)` is the same stream no matter when or how often it is
derived), which is what makes whole experiments pure functions of their
seeds.
"""

import numpy as np


class Rng:
    """Deterministic random stream with pure stream-splitting."""

    def __init__(self, seed, _path=()):
        self.seed = int(seed)
        self.path = tuple(int(p) for p in _path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def child(self, *indices):
        """Derive an independent stream; does not advance this one."""
        return Rng(self.seed, self.path + tuple(int(i) for i in indices))

    def normal(self, shape=()):
        return self._gen.standard_normal(size=shape, dtype=np.float64)

    def uniform(self, shape=(), low=0.0, high=1.0):
        return self._gen.uniform(low, high, size=shape)

    def integers(self, low, high, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def shuffle(self, seq):
        self._gen.shuffle(seq)
