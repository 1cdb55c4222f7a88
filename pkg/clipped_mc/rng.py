"""Seeded random streams.

Every stochastic routine takes an explicit integer seed and builds its own
Philox generator (counter-based, identical output on every platform).
"""

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
  """Return a Philox-backed generator for `seed`."""
  if seed < 0:
    raise ValueError(f"seed must be non-negative, got {seed}")
  return np.random.Generator(np.random.Philox(seed))


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
  """Independent child streams of `seed`; child i is stable for any `count` > i."""
  children = np.random.SeedSequence(seed).spawn(count)
  return [np.random.Generator(np.random.Philox(child)) for child in children]


def child_seed(seed: int, index: int) -> int:
  """A derived 63-bit integer seed for the index-th sub-task of `seed`."""
  child = np.random.SeedSequence(seed, spawn_key=(index,))
  return int(child.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
