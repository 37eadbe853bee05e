"""Deterministic RNG substreams.

Every stochastic routine takes a master seed and derives named substreams
from it, so each Monte Carlo replication is a pure function of
(master seed, stream path).  Results therefore do not depend on execution
order, and a parallel driver can hand each replication its own substream.
"""

from __future__ import annotations

import numpy as np


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for the substream identified by ``path`` under ``master_seed``."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(path))
    return np.random.default_rng(seq)
