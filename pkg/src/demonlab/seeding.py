"""Deterministic RNG streams.

Every stochastic routine takes a ``seed`` (or an already-built Generator).
Per-trial streams are derived from ``(seed, trial_index)`` via
``numpy.random.SeedSequence`` spawn keys, so adding trials never reshuffles
the randomness of existing ones.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Root generator for a scenario."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent stream for one trial of a multi-trial scenario."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial_index),))
    return np.random.default_rng(ss)
