"""Deterministic stream derivation from a single master seed.

Every random consumer derives its generator as
``SeedSequence(entropy=master_seed, spawn_key=(stream, *indices))``; the
spawn-key construction is part of numpy's stability guarantee, so a given
(master seed, stream, indices) triple reproduces the same stream across runs,
processes and library versions.
"""

from __future__ import annotations

import numpy as np

STREAM_DATA = 0          # dataset generation: (STREAM_DATA, dataset_index)
STREAM_GA = 1            # GA runs: (STREAM_GA, dataset_index, run_index)
STREAM_SAMPLING = 2      # sampling-variance replications: (STREAM_SAMPLING, replication)
STREAM_CALIBRATE = 3     # timing-harness draws


def rng_for(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream addressed by (master_seed, *key)."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)
