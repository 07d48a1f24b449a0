"""Deterministic random-stream derivation.

Every random draw in the package flows from a ``numpy.random.Generator``
built from ``(master_seed, *indices)``. Substreams are independent of the
order in which they are requested, so parallel generation reproduces the
serial result exactly.
"""

from __future__ import annotations

import numpy as np


def substream(master_seed: int, *indices: int) -> np.random.Generator:
    """Return the generator for the substream addressed by ``indices``."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(i) for i in indices))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(master_seed: int, *indices: int) -> int:
    """A 63-bit integer seed for the addressed substream (for file headers, CSV rows)."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(i) for i in indices))
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
