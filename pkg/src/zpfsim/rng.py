"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by
(master_seed, stream ids...).  Philox is counter-based, so a stream is a
pure function of its key: results do not depend on how many workers run,
in what order streams are consumed, or what was drawn from other streams.
"""

from __future__ import annotations

import numpy as np

# Stream ids, one per purpose, so draws for different purposes never alias.
STREAM_MODE_JITTER = 1
STREAM_AMPLITUDES = 2
STREAM_BOOST = 3
STREAM_INIT = 4


def stream(master_seed: int, *ids: int) -> np.random.Generator:
    """Independent generator for (master_seed, ids...)."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(i) for i in ids))
    return np.random.Generator(np.random.Philox(seq))


def child_seed(master_seed: int, index: int) -> int:
    """64-bit seed for child stream `index`, pure function of both arguments."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    return int(seq.generate_state(1, np.uint64)[0])
