"""Counter-based random streams for order-independent parallel Monte Carlo.

Every random draw in the library flows through ``substream``: a Philox
generator keyed by the user seed and positioned by (domain, stream, channel)
counter words.  Streams built this way are statistically independent, cheap
to construct, and do not care in which order they are consumed — the property
that makes particle loops, worker pools, and nested common/idiosyncratic
noise hierarchies reproducible bit-for-bit for any execution schedule.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_SALT = 0x9E3779B97F4A7C15  # fixed key word; distinguishes this library's streams

# Domain tags: independent uses of the same user seed must never collide.
DOMAIN_SHEET = 1
DOMAIN_ENSEMBLE = 2
DOMAIN_CHAOS = 3
DOMAIN_CONTROL = 4
DOMAIN_REPLICATE = 5  # replicate-keyed ensemble noise (Monte Carlo over ensembles)


def substream(seed: int, domain: int, stream: int = 0, channel: int = 0) -> np.random.Generator:
    """Independent generator for the coordinates (seed, domain, stream, channel).

    The counter's first word is left at zero as the draw index; each stream
    therefore has 2**64 draws before any overlap, far beyond desk scale.
    """
    key = np.array([seed & _MASK64, _SALT], dtype=np.uint64)
    counter = np.array(
        [0, channel & _MASK64, stream & _MASK64, domain & _MASK64], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
