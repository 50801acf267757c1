"""Counter-based random streams.

Every stream is a Philox generator keyed by (seed, index). Two streams with
the same key always produce the same draws, independently of how many other
streams were created before them or on which worker they run. Monte Carlo
code maps trial blocks onto stream indices so the (seed, trial index) to
sample mapping survives any chunking or parallel split.
"""

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1

# trials per Monte Carlo block; fixes the (seed, trial) -> stream mapping
TRIALS_PER_BLOCK = 1 << 16


@dataclass(frozen=True)
class RngStream:
    seed: int
    index: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.index < 0:
            raise ValueError("seed and stream index must be nonnegative")

    def generator(self) -> np.random.Generator:
        """Return a fresh generator positioned at the start of this stream."""
        key = np.array([self.index & _MASK64, self.seed & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, index)


def trial_blocks(trials: int, block_size: int = TRIALS_PER_BLOCK):
    """
    Yield (block index, first trial, trial count) covering range(trials).

    Block b always starts at trial b*block_size, so a block's stream index is
    a pure function of the trial indices it holds.
    """
    for block, start in enumerate(range(0, trials, block_size)):
        yield block, start, min(block_size, trials - start)
