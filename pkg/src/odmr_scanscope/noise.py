"""Counter-based deterministic noise streams.

Every random draw is addressed, not sequenced: draw i of a spectrum at
commanded tip position (x, y) comes from a Philox generator whose 256-bit
counter encodes (channel, i, bits(x), bits(y)) and whose key is derived
from the user seed. Consequences:

* identical (seed, position, index) always reproduces the same draw,
  regardless of evaluation order or threading;
* a 1x1 scan placed at a pixel's commanded position reproduces that pixel
  of a full scan bit-exactly.

Channel 0 carries photon shot noise, channel 1 the per-pixel positioning
jitter, so the two never alias.
"""

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .errors import DomainError

_MASK64 = (1 << 64) - 1
PHOTON_CHANNEL = 0
JITTER_CHANNEL = 1


@dataclass(frozen=True)
class NoiseSpec:
    """Photon-counting noise configuration."""

    enabled: bool = True
    rng_seed: int = 0
    photon_rate_scale: float = 1.0  # detector efficiency folds in here

    def __post_init__(self):
        if not (0 <= int(self.rng_seed) <= _MASK64):
            raise DomainError(f"rng_seed must fit in 64 bits, got {self.rng_seed}")
        if not (np.isfinite(self.photon_rate_scale) and self.photon_rate_scale > 0.0):
            raise DomainError(
                f"photon_rate_scale must be > 0, got {self.photon_rate_scale}")


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def position_words(x: float, y: float) -> tuple[int, int]:
    """The two counter words identifying a commanded tip position."""
    sx = int(np.float64(x).view(np.uint64))
    sy = int(np.float64(y).view(np.uint64))
    return sx, sy


def _generator(seed: int, stream: tuple[int, int], channel: int, index: int) -> Generator:
    key = (seed & _MASK64, _splitmix64(seed))
    counter = [0, ((channel & 0xFF) << 56) | (index & ((1 << 56) - 1)),
               stream[0], stream[1]]
    return Generator(Philox(counter=counter, key=key))


def poisson_counts(means, seed: int, stream: tuple[int, int]) -> np.ndarray:
    """One Poisson draw per point; draw i is addressed by (seed, stream, i)."""
    means = np.asarray(means, dtype=np.float64)
    if np.any(~np.isfinite(means)) or np.any(means < 0.0):
        raise DomainError("Poisson means must be finite and >= 0")
    out = np.empty(means.shape[0], dtype=np.float64)
    for i, mu in enumerate(means):
        out[i] = _generator(seed, stream, PHOTON_CHANNEL, i).poisson(mu)
    return out


def jitter_displacement(rms: float, seed: int, stream: tuple[int, int]) -> tuple[float, float]:
    """Lateral Gaussian positioning error for the pixel at ``stream``."""
    if rms == 0.0:
        return 0.0, 0.0
    g = _generator(seed, stream, JITTER_CHANNEL, 0).normal(size=2)
    return rms * float(g[0]), rms * float(g[1])
