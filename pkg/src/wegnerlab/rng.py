"""Counter-based uniform streams.

Draws for Monte Carlo sample ``sample_index`` come from a Philox generator
keyed by ``(seed, sample_index)``; the site ``n`` (flattened, C order) reads
counter position ``n``.  A sample is therefore reproducible on its own,
independently of which other samples are drawn or in what order.
"""
import numpy as np

U64 = 2**64


def site_uniforms(seed: int, sample_index: int, n_sites: int) -> np.ndarray:
    if not (0 <= seed < U64 and 0 <= sample_index < U64):
        raise ValueError("seed and sample_index must be unsigned 64-bit integers")
    key = np.array([seed, sample_index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.random(n_sites)
