"""Seed-derived random streams.

Every random draw in the package comes from a Philox (counter-based) generator
keyed by ``(seed, *keys)``. Two calls with the same key tuple see the same
stream no matter what else has run, which keeps experiments independent of
execution order and worker count.
"""
import numpy as np

UINT64_MAX = 2**64 - 1


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= UINT64_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(seed, *keys):
    """Return a Philox generator for the key tuple ``(seed, *keys)``."""
    entropy = [check_seed(seed)] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed, *keys):
    """Derive a child uint64 seed from ``(seed, *keys)``."""
    entropy = [check_seed(seed)] + [int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
