"""Seeded, splittable random streams.

All stochastic code takes a :class:`numpy.random.Generator`.  Streams are
built on the counter-based Philox bit generator; worker streams are derived
from ``(seed, worker)`` through :class:`numpy.random.SeedSequence` spawn keys,
so a parallel run is reproducible given the seed and the worker count.
"""

import numpy as np


def stream(seed, worker=None):
    """Return a Philox-backed generator for ``seed`` (and optionally a worker index)."""
    if worker is None:
        ss = np.random.SeedSequence(int(seed))
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=(int(worker),))
    return np.random.Generator(np.random.Philox(ss))


def split(rng, count):
    """Derive ``count`` independent child generators from ``rng``."""
    return rng.spawn(int(count))


def as_generator(rng):
    """Accept a Generator, an integer seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return stream(0)
    return stream(rng)
