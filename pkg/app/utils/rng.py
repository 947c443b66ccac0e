"""Seeded, splittable random generators.

All randomness goes through Philox, a counter-based bit generator, keyed by a
SeedSequence. A stream is addressed by (seed, *spawn_key), so chunk i of a Monte
Carlo run draws the same numbers whichever worker executes it.
"""
import os
from typing import Iterator, List, Tuple

import numpy as np
from dotenv import load_dotenv

load_dotenv()

DEFAULT_CHUNK_SIZE = int(os.getenv("UNIDIOPH_MC_CHUNK", "4096"))
SEED_MODULUS = 2**128


def make_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    """Generator for the stream (seed, spawn_key); negative seeds wrap modulo 2**128"""
    sequence = np.random.SeedSequence(entropy=int(seed) % SEED_MODULUS, spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.Philox(sequence))


def chunk_plan(n_samples: int, chunk_size: int = DEFAULT_CHUNK_SIZE) -> List[Tuple[int, int]]:
    """Split n_samples into (chunk_index, size) pairs of at most chunk_size"""
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive")
    plan = []
    index, remaining = 0, n_samples
    while remaining > 0:
        size = min(chunk_size, remaining)
        plan.append((index, size))
        remaining -= size
        index += 1
    return plan


def iter_chunk_rngs(seed: int, n_samples: int, chunk_size: int = DEFAULT_CHUNK_SIZE) -> Iterator[Tuple[np.random.Generator, int]]:
    for index, size in chunk_plan(n_samples, chunk_size):
        yield make_rng(seed, index), size


def standard_complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Independent standard complex Gaussians (E|z|² = 1)"""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
