"""
Named random sub-streams derived from the single experiment seed.

Every consumer asks for its own stream by name (plus optional integer coordinates such as the
round and client id), so adding a consumer or evaluating clients in parallel never shifts the
numbers another consumer sees.
"""

import zlib

import numpy as np

STREAMS = (
    "dataset",
    "partition",
    "participation",
    "attack",
    "contrastive",
    "init",
    "defense",
    "client",
)


def stream_id(name: str) -> int:
    if name not in STREAMS:
        raise ValueError(f"Unknown random stream '{name}'. Known: {', '.join(STREAMS)}")
    return zlib.crc32(name.encode("utf-8"))


def derive_rng(seed: int, name: str, *coords: int) -> np.random.Generator:
    """Generator for stream `name` at coordinates `coords` (e.g. round, client id)."""
    key = (stream_id(name), *(int(c) for c in coords))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def derive_seed(seed: int, name: str, *coords: int) -> int:
    """Integer seed for APIs that take a seed rather than a Generator."""
    key = (stream_id(name), *(int(c) for c in coords))
    return int(np.random.SeedSequence(int(seed), spawn_key=key).generate_state(1, np.uint64)[0])
