"""Counter-based driver streams.

Every random draw in the package comes from a Philox stream whose key is
derived by SHA-256 from (master seed, stream id, replicate id).  A driver
value is therefore a pure function of those three coordinates and its index
in the stream, independent of evaluation order or thread schedule: any
subset of replicates can be generated in any order, on any worker, and the
values are bit-identical.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_key(master_seed: int, stream_id: str, replicate: int) -> np.ndarray:
    """Two uint64 key words for one named stream of one replicate."""
    payload = f"fieldclt|{master_seed}|{stream_id}|{replicate}".encode()
    digest = hashlib.sha256(payload).digest()
    return np.frombuffer(digest[:16], dtype=np.uint64)


def stream_generator(master_seed: int, stream_id: str, replicate: int) -> np.random.Generator:
    key = stream_key(master_seed, stream_id, replicate)
    return np.random.Generator(np.random.Philox(key=key))


def draw(master_seed: int, stream_id: str, replicate: int, n: int, driver: str) -> np.ndarray:
    """The first n values of a named driver stream, as float64."""
    gen = stream_generator(master_seed, stream_id, replicate)
    if driver == "gaussian":
        return gen.standard_normal(n)
    if driver == "rademacher":
        return gen.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0
    raise ValueError(f"unknown driver {driver!r}")
