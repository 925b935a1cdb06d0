"""Seed derivation and canonical hashing."""

import hashlib
import json
from typing import Any

import numpy as np

SEED_MASK = (1 << 64) - 1


def canonical_json(data: Any) -> str:
    """Serialize JSON-compatible data with sorted keys and no whitespace."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def digest(data: Any) -> str:
    """SHA-256 hex digest of the canonical JSON form of ``data``."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def derive_seed(master_seed: int, *parts: str | int) -> int:
    """Derive a 64-bit seed from a master seed and identifying parts.

    The result depends only on the arguments, never on call order, so cells
    can be scheduled in any order or in parallel.

    Args:
        master_seed: Root seed of the experiment
        *parts: Identifiers such as dataset id, model id, repeat index

    Returns:
        Unsigned 64-bit integer seed
    """
    payload = canonical_json([master_seed, *parts]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big") & SEED_MASK


def make_rng(seed: int) -> np.random.Generator:
    """Create the toolkit's standard generator (PCG64) for a seed."""
    return np.random.Generator(np.random.PCG64(seed))
