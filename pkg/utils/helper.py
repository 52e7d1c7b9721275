""" Small helpers shared across the toolkit.

This module provides boolean parsing for environment flags, seed derivation for
per-trial randomness and stable fingerprints of configuration payloads.
"""
import json
from typing import Any

import xxhash

SEED_MASK = 0xFFFF_FFFF_FFFF_FFFF


def str_to_bool(val: str | bool | None) -> bool:
    """
    Convert a string to a boolean, or return the boolean if already provided.

    Accepts string values: 'true', 't', 'yes', '1' → True;
    'false', 'f', 'no', '0' → False.

    Args:
        val (str): The value to convert to a boolean.

    Returns:
        bool: The converted boolean value.

    Raises:
        ValueError: If the value cannot be interpreted as a boolean.
    """
    if isinstance(val, bool):
        return val
    if val is None:
        return False
    val = val.strip().lower()
    if val in ("true", "t", "yes", "1"):
        return True
    if val in ("false", "f", "no", "0"):
        return False
    raise ValueError(f"Invalid boolean value: {val}")


def trial_seed(seed: int, trial_index: int) -> int:
    """
    Derive the seed of one experiment trial as seed XOR trial_index.

    Args:
        seed (int): The experiment seed.
        trial_index (int): Zero-based trial index.

    Returns:
        int: A 64-bit unsigned seed.
    """
    return (seed ^ trial_index) & SEED_MASK


def labelled_seed(seed: int, label: str) -> int:
    """Derive a 64-bit child seed from a parent seed and a text label with xxhash."""
    return xxhash.xxh64_intdigest(f"{seed & SEED_MASK}:{label}")


def fingerprint(payload: Any) -> str:
    """
    Stable short hash of a JSON-serialisable payload.

    Args:
        payload (Any): Data to hash; keys are sorted before hashing.

    Returns:
        str: Hex digest identifying the payload.
    """
    return xxhash.xxh64(json.dumps(payload, sort_keys=True, default=str)).hexdigest()
