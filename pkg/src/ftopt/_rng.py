"""Counter-style random streams keyed by (seed, purpose, *keys).

Each draw is derived by hashing its full key, so randomness for one purpose
(say adversary payloads) never shifts the draws for another (delays).
"""

from __future__ import annotations

import hashlib
import random

_SCALE = 1.0 / 2.0 ** 64


def key_int(seed: int, purpose: str, *keys) -> int:
    text = "|".join([str(seed), purpose, *map(str, keys)])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def uniform(seed: int, purpose: str, *keys) -> float:
    """A float in [0, 1) fixed by the key."""
    return key_int(seed, purpose, *keys) * _SCALE


def stream(seed: int, purpose: str, *keys) -> random.Random:
    return random.Random(key_int(seed, purpose, *keys))
