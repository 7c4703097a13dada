"""Deterministic seed fan-out.

Every source of randomness derives its own child generator from the single
run seed plus a stable label, so trees, support sets and injections stay
independent and reproducible.
"""

from __future__ import annotations

import random


def child_rng(seed: int, label: str) -> random.Random:
    # str seeding hashes the bytes, so this is stable across platforms
    return random.Random(f"{seed}:{label}")
