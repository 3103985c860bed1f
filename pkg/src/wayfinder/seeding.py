"""Deterministic seed derivation shared by the evaluator, planner and translators.

All randomness in the engine flows from 64-bit integer seeds derived here, so
that identical configurations produce bit-identical results regardless of
process, platform or worker-pool scheduling.
"""
from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1

# Replan seeds within an episode are snapped to a multiple of this stride plus
# the replan ordinal. The stride is lcm(1..16), so `seed % len(script)` equals
# the replan ordinal for any scripted fixture with up to 16 entries: scripts
# replay in authoring order no matter which episode seed is in play, while
# stochastic translators still see distinct seeds across attempts.
REPLAN_SEED_STRIDE = 720720


def derive_seed(*parts: int | str) -> int:
    """Hash an arbitrary mix of ints and strings into a stable 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, int):
            h.update(b"i")
            h.update(str(part).encode("utf-8"))
        else:
            h.update(b"s")
            h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")


def compile_seed(episode_seed: int, replan_index: int) -> int:
    """Seed handed to the translator for the replan_index-th query of an episode."""
    base = episode_seed - (episode_seed % REPLAN_SEED_STRIDE)
    return (base + replan_index) & MASK64
