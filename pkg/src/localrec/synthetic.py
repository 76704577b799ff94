"""Synthetic implicit-feedback logs with planted disjoint-preference blocks.

Users are split into equally sized groups, each preferring its own disjoint
item block. Within a block, item popularity decays geometrically; by default
alternating users follow the reversed profile, so each block carries two
opposed taste directions that a single global item-item model has to average
over. A small noise fraction of each user's interactions comes from the other
blocks. Timestamps are a random per-user ordering, which makes the data
suitable for timestamp leave-k-out splits.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .data import Interaction, InteractionLog
from .errors import ConfigError


def generate_blocked_log(
    n_users: int = 200,
    n_items: int = 100,
    n_blocks: int = 2,
    interactions_per_user: tuple[int, int] = (12, 24),
    noise: float = 0.05,
    popularity_decay: float = 0.9,
    opposed_profiles: bool = True,
    seed: int = 0,
) -> InteractionLog:
    """Sample an interaction log with ``n_blocks`` planted sub-communities."""
    if n_blocks < 1 or n_users < n_blocks or n_items < n_blocks:
        raise ConfigError(f"cannot split {n_users} users / {n_items} items into {n_blocks} blocks")
    if not 0 <= noise < 1:
        raise ConfigError(f"noise must be in [0, 1), got {noise}")
    lo, hi = interactions_per_user
    if not 1 <= lo <= hi:
        raise ConfigError(f"bad interactions_per_user range {interactions_per_user}")

    rng = np.random.default_rng(seed)
    item_blocks = np.array_split(np.arange(n_items), n_blocks)
    user_block = np.repeat(np.arange(n_blocks), -(-n_users // n_blocks))[:n_users]

    records: list[Interaction] = []
    for u in range(n_users):
        own = int(user_block[u])
        block = item_blocks[own]
        profile = popularity_decay ** np.arange(len(block))
        if opposed_profiles and u % 2 == 1:
            profile = profile[::-1]
        profile = profile / profile.sum()

        count = int(rng.integers(lo, hi + 1))
        n_noise = int(rng.binomial(count, noise))
        n_own = min(count - n_noise, len(block))

        items = list(rng.choice(block, size=n_own, replace=False, p=profile))
        other_pool = np.concatenate([b for blk, b in enumerate(item_blocks) if blk != own])
        if n_noise > 0 and len(other_pool) > 0:
            items.extend(rng.choice(other_pool, size=min(n_noise, len(other_pool)), replace=False))

        for ts, item in zip(rng.permutation(len(items)), items):
            records.append(Interaction(f"u{u}", f"i{int(item)}", None, int(ts)))
    return InteractionLog(records)


def write_interactions_csv(log: InteractionLog, path: str | Path) -> None:
    """Dump a log as user,item,timestamp rows (no header)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for rec in log.records:
            writer.writerow([rec.user, rec.item, rec.timestamp])
