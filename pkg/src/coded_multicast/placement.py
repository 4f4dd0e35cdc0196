"""Cache placement: random popularity-based (RAP) caching and the LFU steady state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    CachingDistribution,
    DemandDistribution,
    ModelError,
    PacketId,
    SystemConfig,
    ensure_valid,
)


@dataclass(frozen=True, eq=False)
class CachePlacement:
    """Per-user cached packets as a boolean tensor ``mask[user, file, index]`` (0-based)."""

    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool, copy=True)
        if mask.ndim != 3:
            raise ModelError("placement mask must have shape (n, m, B)")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def n(self) -> int:
        return self.mask.shape[0]

    @property
    def m(self) -> int:
        return self.mask.shape[1]

    @property
    def B(self) -> int:
        return self.mask.shape[2]

    def cached(self, u: int) -> frozenset[PacketId]:
        fs, idx = np.nonzero(self.mask[u - 1])
        return frozenset(PacketId(int(f) + 1, int(i) + 1) for f, i in zip(fs, idx))

    def has(self, u: int, packet: PacketId) -> bool:
        return bool(self.mask[u - 1, packet.file - 1, packet.index - 1])

    def count(self, u: int) -> int:
        return int(self.mask[u - 1].sum())

    def file_counts(self) -> np.ndarray:
        """``(m, n)`` array of cached packet counts per file and user."""
        return self.mask.sum(axis=2).T

    def with_packet(self, u: int, packet: PacketId) -> "CachePlacement":
        mask = self.mask.copy()
        mask[u - 1, packet.file - 1, packet.index - 1] = True
        return CachePlacement(mask)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CachePlacement) and np.array_equal(self.mask, other.mask)

    def serialize(self) -> str:
        lines = []
        for u in range(1, self.n + 1):
            fs, idx = np.nonzero(self.mask[u - 1])
            lines.append(" ".join(f"{f + 1}:{i + 1}" for f, i in zip(fs, idx)))
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str, m: int, B: int) -> "CachePlacement":
        rows = text.split("\n")
        if rows and rows[-1] == "":
            rows.pop()
        mask = np.zeros((len(rows), m, B), dtype=bool)
        for u, row in enumerate(rows):
            for tok in row.split():
                pk = PacketId.parse(tok)
                mask[u, pk.file - 1, pk.index - 1] = True
        return cls(mask)


def rap_counts(config: SystemConfig, P: CachingDistribution) -> np.ndarray:
    """Per-(file, user) packet counts: floors of ``p M B`` topped up by largest remainder."""
    target = P.p * config.cache_sizes[None, :] * config.B
    base = np.floor(target + 1e-9).astype(np.int64)
    frac = np.clip(target - base, 0.0, None)
    counts = base.copy()
    for u in range(config.n):
        short = config.packet_budget(u + 1) - int(base[:, u].sum())
        if short > 0:
            # largest remainder first, smaller file index on ties
            order = np.lexsort((np.arange(config.m), -frac[:, u]))
            counts[order[:short], u] += 1
        elif short < 0:
            raise ModelError(f"per-file counts of user {u + 1} exceed its packet budget")
    over = np.argwhere(counts > config.B)
    if over.size:
        f, u = over[0]
        raise ModelError(f"placement infeasible: {counts[f, u]} packets of file {f + 1} for user {u + 1} exceed B={config.B}")
    return counts


def rap_place(config: SystemConfig, P: CachingDistribution, rng: np.random.Generator) -> CachePlacement:
    """Each user independently caches a uniformly random subset of each file's packets."""
    ensure_valid(config, P=P)
    counts = rap_counts(config, P)
    mask = np.zeros((config.n, config.m, config.B), dtype=bool)
    for u in range(config.n):
        keys = rng.random((config.m, config.B))
        ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
        mask[u] = ranks < counts[:, u, None]
    return CachePlacement(mask)


def lfu_files(config: SystemConfig, Q: DemandDistribution, u: int) -> np.ndarray:
    """0-based indices of the files user ``u`` keeps under LFU, most popular first."""
    k = int(np.floor(config.M[u - 1] + 1e-9))
    q = Q.column(u)
    order = np.lexsort((np.arange(config.m), -q))
    return order[:k]


def lfu_place(config: SystemConfig, Q: DemandDistribution) -> CachePlacement:
    ensure_valid(config, Q)
    mask = np.zeros((config.n, config.m, config.B), dtype=bool)
    for u in range(config.n):
        mask[u, lfu_files(config, Q, u + 1), :] = True
    return CachePlacement(mask)
