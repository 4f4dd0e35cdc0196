"""Problem description for a shared-link caching network.

Files, packets and users are 1-indexed everywhere they leave this package.
Distributions are stored as ``(m, n)`` float64 arrays indexed ``[file - 1, user - 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

ROW_SUM_TOL = 1e-12


class ModelError(ValueError):
    """Raised when a configuration or distribution violates the model constraints."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SystemConfig:
    n: int
    m: int
    B: int
    M: tuple[float, ...]

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.B < 1:
            raise ModelError(f"n, m, B must be positive (got n={self.n}, m={self.m}, B={self.B})")
        M = tuple(float(x) for x in self.M)
        object.__setattr__(self, "M", M)
        if len(M) != self.n:
            raise ModelError(f"need one cache size per user: len(M)={len(M)}, n={self.n}")
        for u, mu in enumerate(M, start=1):
            if not 0.0 <= mu <= self.m:
                raise ModelError(f"cache size of user {u} is {mu}, outside [0, {self.m}]")

    @classmethod
    def homogeneous(cls, n: int, m: int, B: int, M: float) -> "SystemConfig":
        return cls(n=n, m=m, B=B, M=(float(M),) * n)

    @property
    def cache_sizes(self) -> np.ndarray:
        return np.asarray(self.M, dtype=np.float64)

    def packet_budget(self, u: int) -> int:
        """Packets user ``u`` (1-indexed) can hold; a fraction of a packet is dropped."""
        return int(np.floor(self.M[u - 1] * self.B + 1e-9))

    @property
    def is_homogeneous(self) -> bool:
        return len(set(self.M)) == 1


@dataclass(frozen=True, eq=False)
class DemandDistribution:
    q: np.ndarray

    def __post_init__(self):
        q = _frozen(self.q)
        if q.ndim != 2:
            raise ModelError("demand matrix must be 2-D (files x users)")
        object.__setattr__(self, "q", q)

    @property
    def m(self) -> int:
        return self.q.shape[0]

    @property
    def n(self) -> int:
        return self.q.shape[1]

    def column(self, u: int) -> np.ndarray:
        return self.q[:, u - 1]

    @property
    def is_homogeneous(self) -> bool:
        return bool(np.all(self.q == self.q[:, :1]))


@dataclass(frozen=True, eq=False)
class CachingDistribution:
    p: np.ndarray

    def __post_init__(self):
        p = _frozen(self.p)
        if p.ndim != 2:
            raise ModelError("caching matrix must be 2-D (files x users)")
        object.__setattr__(self, "p", p)

    @property
    def m(self) -> int:
        return self.p.shape[0]

    @property
    def n(self) -> int:
        return self.p.shape[1]

    @classmethod
    def uniform(cls, m: int, n: int) -> "CachingDistribution":
        return cls(np.full((m, n), 1.0 / m))

    @classmethod
    def from_column(cls, p: Sequence[float], n: int) -> "CachingDistribution":
        col = np.asarray(p, dtype=np.float64).reshape(-1, 1)
        return cls(np.repeat(col, n, axis=1))

    @property
    def is_homogeneous(self) -> bool:
        return bool(np.all(self.p == self.p[:, :1]))


@dataclass(frozen=True)
class DemandVector:
    files: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "files", tuple(int(f) for f in self.files))

    def __len__(self) -> int:
        return len(self.files)

    def __getitem__(self, u: int) -> int:
        """File requested by user ``u`` (1-indexed)."""
        return self.files[u - 1]

    def distinct(self) -> set[int]:
        return set(self.files)


class PacketId(NamedTuple):
    file: int
    index: int

    def __str__(self) -> str:
        return f"{self.file}:{self.index}"

    @classmethod
    def parse(cls, token: str) -> "PacketId":
        f, i = token.split(":")
        return cls(int(f), int(i))


@dataclass(frozen=True)
class RateSample:
    colors: int
    B: int
    scheme: str

    @property
    def rate(self) -> float:
        return self.colors / self.B


def zipf_distribution(m: int, alpha: float | Sequence[float], n: int = 1) -> DemandDistribution:
    """Zipf popularity ``q_f ∝ f^-alpha``.

    ``alpha`` may be a scalar (every user shares the same popularity) or one
    exponent per user.
    """
    if m < 1:
        raise ModelError(f"file count must be positive, got {m}")
    alphas = np.broadcast_to(np.asarray(alpha, dtype=np.float64), (n,))
    if np.any(alphas < 0):
        raise ModelError("Zipf exponent must be non-negative")
    ranks = np.arange(1, m + 1, dtype=np.float64)
    w = ranks[:, None] ** (-alphas[None, :])
    return DemandDistribution(w / w.sum(axis=0, keepdims=True))


def sample_demand(Q: DemandDistribution, rng: np.random.Generator) -> DemandVector:
    cdf = np.cumsum(Q.q, axis=0)
    r = rng.random(Q.n)
    files = [min(int(np.searchsorted(cdf[:, u], r[u], side="right")), Q.m - 1) + 1 for u in range(Q.n)]
    # searchsorted can land on a zero-probability file when r equals a cdf step exactly
    for u, f in enumerate(files):
        while Q.q[f - 1, u] == 0.0 and f > 1:
            f -= 1
        files[u] = f
    return DemandVector(tuple(files))


def validate(
    config: SystemConfig, Q: DemandDistribution | None = None, P: CachingDistribution | None = None
) -> str | None:
    """Return a diagnostic for the first violated constraint, or None when all hold."""
    if Q is not None:
        problem = _check_demand(config, Q)
        if problem is not None:
            return problem
    if P is None:
        return None
    return _check_caching(config, P)


def _check_demand(config: SystemConfig, Q: DemandDistribution) -> str | None:
    if Q.q.shape != (config.m, config.n):
        return f"demand matrix has shape {Q.q.shape}, expected ({config.m}, {config.n})"
    for u in range(config.n):
        col = Q.q[:, u]
        bad = np.flatnonzero((col < 0) | (col > 1))
        if bad.size:
            return f"demand probability out of [0,1] at ({bad[0] + 1},{u + 1})"
        if abs(col.sum() - 1.0) > ROW_SUM_TOL:
            return f"demand probabilities of user {u + 1} sum to {col.sum():.15g}, not 1"
    return None


def _check_caching(config: SystemConfig, P: CachingDistribution) -> str | None:
    if P.p.shape != (config.m, config.n):
        return f"caching matrix has shape {P.p.shape}, expected ({config.m}, {config.n})"
    M = config.cache_sizes
    for u in range(config.n):
        col = P.p[:, u]
        bad = np.flatnonzero(col < 0)
        if bad.size:
            return f"caching probability negative at ({bad[0] + 1},{u + 1})"
        if abs(col.sum() - 1.0) > ROW_SUM_TOL:
            return f"caching probabilities of user {u + 1} sum to {col.sum():.15g}, not 1"
        bad = np.flatnonzero(M[u] * col > 1.0 + ROW_SUM_TOL)
        if bad.size:
            return f"M·p exceeds 1 at ({bad[0] + 1},{u + 1})"
    return None


def ensure_valid(
    config: SystemConfig, Q: DemandDistribution | None = None, P: CachingDistribution | None = None
) -> None:
    problem = validate(config, Q, P)
    if problem is not None:
        raise ModelError(problem)
