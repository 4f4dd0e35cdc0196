"""Asymptotic (B -> infinity) rate upper bound for RAP caching with chromatic delivery.

For a user subset U of size l and a user u in U, the per-file weight is

    lambda(u, f) = (1 - p[f,u] M[u]) * prod_{k in U, k != u} p[f,k] M[k]
                                     * prod_{k not in U} (1 - p[f,k] M[k])

and rho(f, u, U) is the probability, over the requests of the users in U,
that f is the requested file with the largest weight (ties split evenly).
psi sums rho * lambda over subsets, files and members; the bound is
min(psi, m_bar), m_bar being the expected number of distinct requests.

Two ways of folding the members of a subset are offered: ``literal`` sums
over u in U, ``per-subset-max`` keeps only the largest member term. In the
homogeneous case the latter reduces to one term per subset.

Note that sum_f rho(f,u,U) * lambda(u,f) is the expected maximum weight over
the subset's requests, whatever the tie rule; the ``expectation`` and
``homogeneous`` routes evaluate that quantity through CDF products, while
``exact`` and ``monte_carlo`` go through rho explicitly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import CachingDistribution, DemandDistribution, ModelError, SystemConfig, ensure_valid

LITERAL = "literal"
PER_SUBSET_MAX = "per-subset-max"
AGGREGATIONS = (LITERAL, PER_SUBSET_MAX)

ENUMERATION_CAP = 10**6
SUBSET_MAX_USERS = 12
HOMOGENEOUS_MAX_USERS = 20
LOG_PRODUCT_USERS = 30


class BoundSizeError(ModelError):
    pass


@dataclass(frozen=True)
class BoundResult:
    psi: float
    m_bar: float

    @property
    def r_ub(self) -> float:
        return min(self.psi, self.m_bar)


def m_bar(Q: DemandDistribution) -> float:
    return float(np.sum(1.0 - np.prod(1.0 - Q.q, axis=1)))


def _product(factors: np.ndarray, axis: int) -> np.ndarray:
    """Product along ``axis``, through summed logs when many users are involved."""
    if factors.shape[axis] <= LOG_PRODUCT_USERS:
        return np.prod(factors, axis=axis)
    with np.errstate(divide="ignore"):
        logs = np.log(factors)
    return np.exp(np.sum(logs, axis=axis))


def _lambda_vector(u: int, subset: Sequence[int], x: np.ndarray) -> np.ndarray:
    """Weights of every file for 0-based user ``u`` and 0-based ``subset``; ``x = p*M``."""
    n = x.shape[1]
    inside = [k for k in subset if k != u]
    outside = [k for k in range(n) if k not in subset]
    factors = np.concatenate([1.0 - x[:, [u]], x[:, inside], 1.0 - x[:, outside]], axis=1)
    return _product(factors, axis=1)


def _scaled(P: CachingDistribution, M) -> np.ndarray:
    M = np.broadcast_to(np.asarray(M, dtype=np.float64), (P.n,))
    return P.p * M[None, :]


def lambda_term(u: int, f: int, subset: Iterable[int], P: CachingDistribution, M) -> float:
    """Weight of file ``f`` for user ``u`` in ``subset`` (all 1-indexed)."""
    users = sorted({k - 1 for k in subset})
    if u - 1 not in users:
        raise ValueError(f"user {u} is not in the subset")
    return float(_lambda_vector(u - 1, users, _scaled(P, M))[f - 1])


def _argmax_shares(lam: np.ndarray, tuples: np.ndarray, weights: np.ndarray, m: int) -> np.ndarray:
    """Credit each tuple's weight evenly to the distinct files of maximal ``lam``."""
    vals = lam[tuples]
    top = vals.max(axis=1, keepdims=True)
    at_max = np.where(vals >= top, tuples, -1)
    at_max.sort(axis=1)
    first = at_max >= 0
    first[:, 1:] &= at_max[:, 1:] != at_max[:, :-1]
    share = weights / first.sum(axis=1)
    rho = np.zeros(m)
    np.add.at(rho, at_max[first], np.broadcast_to(share[:, None], first.shape)[first])
    return rho


def rho_vector(
    u: int,
    subset: Iterable[int],
    P: CachingDistribution,
    Q: DemandDistribution,
    M,
    method: str = "exact",
    samples: int = 100_000,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """rho(f, u, subset) for every file f, as a length-m array (1-indexed arguments)."""
    users = sorted({k - 1 for k in subset})
    if u - 1 not in users:
        raise ValueError(f"user {u} is not in the subset")
    lam = _lambda_vector(u - 1, users, _scaled(P, M))
    q = Q.q[:, users]
    m, ell = q.shape
    if method == "exact":
        if m**ell > ENUMERATION_CAP:
            raise BoundSizeError(f"exact rho needs {m}^{ell} demand tuples (cap {ENUMERATION_CAP}); use monte_carlo")
        tuples = np.indices((m,) * ell).reshape(ell, -1).T
        weights = np.prod(q[tuples, np.arange(ell)], axis=1)
        keep = weights > 0
        return _argmax_shares(lam, tuples[keep], weights[keep], m)
    if method == "monte_carlo":
        rng = rng if rng is not None else np.random.default_rng(0)
        cdf = np.cumsum(q, axis=0)
        r = rng.random((samples, ell))
        tuples = np.empty((samples, ell), dtype=np.int64)
        for j in range(ell):
            tuples[:, j] = np.minimum(np.searchsorted(cdf[:, j], r[:, j], side="right"), m - 1)
        return _argmax_shares(lam, tuples, np.full(samples, 1.0 / samples), m)
    raise ValueError(f"unknown rho method {method!r}")


def rho_probability(f: int, u: int, subset: Iterable[int], P, Q, M, method: str = "exact", samples: int = 100_000,
                    rng: np.random.Generator | None = None) -> float:
    return float(rho_vector(u, subset, P, Q, M, method, samples, rng)[f - 1])


def _expected_max(lam: np.ndarray, q: np.ndarray) -> float:
    """E[max_k lam[f_k]] for independent requests f_k ~ q[:, k]."""
    order = np.argsort(lam, kind="stable")
    vals = lam[order]
    cdf = np.cumsum(q[order], axis=0)
    last = np.r_[vals[1:] != vals[:-1], True]
    G = np.prod(cdf[last], axis=1)
    return float(np.dot(vals[last], np.diff(G, prepend=0.0)))


def _psi_homogeneous(p: np.ndarray, q: np.ndarray, M: float, n: int, aggregation: str) -> float:
    x = p * M
    total = 0.0
    for ell in range(1, n + 1):
        lam = (1.0 - x) ** (n - ell + 1) * x ** (ell - 1)
        order = np.argsort(lam, kind="stable")
        vals = lam[order]
        F = np.cumsum(q[order])
        last = np.r_[vals[1:] != vals[:-1], True]
        G = np.minimum(F[last], 1.0) ** ell
        e_max = float(np.dot(vals[last], np.diff(G, prepend=0.0)))
        weight = ell if aggregation == LITERAL else 1
        total += math.comb(n, ell) * weight * e_max
    return total


def _check_aggregation(aggregation: str) -> None:
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"aggregation must be one of {AGGREGATIONS}, got {aggregation!r}")


def psi(
    P: CachingDistribution,
    Q: DemandDistribution,
    M,
    config: SystemConfig | None = None,
    method: str = "auto",
    aggregation: str = LITERAL,
    samples: int = 100_000,
    rng: np.random.Generator | None = None,
) -> float:
    """Evaluate psi.

    ``method``: ``homogeneous`` (binomial collapse over subset sizes),
    ``expectation`` (every subset, closed-form expected maximum), ``exact``
    (every subset, rho by enumerating demand tuples), ``monte_carlo`` (every
    subset, sampled rho) or ``auto`` (homogeneous when the inputs allow it,
    otherwise expectation).
    """
    _check_aggregation(aggregation)
    n = P.n
    Mv = np.broadcast_to(np.asarray(M, dtype=np.float64), (n,)).copy()
    if config is not None:
        ensure_valid(config, Q, P)
    homogeneous = P.is_homogeneous and Q.is_homogeneous and np.all(Mv == Mv[0])
    if method == "auto":
        method = "homogeneous" if homogeneous else "expectation"
    if method == "homogeneous":
        if not homogeneous:
            raise ValueError("homogeneous route needs identical columns of P, Q and identical cache sizes")
        if n > HOMOGENEOUS_MAX_USERS:
            raise BoundSizeError(f"n={n} exceeds the homogeneous cap of {HOMOGENEOUS_MAX_USERS} users")
        return _psi_homogeneous(P.p[:, 0], Q.q[:, 0], float(Mv[0]), n, aggregation)
    if n > SUBSET_MAX_USERS:
        raise BoundSizeError(
            f"n={n} exceeds the subset-enumeration cap of {SUBSET_MAX_USERS} users; "
            "use homogeneous inputs or fewer users"
        )
    x = P.p * Mv[None, :]
    rng = rng if rng is not None else np.random.default_rng(0)
    total = 0.0
    for ell in range(1, n + 1):
        for subset in itertools.combinations(range(n), ell):
            terms = []
            for u in subset:
                if method == "expectation":
                    terms.append(_expected_max(_lambda_vector(u, subset, x), Q.q[:, list(subset)]))
                elif method in ("exact", "monte_carlo"):
                    lam = _lambda_vector(u, subset, x)
                    rho = rho_vector(u + 1, [k + 1 for k in subset], P, Q, Mv, method, samples, rng)
                    terms.append(float(np.dot(rho, lam)))
                else:
                    raise ValueError(f"unknown psi method {method!r}")
            total += sum(terms) if aggregation == LITERAL else max(terms)
    return total


def rate_upper_bound(
    P: CachingDistribution,
    Q: DemandDistribution,
    M,
    config: SystemConfig | None = None,
    method: str = "auto",
    aggregation: str = LITERAL,
    **kwargs,
) -> BoundResult:
    return BoundResult(psi(P, Q, M, config, method, aggregation, **kwargs), m_bar(Q))


# ---------------------------------------------------------------- P* search


def truncated_uniform(Q: DemandDistribution, config: SystemConfig, cutoff: int) -> CachingDistribution:
    """Uniform over each user's ``cutoff`` most popular files (at least ceil(M_u) of them)."""
    p = np.zeros((config.m, config.n))
    for u in range(config.n):
        k = min(config.m, max(cutoff, math.ceil(config.M[u] - 1e-9), 1))
        top = np.lexsort((np.arange(config.m), -Q.q[:, u]))[:k]
        p[top, u] = 1.0 / k
    return CachingDistribution(p)


def project_capped_simplex(v: np.ndarray, cap: float) -> np.ndarray:
    """Euclidean projection onto {p : sum p = 1, 0 <= p <= cap}."""
    lo, hi = v.min() - cap, v.max()
    for _ in range(200):
        theta = 0.5 * (lo + hi)
        if np.clip(v - theta, 0.0, cap).sum() > 1.0:
            lo = theta
        else:
            hi = theta
    p = np.clip(v - 0.5 * (lo + hi), 0.0, cap)
    return p / p.sum()


@dataclass(frozen=True)
class OptimizedDistribution:
    P: CachingDistribution
    bound: BoundResult
    cutoff: int
    scanned: dict[int, float]


def optimize_caching_distribution(
    Q: DemandDistribution,
    config: SystemConfig,
    aggregation: str = LITERAL,
    refine: bool = False,
    tol: float = 1e-6,
    max_sweeps: int = 50,
) -> OptimizedDistribution:
    """Scan truncated-uniform distributions over every cutoff, then optionally refine.

    Refinement is coordinate descent on P: each coordinate is nudged up and
    down by a step, the column is projected back onto the capped simplex, and
    the step halves whenever a whole sweep fails to improve the bound.
    """
    _check_aggregation(aggregation)
    ensure_valid(config, Q)
    M = config.cache_sizes
    start = max(1, min(math.ceil(float(M.min()) - 1e-9), config.m))
    scanned: dict[int, float] = {}
    best = None
    for cutoff in range(start, config.m + 1):
        P = truncated_uniform(Q, config, cutoff)
        r = rate_upper_bound(P, Q, M, aggregation=aggregation).r_ub
        scanned[cutoff] = r
        if best is None or r < best[1]:
            best = (P, r, cutoff)
    P, value, cutoff = best
    if refine and value > 0:
        P, value = _coordinate_descent(P, Q, config, aggregation, value, tol, max_sweeps)
    return OptimizedDistribution(P, rate_upper_bound(P, Q, M, aggregation=aggregation), cutoff, scanned)


def _coordinate_descent(P, Q, config, aggregation, value, tol, max_sweeps):
    M = config.cache_sizes
    homogeneous = P.is_homogeneous and Q.is_homogeneous and config.is_homogeneous
    cols = [0] if homogeneous else list(range(config.n))
    p = P.p.copy()
    step = 0.5 / config.m
    for _ in range(max_sweeps):
        gain = 0.0
        for u in cols:
            cap = 1.0 / M[u] if M[u] > 0 else 1.0
            for f in range(config.m):
                for sign in (1.0, -1.0):
                    trial = p[:, u].copy()
                    trial[f] += sign * step
                    col = project_capped_simplex(trial, cap)
                    cand = p.copy()
                    if homogeneous:
                        cand[:] = col[:, None]
                    else:
                        cand[:, u] = col
                    r = rate_upper_bound(CachingDistribution(cand), Q, M, aggregation=aggregation).r_ub
                    if r < value - tol:
                        gain += value - r
                        p, value = cand, r
                        break
        if gain < tol:
            step /= 2
            if step < 1e-6 / config.m:
                break
    return CachingDistribution(p), value
