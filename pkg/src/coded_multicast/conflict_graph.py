"""Index-coding conflict graph over (requested packet, requesting user) pairs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import BinaryIO, NamedTuple

import numpy as np

from .model import DemandVector, PacketId, SystemConfig
from .placement import CachePlacement


class Vertex(NamedTuple):
    packet: PacketId
    user: int


@dataclass(frozen=True, eq=False)
class ConflictGraph:
    """Immutable conflict graph.

    ``adj`` is a dense boolean matrix for O(1) membership tests; ``indptr`` and
    ``indices`` are the same adjacency in CSR form for degree-linear neighbour
    scans. Vertices are ordered by (user, file, index).
    """

    vertices: tuple[Vertex, ...]
    adj: np.ndarray
    B: int

    def __post_init__(self):
        adj = np.array(self.adj, dtype=bool, copy=True)
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)
        rows, cols = np.nonzero(adj)
        indptr = np.zeros(len(self.vertices) + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=len(self.vertices)), out=indptr[1:])
        for name, arr in (("indptr", indptr), ("indices", cols.astype(np.int64))):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_adjacency(cls, adj) -> "ConflictGraph":
        """Wrap a plain symmetric adjacency matrix; vertex k stands for packet 1:k of user 1."""
        adj = np.asarray(adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(adj, adj.T) or adj.diagonal().any():
            raise ValueError("adjacency must be symmetric without self-loops")
        V = adj.shape[0]
        return cls(tuple(Vertex(PacketId(1, k + 1), 1) for k in range(V)), adj, max(V, 1))

    @classmethod
    def from_edges(cls, V: int, edges) -> "ConflictGraph":
        adj = np.zeros((V, V), dtype=bool)
        for i, j in edges:
            adj[i, j] = adj[j, i] = True
        return cls.from_adjacency(adj)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return int(self.indices.size // 2)

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def max_degree(self) -> int:
        return int(self.degree.max()) if len(self) else 0

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def adjacent(self, i: int, j: int) -> bool:
        return bool(self.adj[i, j])

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as 0-based ``(i, j)`` pairs with ``i < j``, lexicographically sorted."""
        i, j = np.nonzero(np.triu(self.adj, k=1))
        return list(zip(i.tolist(), j.tolist()))

    def packet_keys(self) -> np.ndarray:
        """0-based global packet number ``(file-1)*B + index-1`` of each vertex."""
        return np.array([(v.packet.file - 1) * self.B + v.packet.index - 1 for v in self.vertices], dtype=np.int64)

    def distinct_packets(self) -> int:
        return len({v.packet for v in self.vertices})


def interferes(v1: Vertex, v2: Vertex, C: CachePlacement) -> bool:
    """True when ``v1``'s packet is missing at ``v2``'s user and is a different packet."""
    return v1.packet != v2.packet and not C.has(v2.user, v1.packet)


def build(C: CachePlacement, demand: DemandVector, config: SystemConfig) -> ConflictGraph:
    vertices = []
    for u in range(1, config.n + 1):
        f = demand[u]
        missing = np.flatnonzero(~C.mask[u - 1, f - 1])
        vertices.extend(Vertex(PacketId(f, int(i) + 1), u) for i in missing)
    users = np.array([v.user - 1 for v in vertices], dtype=np.int64)
    files = np.array([v.packet.file - 1 for v in vertices], dtype=np.int64)
    idx = np.array([v.packet.index - 1 for v in vertices], dtype=np.int64)
    # has[b, a]: user of vertex b caches the packet of vertex a
    has = C.mask[users[:, None], files[None, :], idx[None, :]] if vertices else np.zeros((0, 0), bool)
    same = (files[:, None] == files[None, :]) & (idx[:, None] == idx[None, :])
    adj = (~has | ~has.T) & ~same
    return ConflictGraph(tuple(vertices), adj, config.B)


def user_sets(graph: ConflictGraph, C: CachePlacement, demand: DemandVector) -> list[frozenset[int]]:
    """For each vertex, the users that cache or request its packet."""
    out = []
    cache: dict[PacketId, frozenset[int]] = {}
    for v in graph.vertices:
        pk = v.packet
        if pk not in cache:
            holders = np.flatnonzero(C.mask[:, pk.file - 1, pk.index - 1]) + 1
            requesters = [u for u in range(1, len(demand) + 1) if demand[u] == pk.file]
            cache[pk] = frozenset(holders.tolist()) | frozenset(requesters)
        out.append(cache[pk])
    return out


def export_dimacs(graph: ConflictGraph, sink: BinaryIO) -> int:
    lines = [f"c vertex {k} = {v.user}:{v.packet.file}:{v.packet.index}" for k, v in enumerate(graph.vertices, start=1)]
    lines.append(f"p edge {len(graph)} {graph.num_edges}")
    lines.extend(f"e {i + 1} {j + 1}" for i, j in graph.edges())
    data = ("\n".join(lines) + "\n").encode("ascii")
    sink.write(data)
    return len(data)
