from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conflict_graph import ConflictGraph


@dataclass(frozen=True, eq=False)
class Coloring:
    """Color identifier per vertex (0-based vertex index into the graph).

    Identifiers are arbitrary non-negative integers; ``renumbered`` maps them to
    a dense ``1..k`` range in ascending order of the original identifiers.
    """

    colors: np.ndarray

    def __post_init__(self):
        c = np.array(self.colors, dtype=np.int64, copy=True)
        c.setflags(write=False)
        object.__setattr__(self, "colors", c)

    def __len__(self) -> int:
        return self.colors.size

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Coloring) and np.array_equal(self.colors, other.colors)

    @property
    def palette(self) -> frozenset[int]:
        return frozenset(np.unique(self.colors).tolist())

    @property
    def num_colors(self) -> int:
        return int(np.unique(self.colors).size)

    def classes(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for i, c in enumerate(self.colors.tolist()):
            out.setdefault(c, []).append(i)
        return dict(sorted(out.items()))

    def renumbered(self) -> "Coloring":
        _, dense = np.unique(self.colors, return_inverse=True)
        return Coloring(dense.reshape(-1) + 1)

    def serialize(self) -> str:
        dense = self.renumbered().colors
        return "".join(f"{i} {c}\n" for i, c in enumerate(dense.tolist(), start=1))

    @classmethod
    def parse(cls, text: str) -> "Coloring":
        pairs = sorted(tuple(map(int, line.split())) for line in text.splitlines() if line.strip())
        if [i for i, _ in pairs] != list(range(1, len(pairs) + 1)):
            raise ValueError("coloring must list vertices 1..k exactly once")
        return cls(np.array([c for _, c in pairs], dtype=np.int64))


def conflicts(graph: ConflictGraph, coloring: Coloring) -> list[tuple[int, int]]:
    """Edges whose endpoints share a color."""
    c = coloring.colors
    return [(i, j) for i, j in graph.edges() if c[i] == c[j]]


def is_proper(graph: ConflictGraph, coloring: Coloring) -> bool:
    if len(coloring) != len(graph):
        return False
    if len(graph) == 0:
        return True
    c = coloring.colors
    if np.any(c < 0):
        return False
    same = c[:, None] == c[None, :]
    return not bool(np.any(same & graph.adj))


def check_proper(graph: ConflictGraph, coloring: Coloring, where: str = "coloring") -> None:
    assert len(coloring) == len(graph), f"{where}: {len(coloring)} colors for {len(graph)} vertices"
    assert is_proper(graph, coloring), f"{where}: improper, clashes at {conflicts(graph, coloring)[:3]}"
