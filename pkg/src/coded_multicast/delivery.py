"""XOR delivery: one codeword per color class, decoded by each user from its cache."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .coloring import Coloring
from .conflict_graph import ConflictGraph, build
from .model import DemandVector, PacketId, SystemConfig
from .placement import CachePlacement

DEFAULT_PAYLOAD_BYTES = 64


class DecodeError(RuntimeError):
    def __init__(self, user: int, packet: PacketId, color: int, blocker: PacketId | None = None):
        self.user, self.packet, self.color, self.blocker = user, packet, color, blocker
        why = f"member {blocker} is not cached" if blocker else "no codeword carries it"
        super().__init__(f"user {user} cannot decode {packet} from color {color}: {why}")


@dataclass(frozen=True)
class Codeword:
    color: int
    members: tuple[PacketId, ...]
    payload: bytes

    def serialize(self) -> str:
        head = ",".join(str(p) for p in self.members)
        return f"color {self.color}: {head}\n{self.payload.hex()}\n"


def _xor(chunks) -> int:
    acc = 0
    for c in chunks:
        acc ^= int.from_bytes(c, "big")
    return acc


def encode(coloring: Coloring, graph: ConflictGraph, payloads: Mapping[PacketId, bytes]) -> list[Codeword]:
    if len(coloring) != len(graph):
        raise ValueError(f"coloring covers {len(coloring)} vertices, graph has {len(graph)}")
    lengths = {len(payloads[v.packet]) for v in graph.vertices}
    if len(lengths) > 1:
        raise ValueError(f"payloads must share one length, got {sorted(lengths)}")
    size = lengths.pop() if lengths else 0
    out = []
    for color, members in coloring.renumbered().classes().items():
        packets = tuple(sorted({graph.vertices[i].packet for i in members}))
        acc = _xor(payloads[p] for p in packets)
        out.append(Codeword(color, packets, acc.to_bytes(size, "big")))
    return out


def decode(codewords: list[Codeword], user: int, cache_payloads: Mapping[PacketId, bytes],
           requests) -> dict[PacketId, bytes]:
    """Recover each requested packet by XOR-ing out the cached members of its codeword.

    A packet wanted by several users can travel in several codewords; any one
    whose other members are all cached here will do.
    """
    wanted = set(requests)
    carriers: dict[PacketId, list[Codeword]] = {}
    for cw in codewords:
        for p in cw.members:
            if p in wanted:
                carriers.setdefault(p, []).append(cw)
    out = {}
    for p in sorted(wanted):
        if p not in carriers:
            raise DecodeError(user, p, -1)
        failure = None
        for cw in carriers[p]:
            blocker = next((o for o in cw.members if o != p and o not in cache_payloads), None)
            if blocker is not None:
                failure = failure or DecodeError(user, p, cw.color, blocker)
                continue
            acc = int.from_bytes(cw.payload, "big")
            for other in cw.members:
                if other != p:
                    acc ^= int.from_bytes(cache_payloads[other], "big")
            out[p] = acc.to_bytes(len(cw.payload), "big")
            break
        else:
            raise failure
    return out


@dataclass(frozen=True)
class RoundTripReport:
    ok: bool
    codewords: int
    user: int | None = None
    packet: PacketId | None = None
    detail: str = ""


def random_payloads(m: int, B: int, rng: np.random.Generator, size: int = DEFAULT_PAYLOAD_BYTES) -> dict[PacketId, bytes]:
    blob = rng.integers(0, 256, size=(m, B, size), dtype=np.uint8)
    return {PacketId(f + 1, i + 1): blob[f, i].tobytes() for f in range(m) for i in range(B)}


def verify_round_trip(placement: CachePlacement, demand: DemandVector, coloring: Coloring,
                      rng: np.random.Generator, size: int = DEFAULT_PAYLOAD_BYTES,
                      graph: ConflictGraph | None = None) -> RoundTripReport:
    config = SystemConfig(placement.n, placement.m, placement.B, (0.0,) * placement.n)
    graph = graph if graph is not None else build(placement, demand, config)
    payloads = random_payloads(placement.m, placement.B, rng, size)
    codewords = encode(coloring, graph, payloads)
    for u in range(1, placement.n + 1):
        cache = {p: payloads[p] for p in placement.cached(u)}
        requests = [v.packet for v in graph.vertices if v.user == u]
        try:
            got = decode(codewords, u, cache, requests)
        except DecodeError as exc:
            return RoundTripReport(False, len(codewords), u, exc.packet, str(exc))
        for p in requests:
            if got[p] != payloads[p]:
                return RoundTripReport(False, len(codewords), u, p, f"user {u} recovered wrong bytes for {p}")
    return RoundTripReport(True, len(codewords))
