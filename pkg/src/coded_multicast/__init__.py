"""Coded multicasting for shared-link caching networks.

RAP cache placement, index-coding conflict graphs, GCC and GRASP coloring
delivery, XOR encoding and decoding, the asymptotic rate bound, and a Monte
Carlo rate simulator.
"""

from .bound import BoundResult, optimize_caching_distribution, rate_upper_bound
from .coloring import Coloring, is_proper
from .conflict_graph import ConflictGraph, Vertex, build, export_dimacs, user_sets
from .delivery import decode, encode, verify_round_trip
from .gcc import gcc, gcc1, gcc2
from .grasp import GraspParams, grasp
from .model import (
    CachingDistribution,
    DemandDistribution,
    DemandVector,
    PacketId,
    RateSample,
    SystemConfig,
    sample_demand,
    validate,
    zipf_distribution,
)
from .oracle import chromatic_number
from .placement import CachePlacement, lfu_place, rap_place

__version__ = "0.1.0"
