import numpy as np
import pytest

from coded_multicast.model import DemandVector, PacketId, SystemConfig
from coded_multicast.placement import CachePlacement

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def placement_from_sets(n, m, B, sets) -> CachePlacement:
    """``sets[u]`` lists (file, index) pairs cached by user u+1."""
    mask = np.zeros((n, m, B), dtype=bool)
    for u, pkts in enumerate(sets):
        for f, i in pkts:
            mask[u, f - 1, i - 1] = True
    return CachePlacement(mask)


@pytest.fixture
def man_instance():
    """Two users, two files (A=1, B=2) of two packets; user 1 holds A1,B1 and user 2 holds A2,B2."""
    config = SystemConfig.homogeneous(2, 2, 2, 1)
    C = placement_from_sets(2, 2, 2, [[(1, 1), (2, 1)], [(1, 2), (2, 2)]])
    return config, C, DemandVector((1, 2))


A1, A2, B1, B2 = PacketId(1, 1), PacketId(1, 2), PacketId(2, 1), PacketId(2, 2)
