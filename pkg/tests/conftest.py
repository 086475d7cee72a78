import numpy as np
import pytest

from bnskel.fixtures import BINARY, four_node_network
from bnskel.network import CategoricalNetwork, Node


def four_node(cpts=None) -> CategoricalNetwork:
    """1 -> 2, 2 -> 4, 3 -> 4 (0-based: 0 -> 1, 1 -> 3, 2 -> 3)."""
    if cpts is None:
        return four_node_network()
    nodes = [Node(f"X{i}", BINARY) for i in range(1, 5)]
    return CategoricalNetwork(nodes, [(), (0,), (), (1, 2)], cpts)


def edgeless(n=3, m=2) -> CategoricalNetwork:
    nodes = [Node(f"X{i + 1}", tuple(str(j) for j in range(m))) for i in range(n)]
    return CategoricalNetwork(nodes, [()] * n, [np.full((1, m), 1.0 / m)] * n)


def chain3() -> CategoricalNetwork:
    nodes = [Node(f"X{i + 1}", BINARY) for i in range(3)]
    row = np.array([[0.5, 0.5]])
    cond = np.array([[0.8, 0.2], [0.3, 0.7]])
    return CategoricalNetwork(nodes, [(), (0,), (1,)], [row, cond, cond])


@pytest.fixture
def net4():
    return four_node()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
