"""Small hand-built networks used by the tests, the CLI, and the docs.

Binary nodes use levels ``("True", "False")`` so that effects coding maps
True to ``+1`` and False to ``-1``.
"""

from __future__ import annotations

import numpy as np

from .network import CategoricalNetwork, Node

BINARY = ("True", "False")


def _binary_row(p_true: float) -> list[float]:
    return [p_true, 1.0 - p_true]


def four_node_network(agree: float = 0.7, slope: float = 0.2) -> CategoricalNetwork:
    """The four-node binary network ``1 -> 2 -> 4 <- 3``.

    ``X1`` and ``X3`` are fair coins, ``X2`` copies ``X1`` with probability
    ``agree``, and ``P(X4 = True | x2, x3) = 0.5 + slope * (e(x2) + e(x3))``
    with ``e`` the +-1 effects code. Under effects coding this gives
    ``E[e1 e2] = 2 agree - 1`` and ``E[e2 e4] = E[e3 e4] = 2 slope``.

    The CPT is only valid for ``|slope| <= 0.25``; larger values raise
    :class:`~bnskel.errors.ValidationError` at construction.
    """
    nodes = [Node(f"X{i}", BINARY) for i in range(1, 5)]
    parents = [(), (0,), (), (1, 2)]
    x4 = []
    for e2 in (1, -1):
        for e3 in (1, -1):
            x4.append(_binary_row(0.5 + slope * (e2 + e3)))
    cpts = [
        np.array([_binary_row(0.5)]),
        np.array([_binary_row(agree), _binary_row(1.0 - agree)]),
        np.array([_binary_row(0.5)]),
        np.array(x4),
    ]
    return CategoricalNetwork(nodes, parents, cpts)


def chain_network(p1: float = 0.6, p_tt: float = 0.7, p_ft: float = 0.2) -> CategoricalNetwork:
    """Two-node chain ``X1 -> X2`` with ``P(X1=T)=p1``, ``P(X2=T|X1=T)=p_tt``, ``P(X2=T|X1=F)=p_ft``."""
    nodes = [Node("X1", BINARY), Node("X2", BINARY)]
    cpts = [np.array([_binary_row(p1)]), np.array([_binary_row(p_tt), _binary_row(p_ft)])]
    return CategoricalNetwork(nodes, [(), (0,)], cpts)


def binary_chain(n: int = 4, agree: float = 0.85) -> CategoricalNetwork:
    """``X1 -> X2 -> ... -> Xn``, each node copying its parent with probability ``agree``."""
    nodes = [Node(f"X{i + 1}", BINARY) for i in range(n)]
    parents = [()] + [(i,) for i in range(n - 1)]
    cpts = [np.array([_binary_row(0.5)])]
    cpts += [np.array([_binary_row(agree), _binary_row(1 - agree)]) for _ in range(n - 1)]
    return CategoricalNetwork(nodes, parents, cpts)


def moment_matrix(p: float, q: float) -> np.ndarray:
    """Second-moment matrix of the four-node network written in terms of ``p`` and ``q``."""
    return np.array(
        [
            [1.0, p, 0.0, q],
            [p, 1.0, 0.0, p],
            [0.0, 0.0, 1.0, p],
            [q, p, p, 1.0],
        ]
    )


NAMED = {
    "four-node": four_node_network,
    "chain": chain_network,
    "binary-chain": binary_chain,
}
