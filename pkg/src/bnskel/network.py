"""Discrete Bayesian networks: structure, CPTs, generation and JSON I/O.

Nodes are addressed by 0-based index everywhere in the API. A node's CPT is a
``(prod(m_parents), m)`` array whose row index is the mixed-radix encoding of
the parent levels in the node's declared parent order, last parent varying
fastest (``numpy.ravel_multi_index`` order).
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CyclicGraph, InvalidRange, ParseError, ValidationError

ROW_SUM_TOL = 1e-12

Parents = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Node:
    name: str
    levels: tuple[str, ...]

    @property
    def m(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class Skeleton:
    """Undirected graph on ``n`` nodes; edges are sorted index pairs."""

    n: int
    edges: frozenset[tuple[int, int]]

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Skeleton":
        edges = set()
        for i, j in pairs:
            if i == j:
                raise ValidationError(f"self-loop on node {i}")
            edges.add((min(i, j), max(i, j)))
        return cls(n, frozenset(edges))

    def neighbors(self, r: int) -> set[int]:
        return {j if i == r else i for i, j in self.edges if r in (i, j)}

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        pairs = sorted(self.edges)
        if names is not None:
            return {"n": self.n, "edges": [[names[i], names[j]] for i, j in pairs]}
        return {"n": self.n, "edges": [list(p) for p in pairs]}


class CategoricalNetwork:
    """A DAG over categorical nodes with one conditional probability table per node.

    Instances are immutable: CPT arrays are stored read-only and validated
    once at construction.
    """

    def __init__(
        self,
        nodes: Sequence[Node],
        parents: Sequence[Sequence[int]],
        cpts: Sequence[np.ndarray],
    ):
        self.nodes: tuple[Node, ...] = tuple(nodes)
        self.parents: Parents = tuple(tuple(int(i) for i in p) for p in parents)
        tables = []
        for cpt in cpts:
            arr = np.array(cpt, dtype=np.float64)
            arr.setflags(write=False)
            tables.append(arr)
        self.cpts: tuple[np.ndarray, ...] = tuple(tables)
        self._validate()
        self._order = tuple(topological_order(self.parents))

    def _validate(self) -> None:
        n = len(self.nodes)
        if len(self.parents) != n or len(self.cpts) != n:
            raise ValidationError("nodes, parents and cpts must have equal length")
        names = [node.name for node in self.nodes]
        if len(set(names)) != n:
            raise ValidationError("node names must be unique")
        for node in self.nodes:
            if node.m < 2:
                raise ValidationError(f"node {node.name!r} needs at least 2 levels")
            if len(set(node.levels)) != node.m:
                raise ValidationError(f"level labels of {node.name!r} must be unique")
        for r, (pa, cpt) in enumerate(zip(self.parents, self.cpts)):
            name = self.nodes[r].name
            if len(set(pa)) != len(pa) or any(not 0 <= i < n or i == r for i in pa):
                raise ValidationError(f"invalid parent list for {name!r}: {pa}")
            rows = int(np.prod([self.nodes[i].m for i in pa], dtype=np.int64))
            if cpt.shape != (rows, self.nodes[r].m):
                raise ValidationError(
                    f"cpt shape of {name!r} is {cpt.shape}, expected {(rows, self.nodes[r].m)}"
                )
            if not np.all(np.isfinite(cpt)) or np.any(cpt < 0):
                raise ValidationError(f"cpt of {name!r} has a negative or non-finite entry")
            sums = cpt.sum(axis=1)
            bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
            if bad.size:
                raise ValidationError(
                    f"cpt row sum of {name!r} row {int(bad[0])} is {sums[bad[0]]!r}, expected 1"
                )
        topological_order(self.parents)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def names(self) -> list[str]:
        return [node.name for node in self.nodes]

    @property
    def level_counts(self) -> list[int]:
        return [node.m for node in self.nodes]

    @property
    def order(self) -> tuple[int, ...]:
        return self._order

    def index(self, name: str) -> int:
        for i, node in enumerate(self.nodes):
            if node.name == name:
                return i
        raise KeyError(name)

    def children(self, r: int) -> set[int]:
        return {j for j, pa in enumerate(self.parents) if r in pa}

    def edges(self) -> list[tuple[int, int]]:
        return sorted((i, j) for j, pa in enumerate(self.parents) for i in pa)

    def neighbors(self, r: int) -> set[int]:
        return set(self.parents[r]) | self.children(r)

    def parent_config_index(self, r: int, levels: np.ndarray) -> np.ndarray:
        """Row index into ``cpts[r]`` for each row of a level matrix (N x n)."""
        pa = self.parents[r]
        if not pa:
            return np.zeros(levels.shape[0], dtype=np.intp)
        dims = tuple(self.nodes[i].m for i in pa)
        return np.ravel_multi_index(tuple(levels[:, i] for i in pa), dims)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CategoricalNetwork):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.parents == other.parents
            and all(np.array_equal(a, b) for a, b in zip(self.cpts, other.cpts))
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"CategoricalNetwork(n={self.n}, edges={len(self.edges())})"


def topological_order(parents: Sequence[Sequence[int]]) -> list[int]:
    """Kahn's algorithm, breaking ties by smallest index."""
    n = len(parents)
    indegree = [len(p) for p in parents]
    children: list[list[int]] = [[] for _ in range(n)]
    for j, pa in enumerate(parents):
        for i in pa:
            children[i].append(j)
    heap = [r for r in range(n) if indegree[r] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in children[u]:
            indegree[v] -= 1
            if indegree[v] == 0:
                heapq.heappush(heap, v)
    if len(order) != n:
        raise CyclicGraph("parent relation contains a directed cycle")
    return order


def random_dag(n: int, edge_prob: float = 0.5, rng_seed: int = 0) -> Parents:
    """Random DAG: uniform causal order, each earlier node is a parent w.p. ``edge_prob``."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not 0.0 <= edge_prob <= 1.0:
        raise InvalidRange("edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(n)
    coins = rng.random((n, n))
    parents: list[list[int]] = [[] for _ in range(n)]
    for b in range(n):
        for a in range(b):
            if coins[a, b] < edge_prob:
                parents[order[b]].append(int(order[a]))
    return tuple(tuple(sorted(p)) for p in parents)


def _descendants(parents: Sequence[Sequence[int]]) -> list[int]:
    # bitset of strict descendants per node
    order = topological_order(parents)
    children: list[list[int]] = [[] for _ in parents]
    for j, pa in enumerate(parents):
        for i in pa:
            children[i].append(j)
    desc = [0] * len(parents)
    for u in reversed(order):
        bits = 0
        for v in children[u]:
            bits |= (1 << v) | desc[v]
        desc[u] = bits
    return desc


def transitive_reduction(parents: Sequence[Sequence[int]]) -> Parents:
    """Drop every edge ``u -> v`` already implied by a longer directed path."""
    desc = _descendants(parents)
    children: list[list[int]] = [[] for _ in parents]
    for j, pa in enumerate(parents):
        for i in pa:
            children[i].append(j)
    reduced = []
    for v, pa in enumerate(parents):
        keep = []
        for u in pa:
            implied = any(w != v and (desc[w] >> v) & 1 for w in children[u])
            if not implied:
                keep.append(u)
        reduced.append(tuple(keep))
    return tuple(reduced)


def random_cpts(
    parents: Sequence[Sequence[int]],
    levels: Sequence[int],
    low: float = 0.1,
    high: float = 0.9,
    rng_seed: int = 0,
) -> tuple[np.ndarray, ...]:
    """Uniform ``[low, high]`` entries, each row renormalized to sum to one."""
    if not (0.0 < low <= high < 1.0):
        raise InvalidRange(f"need 0 < low <= high < 1, got low={low}, high={high}")
    rng = np.random.default_rng(rng_seed)
    tables = []
    for r, pa in enumerate(parents):
        rows = int(np.prod([levels[i] for i in pa], dtype=np.int64))
        raw = rng.uniform(low, high, size=(rows, levels[r]))
        tables.append(raw / raw.sum(axis=1, keepdims=True))
    return tuple(tables)


def skeleton_of(net: CategoricalNetwork) -> Skeleton:
    return Skeleton.from_pairs(net.n, net.edges())


def markov_blanket(net: CategoricalNetwork, r: int) -> set[int]:
    kids = net.children(r)
    blanket = set(net.parents[r]) | kids
    for c in kids:
        blanket.update(net.parents[c])
    blanket.discard(r)
    return blanket


def max_degree(parents: Sequence[Sequence[int]]) -> int:
    deg = [len(p) for p in parents]
    for pa in parents:
        for i in pa:
            deg[i] += 1
    return max(deg, default=0)


def generate_network(
    n: int,
    k: int | Sequence[int] = 2,
    edge_prob: float = 0.5,
    cpt_range: tuple[float, float] = (0.1, 0.9),
    seed: int = 0,
    degree_cap: int | None = None,
    reduce: bool = True,
    max_attempts: int = 10_000,
) -> CategoricalNetwork:
    """Synthetic network: random DAG, transitive reduction, then random CPTs.

    With ``degree_cap`` the DAG is redrawn (from seeds derived from ``seed`` and
    the attempt number) until every skeleton degree is at most the cap.
    """
    levels = [k] * n if isinstance(k, (int, np.integer)) else [int(m) for m in k]
    if len(levels) != n:
        raise ValidationError("need one level count per node")
    for attempt in range(max_attempts):
        dag_seed, cpt_seed = np.random.SeedSequence([seed, attempt]).generate_state(2)
        parents = random_dag(n, edge_prob, int(dag_seed))
        if reduce:
            parents = transitive_reduction(parents)
        if degree_cap is None or max_degree(parents) <= degree_cap:
            break
    else:
        raise ValidationError(f"no DAG with degree <= {degree_cap} in {max_attempts} draws")
    cpts = random_cpts(parents, levels, cpt_range[0], cpt_range[1], int(cpt_seed))
    nodes = [Node(f"X{r + 1}", tuple(str(j) for j in range(levels[r]))) for r in range(n)]
    return CategoricalNetwork(nodes, parents, cpts)


# ---------------------------------------------------------------------------
# JSON I/O
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def network_to_dict(net: CategoricalNetwork) -> dict:
    names = net.names
    cpts = {}
    for r, node in enumerate(net.nodes):
        pa = net.parents[r]
        dims = [net.nodes[i].m for i in pa]
        rows = []
        for idx, probs in enumerate(net.cpts[r]):
            given = np.unravel_index(idx, dims) if pa else ()
            rows.append(
                {
                    "given": [net.nodes[i].levels[int(g)] for i, g in zip(pa, given)],
                    "p": [float(p) for p in probs],
                }
            )
        cpts[node.name] = {"parents": [names[i] for i in pa], "rows": rows}
    return {
        "nodes": [{"name": node.name, "levels": list(node.levels)} for node in net.nodes],
        "edges": [[names[i], names[j]] for i, j in net.edges()],
        "cpts": cpts,
    }


def dumps_network(net: CategoricalNetwork) -> str:
    """Serialize to JSON text; probabilities are written with 17 significant digits."""
    doc = network_to_dict(net)
    floats: list[list[float]] = []
    for spec in doc["cpts"].values():
        for row in spec["rows"]:
            floats.append(row["p"])
            row["p"] = f"@@P{len(floats) - 1}@@"
    text = json.dumps(doc, indent=2)
    for i, probs in enumerate(floats):
        text = text.replace(f'"@@P{i}@@"', "[" + ", ".join(_fmt(p) for p in probs) + "]", 1)
    return text + "\n"


def save_network(net: CategoricalNetwork, path: str | Path) -> None:
    Path(path).write_text(dumps_network(net))


def _require(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{where}: missing field {key!r}")
    return obj[key]


def network_from_dict(doc: dict) -> CategoricalNetwork:
    raw_nodes = _require(doc, "nodes", "network")
    if not isinstance(raw_nodes, list):
        raise ParseError("network: 'nodes' must be a list")
    nodes = []
    for i, item in enumerate(raw_nodes):
        name = _require(item, "name", f"nodes[{i}]")
        levels = _require(item, "levels", f"nodes[{i}]")
        if not isinstance(levels, list):
            raise ParseError(f"nodes[{i}].levels must be a list")
        nodes.append(Node(str(name), tuple(str(v) for v in levels)))
    index = {node.name: i for i, node in enumerate(nodes)}
    if len(index) != len(nodes):
        raise ValidationError("node names must be unique")

    def lookup(name, where):
        if name not in index:
            raise ParseError(f"{where}: unknown node name {name!r}")
        return index[name]

    edge_set = set()
    for e, pair in enumerate(doc.get("edges", [])):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ParseError(f"edges[{e}]: expected [parent, child]")
        edge_set.add((lookup(pair[0], f"edges[{e}]"), lookup(pair[1], f"edges[{e}]")))

    raw_cpts = _require(doc, "cpts", "network")
    parents, cpts = [], []
    for r, node in enumerate(nodes):
        where = f"cpts[{node.name!r}]"
        spec = raw_cpts.get(node.name) if isinstance(raw_cpts, dict) else None
        if spec is None:
            raise ParseError(f"{where}: missing table")
        pa = [lookup(p, f"{where}.parents") for p in _require(spec, "parents", where)]
        dims = [nodes[i].m for i in pa]
        n_rows = int(np.prod(dims, dtype=np.int64))
        table = np.full((n_rows, node.m), np.nan)
        for k, row in enumerate(_require(spec, "rows", where)):
            given = _require(row, "given", f"{where}.rows[{k}]")
            probs = _require(row, "p", f"{where}.rows[{k}]")
            if len(given) != len(pa) or len(probs) != node.m:
                raise ParseError(f"{where}.rows[{k}]: wrong number of entries")
            try:
                cfg = [nodes[i].levels.index(str(g)) for i, g in zip(pa, given)]
            except ValueError:
                raise ParseError(f"{where}.rows[{k}]: unknown level label in {given}") from None
            idx = int(np.ravel_multi_index(cfg, dims)) if pa else 0
            if not np.isnan(table[idx, 0]):
                raise ParseError(f"{where}.rows[{k}]: duplicate parent configuration {given}")
            try:
                table[idx] = [float(p) for p in probs]
            except (TypeError, ValueError):
                raise ParseError(f"{where}.rows[{k}]: non-numeric probability") from None
        if np.isnan(table).any():
            raise ParseError(f"{where}: missing rows for some parent configurations")
        parents.append(tuple(pa))
        cpts.append(table)
    declared = {(i, r) for r, pa in enumerate(parents) for i in pa}
    if "edges" in doc and declared != edge_set:
        raise ValidationError("edge list disagrees with cpt parent lists")
    return CategoricalNetwork(nodes, parents, cpts)


def loads_network(text: str) -> CategoricalNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return network_from_dict(doc)


def load_network(path: str | Path) -> CategoricalNetwork:
    return loads_network(Path(path).read_text())
