"""Ancestral sampling and exact joint enumeration for categorical networks.

Randomness comes from numpy's PCG64 generator. A master seed is expanded with
``SeedSequence(seed).spawn(n)`` into one independent stream per node, so the
draws for node ``r`` depend only on ``(seed, r, N)`` and not on how many
variates other nodes consumed.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ParseError, TooLarge, ValidationError
from .network import CategoricalNetwork, dumps_network

DEFAULT_CAP = 10**6


def network_hash(net: CategoricalNetwork) -> str:
    return hashlib.sha256(dumps_network(net).encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """``N x n`` matrix of 0-based level indices."""

    data: np.ndarray
    level_counts: tuple[int, ...]
    seed: int | None = None
    network_hash: str | None = None

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or data.shape[0] < 1:
            raise ValidationError("sample matrix must be 2-d with N >= 1 rows")
        if data.shape[1] != len(self.level_counts):
            raise ValidationError("one level count per column required")
        if data.size and (data.min() < 0 or np.any(data.max(axis=0) >= np.asarray(self.level_counts))):
            raise ValidationError("sample entry outside its node's level range")
        data = data.astype(np.int64, copy=False)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def N(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def rows(self, idx) -> "SampleMatrix":
        return SampleMatrix(self.data[idx], self.level_counts, self.seed, self.network_hash)


def ancestral_sample(net: CategoricalNetwork, N: int, rng_seed: int = 0) -> SampleMatrix:
    """Draw ``N`` i.i.d. joint samples by inverse-CDF sampling in topological order."""
    if N < 1:
        raise ValidationError("N must be ≥ 1")
    streams = np.random.SeedSequence(rng_seed).spawn(net.n)
    out = np.zeros((N, net.n), dtype=np.int64)
    for r in net.order:
        u = np.random.default_rng(streams[r]).random(N)
        cdf = np.cumsum(net.cpts[r], axis=1)
        rows = cdf[net.parent_config_index(r, out)]
        # count of cdf values <= u gives the drawn level; clip guards round-off at 1
        level = (rows <= u[:, None]).sum(axis=1)
        out[:, r] = np.minimum(level, net.nodes[r].m - 1)
    return SampleMatrix(out, tuple(net.level_counts), rng_seed, network_hash(net))


@dataclass(frozen=True, eq=False)
class JointTable:
    configurations: np.ndarray  # K x n level indices
    probs: np.ndarray  # K

    def __iter__(self):
        return zip(map(tuple, self.configurations), self.probs)

    def marginal(self, r: int, m: int) -> np.ndarray:
        return np.bincount(self.configurations[:, r], weights=self.probs, minlength=m)


def enumerate_joint(net: CategoricalNetwork, cap: int = DEFAULT_CAP) -> JointTable:
    """Exact joint distribution as a product of CPT entries over all configurations."""
    dims = tuple(net.level_counts)
    total = int(np.prod(dims, dtype=object))
    if total > cap:
        raise TooLarge(f"{total} joint configurations exceed the cap of {cap}")
    configs = np.array(np.unravel_index(np.arange(total), dims)).T.reshape(total, net.n)
    probs = np.ones(total)
    for r in range(net.n):
        probs *= net.cpts[r][net.parent_config_index(r, configs), configs[:, r]]
    return JointTable(configs, probs)


Features = Callable[[np.ndarray], np.ndarray]


def population_moment(
    net: CategoricalNetwork | JointTable,
    left: Features,
    right: Features | None = None,
    cap: int = DEFAULT_CAP,
) -> np.ndarray:
    """Exact ``E[left(X) right(X)^T]`` over the joint distribution.

    ``left`` and ``right`` map a ``K x n`` configuration matrix to ``K x a`` and
    ``K x b`` feature matrices; ``right`` defaults to ``left``.
    """
    table = net if isinstance(net, JointTable) else enumerate_joint(net, cap)
    a = np.asarray(left(table.configurations), dtype=np.float64)
    b = a if right is None else np.asarray(right(table.configurations), dtype=np.float64)
    return (a * table.probs[:, None]).T @ b


def save_samples_csv(samples: SampleMatrix, net: CategoricalNetwork, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(net.names)
        labels = [np.array(node.levels, dtype=object) for node in net.nodes]
        for row in samples.data:
            writer.writerow([labels[j][v] for j, v in enumerate(row)])


def load_samples_csv(path: str | Path, net: CategoricalNetwork) -> SampleMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if header != net.names:
            raise ParseError(f"{path} line 1: header {header} does not match network nodes")
        lookup = [{lab: j for j, lab in enumerate(node.levels)} for node in net.nodes]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != net.n:
                raise ParseError(f"{path} line {lineno}: expected {net.n} cells")
            try:
                rows.append([lookup[j][cell] for j, cell in enumerate(row)])
            except KeyError as exc:
                raise ParseError(f"{path} line {lineno}: unknown level {exc.args[0]!r}") from None
    if not rows:
        raise ValidationError("N must be ≥ 1")
    return SampleMatrix(np.array(rows), tuple(net.level_counts), None, network_hash(net))
