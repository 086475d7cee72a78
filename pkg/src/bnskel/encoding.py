"""Categorical-to-{-1, 0, 1} encodings and encoded design matrices.

The reference level is always the last declared level: dummy coding maps it
to the zero vector, unweighted effects coding maps it to all ``-1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import OutOfRange, UnknownNode, ValidationError
from .sampler import SampleMatrix

Scheme = Literal["dummy", "effects"]
SCHEMES = ("dummy", "effects")


def _check_scheme(scheme: str) -> None:
    if scheme not in SCHEMES:
        raise ValidationError(f"unknown encoding scheme {scheme!r}")


def codebook(m: int, scheme: Scheme) -> np.ndarray:
    """``m x (m-1)`` matrix whose row ``j`` is the codeword of level ``j``."""
    _check_scheme(scheme)
    if m < 2:
        raise OutOfRange("level count must be >= 2")
    book = np.zeros((m, m - 1), dtype=np.int8)
    book[: m - 1] = np.eye(m - 1, dtype=np.int8)
    if scheme == "effects":
        book[m - 1] = -1
    return book


def encode_level(level_index: int, m: int, scheme: Scheme) -> np.ndarray:
    if not 0 <= level_index < m:
        raise OutOfRange(f"level {level_index} outside [0, {m})")
    return codebook(m, scheme)[level_index].copy()


@dataclass(frozen=True)
class BlockIndexMap:
    """Layout of stacked per-node blocks; ``offsets`` are 0-based."""

    nodes: tuple[int, ...]
    widths: tuple[int, ...]

    def __post_init__(self):
        if len(self.nodes) != len(self.widths):
            raise ValidationError("nodes and widths differ in length")
        if any(w < 1 for w in self.widths):
            raise ValidationError("block widths must be >= 1")

    @classmethod
    def for_levels(cls, level_counts: Sequence[int], exclude: Iterable[int] = ()) -> "BlockIndexMap":
        skip = set(exclude)
        nodes = tuple(i for i in range(len(level_counts)) if i not in skip)
        return cls(nodes, tuple(int(level_counts[i]) - 1 for i in nodes))

    @classmethod
    def uniform(cls, widths: Sequence[int]) -> "BlockIndexMap":
        return cls(tuple(range(len(widths))), tuple(int(w) for w in widths))

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.widths)[:-1]])) if self.widths else ()

    @property
    def total(self) -> int:
        return int(sum(self.widths))

    @property
    def max_width(self) -> int:
        return max(self.widths, default=0)

    def __len__(self) -> int:
        return len(self.nodes)

    def position(self, node: int) -> int:
        try:
            return self.nodes.index(node)
        except ValueError:
            raise UnknownNode(f"node {node} is not part of this block map") from None

    def block(self, node: int) -> slice:
        k = self.position(node)
        start = self.offsets[k]
        return slice(start, start + self.widths[k])

    def rows(self, node_set: Iterable[int]) -> np.ndarray:
        return support_rows(self, node_set)

    def restrict(self, node_set: Iterable[int]) -> "BlockIndexMap":
        keep = set(node_set)
        for node in keep:
            self.position(node)
        pairs = [(i, w) for i, w in zip(self.nodes, self.widths) if i in keep]
        return BlockIndexMap(tuple(i for i, _ in pairs), tuple(w for _, w in pairs))


def support_rows(block_map: BlockIndexMap, node_set: Iterable[int]) -> np.ndarray:
    """Stacked row indices of the given nodes, in block-map order."""
    wanted = set(node_set)
    for node in wanted:
        block_map.position(node)
    idx = [
        np.arange(off, off + w)
        for node, off, w in zip(block_map.nodes, block_map.offsets, block_map.widths)
        if node in wanted
    ]
    return np.concatenate(idx).astype(np.intp) if idx else np.zeros(0, dtype=np.intp)


@dataclass(frozen=True, eq=False)
class EncodedMatrix:
    values: np.ndarray
    map: BlockIndexMap
    scheme: Scheme

    @property
    def N(self) -> int:
        return self.values.shape[0]


def encode_columns(
    levels: np.ndarray, level_counts: Sequence[int], nodes: Sequence[int], scheme: Scheme
) -> EncodedMatrix:
    """Encode the given columns of an ``N x n`` level matrix, blocks in ``nodes`` order."""
    _check_scheme(scheme)
    levels = np.asarray(levels)
    block_map = BlockIndexMap(tuple(nodes), tuple(int(level_counts[i]) - 1 for i in nodes))
    if not len(nodes):
        return EncodedMatrix(np.zeros((levels.shape[0], 0)), block_map, scheme)
    parts = [codebook(int(level_counts[i]), scheme)[levels[:, i]] for i in nodes]
    values = np.concatenate(parts, axis=1).astype(np.float64)
    return EncodedMatrix(values, block_map, scheme)


def encode_all(samples: SampleMatrix, scheme: Scheme) -> EncodedMatrix:
    return encode_columns(samples.data, samples.level_counts, range(samples.n), scheme)


def encode_design(samples: SampleMatrix, r: int, scheme: Scheme) -> tuple[EncodedMatrix, EncodedMatrix]:
    """Return ``(E(X^rbar), E(X^r))``; design blocks follow node index order skipping ``r``."""
    if not 0 <= r < samples.n:
        raise UnknownNode(f"target {r} outside [0, {samples.n})")
    others = [i for i in range(samples.n) if i != r]
    design = encode_columns(samples.data, samples.level_counts, others, scheme)
    response = encode_columns(samples.data, samples.level_counts, [r], scheme)
    return design, response


def is_codeword_block(block: np.ndarray, scheme: Scheme) -> np.ndarray:
    """Per-row check that an ``N x (m-1)`` block holds valid codewords."""
    block = np.asarray(block)
    ones = (block == 1).sum(axis=1)
    zeros = (block == 0).sum(axis=1)
    width = block.shape[1]
    unit = (ones == 1) & (zeros == width - 1)
    if scheme == "dummy":
        return unit | (zeros == width)
    return unit | (block == -1).all(axis=1)
