"""Skeleton assembly from per-node supports and precision/recall scoring."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import NodeMismatch, ValidationError
from .network import CategoricalNetwork, Skeleton

Supports = Sequence[set[int]] | Mapping[int, set[int]]


def _as_list(supports: Supports, n: int | None = None) -> list[set[int]]:
    if isinstance(supports, Mapping):
        n = n if n is not None else (max(supports, default=-1) + 1)
        return [set(supports.get(r, ())) for r in range(n)]
    return [set(s) for s in supports]


def assemble_skeleton(supports: Supports, rule: str = "union", n: int | None = None) -> Skeleton:
    """Edge ``{i, j}`` if ``j`` is in ``support(i)`` OR (union) / AND (intersection) vice versa."""
    sets = _as_list(supports, n)
    n = len(sets) if n is None else n
    if rule not in ("union", "intersection"):
        raise ValidationError(f"unknown combination rule {rule!r}")
    pairs = set()
    for i, s in enumerate(sets):
        for j in s:
            if not 0 <= j < n or j == i:
                raise ValidationError(f"support of node {i} contains invalid node {j}")
            if rule == "union" or i in sets[j]:
                pairs.add((min(i, j), max(i, j)))
    return Skeleton(n, frozenset(pairs))


@dataclass
class RecoveryScore:
    precision: float
    recall: float
    f1: float
    per_node: list[set[int]] = field(default_factory=list)
    empty_prediction: bool = False
    empty_truth: bool = False

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "empty_prediction": self.empty_prediction,
            "empty_truth": self.empty_truth,
            "per_node": [sorted(s) for s in self.per_node],
        }


def score(recovered: Supports, truth: CategoricalNetwork | Supports) -> RecoveryScore:
    """Node-summed precision and recall of recovered neighbor sets.

    Empty denominators give 0 (flagged on the result) rather than NaN.
    """
    if isinstance(truth, CategoricalNetwork):
        true_sets = [truth.neighbors(r) for r in range(truth.n)]
    else:
        true_sets = _as_list(truth)
    found = _as_list(recovered, len(true_sets))
    if len(found) != len(true_sets):
        raise NodeMismatch(f"{len(found)} recovered supports for {len(true_sets)} nodes")
    hits = sum(len(a & b) for a, b in zip(found, true_sets))
    n_found = sum(len(a) for a in found)
    n_true = sum(len(b) for b in true_sets)
    precision = hits / n_found if n_found else 0.0
    recall = hits / n_true if n_true else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return RecoveryScore(precision, recall, f1, found, n_found == 0, n_true == 0)


def skeleton_supports(skel: Skeleton) -> list[set[int]]:
    return [skel.neighbors(r) for r in range(skel.n)]
