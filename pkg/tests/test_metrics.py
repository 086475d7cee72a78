import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnskel.errors import NodeMismatch, ValidationError
from bnskel.metrics import assemble_skeleton, score, skeleton_supports
from bnskel.network import Skeleton

from conftest import four_node


def sym(n, edges):
    return skeleton_supports(Skeleton.from_pairs(n, edges))


class TestAssemble:
    def test_symmetric_rules_agree(self):
        sup = [{1}, {0, 2}, {1}]
        assert assemble_skeleton(sup, "union") == assemble_skeleton(sup, "intersection")

    def test_one_sided(self):
        sup = [{1}, set()]
        assert assemble_skeleton(sup, "union").edges == {(0, 1)}
        assert assemble_skeleton(sup, "intersection").edges == frozenset()

    def test_empty(self):
        assert assemble_skeleton([set()] * 4).edges == frozenset()

    def test_mapping_input(self):
        assert assemble_skeleton({0: {2}}, n=3).edges == {(0, 2)}

    def test_bad_rule(self):
        with pytest.raises(ValidationError):
            assemble_skeleton([set()], "xor")

    def test_self_loop(self):
        with pytest.raises(ValidationError):
            assemble_skeleton([{0}])


class TestScore:
    def test_perfect(self):
        net = four_node()
        s = score([net.neighbors(r) for r in range(4)], net)
        assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)

    def test_half(self):
        s = score(sym(3, [(0, 1), (0, 2)]), sym(3, [(0, 1), (1, 2)]))
        assert (s.precision, s.recall, s.f1) == (0.5, 0.5, 0.5)

    def test_nothing_recovered(self):
        s = score([set()] * 4, four_node())
        assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)
        assert s.empty_prediction and not s.empty_truth

    def test_node_mismatch(self):
        with pytest.raises(NodeMismatch):
            score([set()] * 3, four_node())

    def test_to_dict(self):
        doc = score(sym(3, [(0, 1)]), sym(3, [(0, 1)])).to_dict()
        assert doc["per_node"] == [[1], [0], []] and doc["f1"] == 1.0


def random_supports(rng, n, density):
    return [{j for j in range(n) if j != i and rng.random() < density} for i in range(n)]


@given(st.integers(0, 2**31), st.integers(2, 9))
@settings(max_examples=100, deadline=None)
def test_relabeling_invariance(seed, n):
    rng = np.random.default_rng(seed)
    found, truth = random_supports(rng, n, 0.3), random_supports(rng, n, 0.3)
    perm = rng.permutation(n)

    def relabel(sets):
        # node i becomes perm[i]
        return [{int(perm[j]) for j in sets[i]} for i in np.argsort(perm)]

    a, b = score(found, truth), score(relabel(found), relabel(truth))
    assert (a.precision, a.recall, a.f1) == pytest.approx((b.precision, b.recall, b.f1))


@given(st.integers(0, 2**31), st.integers(2, 9))
@settings(max_examples=100, deadline=None)
def test_f1_formula_and_range(seed, n):
    rng = np.random.default_rng(seed)
    s = score(random_supports(rng, n, 0.4), random_supports(rng, n, 0.4))
    for v in (s.precision, s.recall, s.f1):
        assert 0.0 <= v <= 1.0
    if s.precision + s.recall > 0:
        assert s.f1 == pytest.approx(2 * s.precision * s.recall / (s.precision + s.recall))


@given(st.integers(0, 2**31), st.integers(2, 9))
@settings(max_examples=100, deadline=None)
def test_union_recall_dominates_intersection(seed, n):
    rng = np.random.default_rng(seed)
    supports = random_supports(rng, n, 0.4)
    truth = sym(n, [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3])
    u = score(skeleton_supports(assemble_skeleton(supports, "union")), truth)
    i = score(skeleton_supports(assemble_skeleton(supports, "intersection")), truth)
    assert u.recall >= i.recall


def test_union_precision_can_exceed_intersection():
    # the intersection keeps only a wrong edge; the union adds a correct one
    supports = [{1, 2}, {0}, set()]
    truth = sym(3, [(0, 2)])
    u = score(skeleton_supports(assemble_skeleton(supports, "union")), truth)
    i = score(skeleton_supports(assemble_skeleton(supports, "intersection")), truth)
    assert i.precision == 0.0 and u.precision == 0.5
