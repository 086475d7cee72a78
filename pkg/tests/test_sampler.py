import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from bnskel.encoding import codebook
from bnskel.errors import ParseError, TooLarge, ValidationError
from bnskel.fixtures import BINARY, chain_network
from bnskel.network import CategoricalNetwork, Node, generate_network
from bnskel.sampler import (
    SampleMatrix,
    ancestral_sample,
    enumerate_joint,
    load_samples_csv,
    population_moment,
    save_samples_csv,
)

from conftest import edgeless, four_node


def effects(net):
    books = [codebook(m, "effects").astype(float) for m in net.level_counts]
    return lambda cfg: np.concatenate([books[j][cfg[:, j]] for j in range(cfg.shape[1])], axis=1)


def brute_joint(net):
    """Reference joint by nested loops over every configuration."""
    import itertools

    out = {}
    for cfg in itertools.product(*[range(m) for m in net.level_counts]):
        p = 1.0
        for r in range(net.n):
            pa = net.parents[r]
            row = 0
            for i in pa:
                row = row * net.level_counts[i] + cfg[i]
            p *= net.cpts[r][row, cfg[r]]
        out[cfg] = p
    return out


class TestAncestralSample:
    def test_point_mass(self):
        net = CategoricalNetwork([Node("A", BINARY)], [()], [np.array([[1.0, 0.0]])])
        assert np.all(ancestral_sample(net, 1000, 3).data == 0)

    def test_chain_joint_frequency(self):
        s = ancestral_sample(chain_network(), 200_000, 1).data
        freq = np.mean((s[:, 0] == 0) & (s[:, 1] == 0))
        assert abs(freq - 0.42) <= 0.005

    def test_golden_four_node(self):
        got = ancestral_sample(four_node(), 5, 11).data
        np.testing.assert_array_equal(
            got, [[1, 1, 0, 0], [1, 1, 1, 1], [1, 1, 1, 1], [0, 0, 1, 0], [1, 0, 1, 0]]
        )

    def test_deterministic(self):
        net = generate_network(6, 3, seed=2)
        a, b = ancestral_sample(net, 300, 9), ancestral_sample(net, 300, 9)
        assert np.array_equal(a.data, b.data)
        assert a.network_hash == b.network_hash and a.seed == 9
        assert not np.array_equal(a.data, ancestral_sample(net, 300, 10).data)

    def test_rows_independent_of_N(self):
        # per-node streams: a longer run extends rather than reshuffles
        net = four_node()
        short, long = ancestral_sample(net, 50, 4), ancestral_sample(net, 80, 4)
        assert np.array_equal(short.data, long.data[:50])

    @pytest.mark.parametrize("N", [0, -3])
    def test_bad_N(self, N):
        with pytest.raises(ValidationError, match="N must be ≥ 1"):
            ancestral_sample(four_node(), N, 0)

    def test_read_only(self):
        s = ancestral_sample(four_node(), 5, 0)
        with pytest.raises(ValueError):
            s.data[0, 0] = 1

    @pytest.mark.parametrize("seed", range(4))
    def test_chi_square_against_enumeration(self, seed):
        net = generate_network(4, 2, 0.6, seed=seed)
        table = enumerate_joint(net)
        assert len(table.probs) <= 16
        s = ancestral_sample(net, 100_000, seed).data
        idx = np.ravel_multi_index(s.T, net.level_counts)
        observed = np.bincount(idx, minlength=len(table.probs))
        keep = table.probs > 0
        res = stats.chisquare(observed[keep], table.probs[keep] * s.shape[0])
        assert res.pvalue > 1e-4


class TestSampleMatrix:
    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            SampleMatrix(np.array([[0, 2]]), (2, 2))

    def test_empty(self):
        with pytest.raises(ValidationError):
            SampleMatrix(np.zeros((0, 2), dtype=int), (2, 2))


class TestEnumerate:
    def test_fair_coins(self):
        table = enumerate_joint(edgeless(2))
        np.testing.assert_allclose(table.probs, [0.25] * 4)

    def test_chain_values(self):
        table = enumerate_joint(chain_network())
        probs = dict((cfg, p) for cfg, p in table)
        np.testing.assert_allclose(
            [probs[(0, 0)], probs[(0, 1)], probs[(1, 0)], probs[(1, 1)]],
            [0.42, 0.18, 0.08, 0.32],
            atol=1e-15,
        )

    def test_four_node_normalized(self, net4):
        assert abs(enumerate_joint(net4).probs.sum() - 1.0) < 1e-12

    def test_cap(self):
        with pytest.raises(TooLarge):
            enumerate_joint(edgeless(5, 3), cap=100)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_nested_loops(self, seed):
        net = generate_network(5, [2, 3, 2, 3, 2], 0.6, seed=seed)
        table = enumerate_joint(net)
        ref = brute_joint(net)
        for cfg, p in table:
            assert abs(p - ref[cfg]) < 1e-15

    @pytest.mark.parametrize("seed", range(6))
    def test_marginal_is_mixture_of_cpt_rows(self, seed):
        net = generate_network(5, 3, 0.6, seed=seed)
        table = enumerate_joint(net)
        for r in range(net.n):
            pa = net.parents[r]
            if pa:
                weights = population_moment(
                    table,
                    lambda c, pa=pa: np.eye(net.cpts[r].shape[0])[
                        np.ravel_multi_index(c[:, list(pa)].T, [net.level_counts[i] for i in pa])
                    ],
                    lambda c: np.ones((c.shape[0], 1)),
                ).ravel()
            else:
                weights = np.ones(1)
            np.testing.assert_allclose(table.marginal(r, 3), weights @ net.cpts[r], atol=1e-12)


class TestPopulationMoment:
    def test_independent_uniform(self):
        net = edgeless(2)
        np.testing.assert_allclose(population_moment(net, effects(net)), np.eye(2), atol=1e-15)

    def test_chain_cross_moment(self):
        net = chain_network()
        M = population_moment(net, effects(net))
        assert abs(M[0, 1] - 0.48) < 1e-12

    @given(st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_binary_unit_diagonal_and_symmetric(self, seed):
        net = generate_network(5, 2, 0.5, seed=seed)
        M = population_moment(net, effects(net))
        np.testing.assert_allclose(np.diag(M), 1.0, atol=1e-12)
        np.testing.assert_allclose(M, M.T, atol=1e-14)


class TestCsv:
    def test_round_trip(self, tmp_path, net4):
        s = ancestral_sample(net4, 40, 5)
        path = tmp_path / "s.csv"
        save_samples_csv(s, net4, path)
        assert path.read_text().splitlines()[0] == "X1,X2,X3,X4"
        back = load_samples_csv(path, net4)
        assert np.array_equal(back.data, s.data)

    def test_unknown_label(self, tmp_path, net4):
        path = tmp_path / "s.csv"
        path.write_text("X1,X2,X3,X4\nTrue,True,True,True\nTrue,Maybe,True,True\n")
        with pytest.raises(ParseError, match="line 3"):
            load_samples_csv(path, net4)

    def test_bad_header(self, tmp_path, net4):
        path = tmp_path / "s.csv"
        path.write_text("X1,X2,X4,X3\n")
        with pytest.raises(ParseError, match="line 1"):
            load_samples_csv(path, net4)

    def test_no_rows(self, tmp_path, net4):
        path = tmp_path / "s.csv"
        path.write_text("X1,X2,X3,X4\n")
        with pytest.raises(ValidationError):
            load_samples_csv(path, net4)
