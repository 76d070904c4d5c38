import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nlocal.strategies import (DecompositionError, DeterministicStrategy,
                               decode, decompose_rs, deterministic_ct, encode,
                               strategy_matrix, strategy_tables)
from nlocal.tensor import CorrelationTensor, Scenario, validate


def test_encode_examples():
    assert encode(DeterministicStrategy(2, (1, 2))) == 3
    assert decode(1, 3, 2).assignment == (1, 1, 1)
    assert decode(2 ** 3, 3, 2).assignment == (2, 2, 2)
    assert decode(27, 3, 3).assignment == (3, 3, 3)


@pytest.mark.parametrize("m,o", [(1, 1), (1, 4), (2, 3), (3, 2), (4, 3)])
def test_encode_decode_bijection(m, o):
    seen = set()
    for k in range(1, o ** m + 1):
        s = decode(k, m, o)
        assert encode(s) == k
        assert list(s.assignment) == oracles.strategy_assignment(k, m, o)
        seen.add(s.assignment)
    assert len(seen) == o ** m


def test_decode_out_of_range():
    with pytest.raises(ValueError):
        decode(0, 2, 2)
    with pytest.raises(ValueError):
        decode(5, 2, 2)


def test_strategy_matrices():
    assert np.array_equal(strategy_matrix(DeterministicStrategy(2, (1, 2))), [[1, 0], [0, 1]])
    assert np.array_equal(strategy_matrix(DeterministicStrategy(2, (2, 2))), [[0, 1], [0, 1]])
    assert np.array_equal(strategy_matrix(decode(1, 3, 2)), [[1, 0], [1, 0], [1, 0]])
    tabs = strategy_tables(3, 2)
    for k in range(1, 9):
        assert np.array_equal(tabs[k - 1], strategy_matrix(decode(k, 3, 2)))


def test_decompose_worked_example():
    d = decompose_rs([[0.5, 0.5], [0.25, 0.75]])
    # (0.5, 1->1 2->2), (0.25, 1->2 2->1), (0.25, 1->2 2->2)
    assert d.terms == ((0.5, 3), (0.25, 2), (0.25, 4))
    assert [decode(k, 2, 2).assignment for _, k in d.terms] == [(1, 2), (2, 1), (2, 2)]


def test_decompose_single_row_tie():
    assert decompose_rs([[0.5, 0.5]]).terms == ((0.5, 1), (0.5, 2))


def test_decompose_vertex():
    for k in range(1, 10):
        B = strategy_matrix(decode(k, 2, 3))
        assert decompose_rs(B).terms == ((1.0, k),)


def test_decompose_rejects_bad_input():
    with pytest.raises(DecompositionError):
        decompose_rs([[0.5, 0.6]])
    with pytest.raises(DecompositionError):
        decompose_rs([[1.2, -0.2]])


def test_decompose_matches_literal_loop():
    rng = np.random.default_rng(11)
    for _ in range(200):
        m, o = rng.integers(1, 6, size=2)
        B = rng.dirichlet(np.ones(o), size=m)
        got = decompose_rs(B).terms
        ref = oracles.greedy_decomposition(B)
        assert [k for _, k in got] == [k for _, k in ref]
        assert np.allclose([w for w, _ in got], [w for w, _ in ref], atol=1e-15, rtol=0)


@st.composite
def rs_matrices(draw, allow_ties=True):
    m = draw(st.integers(1, 5))
    o = draw(st.integers(1, 5))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    B = rng.dirichlet(np.ones(o) * draw(st.sampled_from([0.2, 1.0, 5.0])), size=m)
    # occasionally quantize so ties and exact zeros appear
    if allow_ties and draw(st.booleans()):
        B = np.array([rng.multinomial(8, row) for row in B]) / 8
    return B


@settings(max_examples=300, deadline=None)
@given(rs_matrices())
def test_decompose_properties(B):
    m, o = B.shape
    d = decompose_rs(B)
    assert len(d.terms) <= m * (o - 1) + 1
    assert d.weights.min() >= 0
    assert abs(d.weights.sum() - 1) <= 1e-12
    assert np.abs(d.reconstruct() - B).max() <= 1e-12


@settings(max_examples=100, deadline=None)
@given(rs_matrices(allow_ties=False), st.integers(0, 1000))
def test_decompose_column_permutation_covariance(B, seed):
    # ties, initial or arising in the residual, make "first maximum" depend on
    # column order, so only generic matrices are used here
    m, o = B.shape
    perm = np.random.default_rng(seed).permutation(o)
    a = decompose_rs(B)
    b = decompose_rs(B[:, perm])
    inv = np.argsort(perm)
    mapped = [tuple(inv[v - 1] + 1 for v in decode(k, m, o).assignment) for _, k in a.terms]
    assert mapped == [decode(k, m, o).assignment for _, k in b.terms]
    assert np.array_equal(a.weights, b.weights)


def test_deterministic_ct_examples():
    s = Scenario.tripartite(2, 2, 2, 2, 2, 2)
    t = deterministic_ct(s, [1, 1, 1])
    assert t.values.sum() == 8 and t((1, 1, 1), (2, 1, 2)) == 1.0
    # A identity (k=3), C flip (k=2), B constant 1 (k=1); hub last
    t = deterministic_ct(s, [3, 2, 1])
    for a, c, b, x, z, y in oracles.all_indices(s.shape):
        want = (a == x) * (b == 0) * (c == 1 - z)
        assert t.values[a, c, b, x, z, y] == want


def test_deterministic_ct_against_bruteforce():
    s = Scenario((3, 2), (2, 3), 2, 2)
    rng = np.random.default_rng(5)
    for _ in range(20):
        ks = [int(rng.integers(1, s.strategy_count(p) + 1)) for p in range(3)]
        assert np.array_equal(deterministic_ct(s, ks).values,
                              oracles.deterministic_tensor(s, ks))


def test_mixture_of_deterministic_is_valid():
    s = Scenario.tripartite(2, 2, 2, 2, 2, 2)
    rng = np.random.default_rng(2)
    q = rng.dirichlet(np.ones(64)).reshape(4, 4, 4)
    v = sum(q[i, j, k] * deterministic_ct(s, [i + 1, j + 1, k + 1]).values
            for i in range(4) for j in range(4) for k in range(4))
    assert validate(CorrelationTensor(s, v)).ok


def test_deterministic_ct_range():
    s = Scenario.tripartite(2, 2, 2, 2, 2, 2)
    with pytest.raises(ValueError):
        deterministic_ct(s, [5, 1, 1])
    with pytest.raises(ValueError):
        deterministic_ct(s, [1, 1])
