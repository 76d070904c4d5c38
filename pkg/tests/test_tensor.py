import numpy as np
import pytest

import oracles
from nlocal.fixtures import (bell_local_nonbilocal, hub_copies_input,
                             mixture_components, perfectly_correlated_pt)
from nlocal.strategies import deterministic_ct
from nlocal.tensor import (CorrelationTensor, Scenario, ScenarioMismatch,
                           ShapeError, SignalingError, distance, from_tripartite,
                           inner, marginal, mix, nonsignaling_check, party_table,
                           product_ct, resolve_party, single_party_ct,
                           to_tripartite, uniform_ct, validate)

S222 = Scenario.tripartite(2, 2, 2, 2, 2, 2)


def test_scenario_parse_roundtrip():
    s = Scenario.parse("2,3;4,1;3,2")
    assert s.edge_outcomes == (2, 4) and s.edge_inputs == (3, 1)
    assert (s.hub_outcomes, s.hub_inputs) == (3, 2)
    assert Scenario.parse(s.format()) == s
    assert s.strategy_count(0) == 8 and s.strategy_count(1) == 4
    assert s.hub_strategy_count == 9


@pytest.mark.parametrize("bad", ["2,2", "2;2,2", "0,1;2,2", "2,2,2;1,1"])
def test_scenario_parse_rejects(bad):
    with pytest.raises(ValueError):
        Scenario.parse(bad)


def test_layout_outputs_fastest_party1_innermost():
    s = Scenario((2, 3), (2, 1), 2, 1)
    v = np.random.default_rng(0).random(s.shape)
    t = CorrelationTensor(s, v)
    flat = t.flat()
    assert flat[0] == v[0, 0, 0, 0, 0, 0]
    assert flat[1] == v[1, 0, 0, 0, 0, 0]   # a_1 moves first
    assert flat[2] == v[0, 1, 0, 0, 0, 0]
    assert np.array_equal(CorrelationTensor(s, flat).values, v)


def test_shape_mismatch_is_structural_error():
    with pytest.raises(ShapeError):
        CorrelationTensor(S222, np.zeros((2, 2)))


def test_uniform_is_valid():
    t = uniform_ct(S222)
    assert np.all(t.values == 1 / 8)
    assert validate(t).ok


def test_perturbed_entry_reports_normalization_error():
    v = uniform_ct(S222).values.copy()
    v[0, 0, 0, 1, 0, 1] += 1e-3
    d = validate(CorrelationTensor(S222, v))
    assert d.max_normalization_error == pytest.approx(1e-3, rel=1e-9)
    assert not d.ok


def test_negative_entry_reported():
    v = uniform_ct(S222).values.copy()
    v[0, 0, 0, 0, 0, 0] -= 0.2
    v[1, 0, 0, 0, 0, 0] += 0.2
    d = validate(CorrelationTensor(S222, v))
    assert d.max_negativity == pytest.approx(0.2 - 1 / 8)
    assert d.max_normalization_error < 1e-15 and not d.ok


def test_mixture_fixture_is_valid_and_nonsignaling():
    t = bell_local_nonbilocal()
    assert validate(t).ok
    d = nonsignaling_check(t)
    assert d.ok and d.max_signaling_defect <= 1e-12


def test_mixture_fixture_matches_hand_definition():
    # P = 1/2 [A=1] [B uniform] [c=z] + 1/2 [A=2] [B uniform] [c=3-z]
    v = np.zeros((2, 2, 2, 2, 2, 2))      # a b c x y z
    for a, b, c, x, y, z in oracles.all_indices(v.shape):
        v[a, b, c, x, y, z] = 0.5 * 0.5 * ((a == 0) * (c == z) + (a == 1) * (c == 1 - z))
    assert np.array_equal(to_tripartite(bell_local_nonbilocal()), v)


def test_marginal_on_A_is_half():
    m = marginal(bell_local_nonbilocal(), [0])
    assert np.allclose(party_table(m), 0.5, atol=0, rtol=0)


def test_marginal_matches_bruteforce():
    t = bell_local_nonbilocal()
    ref = oracles.marginal_sum(t.values, t.scenario, [0, 1])
    m = marginal(t, [0, 1])
    for (outs, ins), val in ref.items():
        assert m.values[outs + (0,) + ins + (0,)] == pytest.approx(val, abs=1e-15)


def test_marginal_of_correlated_pt():
    m = marginal(perfectly_correlated_pt(), [0, 1]).values.reshape(2, 2)
    assert np.array_equal(m, [[0.5, 0.0], [0.0, 0.5]])


def test_marginal_of_product_is_factor():
    rng = np.random.default_rng(3)
    tabs = [rng.dirichlet(np.ones(3), size=2).T, rng.dirichlet(np.ones(2), size=4).T,
            rng.dirichlet(np.ones(2), size=3).T]
    t = product_ct(tabs)
    for i, tab in enumerate(tabs):
        got = party_table(marginal(t, [i]))
        assert np.abs(got - tab).max() <= 1e-12


def test_marginal_refuses_signaling():
    with pytest.raises(SignalingError) as err:
        marginal(hub_copies_input(), [2])
    assert err.value.party == 0


def test_signaling_defect_is_one():
    d = nonsignaling_check(hub_copies_input())
    assert d.max_signaling_defect == 1.0 and not d.ok


def test_mix_identity_and_weights():
    t = bell_local_nonbilocal()
    assert np.array_equal(mix([(1.0, t)]).values, t.values)
    D1 = deterministic_ct(S222, [1, 2, 3])
    D2 = deterministic_ct(S222, [4, 1, 2])
    m = mix([(0.3, D1), (0.7, D2)])
    assert np.array_equal(m.values, 0.3 * D1.values + 0.7 * D2.values)


def test_mix_of_components_gives_fixture():
    first, second = mixture_components()
    t1 = product_ct([single_party_ct(f) for f in first])
    t2 = product_ct([single_party_ct(f) for f in second])
    assert np.array_equal(mix([(0.5, t1), (0.5, t2)]).values,
                          bell_local_nonbilocal().values)


def test_mix_errors():
    t = uniform_ct(S222)
    with pytest.raises(ValueError):
        mix([(0.5, t), (0.6, t)])
    with pytest.raises(ScenarioMismatch):
        mix([(0.5, t), (0.5, uniform_ct(Scenario.tripartite(2, 1, 2, 2, 2, 2)))])


def test_product_entry():
    first, _ = mixture_components()
    t = product_ct(first)
    # (a, c, b | x, z, y) = (1, 1, 1 | 1, 1, 1): 1 * 1 * 1/2
    assert t((1, 1, 1), (1, 1, 1)) == 0.5


def test_product_of_uniforms_is_uniform():
    tabs = [np.full((o, m), 1 / o) for o, m in S222.parties()]
    assert np.array_equal(product_ct(tabs).values, uniform_ct(S222).values)


def test_distance_values():
    t = bell_local_nonbilocal()
    assert distance(t, t) == (0.0, 0.0)
    margs = [party_table(marginal(t, [p])) for p in range(3)]
    assert distance(t, product_ct(margs))[0] == pytest.approx(1 / 8, abs=1e-15)
    D = deterministic_ct(S222, [1, 1, 1])
    assert distance(uniform_ct(S222), D)[0] == pytest.approx(7 / 8, abs=1e-15)
    l2 = distance(uniform_ct(S222), D)[1]
    assert l2 == pytest.approx(np.sqrt(inner(D, D) - 2 * inner(D, uniform_ct(S222))
                                       + inner(uniform_ct(S222), uniform_ct(S222))))


def test_tripartite_view_roundtrip():
    v = np.random.default_rng(1).random((2, 3, 4, 1, 2, 3))
    t = from_tripartite(v)
    assert t.scenario == Scenario.tripartite(2, 1, 3, 2, 4, 3)
    assert np.array_equal(to_tripartite(t), v)


def test_party_names():
    assert resolve_party(S222, "B") == 2
    assert resolve_party(S222, "C") == 1
    s3 = Scenario.uniform(3, 2, 2)
    assert resolve_party(s3, "A2") == 1 and resolve_party(s3, "B") == 3
    with pytest.raises(ValueError):
        resolve_party(S222, "Z")
