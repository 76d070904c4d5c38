"""
Discrete hidden-variable models on star networks and their normal forms.

Array conventions (all 0-based internally):

* source distribution ``q_i``: shape ``(d_i,)``
* edge response ``P_i(a|x, lam_i)``: shape ``(d_i, m_i, o_i)``, i.e. one
  ``m x o`` row-stochastic matrix per hidden value
* hub response ``P_B(b|y, lam_1 .. lam_n)``: shape ``(d_1, .., d_n, m_B, o_B)``

Tripartite bilocal models are ``n = 2`` models with edges ``(A, C)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .strategies import decompose_rs, strategy_tables
from .tensor import (CorrelationTensor, Scenario, product_values,
                     resolve_party, uniform_ct)

TOL_MODEL = 1e-12


class ModelError(ValueError):
    pass


def _check_pd(q: np.ndarray, what: str, tol: float):
    if q.ndim != 1 or q.size == 0:
        raise ModelError(f"{what} must be a non-empty vector")
    if q.min() < -tol or abs(q.sum() - 1) > tol:
        raise ModelError(f"{what} is not a probability distribution")


def _check_rows(r: np.ndarray, what: str, tol: float):
    if r.size and (r.min() < -tol or np.abs(r.sum(axis=-1) - 1).max() > tol):
        raise ModelError(f"{what} is not row-stochastic in its output index")


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DiscreteNLocalModel:
    """Finite n-local model ``sum_lam prod q_i prod P_i(a_i|x_i,lam_i) P_B``."""

    scenario: Scenario
    source_dists: tuple[np.ndarray, ...]
    edge_responses: tuple[np.ndarray, ...]
    hub_response: np.ndarray

    def __post_init__(self):
        s = self.scenario
        qs = tuple(_frozen(q) for q in self.source_dists)
        es = tuple(_frozen(e) for e in self.edge_responses)
        hub = _frozen(self.hub_response)
        object.__setattr__(self, "source_dists", qs)
        object.__setattr__(self, "edge_responses", es)
        object.__setattr__(self, "hub_response", hub)
        if len(qs) != s.n or len(es) != s.n:
            raise ModelError(f"scenario has {s.n} edges, model has "
                             f"{len(qs)} sources and {len(es)} edge tables")
        for i, (q, e) in enumerate(zip(qs, es)):
            _check_pd(q, f"source {i + 1}", TOL_MODEL)
            if e.shape != (q.size, s.edge_inputs[i], s.edge_outcomes[i]):
                raise ModelError(f"edge {i + 1} response has shape {e.shape}")
            _check_rows(e, f"edge {i + 1} response", TOL_MODEL)
        want = self.source_dims + (s.hub_inputs, s.hub_outcomes)
        if hub.shape != want:
            raise ModelError(f"hub response has shape {hub.shape}, want {want}")
        _check_rows(hub, "hub response", TOL_MODEL)

    @property
    def source_dims(self) -> tuple[int, ...]:
        return tuple(q.size for q in self.source_dists)


@dataclass(frozen=True, eq=False)
class CanonicalNLocalForm:
    """Strategy-indexed normal form: hidden variable ``k_i`` ranges over the
    ``N_i = o_i**m_i`` deterministic strategies of edge ``i``."""

    scenario: Scenario
    strategy_dists: tuple[np.ndarray, ...]
    hub_table: np.ndarray

    def __post_init__(self):
        s = self.scenario
        pis = tuple(_frozen(p) for p in self.strategy_dists)
        hub = _frozen(self.hub_table)
        object.__setattr__(self, "strategy_dists", pis)
        object.__setattr__(self, "hub_table", hub)
        if len(pis) != s.n:
            raise ModelError("one strategy distribution per edge required")
        for i, p in enumerate(pis):
            if p.size != s.strategy_count(i):
                raise ModelError(f"edge {i + 1} needs {s.strategy_count(i)} "
                                 f"strategy weights, got {p.size}")
            _check_pd(p, f"strategy distribution {i + 1}", TOL_MODEL)
        want = self.strategy_dims + (s.hub_inputs, s.hub_outcomes)
        if hub.shape != want:
            raise ModelError(f"hub table has shape {hub.shape}, want {want}")
        _check_rows(hub, "hub table", TOL_MODEL)

    @property
    def strategy_dims(self) -> tuple[int, ...]:
        return tuple(self.scenario.strategy_count(i)
                     for i in range(self.scenario.n))

    def to_model(self) -> DiscreteNLocalModel:
        s = self.scenario
        edges = [strategy_tables(s.edge_inputs[i], s.edge_outcomes[i])
                 for i in range(s.n)]
        return DiscreteNLocalModel(s, self.strategy_dists, edges, self.hub_table)


@dataclass(frozen=True, eq=False)
class FullExpansion:
    """Weights ``q(k_1..k_n, j) = prod pi_i(k_i) * p(j | k_1..k_n)`` over
    deterministic tensors, kept in factorized form."""

    scenario: Scenario
    strategy_dists: tuple[np.ndarray, ...]
    hub_strategy_dists: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "strategy_dists",
                           tuple(_frozen(p) for p in self.strategy_dists))
        object.__setattr__(self, "hub_strategy_dists",
                           _frozen(self.hub_strategy_dists))
        s = self.scenario
        want = tuple(s.strategy_count(i) for i in range(s.n)) + (
            s.hub_strategy_count,)
        if self.hub_strategy_dists.shape != want:
            raise ModelError(f"p(j|k) has shape {self.hub_strategy_dists.shape},"
                             f" want {want}")
        _check_rows(self.hub_strategy_dists, "p(j|k)", TOL_MODEL)
        for i, p in enumerate(self.strategy_dists):
            _check_pd(p, f"strategy distribution {i + 1}", TOL_MODEL)

    @property
    def weights(self) -> np.ndarray:
        """Joint weights, shape ``(N_1, .., N_n, N_B)``."""
        w = self.hub_strategy_dists
        for i, p in enumerate(self.strategy_dists):
            shape = [1] * w.ndim
            shape[i] = p.size
            w = w * p.reshape(shape)
        return w

    def to_tensor(self) -> CorrelationTensor:
        """``sum_{k, j} q(k, j) D_{k, j}``."""
        s = self.scenario
        n = s.n
        ops = [self.weights, list(range(n + 1))]
        for p in range(n + 1):
            o, m = s.parties()[p]
            # strategy label p, input label n+1+p, output label 2n+2+p
            ops += [strategy_tables(m, o), [p, n + 1 + p, 2 * n + 2 + p]]
        out = [2 * n + 2 + p for p in range(n + 1)] + [n + 1 + p for p in range(n + 1)]
        return CorrelationTensor(s, np.einsum(*ops, out, optimize=True))


@dataclass(frozen=True, eq=False)
class TriangleModel:
    """Triangle network: source ``k`` feeds the two parties it connects.

    ``response_A[l3, l1, a]``, ``response_B[l1, l2, b]``,
    ``response_C[l2, l3, c]``.
    """

    source_dists: tuple[np.ndarray, np.ndarray, np.ndarray]
    response_A: np.ndarray
    response_B: np.ndarray
    response_C: np.ndarray

    def __post_init__(self):
        qs = tuple(_frozen(q) for q in self.source_dists)
        object.__setattr__(self, "source_dists", qs)
        for name in ("response_A", "response_B", "response_C"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if len(qs) != 3:
            raise ModelError("triangle model needs three sources")
        for i, q in enumerate(qs):
            _check_pd(q, f"source {i + 1}", TOL_MODEL)
        n1, n2, n3 = self.source_dims
        for name, lead in (("response_A", (n3, n1)), ("response_B", (n1, n2)),
                           ("response_C", (n2, n3))):
            r = getattr(self, name)
            if r.ndim != 3 or r.shape[:2] != lead:
                raise ModelError(f"{name} has shape {r.shape}, want {lead} + (o,)")
            _check_rows(r, name, TOL_MODEL)

    @property
    def source_dims(self) -> tuple[int, int, int]:
        return tuple(q.size for q in self.source_dists)

    @property
    def scenario(self) -> Scenario:
        return Scenario.tripartite(self.response_A.shape[-1], 1,
                                   self.response_B.shape[-1], 1,
                                   self.response_C.shape[-1], 1)


# evaluation --------------------------------------------------------------------

def evaluate_nlocal(m: DiscreteNLocalModel) -> CorrelationTensor:
    """``P(a b|x y) = sum_lam prod q_i(lam_i) prod P_i(a_i|x_i,lam_i) P_B(b|y,lam)``."""
    s = m.scenario
    n = s.n
    # labels: lam_i -> i, a_i -> n+i, x_i -> 2n+i, b -> 3n, y -> 3n+1
    ops = [m.hub_response, list(range(n)) + [3 * n + 1, 3 * n]]
    for i in range(n):
        ops += [m.source_dists[i], [i], m.edge_responses[i], [i, 2 * n + i, n + i]]
    out = [n + i for i in range(n)] + [3 * n] + [2 * n + i for i in range(n)] + [3 * n + 1]
    return CorrelationTensor(s, np.einsum(*ops, out, optimize=True))


def evaluate_bilocal(m: DiscreteNLocalModel) -> CorrelationTensor:
    """Bilocal (``n = 2``) evaluation; use :func:`nlocal.tensor.to_tripartite`
    for the ``(a, b, c | x, y, z)`` view."""
    if m.scenario.n != 2:
        raise ModelError(f"bilocal model needs 2 sources, got {m.scenario.n}")
    return evaluate_nlocal(m)


def evaluate_canonical(c: CanonicalNLocalForm) -> CorrelationTensor:
    return evaluate_nlocal(c.to_model())


def evaluate(obj) -> CorrelationTensor:
    """Evaluate any model-like object to its tensor."""
    if isinstance(obj, DiscreteNLocalModel):
        return evaluate_nlocal(obj)
    if isinstance(obj, CanonicalNLocalForm):
        return evaluate_canonical(obj)
    if isinstance(obj, FullExpansion):
        return obj.to_tensor()
    if isinstance(obj, TriangleModel):
        return evaluate_triangle(obj)
    raise TypeError(f"cannot evaluate {type(obj).__name__}")


def evaluate_triangle(m: TriangleModel) -> CorrelationTensor:
    """``P(a,b,c) = sum q1 q2 q3 P_A(a|l3 l1) P_B(b|l1 l2) P_C(c|l2 l3)``."""
    q1, q2, q3 = m.source_dists
    p = np.einsum("i,j,k,kia,ijb,jkc->acb", q1, q2, q3,
                  m.response_A, m.response_B, m.response_C, optimize=True)
    s = m.scenario
    return CorrelationTensor(s, p.reshape(s.shape))


def triangle_from_bilocal(m: DiscreteNLocalModel) -> TriangleModel:
    """Embed a bilocal probability-tensor model with a trivial third source."""
    s = m.scenario
    if s.n != 2 or not s.is_probability_tensor:
        raise ModelError("need a bilocal model with a single input per party")
    qa, qc = m.source_dists
    ra = m.edge_responses[0][:, 0, :][None, :, :]       # [l3=1, l1, a]
    rb = m.hub_response[:, :, 0, :]                     # [l1, l2, b]
    rc = m.edge_responses[1][:, 0, :][:, None, :]       # [l2, l3=1, c]
    return TriangleModel((qa, qc, np.ones(1)), ra, rb, rc)


# constructors --------------------------------------------------------------------

def product_model(tables: Sequence[np.ndarray]) -> DiscreteNLocalModel:
    """Model with trivial sources reproducing ``P_1 (x) .. (x) P_n (x) P_B``.

    ``tables`` are ``[a, x]`` single-party tables, hub last.
    """
    tables = [np.asarray(t, dtype=float) for t in tables]
    n = len(tables) - 1
    s = Scenario(tuple(t.shape[0] for t in tables[:-1]),
                 tuple(t.shape[1] for t in tables[:-1]),
                 tables[-1].shape[0], tables[-1].shape[1])
    edges = [t.T[None, :, :] for t in tables[:-1]]
    hub = tables[-1].T.reshape((1,) * n + tables[-1].T.shape)
    return DiscreteNLocalModel(s, [np.ones(1)] * n, edges, hub)


def random_model(s: Scenario, dims: Sequence[int],
                 rng: np.random.Generator) -> DiscreteNLocalModel:
    """Sources and response rows drawn from a flat Dirichlet."""
    qs = [rng.dirichlet(np.ones(d)) for d in dims]
    edges = [rng.dirichlet(np.ones(s.edge_outcomes[i]),
                           size=(dims[i], s.edge_inputs[i])) for i in range(s.n)]
    hub = rng.dirichlet(np.ones(s.hub_outcomes), size=tuple(dims) + (s.hub_inputs,))
    return DiscreteNLocalModel(s, qs, edges, hub)


def random_canonical(s: Scenario, rng: np.random.Generator) -> CanonicalNLocalForm:
    dims = tuple(s.strategy_count(i) for i in range(s.n))
    pis = [rng.dirichlet(np.ones(d)) for d in dims]
    hub = rng.dirichlet(np.ones(s.hub_outcomes), size=dims + (s.hub_inputs,))
    return CanonicalNLocalForm(s, pis, hub)


# normal forms --------------------------------------------------------------------

def canonicalize(m: DiscreteNLocalModel, tol: float = 1e-12) -> CanonicalNLocalForm:
    """Rewrite a model with deterministic edge strategies as hidden variables.

    Each edge response matrix is decomposed per hidden value into strategy
    weights ``alpha_i(k|lam_i)``.  Then ``pi_i(k) = sum q_i alpha_i`` and the
    hub table is the conditional average of ``P_B`` given the strategies,
    falling back to the uniform distribution on cells of zero weight.
    """
    s = m.scenario
    n = s.n
    alphas = []
    for i in range(n):
        resp = m.edge_responses[i]
        alphas.append(np.stack([decompose_rs(resp[lam], tol).as_vector()
                                for lam in range(resp.shape[0])]))
    pis = [m.source_dists[i] @ alphas[i] for i in range(n)]

    # labels: lam_i -> i, k_i -> n+i, y -> 2n, b -> 2n+1
    ops = [m.hub_response, list(range(n)) + [2 * n, 2 * n + 1]]
    for i in range(n):
        ops += [m.source_dists[i], [i], alphas[i], [i, n + i]]
    num = np.einsum(*ops, [n + i for i in range(n)] + [2 * n, 2 * n + 1],
                    optimize=True)
    den = pis[0]
    for p in pis[1:]:
        den = np.multiply.outer(den, p)
    den = den[..., None, None]
    positive = den > 0
    hub = np.where(positive, num / np.where(positive, den, 1.0),
                   1.0 / s.hub_outcomes)
    hub = np.broadcast_to(hub, num.shape)
    return CanonicalNLocalForm(s, pis, hub)


def expand_full(c: CanonicalNLocalForm, tol: float = 1e-12) -> FullExpansion:
    """Decompose every hub row-block into hub strategies ``p(j | k)``."""
    s = c.scenario
    dims = c.strategy_dims
    flat = c.hub_table.reshape((-1, s.hub_inputs, s.hub_outcomes))
    p = np.stack([decompose_rs(cell, tol).as_vector() for cell in flat])
    return FullExpansion(s, c.strategy_dists,
                         p.reshape(dims + (s.hub_strategy_count,)))


# geometric constructions ---------------------------------------------------------

def edge_marginal(m: DiscreteNLocalModel, i: int) -> np.ndarray:
    """``P_{A_i}(a|x)`` as an ``[a, x]`` table."""
    return np.einsum("l,lxa->ax", m.source_dists[i], m.edge_responses[i])


def sun(m: DiscreteNLocalModel, k: int) -> CorrelationTensor:
    """``(x)_{i != k} P_{A_i}  (x)  uniform_k  (x)  uniform_B``."""
    s = m.scenario
    tables = []
    for i in range(s.n):
        if i == k:
            tables.append(np.full((s.edge_outcomes[i], s.edge_inputs[i]),
                                  1.0 / s.edge_outcomes[i]))
        else:
            tables.append(edge_marginal(m, i))
    tables.append(np.full((s.hub_outcomes, s.hub_inputs), 1.0 / s.hub_outcomes))
    return CorrelationTensor(s, product_values(tables))


def star_mix(m: DiscreteNLocalModel, free_edge, t: float) -> DiscreteNLocalModel:
    """Model evaluating to ``(1 - t) * sun(m, k) + t * evaluate(m)``.

    Source ``k`` is extended by a coin ``s``; on ``s = 0`` (probability
    ``1 - t``) edge ``k`` and the hub answer uniformly.  Hidden value
    ``(lam, s)`` is stored at position ``s * d_k + lam``.
    """
    if not 0 <= t <= 1:
        raise ValueError(f"t = {t} outside [0, 1]")
    s = m.scenario
    k = resolve_party(s, free_edge)
    if k == s.hub:
        raise ValueError("the free party must be an edge, not the hub")
    q = m.source_dists[k]
    qs = list(m.source_dists)
    qs[k] = np.concatenate([(1 - t) * q, t * q])
    es = list(m.edge_responses)
    es[k] = np.concatenate(
        [np.full_like(es[k], 1.0 / s.edge_outcomes[k]), es[k]], axis=0)
    hub = np.concatenate(
        [np.full_like(m.hub_response, 1.0 / s.hub_outcomes), m.hub_response],
        axis=k)
    return DiscreteNLocalModel(s, qs, es, hub)


def _blend(m: DiscreteNLocalModel, w: float) -> DiscreteNLocalModel:
    s = m.scenario
    es = [w * e + (1 - w) / s.edge_outcomes[i]
          for i, e in enumerate(m.edge_responses)]
    hub = w * m.hub_response + (1 - w) / s.hub_outcomes
    return DiscreteNLocalModel(s, m.source_dists, es, hub)


def path_point(mP: DiscreteNLocalModel, mQ: DiscreteNLocalModel,
               t: float) -> DiscreteNLocalModel:
    """Point ``t`` of the path ``P -> uniform -> Q`` through n-local models.

    For ``t <= 1/2`` the responses of ``mP`` are mixed with weight
    ``1 - 2t`` against uniform; beyond that ``mQ`` with weight ``2t - 1``.
    """
    if mP.scenario != mQ.scenario:
        raise ValueError("path endpoints live in different scenarios")
    if not 0 <= t <= 1:
        raise ValueError(f"t = {t} outside [0, 1]")
    if t <= 0.5:
        return _blend(mP, 1 - 2 * t)
    return _blend(mQ, 2 * t - 1)


def discard_edge(m: DiscreteNLocalModel, i: int) -> DiscreteNLocalModel:
    """(n-1)-local model of the marginal with edge ``i`` traced out."""
    s = m.scenario
    if s.n < 2:
        raise ModelError("cannot discard the only edge")
    keep = [j for j in range(s.n) if j != i]
    hub = np.tensordot(m.source_dists[i], m.hub_response, axes=([0], [i]))
    s2 = Scenario(tuple(s.edge_outcomes[j] for j in keep),
                  tuple(s.edge_inputs[j] for j in keep),
                  s.hub_outcomes, s.hub_inputs)
    return DiscreteNLocalModel(s2, [m.source_dists[j] for j in keep],
                               [m.edge_responses[j] for j in keep], hub)


def relabel_hub(t: CorrelationTensor, new_hub) -> CorrelationTensor:
    """Swap a tripartite party into the hub slot.

    The swapped-out hub takes the vacated edge position, so relabeling twice
    with the same party restores the original tensor.
    """
    s = t.scenario
    if s.n != 2:
        raise ValueError("hub relabeling is defined for tripartite tensors")
    p = resolve_party(s, new_hub)
    if p == s.hub:
        return t
    parties = s.parties()
    order = list(range(3))
    order[p], order[2] = 2, p
    new = [parties[j] for j in order]
    s2 = Scenario((new[0][0], new[1][0]), (new[0][1], new[1][1]),
                  new[2][0], new[2][1])
    axes = order + [3 + j for j in order]
    return CorrelationTensor(s2, t.values.transpose(axes))


def uniform_model(s: Scenario) -> DiscreteNLocalModel:
    tables = [np.full((o, m), 1.0 / o) for o, m in s.parties()]
    return product_model(tables)


__all__ = [
    "CanonicalNLocalForm", "DiscreteNLocalModel", "FullExpansion", "ModelError",
    "TriangleModel", "canonicalize", "discard_edge", "edge_marginal", "evaluate",
    "evaluate_bilocal", "evaluate_canonical", "evaluate_nlocal",
    "evaluate_triangle", "expand_full", "path_point", "product_model",
    "random_canonical", "random_model", "relabel_hub", "star_mix", "sun",
    "triangle_from_bilocal", "uniform_ct", "uniform_model",
]
