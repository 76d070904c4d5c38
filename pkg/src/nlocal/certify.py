"""
Membership certificates for the n-local and Bell-local sets.

* :func:`factorization_check` -- the edge marginals of an n-local tensor
  factorize; failure is a sound proof of non-n-locality.
* :func:`bell_local_lp` -- exact LP feasibility over the deterministic
  polytope, with the minimal sup-norm violation as a certificate otherwise.
* :func:`nlocal_search` -- multi-start block-coordinate descent over the
  strategy-indexed normal form; it can find witnesses but never refutes.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field
from math import prod
from typing import Any, Sequence

import numpy as np

from .models import CanonicalNLocalForm, evaluate_canonical, relabel_hub
from .optim import linprog_eq, project_simplex
from .strategies import strategy_tables
from .tensor import (CorrelationTensor, distance, marginal, mix,
                     product_values, resolve_party)

LP_VARIABLE_CAP = 100_000


class Verdict(str, enum.Enum):
    NLOCAL_WITNESS = "NLOCAL_WITNESS"
    BELL_LOCAL = "BELL_LOCAL"
    NOT_BELL_LOCAL = "NOT_BELL_LOCAL"
    NECESSARY_FAIL = "NECESSARY_FAIL"
    UNKNOWN = "UNKNOWN"

    @property
    def is_negative(self) -> bool:
        return self in (Verdict.NECESSARY_FAIL, Verdict.NOT_BELL_LOCAL)


@dataclass(frozen=True, eq=False)
class CertReport:
    """``witness`` is a weight array for LP verdicts and a
    :class:`CanonicalNLocalForm` for search verdicts."""

    verdict: Verdict
    defect: float
    witness: Any = None
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SearchConfig:
    """Settings for :func:`nlocal_search`.

    ``step`` is the projected-gradient step length in units of ``1 / L``,
    where ``L`` is the exact Lipschitz constant of the current block.
    """

    restarts: int = 20
    max_iters: int = 2000
    tol: float = 1e-6
    step: float = 1.0
    seed: int = 0
    inner_iters: int = 10
    extrapolate: bool = True
    check_every: int = 10

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1 or self.inner_iters < 1 or self.check_every < 1:
            raise ValueError("iteration counts must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if not 0 < self.step <= 1:
            raise ValueError("step must lie in (0, 1] (units of 1/L)")

    def to_dict(self) -> dict:
        return asdict(self)


# factorization ------------------------------------------------------------------

def factorization_check(t: CorrelationTensor, hub=None,
                        tol: float = 1e-9) -> CertReport:
    """Compare the joint edge marginal with the product of single-edge ones.

    ``hub`` (tripartite only) moves the named party into the hub slot first.
    The defect is the larger of the full-product gap and every pairwise gap.
    """
    s = t.scenario
    relabeled = False
    if hub is not None and resolve_party(s, hub) != s.hub:
        t = relabel_hub(t, hub)
        s = t.scenario
        relabeled = True
    n = s.n
    edges = list(range(n))
    joint = marginal(t, edges).values
    singles = [marginal(t, [i]).values.reshape(s.edge_outcomes[i], s.edge_inputs[i])
               for i in edges]
    prod_vals = product_values(singles + [np.ones((1, 1))])
    gap = np.abs(joint - prod_vals)
    full = float(gap.max())
    pair = {}
    for i in range(n):
        for j in range(i + 1, n):
            pij = marginal(t, [i, j]).values
            pp = product_values([singles[i], singles[j], np.ones((1, 1))])
            pair[f"{i},{j}"] = float(np.abs(pij - pp).max())
    defect = max([full] + list(pair.values()))
    verdict = Verdict.NECESSARY_FAIL if defect > tol else Verdict.UNKNOWN
    # gap has the layout (a_1..a_n, b=1, x_1..x_n, y=1); drop the trivial hub
    gap = gap.reshape(tuple(s.edge_outcomes) + tuple(s.edge_inputs))
    details = {"test": "factorization", "tol": tol, "relabeled": relabeled,
               "hub": hub if hub is None or isinstance(hub, str) else int(hub),
               "full_product_defect": full, "pairwise_defects": pair,
               "gap": gap}
    return CertReport(verdict, defect, None, details)


# Bell-local LP -------------------------------------------------------------------

def deterministic_matrix(s, cap: int = LP_VARIABLE_CAP) -> np.ndarray:
    """Columns are the flattened deterministic tensors ``D_{k_1..k_n, j}``
    (C order over strategy indices, tensor entries in storage order)."""
    counts = [s.strategy_count(p) for p in range(s.n + 1)]
    V = prod(counts)
    if V > cap:
        raise ValueError(f"{V} deterministic strategies exceed the cap {cap}")
    k = s.n + 1
    ops = []
    for p, (o, m) in enumerate(s.parties()):
        # strategy label p, output label k+p, input label 2k+p
        ops += [strategy_tables(m, o), [p, 2 * k + p, k + p]]
    out = list(range(k)) + [k + p for p in range(k)] + [2 * k + p for p in range(k)]
    D = np.einsum(*ops, out, optimize=True).reshape((V,) + s.shape)
    return D.reshape(V, -1, order="F").T


def _lp_residual(D, p, q):
    return max(float(np.abs(D @ q - p).max()), abs(float(q.sum()) - 1.0))


def bell_local_lp(t: CorrelationTensor, tol: float = 1e-9,
                  cap: int = LP_VARIABLE_CAP) -> CertReport:
    """Decide ``t = sum_v q_v D_v`` with ``q`` a probability vector.

    On infeasibility a second LP minimizes ``s`` subject to
    ``|D q - t|_inf <= s``; the optimum is reported as the defect.
    """
    s = t.scenario
    D = deterministic_matrix(s, cap)
    p = t.flat()
    R, V = D.shape
    counts = tuple(s.strategy_count(i) for i in range(s.n + 1))
    A = np.vstack([D, np.ones((1, V))])
    b = np.append(p, 1.0)
    res = linprog_eq(np.zeros(V), A, b)
    q = np.maximum(res.x, 0.0)
    resid = _lp_residual(D, p, q)
    details = {"test": "bell_local_lp", "tol": tol, "variables": V,
               "constraints": R + 1, "phase1_status": res.status,
               "iterations": res.iterations}
    if res.status == "optimal" and resid <= tol:
        details["residual"] = resid
        return CertReport(Verdict.BELL_LOCAL, resid, q.reshape(counts), details)

    # variables: q (V), s (1), u1 (R), u2 (R)
    I = np.eye(R)
    one = np.ones((R, 1))
    A2 = np.block([[D, -one, I, np.zeros((R, R))],
                   [D, one, np.zeros((R, R)), -I],
                   [np.ones((1, V)), np.zeros((1, 1 + 2 * R))]])
    b2 = np.concatenate([p, p, [1.0]])
    c2 = np.zeros(V + 1 + 2 * R)
    c2[V] = 1.0
    res2 = linprog_eq(c2, A2, b2)
    q2 = np.maximum(res2.x[:V], 0.0)
    violation = _lp_residual(D, p, q2)
    details.update(linf_status=res2.status, linf_objective=float(res2.x[V]),
                   residual=violation, iterations=res.iterations + res2.iterations)
    if violation <= tol:
        return CertReport(Verdict.BELL_LOCAL, violation, q2.reshape(counts), details)
    return CertReport(Verdict.NOT_BELL_LOCAL, violation, q2.reshape(counts), details)


def hull_membership_sample(ts: Sequence[CorrelationTensor], weights,
                           tol: float = 1e-9) -> CertReport:
    """Mix n-local tensors and confirm the mixture is Bell local."""
    m = mix(list(zip(np.asarray(weights, dtype=float), ts)))
    rep = bell_local_lp(m, tol)
    rep.details["mixture_size"] = len(ts)
    return rep


# n-local search ------------------------------------------------------------------

class _Problem:
    """Batched objective ``1/2 |P(pi, H) - T|^2`` over the normal form.

    Labels: batch 0, k_i 1+i, a_i n+1+i, x_i 2n+1+i, b 3n+1, y 3n+2.
    """

    def __init__(self, t: CorrelationTensor):
        s = t.scenario
        self.s = s
        self.n = n = s.n
        self.F = [strategy_tables(s.edge_inputs[i], s.edge_outcomes[i])
                  for i in range(n)]                       # [k, x, a]
        self.Fflat = [f.reshape(f.shape[0], -1) for f in self.F]
        self.T = t.values
        self.N = [f.shape[0] for f in self.F]
        self.k = [1 + i for i in range(n)]
        self.a = [n + 1 + i for i in range(n)]
        self.x = [2 * n + 1 + i for i in range(n)]
        self.b, self.y = 3 * n + 1, 3 * n + 2
        self.out = [0] + self.a + [self.b] + self.x + [self.y]
        self.hub = [0] + self.k + [self.y, self.b]

    def evaluate(self, pis, H):
        ops = [H, self.hub]
        for i in range(self.n):
            ops += [pis[i], [0, self.k[i]], self.F[i], [self.k[i], self.x[i], self.a[i]]]
        return np.einsum(*ops, self.out, optimize=True)

    def residual(self, pis, H):
        return self.evaluate(pis, H) - self.T

    def objective(self, pis, H):
        r = self.residual(pis, H)
        return 0.5 * (r ** 2).reshape(r.shape[0], -1).sum(axis=1)

    def sup_residual(self, pis, H):
        r = self.residual(pis, H)
        return np.abs(r).reshape(r.shape[0], -1).max(axis=1)

    def hub_step(self, pis, H, step, inner):
        """FISTA on the hub block; Hessian is the Kronecker product of the
        per-edge Gram matrices ``diag(pi) F F^T diag(pi)``."""
        n = self.n
        grams = [np.einsum("bk,ke,le,bl->bkl", p, f, f, p)
                 for p, f in zip(pis, self.Fflat)]
        L = np.ones(H.shape[0])
        for g in grams:
            L = L * np.linalg.eigvalsh(g)[:, -1]
        eta = step / np.maximum(L, 1e-300)
        ops = [self.T, self.out[1:]]
        for i in range(n):
            ops += [pis[i], [0, self.k[i]], self.F[i], [self.k[i], self.x[i], self.a[i]]]
        lin = np.einsum(*ops, self.hub, optimize=True)     # W^T t
        kk = [n + 1 + i for i in range(n)]                  # reuse a-labels as l_i
        gram_ops = []
        for i, g in enumerate(grams):
            gram_ops += [g, [0, self.k[i], kk[i]]]
        src = [0] + kk + [self.y, self.b]
        shape = (-1,) + (1,) * (H.ndim - 1)
        Y = H
        tk = 1.0
        for _ in range(inner):
            grad = np.einsum(*gram_ops, Y, src, self.hub, optimize=True) - lin
            Hn = project_simplex(Y - eta.reshape(shape) * grad)
            tn = (1 + np.sqrt(1 + 4 * tk * tk)) / 2
            Y = Hn + ((tk - 1) / tn) * (Hn - H)
            H, tk = Hn, tn
        return H

    def pi_step(self, pis, H, i, step, inner):
        n = self.n
        ops = [H, self.hub]
        for j in range(n):
            if j == i:
                ops += [self.F[j], [self.k[j], self.x[j], self.a[j]]]
            else:
                ops += [pis[j], [0, self.k[j]], self.F[j],
                        [self.k[j], self.x[j], self.a[j]]]
        A = np.einsum(*ops, [0, self.k[i]] + self.out[1:], optimize=True)
        A = A.reshape(A.shape[0], A.shape[1], -1)
        G = np.einsum("bke,ble->bkl", A, A)
        lin = A @ self.T.reshape(-1)
        eta = step / np.maximum(np.linalg.eigvalsh(G)[:, -1], 1e-300)
        p = pis[i]
        Y = p
        tk = 1.0
        for _ in range(inner):
            grad = np.einsum("bkl,bl->bk", G, Y) - lin
            pn = project_simplex(Y - eta[:, None] * grad)
            tn = (1 + np.sqrt(1 + 4 * tk * tk)) / 2
            Y = pn + ((tk - 1) / tn) * (pn - p)
            p, tk = pn, tn
        return p


def nlocal_search(t: CorrelationTensor, cfg: SearchConfig | None = None,
                  factorization_tol: float = 1e-9) -> CertReport:
    """Search for a normal-form model reproducing ``t``.

    All restarts run together as a batch.  Each sweep updates the hub table
    and then every strategy distribution; each block is a simplex-constrained
    least-squares problem handled by accelerated projected gradient with step
    ``cfg.step / L``.  Between sweeps an extrapolated point
    ``X + it**(1/3) (X - X_prev)`` (projected) replaces ``X`` whenever it has
    lower objective.  The search stops once any restart reaches ``cfg.tol``
    in sup norm.
    """
    cfg = cfg or SearchConfig()
    pre = factorization_check(t, tol=factorization_tol)
    if pre.verdict is Verdict.NECESSARY_FAIL:
        pre.details["search"] = "skipped: factorization failed"
        return pre

    prob = _Problem(t)
    s = t.scenario
    B = cfg.restarts
    rng = np.random.default_rng(cfg.seed)
    pis = [rng.dirichlet(np.ones(N), size=B) for N in prob.N]
    H = rng.dirichlet(np.ones(s.hub_outcomes), size=(B, *prob.N, s.hub_inputs))

    prev = None
    it = 0
    sup = prob.sup_residual(pis, H)
    while it < cfg.max_iters and sup.min() > cfg.tol:
        it += 1
        if cfg.extrapolate and prev is not None:
            alpha = it ** (1 / 3)
            pp = [project_simplex(p + alpha * (p - q)) for p, q in zip(pis, prev[0])]
            Hp = project_simplex(H + alpha * (H - prev[1]))
            better = prob.objective(pp, Hp) < prob.objective(pis, H)
            pis = [np.where(better[:, None], u, v) for u, v in zip(pp, pis)]
            H = np.where(better.reshape((-1,) + (1,) * (H.ndim - 1)), Hp, H)
        prev = (pis, H)
        H = prob.hub_step(pis, H, cfg.step, cfg.inner_iters)
        pis = list(pis)
        for i in range(s.n):
            pis[i] = prob.pi_step(pis, H, i, cfg.step, cfg.inner_iters)
        if it % cfg.check_every == 0 or it == cfg.max_iters:
            sup = prob.sup_residual(pis, H)

    best = int(np.argmin(sup))
    witness = CanonicalNLocalForm(s, [p[best] for p in pis], H[best])
    recheck = distance(evaluate_canonical(witness), t)[0]
    details = {"test": "nlocal_search", "config": cfg.to_dict(),
               "seed": cfg.seed, "sweeps": it, "best_restart": best,
               "restart_residuals": [float(v) for v in sup],
               "factorization_defect": pre.defect}
    if recheck <= cfg.tol:
        return CertReport(Verdict.NLOCAL_WITNESS, float(recheck), witness, details)
    return CertReport(Verdict.UNKNOWN, float(recheck), None, details)


__all__ = [
    "CertReport", "LP_VARIABLE_CAP", "SearchConfig", "Verdict",
    "bell_local_lp", "deterministic_matrix", "factorization_check",
    "hull_membership_sample", "nlocal_search",
]
