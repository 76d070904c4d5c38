"""
Separable quantum realizations of n-local correlations.

Every operator is stored either as a dense square matrix (2-D array) or, when
it is diagonal in the computational basis, as its diagonal (1-D array).  The
constructions here only ever emit diagonal operators; dense ones are accepted
so hand-written realizations can be validated and evaluated too.

Each source ``i`` distributes a bipartite state on ``H_{A_i} (x) H_{B_i}``.
The hub holds ``H_{B_1} (x) .. (x) H_{B_n}`` and its effects act there.  The
wiring permutation reorders the tensor factors ``A_1 B_1 A_2 B_2 ..`` into
``A_1 .. A_n B_1 .. B_n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .models import CanonicalNLocalForm, DiscreteNLocalModel
from .strategies import strategy_tables
from .tensor import CorrelationTensor, Scenario

DENSE_CAP = 4096


class RealizationError(ValueError):
    pass


def _freeze(a, dtype=complex) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


def as_dense(op: np.ndarray) -> np.ndarray:
    op = np.asarray(op)
    return np.diag(op) if op.ndim == 1 else op


def is_diagonal(op: np.ndarray) -> bool:
    return np.asarray(op).ndim == 1


def op_dim(op: np.ndarray) -> int:
    return np.asarray(op).shape[0]


@dataclass(frozen=True, eq=False)
class SeparableState:
    """Bipartite state ``rho`` with a recorded decomposition
    ``sum_l w_l |e_l><e_l| (x) |f_l><f_l|``.

    ``matrix`` is indexed ``(A, B)`` with ``B`` fastest, as in ``np.kron``.
    """

    dims: tuple[int, int]
    matrix: np.ndarray
    weights: np.ndarray
    e_vectors: np.ndarray
    f_vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "matrix", _freeze(self.matrix))
        object.__setattr__(self, "weights", _freeze(self.weights, float))
        object.__setattr__(self, "e_vectors", _freeze(self.e_vectors))
        object.__setattr__(self, "f_vectors", _freeze(self.f_vectors))
        dA, dB = self.dims
        if op_dim(self.matrix) != dA * dB or self.matrix.ndim not in (1, 2):
            raise RealizationError(f"state matrix does not act on C^{dA} (x) C^{dB}")
        d = self.weights.size
        if self.e_vectors.shape != (d, dA) or self.f_vectors.shape != (d, dB):
            raise RealizationError("decomposition vectors have the wrong shape")

    @property
    def dim(self) -> int:
        return self.dims[0] * self.dims[1]

    def decomposition_sum(self) -> np.ndarray:
        """Dense ``sum_l w_l |e_l f_l><e_l f_l|``."""
        v = np.einsum("la,lb->lab", self.e_vectors, self.f_vectors).reshape(
            self.weights.size, -1)
        return np.einsum("l,li,lj->ij", self.weights, v, v.conj())


@dataclass(frozen=True, eq=False)
class POVMFamily:
    """``edges[i][x, a]`` is ``M_{a|x}`` on ``H_{A_i}``; ``hub[y, b]`` is
    ``N_{b|y}`` on ``H_{B_1} (x) .. (x) H_{B_n}``.  Trailing axes hold either a
    diagonal (one axis) or a dense matrix (two axes)."""

    edges: tuple[np.ndarray, ...]
    hub: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(_freeze(e) for e in self.edges))
        object.__setattr__(self, "hub", _freeze(self.hub))

    def families(self):
        """Yield ``(party, array)`` with the hub last."""
        yield from enumerate(self.edges)
        yield len(self.edges), self.hub


def wiring_permutation(n: int) -> tuple[int, ...]:
    """Position ``j`` of ``A_1..A_n B_1..B_n`` takes factor ``perm[j]`` of
    ``A_1 B_1 .. A_n B_n``."""
    return tuple(range(0, 2 * n, 2)) + tuple(range(1, 2 * n, 2))


@dataclass(frozen=True, eq=False)
class QuantumRealization:
    scenario: Scenario
    states: tuple[SeparableState, ...]
    povms: POVMFamily
    wiring: tuple[int, ...] = field(default=())

    def __post_init__(self):
        n = self.scenario.n
        object.__setattr__(self, "states", tuple(self.states))
        if not self.wiring:
            object.__setattr__(self, "wiring", wiring_permutation(n))
        object.__setattr__(self, "wiring", tuple(int(w) for w in self.wiring))
        if sorted(self.wiring) != list(range(2 * n)):
            raise RealizationError(f"wiring {self.wiring} is not a permutation "
                                   f"of {2 * n} factors")
        if len(self.states) != n or len(self.povms.edges) != n:
            raise RealizationError(f"need {n} states and {n} edge POVM families")
        s = self.scenario
        for i, (st, fam) in enumerate(zip(self.states, self.povms.edges)):
            want = (s.edge_inputs[i], s.edge_outcomes[i])
            if fam.shape[:2] != want or fam.shape[2] != st.dims[0]:
                raise RealizationError(f"edge {i + 1} effects have shape "
                                       f"{fam.shape}")
        hub_dim = prod(st.dims[1] for st in self.states)
        if self.povms.hub.shape[:3] != (s.hub_inputs, s.hub_outcomes, hub_dim):
            raise RealizationError(f"hub effects have shape {self.povms.hub.shape}")

    @property
    def local_dims(self) -> list[tuple[int, int]]:
        return [st.dims for st in self.states]

    @property
    def total_dim(self) -> int:
        return prod(st.dim for st in self.states)

    def is_diagonal(self) -> bool:
        fams = [f for _, f in self.povms.families()]
        return (all(f.ndim == 3 for f in fams)
                and all(is_diagonal(st.matrix) for st in self.states))


# synthesis -----------------------------------------------------------------------

def realize(c: CanonicalNLocalForm) -> QuantumRealization:
    """Classically correlated states and diagonal effects in the strategy basis.

    ``rho_i = sum_k pi_i(k) |kk><kk|``, ``M_{a|x} = sum_k [J_k(x) = a] |k><k|``
    and ``N_{b|y} = sum_k P_B(b|y,k) |k_1..k_n><k_1..k_n|``.
    """
    s = c.scenario
    states = []
    edges = []
    for i, pi in enumerate(c.strategy_dists):
        N = pi.size
        diag = np.zeros((N, N))
        diag[np.arange(N), np.arange(N)] = pi
        basis = np.eye(N)
        states.append(SeparableState((N, N), diag.reshape(-1), pi, basis, basis))
        # strategy_tables[k, x, a] -> effects[x, a, k]
        edges.append(np.moveaxis(strategy_tables(s.edge_inputs[i],
                                                 s.edge_outcomes[i]), 0, -1))
    n = s.n
    hub = np.moveaxis(c.hub_table, (n, n + 1), (0, 1)).reshape(
        s.hub_inputs, s.hub_outcomes, -1)
    return QuantumRealization(s, tuple(states), POVMFamily(tuple(edges), hub))


def product_realization(s: Scenario, kets, povms: POVMFamily) -> QuantumRealization:
    """Pure product states ``|e_i> (x) |f_i>`` given as ``kets[i] = (e, f)``."""
    states = []
    for e, f in kets:
        e = np.asarray(e, dtype=complex)
        f = np.asarray(f, dtype=complex)
        v = np.kron(e, f)
        states.append(SeparableState((e.size, f.size), np.outer(v, v.conj()),
                                     np.ones(1), e[None], f[None]))
    return QuantumRealization(s, tuple(states), povms)


# evaluation ----------------------------------------------------------------------

def _born_diagonal(r: QuantumRealization) -> np.ndarray:
    s = r.scenario
    n = s.n
    # labels: kA_i -> i, kB_i -> n+i, a_i -> 2n+i, x_i -> 3n+i, b -> 4n, y -> 4n+1
    ops = []
    for i, st in enumerate(r.states):
        ops += [st.matrix.reshape(st.dims), [i, n + i],
                r.povms.edges[i], [3 * n + i, 2 * n + i, i]]
    hub = r.povms.hub.reshape(r.povms.hub.shape[:2]
                              + tuple(st.dims[1] for st in r.states))
    ops += [hub, [4 * n + 1, 4 * n] + [n + i for i in range(n)]]
    out = [2 * n + i for i in range(n)] + [4 * n] + [3 * n + i for i in range(n)] + [4 * n + 1]
    return np.einsum(*ops, out, optimize=True)


def global_state(r: QuantumRealization, cap: int = DENSE_CAP) -> np.ndarray:
    """``T (rho_1 (x) .. (x) rho_n) T^dagger`` on ``(x)A_i (x) (x)B_i``."""
    D = r.total_dim
    if D > cap:
        raise RealizationError(f"product dimension {D} exceeds the dense cap {cap}")
    rho = np.ones((1, 1), dtype=complex)
    for st in r.states:
        rho = np.kron(rho, as_dense(st.matrix))
    factors = [d for st in r.states for d in st.dims]
    k = len(factors)
    rho = rho.reshape(factors + factors)
    perm = list(r.wiring)
    rho = rho.transpose(perm + [k + p for p in perm])
    return rho.reshape(D, D)


def _born_trace(r: QuantumRealization, cap: int) -> np.ndarray:
    s = r.scenario
    n = s.n
    rho = global_state(r, cap)
    dA = prod(st.dims[0] for st in r.states)
    dB = prod(st.dims[1] for st in r.states)
    rho4 = rho.reshape(dA, dB, dA, dB)
    edge_ops = [[[as_dense(f[x, a]) for a in range(f.shape[1])]
                 for x in range(f.shape[0])] for f in r.povms.edges]
    hub_ops = [[as_dense(r.povms.hub[y, b]) for b in range(s.hub_outcomes)]
               for y in range(s.hub_inputs)]
    out = np.zeros(s.shape)
    for xs in np.ndindex(*s.edge_inputs):
        for outs in np.ndindex(*s.edge_outcomes):
            EA = np.ones((1, 1), dtype=complex)
            for i in range(n):
                EA = np.kron(EA, edge_ops[i][xs[i]][outs[i]])
            # partial trace over the edge systems against EA
            R = np.einsum("ji,ikjl->kl", EA, rho4)
            for y in range(s.hub_inputs):
                for b in range(s.hub_outcomes):
                    val = np.trace(hub_ops[y][b] @ R)
                    out[outs + (b,) + xs + (y,)] = val.real
    return out


def born_evaluate(r: QuantumRealization, method: str = "auto",
                  cap: int = DENSE_CAP) -> CorrelationTensor:
    """Born statistics ``tr[(M_{a_1|x_1} (x) .. (x) N_{b|y}) T rho T^dagger]``.

    ``method`` is ``"diagonal"`` (commuting fast path, requires diagonal
    operators), ``"trace"`` (dense full trace, product dimension at most
    ``cap``) or ``"auto"``.
    """
    if method not in ("auto", "diagonal", "trace"):
        raise ValueError(f"unknown method {method!r}")
    if method == "diagonal" or (method == "auto" and r.is_diagonal()):
        if not r.is_diagonal():
            raise RealizationError("diagonal path needs diagonal operators")
        vals = _born_diagonal(r).real
    else:
        vals = _born_trace(r, cap)
    return CorrelationTensor(r.scenario, vals)


def extract_model(r: QuantumRealization) -> DiscreteNLocalModel:
    """Discrete n-local model read off the recorded separable decompositions.

    ``P_i(a|x,l) = <e_l|M_{a|x}|e_l>`` and
    ``P_B(b|y,l_1..l_n) = <f_{l_1}..f_{l_n}|N_{b|y}|f_{l_1}..f_{l_n}>``.
    """
    s = r.scenario
    n = s.n
    edges = []
    for st, fam in zip(r.states, r.povms.edges):
        e = st.e_vectors
        if fam.ndim == 3:
            p = np.einsum("xak,lk->lxa", fam, np.abs(e) ** 2)
        else:
            p = np.einsum("lj,xajk,lk->lxa", e.conj(), fam, e)
        edges.append(p.real)
    hub = r.povms.hub
    dims = tuple(st.dims[1] for st in r.states)
    fs = [st.f_vectors for st in r.states]
    if hub.ndim == 3:
        ops = [hub.reshape(hub.shape[:2] + dims), [2 * n + 1, 2 * n] + list(range(n))]
        for i, f in enumerate(fs):
            ops += [np.abs(f) ** 2, [n + i, i]]
        pb = np.einsum(*ops, [n + i for i in range(n)] + [2 * n + 1, 2 * n],
                       optimize=True)
    else:
        # ket labels i, hidden labels n+i, bra labels 2n+2+i
        ops = [hub.reshape(hub.shape[:2] + dims + dims),
               [2 * n + 1, 2 * n] + [2 * n + 2 + i for i in range(n)] + list(range(n))]
        for i, f in enumerate(fs):
            ops += [f.conj(), [n + i, 2 * n + 2 + i], f, [n + i, i]]
        pb = np.einsum(*ops, [n + i for i in range(n)] + [2 * n + 1, 2 * n],
                       optimize=True)
    return DiscreteNLocalModel(s, [st.weights for st in r.states], edges, pb.real)


# validation ----------------------------------------------------------------------

@dataclass(frozen=True)
class RealizationDiagnostics:
    max_hermiticity_defect: float
    max_psd_defect: float
    max_completeness_defect: float
    max_trace_defect: float
    max_decomposition_defect: float
    ok: bool


def _herm_defect(op: np.ndarray) -> float:
    if op.ndim == 1:
        return float(np.abs(op.imag).max(initial=0.0))
    return float(np.abs(op - op.conj().T).max(initial=0.0))


def _min_eig(op: np.ndarray) -> float:
    if op.ndim == 1:
        return float(op.real.min())
    return float(np.linalg.eigvalsh((op + op.conj().T) / 2).min())


def _completeness(fam: np.ndarray) -> float:
    total = fam.sum(axis=1)          # sum over outcomes, per input
    worst = 0.0
    for op in total:
        if op.ndim == 1:
            worst = max(worst, float(np.abs(op - 1).max()))
        else:
            dev = op - np.eye(op.shape[0])
            worst = max(worst, float(np.linalg.norm(dev, 2)))
    return worst


def _decomposition_defect(st: SeparableState) -> float:
    if st.dim <= DENSE_CAP:
        return float(np.abs(st.decomposition_sum() - as_dense(st.matrix)).max())
    # large diagonal states: compare the diagonal, bound the rest by Gram sums
    v = np.einsum("la,lb->lab", st.e_vectors, st.f_vectors).reshape(
        st.weights.size, -1)
    diag = np.einsum("l,li->i", st.weights, np.abs(v) ** 2)
    if st.matrix.ndim != 1:
        raise RealizationError("dense state above the cap")
    gram = np.abs(v @ v.conj().T) ** 2
    w = st.weights
    off = max(float(w @ gram @ w - np.sum(diag ** 2)), 0.0)
    return max(float(np.abs(diag - st.matrix).max()), np.sqrt(off))


def validate_realization(r: QuantumRealization, tol_herm: float = 1e-12,
                         tol_psd: float = 1e-10, tol_complete: float = 1e-10,
                         tol_trace: float = 1e-10,
                         tol_decomp: float = 1e-12) -> RealizationDiagnostics:
    herm = psd = comp = tr = dec = 0.0
    for st in r.states:
        m = st.matrix
        herm = max(herm, _herm_defect(m))
        psd = max(psd, -_min_eig(m))
        trace = m.sum() if m.ndim == 1 else np.trace(m)
        tr = max(tr, abs(trace - 1))
        dec = max(dec, _decomposition_defect(st))
        if st.weights.min() < 0:
            psd = max(psd, -float(st.weights.min()))
    for _, fam in r.povms.families():
        comp = max(comp, _completeness(fam))
        for op in fam.reshape((-1,) + fam.shape[2:]):
            herm = max(herm, _herm_defect(op))
            psd = max(psd, -_min_eig(op))
    psd = max(psd, 0.0)
    ok = (herm <= tol_herm and psd <= tol_psd and comp <= tol_complete
          and tr <= tol_trace and dec <= tol_decomp)
    return RealizationDiagnostics(herm, psd, comp, float(tr), dec, ok)


__all__ = [
    "DENSE_CAP", "POVMFamily", "QuantumRealization", "RealizationDiagnostics",
    "RealizationError", "SeparableState", "as_dense", "born_evaluate",
    "extract_model", "global_state", "product_realization", "realize",
    "validate_realization", "wiring_permutation",
]
