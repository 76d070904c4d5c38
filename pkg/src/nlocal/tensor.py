"""
Dense correlation tensors over star-network scenarios.

A scenario has ``n`` edge parties ``A_1 .. A_n`` and one hub party ``B``.
Parties are addressed by integer index: ``0 .. n-1`` for the edges and ``n``
for the hub.  Values are stored as an ndarray with axes

    (a_1, ..., a_n, b, x_1, ..., x_n, y)

and flattened in Fortran order for serialization, so outputs vary fastest
and party 1 is innermost.  Probability tensors are the special case where
every input count is 1.

Tripartite tensors ``P(abc|xyz)`` are stored as ``n = 2`` star tensors with
edge order ``(A, C)`` and hub ``B``; :func:`from_tripartite` and
:func:`to_tripartite` convert from and to the ``(a, b, c, x, y, z)`` axis
order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TOL_NEG = 1e-12
TOL_NORM = 1e-10
TOL_SIGNAL = 1e-10
TOL_WEIGHTS = 1e-12

LAYOUT = "outputs-fastest-party1-innermost"


class ShapeError(ValueError):
    """Values do not match the declared scenario."""


class ScenarioMismatch(ValueError):
    """Two tensors that must share a scenario do not."""


class SignalingError(ValueError):
    """A marginal was requested over parties whose inputs leak into it."""

    def __init__(self, party: int, inputs: tuple[int, int], deviation: float):
        self.party = party
        self.inputs = inputs
        self.deviation = deviation
        super().__init__(
            f"party {party} signals: marginal differs by {deviation:.3g} "
            f"between inputs {inputs[0] + 1} and {inputs[1] + 1}")


@dataclass(frozen=True)
class Scenario:
    """Outcome and input counts of a star network with ``n`` edges."""

    edge_outcomes: tuple[int, ...]
    edge_inputs: tuple[int, ...]
    hub_outcomes: int
    hub_inputs: int

    def __post_init__(self):
        eo = tuple(int(v) for v in self.edge_outcomes)
        ei = tuple(int(v) for v in self.edge_inputs)
        object.__setattr__(self, "edge_outcomes", eo)
        object.__setattr__(self, "edge_inputs", ei)
        object.__setattr__(self, "hub_outcomes", int(self.hub_outcomes))
        object.__setattr__(self, "hub_inputs", int(self.hub_inputs))
        if len(eo) < 1:
            raise ValueError("a scenario needs at least one edge party")
        if len(eo) != len(ei):
            raise ValueError("edge_outcomes and edge_inputs differ in length")
        if min(eo + ei + (self.hub_outcomes, self.hub_inputs)) < 1:
            raise ValueError("all outcome and input counts must be >= 1")

    @classmethod
    def tripartite(cls, oA, mA, oB, mB, oC, mC) -> "Scenario":
        """Bilocal scenario with edges ``(A, C)`` and hub ``B``."""
        return cls((oA, oC), (mA, mC), oB, mB)

    @classmethod
    def uniform(cls, n: int, o: int, m: int, o_hub: int | None = None,
                m_hub: int | None = None) -> "Scenario":
        return cls((o,) * n, (m,) * n, o if o_hub is None else o_hub,
                   m if m_hub is None else m_hub)

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        """Parse ``"o1,m1;o2,m2;...;oB,mB"`` (last pair is the hub)."""
        pairs = [p.strip() for p in text.split(";") if p.strip()]
        if len(pairs) < 2:
            raise ValueError(f"scenario {text!r} needs an edge and a hub")
        counts = []
        for p in pairs:
            fields = p.split(",")
            if len(fields) != 2:
                raise ValueError(f"bad party entry {p!r}, expected 'o,m'")
            counts.append((int(fields[0]), int(fields[1])))
        edges, hub = counts[:-1], counts[-1]
        return cls(tuple(o for o, _ in edges), tuple(m for _, m in edges),
                   hub[0], hub[1])

    def format(self) -> str:
        return ";".join(f"{o},{m}" for o, m in self.parties())

    @property
    def n(self) -> int:
        return len(self.edge_outcomes)

    @property
    def hub(self) -> int:
        return self.n

    def parties(self) -> list[tuple[int, int]]:
        """``(outcomes, inputs)`` per party, hub last."""
        return list(zip(self.edge_outcomes, self.edge_inputs)) + [
            (self.hub_outcomes, self.hub_inputs)]

    def outcomes(self, party: int) -> int:
        return self.parties()[party][0]

    def inputs(self, party: int) -> int:
        return self.parties()[party][1]

    def strategy_count(self, party: int) -> int:
        o, m = self.parties()[party]
        return o ** m

    @property
    def hub_strategy_count(self) -> int:
        return self.hub_outcomes ** self.hub_inputs

    @property
    def output_shape(self) -> tuple[int, ...]:
        return self.edge_outcomes + (self.hub_outcomes,)

    @property
    def input_shape(self) -> tuple[int, ...]:
        return self.edge_inputs + (self.hub_inputs,)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.output_shape + self.input_shape

    def output_axis(self, party: int) -> int:
        return party

    def input_axis(self, party: int) -> int:
        return self.n + 1 + party

    @property
    def is_probability_tensor(self) -> bool:
        return all(m == 1 for m in self.input_shape)

    def to_dict(self) -> dict:
        return {"edge_outcomes": list(self.edge_outcomes),
                "edge_inputs": list(self.edge_inputs),
                "hub_outcomes": self.hub_outcomes,
                "hub_inputs": self.hub_inputs}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(tuple(d["edge_outcomes"]), tuple(d["edge_inputs"]),
                   d["hub_outcomes"], d["hub_inputs"])


@dataclass(frozen=True, eq=False)
class CorrelationTensor:
    """``P(a_1 .. a_n b | x_1 .. x_n y)`` as a read-only dense array."""

    scenario: Scenario
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.scenario.shape:
            if v.size == int(np.prod(self.scenario.shape)) and v.ndim == 1:
                v = v.reshape(self.scenario.shape, order="F")
            else:
                raise ShapeError(f"values have shape {v.shape}, scenario "
                                 f"expects {self.scenario.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __repr__(self):
        return f"CorrelationTensor({self.scenario.format()!r})"

    def flat(self) -> np.ndarray:
        return self.values.ravel(order="F")

    def __call__(self, outputs: Sequence[int], inputs: Sequence[int]) -> float:
        """Entry at 1-based ``outputs`` and ``inputs`` (hub last)."""
        idx = tuple(o - 1 for o in outputs) + tuple(x - 1 for x in inputs)
        return float(self.values[idx])


@dataclass(frozen=True)
class TensorDiagnostics:
    max_negativity: float
    max_normalization_error: float
    max_signaling_defect: float | None
    ok: bool


def _sum_over_outputs(values: np.ndarray, n: int) -> np.ndarray:
    return values.sum(axis=tuple(range(n + 1)))


def validate(t: CorrelationTensor, tol: float = TOL_NORM,
             tol_neg: float = TOL_NEG) -> TensorDiagnostics:
    """Report negativity and per-input normalization defects.

    Signaling is not examined here (``max_signaling_defect`` is ``None``);
    see :func:`nonsignaling_check`.
    """
    if t.values.shape != t.scenario.shape:
        raise ShapeError("values do not match scenario")
    neg = float(max(0.0, -t.values.min()))
    norm = float(np.abs(_sum_over_outputs(t.values, t.scenario.n) - 1).max())
    return TensorDiagnostics(neg, norm, None, neg <= tol_neg and norm <= tol)


def _signaling_spread(values: np.ndarray, s: Scenario, party: int):
    """Spread of the party-discarded marginal across the party's inputs.

    Returns the maximal spread and the input pair realizing it.
    """
    m = values.sum(axis=s.output_axis(party))
    # input axis index shifts down by one after summing an output axis
    ax = s.input_axis(party) - 1
    hi = m.max(axis=ax)
    lo = m.min(axis=ax)
    spread = hi - lo
    if spread.size == 0:
        return 0.0, (0, 0)
    where = np.unravel_index(int(np.argmax(spread)), spread.shape)
    fiber = [m[where[:ax] + (x,) + where[ax:]] for x in range(s.inputs(party))]
    return float(spread.max()), (int(np.argmax(fiber)), int(np.argmin(fiber)))


def nonsignaling_check(t: CorrelationTensor, tol: float = TOL_SIGNAL,
                       tol_neg: float = TOL_NEG,
                       tol_norm: float = TOL_NORM) -> TensorDiagnostics:
    """Full diagnostics including the single-party signaling defect.

    For every party the marginal with that party discarded must not depend
    on its input; the defect is the largest spread over those inputs.
    """
    base = validate(t, tol_norm, tol_neg)
    s = t.scenario
    defect = max(_signaling_spread(t.values, s, p)[0] for p in range(s.n + 1))
    return TensorDiagnostics(base.max_negativity, base.max_normalization_error,
                             defect, base.ok and defect <= tol)


def _marginal_scenario(s: Scenario, keep: list[int]) -> Scenario:
    edges = [p for p in keep if p != s.hub]
    if edges:
        eo = tuple(s.edge_outcomes[p] for p in edges)
        ei = tuple(s.edge_inputs[p] for p in edges)
    else:
        eo, ei = (1,), (1,)
    if s.hub in keep:
        return Scenario(eo, ei, s.hub_outcomes, s.hub_inputs)
    return Scenario(eo, ei, 1, 1)


def _normalize_keep(s: Scenario, keep: Iterable[int]) -> list[int]:
    keep = sorted(set(int(p) for p in keep))
    if not keep or keep[0] < 0 or keep[-1] > s.n:
        raise ValueError(f"party subset {keep} out of range 0..{s.n}")
    return keep


def marginal_deviation(t: CorrelationTensor, keep: Iterable[int]):
    """Marginal values at reference input 1 and their input dependence.

    Returns ``(values, deviation, offender)`` where ``offender`` is
    ``(party, (x, x'))`` for the discarded party with the largest spread, or
    ``None`` when nothing is discarded.
    """
    s = t.scenario
    keep = _normalize_keep(s, keep)
    drop = [p for p in range(s.n + 1) if p not in keep]
    summed = t.values.sum(axis=tuple(s.output_axis(p) for p in drop),
                          keepdims=True)
    offender, worst = None, -1.0
    for p in drop:
        spread, pair = _signaling_spread(summed, s, p)
        if spread > worst:
            worst, offender = spread, (p, pair)
    ref_index = tuple(slice(0, 1) if ax in [s.input_axis(p) for p in drop]
                      else slice(None) for ax in range(summed.ndim))
    ref = summed[ref_index]
    deviation = float(np.abs(summed - ref).max()) if drop else 0.0
    ms = _marginal_scenario(s, keep)
    return ref.reshape(ms.shape, order="C"), deviation, offender, ms


def marginal(t: CorrelationTensor, keep: Iterable[int],
             tol: float = TOL_SIGNAL) -> CorrelationTensor:
    """Marginal on the parties in ``keep``.

    Discarded edges disappear from the scenario; a discarded hub is replaced
    by a trivial hub with one outcome and one input (likewise a single
    trivial edge stands in when every edge is discarded).  Raises
    :class:`SignalingError` if the result depends on a discarded input by
    more than ``tol``.
    """
    vals, dev, offender, ms = marginal_deviation(t, keep)
    if dev > tol:
        party, pair = offender
        raise SignalingError(party, pair, dev)
    return CorrelationTensor(ms, vals)


def mix(terms: Sequence[tuple[float, CorrelationTensor]],
        tol: float = TOL_WEIGHTS) -> CorrelationTensor:
    """Convex combination ``sum_k w_k P_k``."""
    if not terms:
        raise ValueError("mix of an empty list")
    weights = np.array([float(w) for w, _ in terms])
    if (weights < 0).any():
        raise ValueError("mixture weights must be nonnegative")
    if abs(weights.sum() - 1) > tol:
        raise ValueError(f"mixture weights sum to {weights.sum()!r}, not 1")
    s = terms[0][1].scenario
    if any(t.scenario != s for _, t in terms):
        raise ScenarioMismatch("cannot mix tensors over different scenarios")
    out = np.zeros(s.shape)
    for w, t in terms:
        out += w * t.values
    return CorrelationTensor(s, out)


def single_party_ct(table) -> CorrelationTensor:
    """Single-party tensor from a table ``P(a|x)`` indexed ``[a, x]``."""
    table = np.asarray(table, dtype=float)
    if table.ndim != 2:
        raise ShapeError("a single-party table must be 2-D [outcome, input]")
    o, m = table.shape
    return CorrelationTensor(Scenario((o,), (m,), 1, 1),
                             table.reshape(o, 1, m, 1))


def party_table(t: CorrelationTensor) -> np.ndarray:
    """``[a, x]`` table of the only nontrivial party of ``t``."""
    s = t.scenario
    live = [p for p in range(s.n + 1) if s.parties()[p] != (1, 1)]
    if len(live) > 1:
        raise ValueError(f"{t!r} has {len(live)} nontrivial parties")
    p = live[0] if live else 0
    axes = [ax for ax in range(t.values.ndim)
            if ax not in (s.output_axis(p), s.input_axis(p))]
    return t.values.sum(axis=tuple(axes))


def product_values(tables: Sequence[np.ndarray]) -> np.ndarray:
    """Outer product of ``[a, x]`` tables laid out as a tensor (hub last)."""
    k = len(tables)
    operands = []
    for p, tab in enumerate(tables):
        operands += [np.asarray(tab, dtype=float), [p, k + p]]
    return np.einsum(*operands, list(range(2 * k)))


def product_ct(factors: Sequence) -> CorrelationTensor:
    """Product tensor ``P_1 (x) ... (x) P_n (x) P_B``.

    ``factors`` lists one single-party tensor (or ``[a, x]`` table) per party
    with the hub factor last.
    """
    if len(factors) < 2:
        raise ValueError("need at least one edge factor and a hub factor")
    tables = [party_table(f) if isinstance(f, CorrelationTensor)
              else np.asarray(f, dtype=float) for f in factors]
    for tab in tables:
        if tab.ndim != 2:
            raise ShapeError("each factor must be a single-party table")
    s = Scenario(tuple(t.shape[0] for t in tables[:-1]),
                 tuple(t.shape[1] for t in tables[:-1]),
                 tables[-1].shape[0], tables[-1].shape[1])
    return CorrelationTensor(s, product_values(tables))


def uniform_ct(s: Scenario) -> CorrelationTensor:
    return CorrelationTensor(s, np.full(s.shape, 1.0 / np.prod(s.output_shape)))


def inner(t1: CorrelationTensor, t2: CorrelationTensor) -> float:
    if t1.scenario != t2.scenario:
        raise ScenarioMismatch("inner product across scenarios")
    return float(np.sum(t1.values * t2.values))


def distance(t1: CorrelationTensor, t2: CorrelationTensor) -> tuple[float, float]:
    """``(max_abs, l2)`` distance in the entrywise Hilbert space."""
    if t1.scenario != t2.scenario:
        raise ScenarioMismatch("distance across scenarios")
    d = t1.values - t2.values
    return float(np.abs(d).max()), float(np.sqrt(np.sum(d * d)))


# tripartite presentation layer ------------------------------------------------

def from_tripartite(values, scenario: Scenario | None = None) -> CorrelationTensor:
    """Build a bilocal-scenario tensor from an array indexed ``[a,b,c,x,y,z]``."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 6:
        raise ShapeError("tripartite values need 6 axes (a, b, c, x, y, z)")
    oA, oB, oC, mA, mB, mC = v.shape
    s = Scenario.tripartite(oA, mA, oB, mB, oC, mC)
    if scenario is not None and scenario != s:
        raise ScenarioMismatch("tripartite values disagree with scenario")
    return CorrelationTensor(s, v.transpose(0, 2, 1, 3, 5, 4))


def to_tripartite(t: CorrelationTensor) -> np.ndarray:
    """Array indexed ``[a, b, c, x, y, z]`` from a ``n = 2`` tensor."""
    if t.scenario.n != 2:
        raise ValueError("tripartite view needs a scenario with two edges")
    return t.values.transpose(0, 2, 1, 3, 5, 4)


def party_names(s: Scenario) -> list[str]:
    """Display names; tripartite scenarios use ``A``, ``C`` (edges), ``B``."""
    if s.n == 2:
        return ["A", "C", "B"]
    return [f"A{i + 1}" for i in range(s.n)] + ["B"]


def resolve_party(s: Scenario, party) -> int:
    """Accept an integer index or a display name (``"B"``, ``"A2"``...)."""
    if isinstance(party, (int, np.integer)):
        p = int(party)
    else:
        text = str(party).strip()
        names = party_names(s)
        if text in names:
            p = names.index(text)
        elif text.lstrip("-").isdigit():
            p = int(text)
        else:
            raise ValueError(f"unknown party {party!r}; known: {names}")
    if not 0 <= p <= s.n:
        raise ValueError(f"party index {p} out of range 0..{s.n}")
    return p
