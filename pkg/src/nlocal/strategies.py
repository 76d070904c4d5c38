"""
Deterministic strategies and the greedy decomposition of row-stochastic
matrices into {0,1}-row-stochastic ones.

A deterministic strategy is a map ``[m] -> [o]``.  Strategies are numbered
``k = 1 .. o**m`` with input 1 as the least significant base-``o`` digit:

    k - 1 = sum_x (assignment(x) - 1) * o**(x - 1)

Response matrices are ``m x o`` (row = input, column = output).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .tensor import CorrelationTensor, Scenario, product_values

STRATEGY_ENCODING = "little-endian-input-1"


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class DeterministicStrategy:
    """``assignment[x - 1]`` is the (1-based) output for input ``x``."""

    outputs: int
    assignment: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(v) for v in self.assignment)
        object.__setattr__(self, "assignment", a)
        if self.outputs < 1 or not a:
            raise ValueError("strategy needs >= 1 input and >= 1 output")
        if min(a) < 1 or max(a) > self.outputs:
            raise ValueError(f"assignment {a} outside [1, {self.outputs}]")

    @property
    def inputs(self) -> int:
        return len(self.assignment)

    def __call__(self, x: int) -> int:
        return self.assignment[x - 1]


def encode(s: DeterministicStrategy) -> int:
    return 1 + sum((a - 1) * s.outputs ** x for x, a in enumerate(s.assignment))


def decode(k: int, m: int, o: int) -> DeterministicStrategy:
    if not 1 <= k <= o ** m:
        raise ValueError(f"strategy index {k} outside [1, {o ** m}]")
    digits = [((k - 1) // o ** x) % o + 1 for x in range(m)]
    return DeterministicStrategy(o, tuple(digits))


def strategy_matrix(s: DeterministicStrategy) -> np.ndarray:
    mat = np.zeros((s.inputs, s.outputs))
    mat[np.arange(s.inputs), np.array(s.assignment) - 1] = 1.0
    return mat


@lru_cache(maxsize=None)
def _tables(m: int, o: int) -> np.ndarray:
    k = np.arange(o ** m)
    digits = (k[:, None] // o ** np.arange(m)[None, :]) % o
    out = np.zeros((o ** m, m, o))
    out[k[:, None], np.arange(m)[None, :], digits] = 1.0
    out.flags.writeable = False
    return out


def strategy_tables(m: int, o: int) -> np.ndarray:
    """All strategy matrices, shape ``(o**m, m, o)``, row ``k-1`` is ``k``."""
    return _tables(int(m), int(o))


def assignment_index(columns: np.ndarray, o: int) -> int:
    """Strategy index of the map ``x -> columns[x] + 1`` (0-based columns)."""
    return 1 + int(np.sum(np.asarray(columns) * o ** np.arange(len(columns))))


@dataclass(frozen=True)
class RSDecomposition:
    """``B = sum_k weight_k * strategy_matrix(decode(index_k, m, o))``."""

    inputs: int
    outputs: int
    terms: tuple[tuple[float, int], ...]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms])

    def as_vector(self) -> np.ndarray:
        """Dense weight vector over all ``o**m`` strategies (0-based slots)."""
        v = np.zeros(self.outputs ** self.inputs)
        for w, k in self.terms:
            v[k - 1] += w
        return v

    def reconstruct(self) -> np.ndarray:
        tabs = strategy_tables(self.inputs, self.outputs)
        return np.tensordot(self.as_vector(), tabs, axes=1)


def decompose_rs(B, tol: float = 1e-12) -> RSDecomposition:
    """Greedy first-maximum decomposition of a row-stochastic matrix.

    Each round picks the first maximal entry of every row, takes the
    smallest of those peaks as the weight of the strategy they spell out,
    subtracts it, and snaps entries within ``tol`` of zero to exactly zero.
    At least one entry vanishes per round, so the number of terms is at most
    ``m * (o - 1) + 1``.
    """
    B = np.array(B, dtype=float)
    if B.ndim != 2 or B.size == 0:
        raise DecompositionError("expected a non-empty 2-D matrix")
    m, o = B.shape
    if B.min() < -tol:
        raise DecompositionError(f"negative entry {B.min():.3g}")
    sums = B.sum(axis=1)
    if np.abs(sums - 1).max() > tol:
        raise DecompositionError(
            f"row sums deviate from 1 by {np.abs(sums - 1).max():.3g}")
    slack = float(sums.max() - sums.min()) + 2 * tol

    R = np.where(B < 0, 0.0, B)
    rows = np.arange(m)
    limit = m * (o - 1) + 1
    terms = []
    while True:
        left = R.sum(axis=1)
        if left.min() <= tol:
            if left.max() > slack:
                raise DecompositionError(
                    f"rows exhausted unevenly (residual {left.max():.3g})")
            break
        cols = R.argmax(axis=1)
        alpha = float(R[rows, cols].min())
        terms.append((alpha, assignment_index(cols, o)))
        R[rows, cols] -= alpha
        if R.min() < -tol:
            raise DecompositionError("negative residual, aborting")
        R[np.abs(R) <= tol] = 0.0
        if len(terms) > limit:
            raise DecompositionError("decomposition failed to terminate")
    return RSDecomposition(m, o, tuple(terms))


def deterministic_ct(s: Scenario, strategies: Sequence[int]) -> CorrelationTensor:
    """Product tensor of deterministic strategies, one 1-based index per party
    (hub last)."""
    if len(strategies) != s.n + 1:
        raise ValueError(f"need {s.n + 1} strategy indices, got {len(strategies)}")
    tables = []
    for p, k in enumerate(strategies):
        o, m = s.parties()[p]
        if not 1 <= k <= o ** m:
            raise ValueError(f"strategy {k} out of range for party {p}")
        tables.append(strategy_tables(m, o)[k - 1].T)
    return CorrelationTensor(s, product_values(tables))
