"""
Small dense optimization kernels: Euclidean projection onto the probability
simplex and a two-phase tableau simplex method for equality-form LPs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def project_simplex(v, axis: int = -1) -> np.ndarray:
    """Euclidean projection of each slice along ``axis`` onto the simplex.

    Sorted-threshold method: with ``u`` sorted descending, the threshold is
    ``theta = (sum_{j<=rho} u_j - 1) / rho`` for the largest ``rho`` with
    ``u_rho > theta``; the projection is ``max(v - theta, 0)``.
    """
    v = np.moveaxis(np.asarray(v, dtype=float), axis, -1)
    d = v.shape[-1]
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    ind = np.arange(1, d + 1)
    cond = u - css / ind > 0
    rho = d - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, (rho - 1)[..., None], axis=-1) / rho[..., None]
    return np.moveaxis(np.maximum(v - theta, 0.0), -1, axis)


@dataclass
class LPResult:
    """``status`` is one of ``optimal``, ``infeasible``, ``unbounded`` or
    ``iteration_limit``."""

    status: str
    x: np.ndarray
    objective: float
    iterations: int


def _pivot(T: np.ndarray, r: int, c: int):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _iterate(T, basis, ncols, tol, max_iter):
    """Bland's rule on the tableau ``T`` whose last row holds reduced costs
    and last column the right-hand side.  Only columns ``< ncols`` may enter."""
    for it in range(max_iter):
        rc = T[-1, :ncols]
        cand = np.flatnonzero(rc < -tol)
        if cand.size == 0:
            return "optimal", it
        e = cand[0]
        col = T[:-1, e]
        pos = np.flatnonzero(col > tol)
        if pos.size == 0:
            return "unbounded", it
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + tol]
        leave = ties[np.argmin(basis[ties])]
        _pivot(T, leave, e)
        basis[leave] = e
    return "iteration_limit", max_iter


def linprog_eq(c, A, b, tol: float = 1e-11, max_iter: int = 100_000) -> LPResult:
    """Minimize ``c @ x`` subject to ``A @ x = b``, ``x >= 0``.

    Dense two-phase tableau simplex with Bland's anti-cycling rule.  Phase 1
    minimizes the sum of artificial variables; redundant equality rows are
    dropped once phase 1 ends.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)

    status, it1 = _iterate(T, basis, n + m, tol, max_iter)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if status != "optimal" or -T[-1, -1] > 1e3 * tol * scale * m:
        x = np.zeros(n)
        real = basis < n
        x[basis[real]] = T[:-1, -1][real]
        st = "infeasible" if status == "optimal" else status
        return LPResult(st, x, float(-T[-1, -1]), it1)

    # drive artificial variables out of the basis
    keep = []
    for r in range(m):
        if basis[r] < n:
            keep.append(r)
            continue
        row = np.abs(T[r, :n])
        j = int(np.argmax(row))
        if row[j] > 1e-9:
            _pivot(T, r, j)
            basis[r] = j
            keep.append(r)
    T = np.vstack([T[keep], T[-1:]])
    T = np.delete(T, np.s_[n:n + m], axis=1)
    basis = basis[keep]

    # phase 2 objective row
    T[-1, :] = 0.0
    T[-1, :n] = c
    for r, j in enumerate(basis):
        if c[j] != 0.0:
            T[-1] -= c[j] * T[r]
    status, it2 = _iterate(T, basis, n, tol, max_iter)
    x = np.zeros(n)
    x[basis] = T[:-1, -1]
    x[np.abs(x) <= tol] = 0.0
    return LPResult(status, x, float(c @ x), it1 + it2)


__all__ = ["LPResult", "linprog_eq", "project_simplex"]
