"""Dense numerical kernels: Jacobi eigensolver, Cholesky reduction, bisection
and periodic trapezoidal quadrature.

The eigensolvers work on :class:`SymMatrix` values, which are symmetric by
construction: only the upper triangle of the input array is read.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, NoSignChange, NotPositiveDefinite

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class SymMatrix:
    """Real symmetric matrix built from the upper triangle of ``values``."""

    __slots__ = ("_entries",)

    def __init__(self, values):
        arr = np.array(values, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {arr.shape}")
        upper = np.triu(arr)
        full = upper + np.triu(arr, 1).T
        full.setflags(write=False)
        self._entries = full

    @classmethod
    def diag(cls, values) -> "SymMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def order(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._entries.copy()
        return self._entries.astype(dtype)

    def __repr__(self) -> str:
        return f"SymMatrix(order={self.order})"


def _cholesky(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    low = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - low[j, :j] @ low[j, :j]
        if not d > 0.0:
            raise NotPositiveDefinite(f"non-positive pivot {d:.3e} at index {j}")
        low[j, j] = math.sqrt(d)
        low[j + 1:, j] = (a[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    return low


def _forward_solve(low: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``low @ x = rhs`` for lower-triangular ``low``."""
    x = np.empty_like(rhs)
    for i in range(low.shape[0]):
        x[i] = (rhs[i] - low[i, :i] @ x[:i]) / low[i, i]
    return x


def _backward_solve_transposed(low: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``low.T @ x = rhs`` for lower-triangular ``low``."""
    n = low.shape[0]
    x = np.empty_like(rhs)
    for i in range(n - 1, -1, -1):
        x[i] = (rhs[i] - low[i + 1:, i] @ x[i + 1:]) / low[i, i]
    return x


@dataclass(frozen=True)
class GeneralizedPencil:
    """Pair ``(stiffness, mass)`` for the problem ``K v = lam M v``.

    The mass matrix is Cholesky-factored on construction; a matrix that is
    not positive definite raises :class:`NotPositiveDefinite` immediately.
    """

    stiffness: SymMatrix
    mass: SymMatrix
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.stiffness.order != self.mass.order:
            raise ValueError(
                f"order mismatch: stiffness {self.stiffness.order}, mass {self.mass.order}"
            )
        object.__setattr__(self, "_chol", _cholesky(self.mass.entries))

    @property
    def order(self) -> int:
        return self.stiffness.order


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # tournament schedule: every pair (p, q) meets exactly once per sweep
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p >= 0 and q >= 0:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def sym_eigen(m: SymMatrix, *, tol: float = JACOBI_TOL,
              max_sweeps: int = JACOBI_MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Rotations are applied in round-robin order so that each round acts on
    disjoint index pairs and can be applied to whole rows/columns at once.

    Parameters
    ----------
    m : SymMatrix
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm is at most
        ``tol`` times the Frobenius norm of ``m``.
    max_sweeps : int
        Exceeding this many sweeps raises :class:`ConvergenceError`.

    Returns
    -------
    values : ndarray, shape (n,)
        Eigenvalues in ascending order.
    vectors : ndarray, shape (n, n)
        Orthonormal eigenvectors as columns, ``vectors[:, i]`` for ``values[i]``.
    """
    a = np.array(m.entries, dtype=float)
    n = a.shape[0]
    vt = np.eye(n)
    scale = float(np.linalg.norm(a))
    if n > 1 and scale > 0.0:
        target = tol * scale
        rounds = _round_robin(n)
        sweeps = 0
        while _off_norm(a) > target:
            if sweeps >= max_sweeps:
                raise ConvergenceError(
                    f"Jacobi did not converge in {max_sweeps} sweeps "
                    f"(off-diagonal norm {_off_norm(a):.3e}, target {target:.3e})"
                )
            for ps, qs in rounds:
                apq = a[ps, qs]
                active = np.abs(apq) > 0.0
                if not active.any():
                    continue
                ps, qs, apq = ps[active], qs[active], apq[active]
                theta = (a[qs, qs] - a[ps, ps]) / (2.0 * apq)
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t[theta == 0.0] = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cc, ss = c[:, None], s[:, None]
                # A <- J^T A J as two row passes; (J^T A)^T J^T... is symmetric,
                # so the transposed intermediate needs no transposing back
                for _ in range(2):
                    rp, rq = a[ps], a[qs]
                    a[ps] = cc * rp - ss * rq
                    a[qs] = ss * rp + cc * rq
                    a = np.ascontiguousarray(a.T)
                a[ps, qs] = 0.0
                a[qs, ps] = 0.0
                # eigenvectors kept as rows of vt, i.e. vt <- J^T vt
                rp, rq = vt[ps], vt[qs]
                vt[ps] = cc * rp - ss * rq
                vt[qs] = ss * rp + cc * rq
            sweeps += 1
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], vt.T[:, order]


def gen_eigen(p: GeneralizedPencil, **kwargs) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``K v = lam M v`` by Cholesky reduction ``M = L L^T``.

    The reduced matrix ``L^{-1} K L^{-T}`` goes through :func:`sym_eigen`.
    Returned eigenvectors (columns) are M-orthonormal.
    """
    low = p._chol
    y = _forward_solve(low, p.stiffness.entries)
    reduced = _forward_solve(low, y.T.copy())
    w, z = sym_eigen(SymMatrix(reduced), **kwargs)
    return w, _backward_solve_transposed(low, z)


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Bisection root of ``f`` on ``[lo, hi]``; the final bracket is narrower than ``tol``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not flo * fhi < 0.0:
        raise NoSignChange(f"f({lo}) = {flo:.3e} and f({hi}) = {fhi:.3e} have the same sign")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def periodic_nodes(period: float, n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("need at least 2 quadrature nodes")
    return period * np.arange(n) / n


def periodic_quadrature(f: Callable, period: float, n: int) -> float:
    """Trapezoidal rule on ``n`` equispaced nodes over one period.

    Exact up to rounding for trigonometric polynomials of degree < n/2.
    ``f`` is called once with the full node array.
    """
    x = periodic_nodes(period, n)
    return float(np.sum(np.asarray(f(x), dtype=float) * np.ones_like(x)) * period / n)
