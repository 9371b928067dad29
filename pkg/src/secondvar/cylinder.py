"""Steklov spectrum of the flat cylinder ``S^1 x [-T, T]``.

Harmonic functions separate as ``cos n theta`` / ``sin n theta`` times a
profile in ``t``.  The even profile ``cosh(n t)`` gives the eigenvalue
``n tanh(n T)``, the odd profile ``sinh(n t)`` gives ``n coth(n T)``; for
``n = 0`` the profiles are ``1`` (eigenvalue 0) and ``t`` (eigenvalue ``1/T``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .engine import STEKLOV_CYLINDER, CriticalData, Eigenspace, group_eigenvalues
from .errors import InvalidModuli, NotBelowT1
from .fourier import COS, EVEN, ODD, SIN, BoundaryFreq, CylinderBoundary, TrigPoly
from .linalg import find_root


@dataclass(frozen=True)
class CylinderModuli:
    T: float

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0.0):
            raise InvalidModuli(f"half-length must be positive, got T = {self.T}")

    @property
    def boundary_length(self) -> float:
        return 4.0 * math.pi

    def domain(self, length_scale: float = 1.0) -> CylinderBoundary:
        return CylinderBoundary(self.T, length_scale)


@dataclass(frozen=True)
class SteklovBranch:
    freq: BoundaryFreq
    eigenvalue: float


def branch_eigenvalue(n: int, parity: str, T: float) -> float:
    if n == 0:
        return 0.0 if parity == EVEN else 1.0 / T
    if parity == EVEN:
        return n * math.tanh(n * T)
    return n / math.tanh(n * T)


def boundary_key_eigenvalue(key: BoundaryFreq, domain: CylinderBoundary) -> float:
    return branch_eigenvalue(key.n, key.parity, domain.T) / domain.length_scale


def steklov_spectrum(moduli: CylinderModuli, n_max: int) -> list[SteklovBranch]:
    """All separated eigenfunctions with angular frequency ``<= n_max``, ascending."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    out = []
    for parity in (EVEN, ODD):
        out.append(SteklovBranch(BoundaryFreq(0, COS, parity), branch_eigenvalue(0, parity, moduli.T)))
        for n in range(1, n_max + 1):
            value = branch_eigenvalue(n, parity, moduli.T)
            for kind in (SIN, COS):
                out.append(SteklovBranch(BoundaryFreq(n, kind, parity), value))
    out.sort(key=lambda br: (br.eigenvalue, br.freq.n, br.freq.kind != SIN, br.freq.parity))
    return out


def _unit(domain: CylinderBoundary, key: BoundaryFreq) -> TrigPoly:
    norm_sq = domain.measure if key.n == 0 else 0.5 * domain.measure
    return TrigPoly(domain, {key: 1.0 / math.sqrt(norm_sq)})


def eigenspaces_up_to(moduli: CylinderModuli, eigenvalue_max: float,
                      length_scale: float = 1.0) -> list[Eigenspace]:
    """All Steklov eigenspaces with eigenvalue ``<= eigenvalue_max``.

    Every branch with ``n > N`` has eigenvalue at least ``n tanh(n T)``, which
    increases with ``n``; ``N`` is taken large enough to clear the bound.
    """
    domain = moduli.domain(length_scale)
    bound = eigenvalue_max * length_scale
    n_max = 1
    while (n_max + 1) * math.tanh((n_max + 1) * moduli.T) <= bound * (1 + 1e-9):
        n_max += 1
    branches = [br for br in steklov_spectrum(moduli, n_max) if br.eigenvalue <= bound * (1 + 1e-9)]
    items = [(br.eigenvalue / length_scale, br.freq) for br in branches]
    return [Eigenspace(value, tuple(_unit(domain, k) for k in keys), label)
            for label, (value, keys) in enumerate(group_eigenvalues(items))]


@lru_cache(maxsize=None)
def find_T1(tol: float = 1e-12) -> float:
    """Unique positive root of ``coth T = T``."""
    return find_root(lambda T: 1.0 / math.tanh(T) - T, 0.5, 2.0, tol)


def sigma1_eigenspace(moduli: CylinderModuli, length_scale: float = 1.0) -> Eigenspace:
    """``span{sin theta, cos theta}`` on both circles, eigenvalue ``tanh T``.

    This is the first nonzero eigenspace, of dimension 2, exactly when
    ``T < T1``; otherwise :class:`NotBelowT1` is raised.
    """
    t1 = find_T1()
    if not moduli.T < t1:
        raise NotBelowT1(f"sigma_1 is double only for T < T1 = {t1:.10f}; got T = {moduli.T}")
    spaces = eigenspaces_up_to(moduli, math.tanh(moduli.T) / length_scale, length_scale)
    first = spaces[1]
    if first.dim != 2 or {k.n for k in first.keys} != {1}:
        raise NotBelowT1(f"unexpected sigma_1 eigenspace of dimension {first.dim} at T = {moduli.T}")
    return first


def b2(T: float) -> float:
    s1, s2 = math.tanh(T), 2.0 * math.tanh(2.0 * T)
    return (s2 + s1) / (s2 - s1)


def b4(T: float) -> float:
    s1, s4 = math.tanh(T), 4.0 * math.tanh(4.0 * T)
    return (s4 + s1) / (s4 - s1)


def mu1(a: float, T: float) -> float:
    return 0.5 - (1 + a) ** 2 / 4.0 * b2(T) - a * a / 4.0 * b4(T)


def mu2(a: float, T: float) -> float:
    return -0.25 * ((1 - a) ** 2 * b2(T) + a * a * b4(T))


def alpha_of_a(a: float, T: float) -> float:
    """Closed-form second variation for ``omega = sin theta - a sin 3 theta``."""
    mu = min(mu1(a, T), mu2(a, T))
    return 2.0 * math.pi * math.tanh(T) * ((1 + a * a) + 2.0 * mu)


def omega_family(moduli: CylinderModuli, a: float, length_scale: float = 1.0) -> TrigPoly:
    """``sin theta - a sin 3 theta`` on both boundary circles."""
    return TrigPoly.from_terms(moduli.domain(length_scale),
                               [(1, SIN, EVEN, 1.0), (3, SIN, EVEN, -a)])


def sigma1_critical_data(moduli: CylinderModuli, omega: TrigPoly,
                         length_scale: float = 1.0) -> CriticalData:
    """Critical data for ``sigma_1`` covering every frequency of ``omega * E_1``."""
    space = sigma1_eigenspace(moduli, length_scale)
    domain = space.basis[0].domain
    top = space.eigenvalue
    for u in space.basis:
        for k in (omega * u).terms:
            top = max(top, boundary_key_eigenvalue(k, domain))
    ambient = eigenspaces_up_to(moduli, top, length_scale)
    return CriticalData(STEKLOV_CYLINDER, space, tuple(ambient), domain.measure, domain)
