"""Laplace spectrum of the flat torus ``R^2 / (Z(1,0) + Z(a,b))``.

Eigenfunctions are ``cos`` and ``sin`` of ``2 pi <gamma*, x>`` for dual
lattice vectors ``gamma*``, with eigenvalue ``4 pi^2 |gamma*|^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import LAPLACE_TORUS, CriticalData, Eigenspace, group_eigenvalues
from .errors import InvalidModuli, MultiplicityNotTwo
from .fourier import COS, SIN, TorusDomain, TorusFreq, TrigPoly

MODULI_TOL = 1e-12


@dataclass(frozen=True)
class TorusModuli:
    """Lattice parameters in the fundamental domain of the moduli space.

    ``0 <= a <= 1/2``, ``b > 0``, ``a^2 + b^2 >= 1``.
    """

    a: float
    b: float

    def __post_init__(self):
        a, b = self.a, self.b
        if not (math.isfinite(a) and math.isfinite(b)):
            raise InvalidModuli(f"non-finite moduli ({a}, {b})")
        if not 0.0 <= a <= 0.5:
            raise InvalidModuli(f"need 0 <= a <= 1/2, got a = {a}")
        if not b > 0.0:
            raise InvalidModuli(f"need b > 0, got b = {b}")
        if a * a + b * b < 1.0 - MODULI_TOL:
            raise InvalidModuli(f"need a^2 + b^2 >= 1, got {a * a + b * b:.12g}")

    @property
    def area(self) -> float:
        return self.b

    @property
    def lambda1_is_double(self) -> bool:
        return self.a * self.a + self.b * self.b > 1.0 + MODULI_TOL

    def domain(self, length_scale: float = 1.0) -> TorusDomain:
        return TorusDomain(self.a, self.b, length_scale)


def lattice_points(a: float, b: float, norm_sq_max: float) -> list[tuple[int, int]]:
    """Canonical ``(m, n)`` with ``|m e1* + n e2*|^2 <= norm_sq_max``.

    Since ``|gamma*|^2 = m^2 + (n - m a)^2 / b^2``, the ball is covered by
    ``|m| <= R`` and ``|n - m a| <= b R`` with ``R^2 = norm_sq_max``.
    """
    # the box is padded so that rounding in b * radius cannot drop a point
    # on the sphere; the norm test below decides membership
    radius = math.sqrt(norm_sq_max) * (1 + 1e-9) + 1e-12
    pts = []
    for m in range(0, int(math.floor(radius)) + 1):
        lo = math.ceil(m * a - b * radius)
        hi = math.floor(m * a + b * radius)
        if m == 0:
            lo = max(lo, 0)
        for n in range(lo, hi + 1):
            if m * m + (n - m * a) ** 2 / (b * b) <= norm_sq_max * (1 + 1e-12):
                pts.append((m, n))
    return pts


def _basis_functions(domain: TorusDomain, m: int, n: int) -> list[TrigPoly]:
    area = domain.measure
    if m == 0 and n == 0:
        return [TrigPoly(domain, {TorusFreq(0, 0, COS): 1.0 / math.sqrt(area)})]
    c = math.sqrt(2.0 / area)
    return [TrigPoly(domain, {TorusFreq(m, n, SIN): c}),
            TrigPoly(domain, {TorusFreq(m, n, COS): c})]


def _eigenspaces_within(domain: TorusDomain, norm_sq_max: float) -> list[Eigenspace]:
    pts = lattice_points(domain.a, domain.b, norm_sq_max)
    pts.sort(key=lambda p: (domain.freq_norm_sq(*p), p))
    items = [(domain.eigenvalue(*p), p) for p in pts]
    spaces = []
    for label, (value, group) in enumerate(group_eigenvalues(items)):
        basis = []
        for m, n in sorted(group):
            basis.extend(_basis_functions(domain, m, n))
        spaces.append(Eigenspace(value, tuple(basis), label))
    return spaces


def enumerate_spectrum(moduli: TorusModuli, count: int, length_scale: float = 1.0) -> list[Eigenspace]:
    """The first ``count`` distinct eigenvalues with orthonormal eigenbases.

    The search radius doubles until ``count`` distinct values lie inside it;
    every lattice point of the ball is enumerated, and only eigenspaces
    strictly inside it (by more than the grouping tolerance) are returned,
    so each returned eigenspace is complete.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    domain = moduli.domain(length_scale)
    bound = max(1.0, 1.0 / moduli.b ** 2)
    scale = 4.0 * math.pi ** 2 / length_scale ** 2
    while True:
        spaces = [s for s in _eigenspaces_within(domain, bound)
                  if s.eigenvalue <= scale * bound * (1 - 1e-8)]
        if len(spaces) >= count:
            return spaces[:count]
        bound *= 2.0


def eigenspaces_up_to(moduli: TorusModuli, eigenvalue_max: float,
                      length_scale: float = 1.0) -> list[Eigenspace]:
    """All eigenspaces with eigenvalue ``<= eigenvalue_max``."""
    domain = moduli.domain(length_scale)
    norm_bound = eigenvalue_max * length_scale ** 2 / (4.0 * math.pi ** 2)
    return _eigenspaces_within(domain, norm_bound)


def normalized_eigenvalue(moduli: TorusModuli, k: int) -> float:
    """``lambda_k * area`` with eigenvalues counted with multiplicity."""
    if k < 0:
        raise ValueError("k must be >= 0")
    seen = 0
    count = 2
    while True:
        spaces = enumerate_spectrum(moduli, count)
        seen = 0
        for space in spaces:
            seen += space.dim
            if seen > k:
                return space.eigenvalue * moduli.area
        count *= 2


def lambda1_eigenspace(moduli: TorusModuli, length_scale: float = 1.0) -> Eigenspace:
    """``span{sin(2 pi y / b), cos(2 pi y / b)}`` with eigenvalue ``4 pi^2 / b^2``.

    Raises :class:`MultiplicityNotTwo` unless ``a^2 + b^2 > 1``.
    """
    if not moduli.lambda1_is_double:
        raise MultiplicityNotTwo(
            f"lambda_1 eigenspace is 2-dimensional only for a^2 + b^2 > 1; "
            f"got {moduli.a ** 2 + moduli.b ** 2:.12g}"
        )
    first = enumerate_spectrum(moduli, 2, length_scale)[1]
    if first.dim != 2:
        raise MultiplicityNotTwo(f"lambda_1 has multiplicity {first.dim}")
    return first


def y_mode(domain: TorusDomain, n: int, kind: str, coeff: float = 1.0) -> TrigPoly:
    """``coeff * cos|sin(2 pi n y / b)``."""
    return TrigPoly.from_terms(domain, [((0, n), kind, coeff)])


def default_perturbation(moduli: TorusModuli, length_scale: float = 1.0) -> TrigPoly:
    """``sqrt(2) sin(2 pi y / b)``."""
    return y_mode(moduli.domain(length_scale), 1, SIN, math.sqrt(2.0))


def lambda1_critical_data(moduli: TorusModuli, omega: TrigPoly,
                          length_scale: float = 1.0) -> CriticalData:
    """Critical data for ``lambda_1`` covering every frequency of ``omega * E_1``."""
    space = lambda1_eigenspace(moduli, length_scale)
    domain = space.basis[0].domain
    top = space.eigenvalue
    for u in space.basis:
        for k in (omega * u).terms:
            top = max(top, domain.eigenvalue(k.m, k.n))
    ambient = eigenspaces_up_to(moduli, top * (1 + 1e-9), length_scale)
    return CriticalData(LAPLACE_TORUS, space, tuple(ambient), domain.measure, domain)
