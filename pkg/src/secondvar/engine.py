"""Second variation of normalized eigenvalues at a conformally critical metric.

For a critical eigenspace ``E_k`` with eigenvalue ``lam_k`` and a conformal
direction ``omega`` with ``<omega u, v> = 0`` on ``E_k``, the quadratic form

    Q(u, v) = - sum_{lam_i != lam_k} (lam_i + lam_k) / (lam_i - lam_k) <P_i(omega u), P_i(omega v)>

governs the splitting of ``E_k``: the branches have second derivatives
``lam_k * spec(Q)``.  The normalized eigenvalue (times area, or boundary
length) has second derivative

    alpha = lam_k * (||omega||^2 + mu * normalizer),    mu = min spec(Q).

The same formulas hold for the Laplacian on a torus under ``e^{t omega} g``
and for the Dirichlet-to-Neumann map on a cylinder under ``e^{2 t omega} g``.

All projections are exact: ``omega`` and the eigenfunctions are finite
Fourier series, so ``omega u`` has finitely many frequencies, each of which
must land in one of the supplied ambient eigenspaces.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGap, IncompleteSpectrum, NotAdmissible
from .fourier import Domain, TrigPoly, check_orthonormal, inner, norm_sq
from .linalg import SymMatrix, sym_eigen

ADMISSIBILITY_TOL = 1e-10
GAP_RTOL = 1e-9
RESIDUAL_TOL = 1e-12

LAPLACE_TORUS = "laplace-torus"
STEKLOV_CYLINDER = "steklov-cylinder"


@dataclass(frozen=True)
class Eigenspace:
    """One distinct eigenvalue with an orthonormal basis of eigenfunctions."""

    eigenvalue: float
    basis: tuple[TrigPoly, ...]
    label: int

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def keys(self) -> frozenset:
        return frozenset(k for e in self.basis for k in e.terms)


def _close(x: float, y: float, rtol: float = GAP_RTOL) -> bool:
    return abs(x - y) <= rtol * max(abs(x), abs(y), 1e-300)


@dataclass(frozen=True)
class CriticalData:
    """Critical eigenspace together with the part of the spectrum around it.

    ``ambient`` lists distinct eigenspaces sorted by eigenvalue and must
    contain ``eigenspace`` itself exactly once.  ``normalizer`` is the area
    (torus) or the boundary length (cylinder).
    """

    kind: str
    eigenspace: Eigenspace
    ambient: tuple[Eigenspace, ...]
    normalizer: float
    domain: Domain

    def __post_init__(self):
        lam = self.eigenvalue
        hits = [e for e in self.ambient if _close(e.eigenvalue, lam)]
        if len(hits) != 1:
            if len(hits) > 1:
                raise DegenerateGap(
                    f"{len(hits)} ambient eigenspaces within {GAP_RTOL:g} of {lam:.12g}"
                )
            raise IncompleteSpectrum(f"critical eigenvalue {lam:.12g} missing from ambient spectrum")
        if hits[0].label != self.eigenspace.label:
            raise DegenerateGap(
                f"ambient eigenspace {hits[0].label} coincides with critical label "
                f"{self.eigenspace.label}"
            )
        values = [e.eigenvalue for e in self.ambient]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("ambient eigenvalues must be strictly increasing")
        if any(_close(a, b) for a, b in zip(values, values[1:])):
            raise DegenerateGap("ambient spectrum contains eigenvalues closer than the gap tolerance")
        check_orthonormal(list(self.eigenspace.basis))

    @property
    def eigenvalue(self) -> float:
        return self.eigenspace.eigenvalue


@dataclass(frozen=True)
class LedgerEntry:
    """Contribution of one ambient eigenvalue to ``Q``."""

    eigenvalue: float
    weight: float  # (lam_i + lam_k) / (lam_i - lam_k)
    overlaps: np.ndarray  # <P_i(omega u_j), P_i(omega u_l)>

    @property
    def contribution(self) -> np.ndarray:
        return -self.weight * self.overlaps


@dataclass(frozen=True)
class QFormResult:
    matrix: SymMatrix
    mu: float
    minimizer: np.ndarray
    spectrum: np.ndarray
    eigenvectors: np.ndarray
    ledger: tuple[LedgerEntry, ...]
    admissibility_residual: float


@dataclass(frozen=True)
class SecondVariation:
    alpha: float
    mu: float
    omega_norm_sq: float
    normalizer: float
    eigenvalue: float
    # second derivatives of the split unnormalized branches, ascending
    branch_second_derivatives: np.ndarray
    # second derivatives of the normalized branches, ascending
    normalized_branch_curvatures: np.ndarray
    qform: QFormResult = field(repr=False)


def check_admissibility(omega: TrigPoly, eigenspace: Eigenspace) -> float:
    """Max over basis pairs of ``|<omega u, v>|``."""
    worst = 0.0
    for i, u in enumerate(eigenspace.basis):
        wu = omega * u
        for v in eigenspace.basis[i:]:
            worst = max(worst, abs(inner(wu, v)))
    return worst


def _decompose(w: TrigPoly, data: CriticalData) -> dict[int, np.ndarray]:
    """Coefficients of ``w`` in each ambient eigenbasis; checks nothing is left over."""
    coeffs: dict[int, np.ndarray] = {}
    residual = dict(w.terms)
    keys = set(w.terms)
    for idx, space in enumerate(data.ambient):
        if not keys & space.keys:
            continue
        c = np.array([inner(w, e) for e in space.basis])
        coeffs[idx] = c
        for ci, e in zip(c, space.basis):
            for k, v in e.terms.items():
                residual[k] = residual.get(k, 0.0) - ci * v
    scale = max(1.0, w.max_abs_coeff())
    left = {k: v for k, v in residual.items() if abs(v) > RESIDUAL_TOL * scale}
    if left:
        missing = ", ".join(str(tuple(k)) for k in sorted(left)[:5])
        raise IncompleteSpectrum(f"no ambient eigenspace for frequencies: {missing}")
    return coeffs


def assemble_Q(omega: TrigPoly, data: CriticalData) -> QFormResult:
    """Matrix of the quadratic form on the critical eigenspace, in its basis."""
    space = data.eigenspace
    residual = check_admissibility(omega, space)
    if residual > ADMISSIBILITY_TOL:
        raise NotAdmissible(
            f"max |<omega u, v>| on the critical eigenspace is {residual:.3e} "
            f"> {ADMISSIBILITY_TOL:g}"
        )
    lam = data.eigenvalue
    d = space.dim
    parts = [_decompose(omega * u, data) for u in space.basis]
    ledger = []
    q = np.zeros((d, d))
    for idx, amb in enumerate(data.ambient):
        if amb.label == space.label:
            continue
        if not any(idx in p for p in parts):
            continue
        vecs = np.array([p.get(idx, np.zeros(amb.dim)) for p in parts])
        overlaps = vecs @ vecs.T
        weight = (amb.eigenvalue + lam) / (amb.eigenvalue - lam)
        entry = LedgerEntry(amb.eigenvalue, weight, overlaps)
        ledger.append(entry)
        q += entry.contribution
    matrix = SymMatrix(q)
    spectrum, vectors = sym_eigen(matrix)
    return QFormResult(
        matrix=matrix,
        mu=float(spectrum[0]),
        minimizer=vectors[:, 0],
        spectrum=spectrum,
        eigenvectors=vectors,
        ledger=tuple(ledger),
        admissibility_residual=residual,
    )


def second_variation(omega: TrigPoly, data: CriticalData) -> SecondVariation:
    """Second derivative ``alpha`` of the normalized eigenvalue along ``e^{t omega}``."""
    qf = assemble_Q(omega, data)
    lam = data.eigenvalue
    wn = norm_sq(omega)
    alpha = lam * (wn + qf.mu * data.normalizer)
    return SecondVariation(
        alpha=alpha,
        mu=qf.mu,
        omega_norm_sq=wn,
        normalizer=data.normalizer,
        eigenvalue=lam,
        branch_second_derivatives=lam * qf.spectrum,
        normalized_branch_curvatures=lam * (qf.spectrum * data.normalizer + wn),
        qform=qf,
    )


def coordinates(u: TrigPoly, space: Eigenspace) -> np.ndarray:
    """Coordinates of ``u`` in the eigenspace basis; ``u`` must lie in the span."""
    c = np.array([inner(u, e) for e in space.basis])
    rebuilt = TrigPoly.zero(u.domain)
    for ci, e in zip(c, space.basis):
        rebuilt = rebuilt + e.scale(ci)
    off = (u - rebuilt).max_abs_coeff()
    if off > RESIDUAL_TOL * max(1.0, u.max_abs_coeff()):
        raise ValueError(f"function is not in the eigenspace (residual coefficient {off:.3e})")
    return c


def quadratic_form(omega: TrigPoly, data: CriticalData, u: TrigPoly,
                   v: TrigPoly | None = None) -> float:
    """``Q(u, v)`` for arbitrary (not necessarily normalized) ``u, v`` in ``E_k``."""
    qf = assemble_Q(omega, data)
    x = coordinates(u, data.eigenspace)
    y = x if v is None else coordinates(v, data.eigenspace)
    return float(x @ qf.matrix.entries @ y)


def eigenfunction_first_variation(omega: TrigPoly, u: TrigPoly, data: CriticalData) -> TrigPoly:
    """``d/dt u(t)`` at ``t = 0``: ``sum_i lam_k / (lam_i - lam_k) P_i(omega u)``."""
    coordinates(u, data.eigenspace)
    residual = check_admissibility(omega, data.eigenspace)
    if residual > ADMISSIBILITY_TOL:
        raise NotAdmissible(f"admissibility residual {residual:.3e}")
    lam = data.eigenvalue
    parts = _decompose(omega * u, data)
    out = TrigPoly.zero(u.domain)
    for idx, c in parts.items():
        amb = data.ambient[idx]
        if amb.label == data.eigenspace.label:
            continue
        w = lam / (amb.eigenvalue - lam)
        for ci, e in zip(c, amb.basis):
            out = out + e.scale(w * ci)
    return out


def group_eigenvalues(items, rtol: float = GAP_RTOL):
    """Group ``(eigenvalue, payload)`` pairs into clusters of equal eigenvalue.

    ``items`` must be sorted by eigenvalue.  Yields ``(eigenvalue, payloads)``
    with the eigenvalue of the first member of each cluster.
    """
    cluster: list = []
    head = None
    for value, payload in items:
        if head is not None and _close(value, head, rtol):
            cluster.append(payload)
            continue
        if cluster:
            yield head, cluster
        head, cluster = value, [payload]
    if cluster:
        yield head, cluster
