"""Direct numerical check of the second-variation prediction.

The perturbed problems are discretized in truncated Fourier bases:

* torus: ``Delta u = lam e^{t omega} u`` (the Laplacian of ``e^{t omega} g``
  is ``e^{-t omega} Delta_g``), stiffness ``diag(4 pi^2 |gamma*|^2)``;
* cylinder: ``D u = sigma e^{t omega} u`` (the Dirichlet-to-Neumann map of
  ``e^{2 t omega} g`` is ``e^{-t omega} D_g``), stiffness the diagonal of
  Steklov branch eigenvalues.

Both mass matrices carry the weight ``e^{t omega}``; they are computed by
periodic trapezoidal quadrature, which converges spectrally for this smooth
periodic integrand.  The second derivative of the normalized eigenvalue is
then extracted by least-squares quadratic fits at steps ``h`` and ``h/2``
combined by Richardson extrapolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .cylinder import CylinderModuli, branch_eigenvalue
from .engine import LAPLACE_TORUS, CriticalData, SecondVariation, second_variation
from .errors import InsufficientSamples
from .fourier import COS, EVEN, ODD, SIN, CylinderBoundary, TorusDomain, TrigPoly
from .linalg import GeneralizedPencil, SymMatrix, gen_eigen, periodic_nodes
from .torus import TorusModuli

BLOCK_TOL = 1e-14
DEFAULT_TORUS_CUTOFF = 8
DEFAULT_CYLINDER_CUTOFF = 24


@dataclass(frozen=True)
class VerificationConfig:
    """Discretization and sampling parameters.

    ``cutoff`` bounds ``|m|, |n|`` on the torus and the angular frequency on
    the cylinder.  ``quad_points`` is the number of quadrature nodes per
    periodic direction; ``None`` picks four times the total bandwidth.
    Samples are taken at ``t = j * step`` for ``|j| <= half_width`` and again
    with ``step / 2``.
    """

    cutoff: int
    step: float = 0.05
    half_width: int = 2
    quad_points: int | None = None
    richardson: bool = True

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if 2 * self.half_width + 1 < 5:
            raise ValueError("need at least 5 samples (half_width >= 2)")

    def checked(self, omega: TrigPoly) -> "VerificationConfig":
        """Validate against ``omega`` and fill in the quadrature size."""
        bw = omega.bandwidth()
        if self.cutoff < 3 * bw:
            raise ValueError(f"cutoff {self.cutoff} is below 3x the bandwidth {bw} of omega")
        total = 2 * self.cutoff + bw
        q = self.quad_points if self.quad_points is not None else 4 * total
        if q < 4 * total:
            raise ValueError(f"quad_points {q} is below 4x the total bandwidth {total}")
        return VerificationConfig(self.cutoff, self.step, self.half_width, q, self.richardson)

    def steps(self) -> list[tuple[float, ...]]:
        levels = [self.step, self.step / 2] if self.richardson else [self.step]
        return [tuple(j * h for j in range(-self.half_width, self.half_width + 1)) for h in levels]


@dataclass(frozen=True)
class GalerkinMatrices:
    """Discrete pencil ``diag(stiffness) v = lam mass v`` with its basis labels."""

    labels: list
    stiffness: np.ndarray  # diagonal entries
    mass: np.ndarray
    normalizer: float  # area or boundary length of the perturbed metric


@dataclass(frozen=True)
class PerturbedSpectrum:
    eigenvalues: np.ndarray  # ascending
    normalizer: float  # area or boundary length of the perturbed metric


def _block_solve(stiffness: np.ndarray, mass: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``K v = lam M v`` solved block by block.

    ``K`` is diagonal; ``M`` is split along the connected components of its
    entries above ``BLOCK_TOL`` relative to its largest entry.
    """
    scale = np.abs(mass).max()
    graph = csr_matrix(np.abs(mass) > BLOCK_TOL * scale)
    n_blocks, labels = connected_components(graph, directed=False)
    values = []
    for b in range(n_blocks):
        idx = np.flatnonzero(labels == b)
        k = stiffness[np.ix_(idx, idx)]
        m = mass[np.ix_(idx, idx)]
        w, _ = gen_eigen(GeneralizedPencil(SymMatrix(k), SymMatrix(m)))
        values.append(w)
    return np.sort(np.concatenate(values))


def torus_basis(cutoff: int) -> list[tuple[int, int, str]]:
    """Real basis labels: constant, then ``sin``/``cos`` per canonical frequency in the box."""
    out = [(0, 0, COS)]
    for m in range(0, cutoff + 1):
        for n in range(-cutoff, cutoff + 1):
            if m == 0 and n <= 0:
                continue
            out.append((m, n, SIN))
            out.append((m, n, COS))
    return out


def torus_galerkin_matrices(moduli: TorusModuli, omega: TrigPoly, t: float,
                            config: VerificationConfig) -> GalerkinMatrices:
    """Stiffness and weighted mass of the Laplacian of ``e^{t omega} g_{a,b}``.

    The weight's Fourier coefficients come from an FFT of its samples on a
    uniform grid in lattice coordinates, i.e. trapezoidal quadrature for all
    frequencies at once.
    """
    domain: TorusDomain = omega.domain
    if (domain.a, domain.b) != (moduli.a, moduli.b):
        raise ValueError("omega lives on a different torus")
    cfg = config.checked(omega)
    nq, N = cfg.quad_points, cfg.cutoff
    area = domain.measure

    nodes = periodic_nodes(1.0, nq)
    s, r = np.meshgrid(nodes, nodes, indexing="ij")
    weight = np.exp(t * omega.evaluate_lattice(s, r))
    # what[k1, k2] = mean of weight * exp(-2 pi i (k1 s + k2 r))
    what = np.fft.fft2(weight) / nq ** 2

    ms, ns = np.meshgrid(np.arange(-N, N + 1), np.arange(-N, N + 1), indexing="ij")
    ms, ns = ms.ravel(), ns.ravel()
    index = {(int(m), int(n)): i for i, (m, n) in enumerate(zip(ms, ns))}
    # <W e_p, e_q> = what(q - p) for unit exponentials e_p
    gram = what[(ms[None, :] - ms[:, None]) % nq, (ns[None, :] - ns[:, None]) % nq]

    labels = torus_basis(N)
    u = np.zeros((len(ms), len(labels)), dtype=complex)
    stiff = np.empty(len(labels))
    root2 = math.sqrt(2.0)
    for j, (m, n, kind) in enumerate(labels):
        stiff[j] = domain.eigenvalue(m, n)
        if m == 0 and n == 0:
            u[index[(0, 0)], j] = 1.0
        elif kind == COS:
            u[index[(m, n)], j] = 1 / root2
            u[index[(-m, -n)], j] = 1 / root2
        else:
            u[index[(m, n)], j] = -1j / root2
            u[index[(-m, -n)], j] = 1j / root2
    mass = np.real(u.conj().T @ gram @ u)
    mass = 0.5 * (mass + mass.T)
    return GalerkinMatrices(labels, stiff, mass, area * float(np.real(what[0, 0])))


def torus_perturbed_spectrum(moduli: TorusModuli, omega: TrigPoly, t: float,
                             config: VerificationConfig) -> PerturbedSpectrum:
    """Galerkin eigenvalues of the Laplacian of ``e^{t omega} g_{a,b}``."""
    mats = torus_galerkin_matrices(moduli, omega, t, config)
    return PerturbedSpectrum(_block_solve(np.diag(mats.stiffness), mats.mass), mats.normalizer)


def cylinder_basis(cutoff: int) -> list[tuple[int, str, str]]:
    out = []
    for parity in (EVEN, ODD):
        out.append((0, COS, parity))
        for n in range(1, cutoff + 1):
            out.append((n, SIN, parity))
            out.append((n, COS, parity))
    return out


def cylinder_galerkin_matrices(moduli: CylinderModuli, omega: TrigPoly, t: float,
                               config: VerificationConfig) -> GalerkinMatrices:
    """Steklov branch values and weighted boundary mass for ``e^{2 t omega} g_T``."""
    domain: CylinderBoundary = omega.domain
    if domain.T != moduli.T:
        raise ValueError("omega lives on a different cylinder")
    cfg = config.checked(omega)
    nq = cfg.quad_points
    ell = domain.length_scale
    theta = periodic_nodes(2.0 * math.pi, nq)
    labels = cylinder_basis(cfg.cutoff)
    half = 0.5 * domain.measure
    mass = np.zeros((len(labels), len(labels)))
    length = 0.0
    for side in (1, -1):
        phi = np.empty((nq, len(labels)))
        for j, (n, kind, parity) in enumerate(labels):
            norm = math.sqrt(domain.measure if n == 0 else half)
            trig = np.cos(n * theta) if kind == COS else np.sin(n * theta)
            sign = -1.0 if (side == -1 and parity == ODD) else 1.0
            phi[:, j] = sign * trig / norm
        w = np.exp(t * omega.evaluate_boundary(theta, side)) * (ell * 2.0 * math.pi / nq)
        mass += phi.T @ (w[:, None] * phi)
        length += float(w.sum())
    mass = 0.5 * (mass + mass.T)
    stiff = np.array([branch_eigenvalue(n, parity, moduli.T) / ell for n, _, parity in labels])
    return GalerkinMatrices(labels, stiff, mass, length)


def cylinder_perturbed_spectrum(moduli: CylinderModuli, omega: TrigPoly, t: float,
                                config: VerificationConfig) -> PerturbedSpectrum:
    """Galerkin eigenvalues of the DtN map of ``e^{2 t omega} g_T``."""
    mats = cylinder_galerkin_matrices(moduli, omega, t, config)
    return PerturbedSpectrum(_block_solve(np.diag(mats.stiffness), mats.mass), mats.normalizer)


def fit_quadratic(samples) -> tuple[float, float]:
    """Least-squares ``c0 + c1 t + c2 t^2``; returns ``(2 c2, c1)``."""
    pts = sorted((float(t), float(v)) for t, v in samples)
    ts = np.array([p[0] for p in pts])
    if len(ts) < 5:
        raise InsufficientSamples(f"need at least 5 samples, got {len(ts)}")
    if not np.any(ts == 0.0):
        raise InsufficientSamples("samples must include t = 0")
    if not np.allclose(ts, -ts[::-1], rtol=0, atol=1e-12 * max(1.0, np.abs(ts).max())):
        raise InsufficientSamples("samples must be symmetric around t = 0")
    vs = np.array([p[1] for p in pts])
    v0 = vs[ts == 0.0][0]
    design = np.stack([np.ones_like(ts), ts, ts * ts], axis=1)
    coef, *_ = np.linalg.lstsq(design, vs - v0, rcond=None)
    return 2.0 * coef[2], coef[1]


def measure_second_derivative(coarse, fine=None) -> tuple[float, float]:
    """Second derivative and first-derivative residual at ``t = 0``.

    With ``fine`` samples (step halved) the estimates are Richardson
    extrapolated as ``(4 fine - coarse) / 3``.
    """
    d2c, d1c = fit_quadratic(coarse)
    if fine is None:
        return d2c, d1c
    d2f, d1f = fit_quadratic(fine)
    return (4.0 * d2f - d2c) / 3.0, (4.0 * d1f - d1c) / 3.0


@dataclass(frozen=True)
class VariationReport:
    predicted_alpha: float
    measured_alpha: float
    relative_error: float
    first_derivative_residual: float
    # measured second derivatives of the split branches, ascending
    branch_curvatures: np.ndarray
    predicted_branch_curvatures: np.ndarray
    branch_relative_errors: np.ndarray
    normalized_branch_curvatures: np.ndarray
    samples: list[tuple[float, float, float, float]] = field(repr=False)
    prediction: SecondVariation = field(repr=False)

    def csv_rows(self) -> list[list[str]]:
        rows = [["t", "lambda_k", "normalizer", "normalized"]]
        rows.extend([repr(float(x)) for x in row] for row in self.samples)
        return rows


def _rel(measured, predicted, floor: float = 1e-12):
    return np.abs(measured - predicted) / np.maximum(np.abs(predicted), floor)


def verify(problem: CriticalData, omega: TrigPoly, config: VerificationConfig) -> VariationReport:
    """Compare the predicted ``alpha`` with finite differences of the Galerkin spectrum."""
    prediction = second_variation(omega, problem)
    domain = problem.domain
    if problem.kind == LAPLACE_TORUS:
        moduli = TorusModuli(domain.a, domain.b)

        def solve(t):
            return torus_perturbed_spectrum(moduli, omega, t, config)
    else:
        moduli = CylinderModuli(domain.T)

        def solve(t):
            return cylinder_perturbed_spectrum(moduli, omega, t, config)

    space = problem.eigenspace
    first = sum(e.dim for e in problem.ambient if e.eigenvalue < space.eigenvalue)
    dim = space.dim
    cache: dict[float, PerturbedSpectrum] = {}

    def spectrum(t: float) -> PerturbedSpectrum:
        if t not in cache:
            cache[t] = solve(t)
        return cache[t]

    levels = config.steps()
    normalized, branches, branches_norm = [], [[] for _ in range(dim)], [[] for _ in range(dim)]
    for ts in levels:
        norm_samples = []
        per_branch = [[] for _ in range(dim)]
        per_branch_norm = [[] for _ in range(dim)]
        for t in ts:
            sp = spectrum(t)
            cluster = sp.eigenvalues[first:first + dim]
            norm_samples.append((t, cluster[0] * sp.normalizer))
            for j in range(dim):
                per_branch[j].append((t, cluster[j]))
                per_branch_norm[j].append((t, cluster[j] * sp.normalizer))
        normalized.append(norm_samples)
        for j in range(dim):
            branches[j].append(per_branch[j])
            branches_norm[j].append(per_branch_norm[j])

    measured, d1 = measure_second_derivative(*normalized)
    curv = np.array([measure_second_derivative(*b)[0] for b in branches])
    curv_norm = np.array([measure_second_derivative(*b)[0] for b in branches_norm])
    predicted_branches = prediction.branch_second_derivatives
    samples = []
    for t in sorted(cache):
        sp = cache[t]
        lam = float(sp.eigenvalues[first])
        samples.append((t, lam, sp.normalizer, lam * sp.normalizer))
    return VariationReport(
        predicted_alpha=prediction.alpha,
        measured_alpha=float(measured),
        relative_error=float(_rel(measured, prediction.alpha)),
        first_derivative_residual=float(abs(d1)),
        branch_curvatures=curv,
        predicted_branch_curvatures=predicted_branches,
        branch_relative_errors=_rel(curv, predicted_branches),
        normalized_branch_curvatures=curv_norm,
        samples=samples,
        prediction=prediction,
    )


def default_config(problem: CriticalData, cutoff: int | None = None, step: float = 0.05) -> VerificationConfig:
    if cutoff is None:
        cutoff = DEFAULT_TORUS_CUTOFF if problem.kind == LAPLACE_TORUS else DEFAULT_CYLINDER_CUTOFF
    return VerificationConfig(cutoff=cutoff, step=step)
