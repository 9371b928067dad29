"""Exact arithmetic on finite real Fourier series.

Two domains are supported:

* the flat torus ``R^2 / Gamma_{a,b}`` with ``Gamma_{a,b} = Z(1,0) + Z(a,b)``.
  A term ``(m, n, kind)`` stands for ``cos`` or ``sin`` of
  ``2 pi <gamma*, x>`` where ``gamma* = m e1* + n e2*`` is a dual-lattice
  vector, ``e1* = (1, -a/b)``, ``e2* = (0, 1/b)``.  In lattice coordinates
  ``x = s (1, 0) + r (a, b)`` the phase is simply ``2 pi (m s + n r)``.
* the boundary of the cylinder ``S^1 x [-T, T]``: two circles of length
  ``2 pi``.  A term ``(n, kind, parity)`` is ``cos n theta`` or
  ``sin n theta`` on the circle ``t = T``, times ``+1`` (even) or ``-1``
  (odd) on the circle ``t = -T``.

Products are expanded with the product-to-sum identities, so the algebra is
closed and exact up to floating point rounding of the coefficients.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Union

import numpy as np

from .errors import BasisNotOrthonormal, DomainMismatch, SpecError

COEFF_CUTOFF = 1e-14
ORTHONORMAL_TOL = 1e-12

COS, SIN = "cos", "sin"
EVEN, ODD = "even", "odd"


@dataclass(frozen=True)
class TorusDomain:
    """Flat torus with lattice ``Z(1,0) + Z(a,b)``.

    ``length_scale`` multiplies all lengths: the metric is
    ``length_scale**2 * g_{a,b}``, so the area is ``b * length_scale**2``.
    """

    a: float
    b: float
    length_scale: float = 1.0

    @property
    def measure(self) -> float:
        return self.b * self.length_scale ** 2

    def freq_norm_sq(self, m: int, n: int) -> float:
        """``|m e1* + n e2*|^2`` for the unscaled lattice."""
        return m * m + (n - m * self.a) ** 2 / (self.b * self.b)

    def eigenvalue(self, m: int, n: int) -> float:
        return 4.0 * math.pi ** 2 * self.freq_norm_sq(m, n) / self.length_scale ** 2


@dataclass(frozen=True)
class CylinderBoundary:
    """Both boundary circles of ``S^1 x [-T, T]``, each of length ``2 pi``.

    With ``length_scale`` the metric is ``length_scale**2 * g_T`` and the total
    boundary length is ``4 pi * length_scale``.
    """

    T: float
    length_scale: float = 1.0

    @property
    def measure(self) -> float:
        return 4.0 * math.pi * self.length_scale


Domain = Union[TorusDomain, CylinderBoundary]


def _canonical(freq: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    """Return the canonical representative of ``+-freq`` and the sign used."""
    for x in freq:
        if x > 0:
            return freq, 1
        if x < 0:
            return tuple(-y for y in freq), -1
    return freq, 1


class TorusFreq(NamedTuple):
    m: int
    n: int
    kind: str = COS

    @property
    def freq(self) -> tuple[int, int]:
        return (self.m, self.n)

    @property
    def parity(self) -> None:
        return None

    def is_zero(self) -> bool:
        return self.m == 0 and self.n == 0


class BoundaryFreq(NamedTuple):
    n: int
    kind: str = COS
    parity: str = EVEN

    @property
    def freq(self) -> tuple[int]:
        return (self.n,)

    def is_zero(self) -> bool:
        return self.n == 0


Key = Union[TorusFreq, BoundaryFreq]


def make_key(domain: Domain, freq: Iterable[int], kind: str,
             parity: str | None = None) -> tuple[Key | None, int]:
    """Canonical key for a single term plus the sign picked up by canonicalisation.

    Returns ``(None, 0)`` for ``sin`` at the zero frequency, which vanishes.
    """
    if kind not in (COS, SIN):
        raise ValueError(f"kind must be 'cos' or 'sin', got {kind!r}")
    freq, sign = _canonical(tuple(int(x) for x in freq))
    if kind == SIN:
        if all(x == 0 for x in freq):
            return None, 0
    else:
        sign = 1
    if isinstance(domain, TorusDomain):
        if len(freq) != 2:
            raise ValueError(f"torus frequency needs two integers, got {freq}")
        return TorusFreq(freq[0], freq[1], kind), sign
    if len(freq) != 1:
        raise ValueError(f"boundary frequency needs one integer, got {freq}")
    parity = EVEN if parity is None else parity
    if parity not in (EVEN, ODD):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    return BoundaryFreq(freq[0], kind, parity), sign


def _clean(terms: Mapping[Key, float]) -> dict[Key, float]:
    return {k: float(c) for k, c in terms.items() if abs(c) >= COEFF_CUTOFF}


class TrigPoly:
    """Finite real Fourier series on a :class:`TorusDomain` or :class:`CylinderBoundary`.

    Immutable.  Coefficients below ``COEFF_CUTOFF`` in magnitude are dropped.
    """

    __slots__ = ("domain", "terms")

    def __init__(self, domain: Domain, terms: Mapping[Key, float] | None = None):
        self.domain = domain
        self.terms = _clean(terms or {})

    # construction -----------------------------------------------------

    @classmethod
    def from_terms(cls, domain: Domain, items: Iterable[tuple]) -> "TrigPoly":
        """Build from ``(freq, kind, coeff)`` or ``(freq, kind, parity, coeff)`` tuples.

        Frequencies need not be canonical; ``sin`` terms pick up the sign.
        """
        acc: dict[Key, float] = {}
        for item in items:
            if len(item) == 3:
                freq, kind, coeff = item
                parity = None
            else:
                freq, kind, parity, coeff = item
            if isinstance(freq, (int, np.integer)):
                freq = (freq,)
            key, sign = make_key(domain, freq, kind, parity)
            if key is not None:
                acc[key] = acc.get(key, 0.0) + sign * coeff
        return cls(domain, acc)

    @classmethod
    def constant(cls, domain: Domain, value: float = 1.0) -> "TrigPoly":
        zero = (0, 0) if isinstance(domain, TorusDomain) else (0,)
        return cls.from_terms(domain, [(zero, COS, value)])

    @classmethod
    def zero(cls, domain: Domain) -> "TrigPoly":
        return cls(domain)

    # arithmetic -------------------------------------------------------

    def _check(self, other: "TrigPoly") -> None:
        if not isinstance(other, TrigPoly):
            raise TypeError(f"expected TrigPoly, got {type(other).__name__}")
        if other.domain != self.domain:
            raise DomainMismatch(f"{self.domain} vs {other.domain}")

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        self._check(other)
        acc = dict(self.terms)
        for k, c in other.terms.items():
            acc[k] = acc.get(k, 0.0) + c
        return TrigPoly(self.domain, acc)

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(self.domain, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + (-other)

    def scale(self, s: float) -> "TrigPoly":
        return TrigPoly(self.domain, {k: s * c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return multiply(self, other)
        return self.scale(float(other))

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "TrigPoly":
        return self.scale(1.0 / s)

    def __eq__(self, other) -> bool:
        return (isinstance(other, TrigPoly) and self.domain == other.domain
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.domain, frozenset(self.terms.items())))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        parts = []
        for k, c in sorted(self.terms.items()):
            f = ",".join(map(str, k.freq))
            tag = f"{k.kind}({f})" + (f"[{k.parity}]" if k.parity else "")
            parts.append(f"{c:+.6g}*{tag}")
        return f"TrigPoly({' '.join(parts) or '0'})"

    # queries ----------------------------------------------------------

    def bandwidth(self) -> int:
        """Largest absolute integer frequency component among the stored terms."""
        return max((max(abs(x) for x in k.freq) for k in self.terms), default=0)

    def coeff(self, key: Key) -> float:
        return self.terms.get(key, 0.0)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def parity_part(self, parity: str) -> "TrigPoly":
        """Even or odd longitudinal part of a boundary function."""
        return TrigPoly(self.domain, {k: c for k, c in self.terms.items()
                                      if k.parity == parity})

    # evaluation -------------------------------------------------------

    def evaluate_lattice(self, s, r) -> np.ndarray:
        """Torus values at lattice coordinates, i.e. at ``s (1,0) + r (a,b)``."""
        if not isinstance(self.domain, TorusDomain):
            raise DomainMismatch("evaluate_lattice needs a torus function")
        s, r = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(r, dtype=float))
        out = np.zeros(s.shape)
        for k, c in self.terms.items():
            phase = 2.0 * math.pi * (k.m * s + k.n * r)
            out += c * (np.cos(phase) if k.kind == COS else np.sin(phase))
        return out

    def evaluate(self, x, y) -> np.ndarray:
        """Torus values at Cartesian points ``(x, y)``."""
        b = self.domain.b
        y = np.asarray(y, dtype=float)
        r = y / b
        return self.evaluate_lattice(np.asarray(x, dtype=float) - self.domain.a * r, r)

    def evaluate_boundary(self, theta, side: int = 1) -> np.ndarray:
        """Boundary values at angle ``theta`` on the circle ``t = side * T``."""
        if not isinstance(self.domain, CylinderBoundary):
            raise DomainMismatch("evaluate_boundary needs a cylinder boundary function")
        if side not in (1, -1):
            raise ValueError("side must be +1 or -1")
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape)
        for k, c in self.terms.items():
            sign = 1.0 if (k.parity == EVEN or side == 1) else -1.0
            out += sign * c * (np.cos(k.n * theta) if k.kind == COS else np.sin(k.n * theta))
        return out


def _product_terms(k1: Key, k2: Key) -> list[tuple[tuple[int, ...], str, float]]:
    """Product-to-sum expansion of two unit terms as ``(freq, kind, weight)``."""
    f1, f2 = k1.freq, k2.freq
    plus = tuple(x + y for x, y in zip(f1, f2))
    minus = tuple(x - y for x, y in zip(f1, f2))
    if k1.kind == COS and k2.kind == COS:
        return [(minus, COS, 0.5), (plus, COS, 0.5)]
    if k1.kind == SIN and k2.kind == SIN:
        return [(minus, COS, 0.5), (plus, COS, -0.5)]
    if k1.kind == SIN:
        return [(plus, SIN, 0.5), (minus, SIN, 0.5)]
    return [(plus, SIN, 0.5), (minus, SIN, -0.5)]


def multiply(f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """Exact product of two trigonometric polynomials on the same domain."""
    f._check(g)
    domain = f.domain
    acc: dict[Key, float] = {}
    for k1, c1 in f.terms.items():
        for k2, c2 in g.terms.items():
            parity = None
            if k1.parity is not None:
                parity = EVEN if k1.parity == k2.parity else ODD
            for freq, kind, w in _product_terms(k1, k2):
                key, sign = make_key(domain, freq, kind, parity)
                if key is not None:
                    acc[key] = acc.get(key, 0.0) + sign * w * c1 * c2
    return TrigPoly(domain, acc)


def term_norm_sq(domain: Domain, key: Key) -> float:
    """Squared L2 norm of the unit-coefficient term ``key``."""
    return domain.measure if key.is_zero() else 0.5 * domain.measure


def inner(f: TrigPoly, g: TrigPoly) -> float:
    """L2 inner product over the torus fundamental domain or both boundary circles."""
    f._check(g)
    small, large = (f, g) if len(f.terms) <= len(g.terms) else (g, f)
    total = 0.0
    for k, c in small.terms.items():
        d = large.terms.get(k)
        if d is not None:
            total += c * d * term_norm_sq(f.domain, k)
    return total


def norm_sq(f: TrigPoly) -> float:
    return inner(f, f)


def gram_matrix(basis: list[TrigPoly]) -> np.ndarray:
    n = len(basis)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            g[i, j] = g[j, i] = inner(basis[i], basis[j])
    return g


def check_orthonormal(basis: list[TrigPoly], tol: float = ORTHONORMAL_TOL) -> float:
    """Max deviation of the Gram matrix from the identity; raises above ``tol``."""
    if not basis:
        return 0.0
    dev = float(np.abs(gram_matrix(basis) - np.eye(len(basis))).max())
    if dev > tol:
        raise BasisNotOrthonormal(f"Gram matrix deviates from identity by {dev:.3e}")
    return dev


def project(f: TrigPoly, basis: list[TrigPoly]) -> tuple[np.ndarray, TrigPoly]:
    """Orthogonal projection onto the span of an orthonormal basis.

    Returns
    -------
    coeffs : ndarray
        ``<f, basis[i]>``.
    residual : TrigPoly
        ``f - sum(coeffs[i] * basis[i])``.
    """
    check_orthonormal(basis)
    coeffs = np.array([inner(f, e) for e in basis])
    residual = f
    for c, e in zip(coeffs, basis):
        residual = residual - e.scale(c)
    return coeffs, residual


# perturbation spec files ------------------------------------------------

def parse_perturbation(obj, domain: Domain) -> TrigPoly:
    """Build a perturbation from the JSON spec format.

    ``{"domain": "torus" | "annulus",
       "terms": [{"freq": [m, n] | n, "kind": "cos" | "sin",
                  "parity": "even" | "odd", "coeff": x}, ...]}``

    ``parity`` is only accepted for the annulus and defaults to ``even``.
    ``obj`` may be a parsed mapping or a JSON string.
    """
    if isinstance(obj, (str, bytes)):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(obj, dict):
        raise SpecError("perturbation spec must be a JSON object")
    name = obj.get("domain")
    expected = "torus" if isinstance(domain, TorusDomain) else "annulus"
    if name not in ("torus", "annulus"):
        raise SpecError(f"field 'domain': expected 'torus' or 'annulus', got {name!r}")
    if name != expected:
        raise SpecError(f"field 'domain': spec is for {name!r} but the command needs {expected!r}")
    terms = obj.get("terms")
    if not isinstance(terms, list):
        raise SpecError("field 'terms': expected a list")
    items = []
    for i, term in enumerate(terms):
        where = f"terms[{i}]"
        if not isinstance(term, dict):
            raise SpecError(f"{where}: expected an object")
        unknown = set(term) - {"freq", "kind", "parity", "coeff"}
        if unknown:
            raise SpecError(f"{where}: unknown field(s) {sorted(unknown)}")
        freq = term.get("freq")
        if name == "torus":
            if (not isinstance(freq, list) or len(freq) != 2
                    or not all(isinstance(x, int) and not isinstance(x, bool) for x in freq)):
                raise SpecError(f"{where}.freq: expected [m, n] with integer entries")
            if "parity" in term:
                raise SpecError(f"{where}.parity: only allowed for the annulus")
            freq = tuple(freq)
        else:
            if isinstance(freq, list) and len(freq) == 1:
                freq = freq[0]
            if not isinstance(freq, int) or isinstance(freq, bool):
                raise SpecError(f"{where}.freq: expected an integer angular frequency")
            freq = (freq,)
        kind = term.get("kind")
        if kind not in (COS, SIN):
            raise SpecError(f"{where}.kind: expected 'cos' or 'sin', got {kind!r}")
        parity = term.get("parity", EVEN if name == "annulus" else None)
        if name == "annulus" and parity not in (EVEN, ODD):
            raise SpecError(f"{where}.parity: expected 'even' or 'odd', got {parity!r}")
        coeff = term.get("coeff")
        if not isinstance(coeff, (int, float)) or isinstance(coeff, bool) or not math.isfinite(coeff):
            raise SpecError(f"{where}.coeff: expected a finite number")
        items.append((freq, kind, parity, float(coeff)))
    return TrigPoly.from_terms(domain, items)


def dump_perturbation(f: TrigPoly) -> dict:
    """Inverse of :func:`parse_perturbation`."""
    if isinstance(f.domain, TorusDomain):
        terms = [{"freq": [k.m, k.n], "kind": k.kind, "coeff": c}
                 for k, c in sorted(f.terms.items())]
        return {"domain": "torus", "terms": terms}
    terms = [{"freq": k.n, "kind": k.kind, "parity": k.parity, "coeff": c}
             for k, c in sorted(f.terms.items())]
    return {"domain": "annulus", "terms": terms}
