"""Closed-form common tangents for symmetric sphere arrangements.

Three families are covered:

* tetrahedron plus axes: equal spheres centered at the four vertices of
  the tetrahedron inscribed in the cube ``(+-1, +-1, +-1)`` and at
  ``+-a e_j`` for ``j >= 4``;
* the crosspolytope: equal spheres centered at ``+-e_j``, ``j >= 2``;
* the perturbed crosspolytope: centers ``a e_2, -e_2`` and ``+-e_j``,
  ``j >= 3``, all of which lie in the hyperplane ``x_1 = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numpy.polynomial import Polynomial as P1

from .core import (
    REALITY_TOL,
    DegenerateRadius,
    DiscriminantVanishes,
    Line,
    SolutionRecord,
    SphereArrangement,
    ZeroCoordinateRoot,
    is_real_line,
    max_residual,
)

DISCRIMINANT_TOL = 1e-10

TETRAHEDRON = np.array(
    [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
)


def gray_signs(k: int) -> Iterator[tuple[int, ...]]:
    """All ``2**k`` sign vectors in reflected Gray-code order."""
    for i in range(2**k):
        g = i ^ (i >> 1)
        yield tuple(-1 if (g >> b) & 1 else 1 for b in range(k))


@dataclass
class FamilySolution:
    """Lines of a closed-form family together with the arrangement they solve."""

    arrangement: SphereArrangement
    records: list[SolutionRecord]

    @property
    def total(self) -> int:
        return sum(r.multiplicity for r in self.records)

    @property
    def real_count(self) -> int:
        return sum(r.multiplicity for r in self.records if r.is_real)

    @property
    def lines(self) -> list[Line]:
        return [r.line for r in self.records]

    @property
    def max_residual(self) -> float:
        return max(r.residual for r in self.records)


def _records(arr: SphereArrangement, ps, vs, reality_tol: float) -> list[SolutionRecord]:
    out = []
    for p, v in zip(ps, vs):
        line = Line(p, v).scaled()
        out.append(SolutionRecord(line, max_residual(arr, line), is_real_line(line, reality_tol)))
    return out


# tetrahedron plus axes


@dataclass(frozen=True)
class Thm4Params:
    n: int
    a: float
    r: float

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("the tetrahedron-plus-axes family needs n >= 4")
        if not (self.a > 0 and self.r > 0):
            raise ValueError("a and r must be positive")

    @property
    def gamma(self) -> float:
        a2 = self.a**2
        return a2 * (self.n - 1) / (a2 + self.n - 3)

    @property
    def delta(self) -> float:
        g = self.gamma
        return g + (3 - g) ** 2 / 4

    def discriminant_factors(self) -> tuple[float, ...]:
        r2, a2, g = self.r**2, self.a**2, self.gamma
        return (r2 - 3, 3 - g, a2 - 2, r2 - g, (3 - g) ** 2 + 4 * g - 4 * r2)

    def arrangement(self) -> SphereArrangement:
        n = self.n
        centers = [np.concatenate([c, np.zeros(n - 3)]) for c in TETRAHEDRON]
        for j in range(3, n):
            for s in (1.0, -1.0):
                e = np.zeros(n)
                e[j] = s * self.a
                centers.append(e)
        return SphereArrangement.from_arrays(np.array(centers), self.r)


def discriminant_ok(p: Thm4Params, tol: float = DISCRIMINANT_TOL) -> bool:
    return all(abs(f) > tol for f in p.discriminant_factors())


def reality_region(p: Thm4Params) -> bool:
    """``a^2 > 2``, ``gamma < 3`` and ``gamma < r^2 < delta``."""
    g, r2 = p.gamma, p.r**2
    return p.a**2 > 2 and g < 3 and g < r2 < p.delta


def _thm4_raw(p: Thm4Params):
    """Moment points and directions of the ``3 * 2**(n-1)`` tangents, unchecked."""
    n, a2, g, r2 = p.n, p.a**2, p.gamma, p.r**2
    ps, vs = [], []
    root_p = np.sqrt(complex(r2 - g))
    root_v = np.sqrt(complex((3 - g) ** 2 - 4 * (r2 - g)))
    for case in range(3):
        for signs in gray_signs(n - 1):
            sp, sv, s4, *rest = signs
            p1 = sp * root_p
            v2 = -((3 - g) + sv * root_v) / (2 * p1)
            v3 = 1.0
            v4 = s4 * np.sqrt((a2 - 2) / (3 - g) * (v2 * v2 + v3 * v3) / (a2 + n - 3) + 0j)
            v = np.zeros(n, dtype=complex)
            v[1], v[2], v[3] = v2, v3, v4
            for j, s in enumerate(rest, start=4):
                v[j] = s * v4
            q = np.zeros(n, dtype=complex)
            q[0] = p1
            # the tetrahedron is invariant under the cyclic shift of x1, x2, x3
            perm = np.r_[np.roll(np.arange(3), case), np.arange(3, n)]
            ps.append(q[perm])
            vs.append(v[perm])
    return ps, vs


def thm4_tangents(p: Thm4Params, reality_tol: float = REALITY_TOL) -> FamilySolution:
    if not discriminant_ok(p):
        raise DiscriminantVanishes(
            f"a discriminant factor vanishes at n={p.n}, a={p.a}, r={p.r}: {p.discriminant_factors()}"
        )
    arr = p.arrangement()
    ps, vs = _thm4_raw(p)
    return FamilySolution(arr, _records(arr, ps, vs, reality_tol))


def thm4_real_count(p: Thm4Params, reality_tol: float = REALITY_TOL) -> int:
    """Number of real tangents, counted from the enumerated lines."""
    ps, vs = _thm4_raw(p)
    P = np.array(ps)
    V = np.array(vs)
    k = np.argmax(np.abs(V), axis=1)
    V = V / V[np.arange(len(V)), k][:, None]
    scale = np.maximum(1.0, np.abs(P).max(axis=1))
    real = (np.abs(V.imag).max(axis=1) <= reality_tol) & (np.abs(P.imag).max(axis=1) <= reality_tol * scale)
    return int(real.sum())


@dataclass(frozen=True)
class RegionClassification:
    a: float
    r: float
    on_discriminant: bool
    all_real: bool
    count_real: int
    count_complex: int


def region_sample(n: int, a_grid: Sequence[float], r_grid: Sequence[float]) -> list[RegionClassification]:
    """Classify each ``(a, r)`` grid point by how many tangents are real.

    Points on the discriminant locus report zero counts.
    """
    total = 3 * 2 ** (n - 1)
    rows = []
    for a in a_grid:
        for r in r_grid:
            prm = Thm4Params(n, float(a), float(r))
            if not discriminant_ok(prm):
                rows.append(RegionClassification(float(a), float(r), True, False, 0, 0))
                continue
            k = thm4_real_count(prm)
            rows.append(RegionClassification(float(a), float(r), False, k == total, k, total - k))
    return rows


# crosspolytope


def crosspolytope_arrangement(n: int, r: float, a: float = 1.0) -> SphereArrangement:
    centers = []
    for j in range(1, n):
        for s in (a if j == 1 else 1.0, -1.0):
            e = np.zeros(n)
            e[j] = s
            centers.append(e)
    return SphereArrangement.from_arrays(np.array(centers), r)


def crosspolytope_real_window(n: int) -> tuple[float, float]:
    return math.sqrt(1 - 1 / (n - 1)), 1.0


def crosspolytope_predicted_real(n: int, r: float) -> int:
    """Real tangents predicted by the signs of the two radicands."""
    r2 = r * r
    half = 2 ** (n - 1)
    k = 0
    if r2 - 1 + 1 / (n - 1) > 0:
        k += half
    if r2 != 1 and 1 / (1 - r2) + 1 - n > 0:
        k += half
    return k


def crosspolytope_tangents(n: int, r: float, reality_tol: float = REALITY_TOL) -> FamilySolution:
    if n < 3:
        raise ValueError("n must be >= 3")
    r2 = r * r
    if abs(1 - r2) < DISCRIMINANT_TOL:
        raise DegenerateRadius("r^2 = 1")
    rad_p = r2 - 1 + 1 / (n - 1)
    rad_v = 1 / (1 - r2) + 1 - n
    if abs(rad_p) < DISCRIMINANT_TOL or abs(rad_v) < DISCRIMINANT_TOL:
        raise DegenerateRadius(f"a radicand vanishes at n={n}, r={r}")
    ps, vs = [], []
    # v_1 = 0 family
    for sp, *rest in gray_signs(n - 1):
        p = np.zeros(n, dtype=complex)
        p[0] = sp * np.sqrt(complex(rad_p))
        v = np.zeros(n, dtype=complex)
        v[1] = 1.0
        v[2:] = rest
        ps.append(p)
        vs.append(v)
    # p_1 = 0 family
    for sv, *rest in gray_signs(n - 1):
        v = np.zeros(n, dtype=complex)
        v[0] = sv * np.sqrt(complex(rad_v))
        v[1] = 1.0
        v[2:] = rest
        ps.append(np.zeros(n, dtype=complex))
        vs.append(v)
    arr = crosspolytope_arrangement(n, r)
    return FamilySolution(arr, _records(arr, ps, vs, reality_tol))


# perturbed crosspolytope


@dataclass(frozen=True)
class CrosspolytopeParams:
    n: int
    r: float
    a: float = 1.0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if self.a == -1:
            raise ValueError("a = -1 makes two centers coincide")
        if not self.r > 0:
            raise ValueError("r must be positive")

    def arrangement(self) -> SphereArrangement:
        return crosspolytope_arrangement(self.n, self.r, self.a)


def squares_cubic(p: CrosspolytopeParams) -> np.ndarray:
    """Coefficients ``(c0, c1, c2, c3)`` of the homogeneous cubic in ``(alpha, w)``.

    With ``alpha = v_1^2``, ``beta = v_2^2``, ``w = v_3^2`` the linear
    relation ``(1-a) alpha + beta + ((n-3) - a(n-2)) w = 0`` eliminates
    ``beta`` from the sextic, leaving ``sum c_k alpha^k w^(3-k)``.
    """
    n, a, r = p.n, p.a, p.r
    alpha = P1([0.0, 1.0])  # w = 1
    beta = -(1 - a) * alpha - ((n - 3) - a * (n - 2))
    v2 = alpha + beta + (n - 2)
    rest = v2 - beta
    cubic = (1 - a) ** 2 * (alpha + beta) * rest**2 - 4 * r * r * alpha * v2**2 + 4 * a * alpha * v2 * rest
    c = np.zeros(4)
    c[: len(cubic.coef)] = cubic.coef
    return c


def discriminant_from_coefficients(coeffs) -> float:
    """Discriminant of ``c0 + c1 x + c2 x^2 + c3 x^3`` (ascending, real)."""
    d, c, b, a = (float(x) for x in coeffs)
    return 18 * a * b * c * d - 4 * b**3 * d + b * b * c * c - 4 * a * c**3 - 27 * a * a * d * d


def cubic_discriminant(p: CrosspolytopeParams) -> float:
    """Discriminant of the cubic in ``(alpha, w)``; zero iff it has a repeated root."""
    return discriminant_from_coefficients(squares_cubic(p))


def perturbed_crosspolytope_tangents(p: CrosspolytopeParams, reality_tol: float = REALITY_TOL) -> FamilySolution:
    if p.a == 1:
        raise ValueError("a = 1 is the crosspolytope itself; use crosspolytope_tangents")
    n, a = p.n, p.a
    coeffs = squares_cubic(p)
    scale = np.abs(coeffs).max()
    if abs(cubic_discriminant(p)) < DISCRIMINANT_TOL * scale**4:
        raise DiscriminantVanishes(f"repeated root of the squares cubic at a={a}, r={p.r}")
    if abs(coeffs[3]) < DISCRIMINANT_TOL * scale or abs(coeffs[0]) < DISCRIMINANT_TOL * scale:
        raise ZeroCoordinateRoot(f"the squares cubic has a root with v_1 = 0 or v_3 = 0 at a={a}, r={p.r}")
    alphas = np.roots(coeffs[::-1])
    ps, vs = [], []
    for al in sorted(alphas, key=lambda z: (round(z.real, 12), round(z.imag, 12))):
        be = -(1 - a) * al - ((n - 3) - a * (n - 2))
        if abs(be) < DISCRIMINANT_TOL * max(1.0, abs(al)):
            raise ZeroCoordinateRoot(f"root with v_2 = 0 at a={a}, r={p.r}")
        v1 = np.sqrt(complex(al))
        for s2, s3, *rest in gray_signs(n - 1):
            v = np.zeros(n, dtype=complex)
            v[0] = v1
            v[1] = s2 * np.sqrt(complex(be))
            v[2] = s3 * 1.0
            for j, s in enumerate(rest, start=3):
                v[j] = s * v[2]
            vsq = np.sum(v * v)
            q = np.zeros(n, dtype=complex)
            # center a*e_2 enters f - a^2 g as -2a p_2, fixing the sign of p
            q[1] = -(1 - a) * (vsq - v[1] ** 2) / (2 * vsq)
            q[0] = (1 - a) * (vsq - v[1] ** 2) * v[1] / (2 * vsq * v[0])
            ps.append(q)
            vs.append(v)
    arr = p.arrangement()
    return FamilySolution(arr, _records(arr, ps, vs, reality_tol))
