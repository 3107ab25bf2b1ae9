"""Polynomial formulations of the common-tangent problem.

The main entry point is :func:`build_reduced_system`, which eliminates the
moment point ``p`` and leaves ``n - 1`` homogeneous equations in the
direction ``v``: a cubic (from ``p . v = 0``), a quartic (from ``p^2 = r^2``)
and ``n - 3`` quadrics (the surplus linear conditions on ``p``).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np
import scipy.linalg

from .core import (
    AffinelyDependentCenters,
    IsotropicDirection,
    Line,
    SphereArrangement,
    dot,
    normalize_moment,
)
from .poly import Polynomial, PolySystem, dot_poly, variables

SPAN_RTOL = 1e-10


@dataclass(frozen=True)
class ReducedSystem:
    system: PolySystem
    basis_indices: tuple[int, ...]
    translated: SphereArrangement
    origin: np.ndarray
    # p = M^{-1} b(v) / (2 v^2) in translated coordinates, with M^{-1} cached
    minv: np.ndarray

    @property
    def n(self) -> int:
        return self.translated.n

    @property
    def arrangement(self) -> SphereArrangement:
        return SphereArrangement.from_arrays(self.translated.centers + self.origin, self.translated.radii)

    def lines(self, v, v1_tol: float | None = None) -> list[Line]:
        return [back_substitute_line(v, self)]


def _b_coefficients(centers: np.ndarray, radii: np.ndarray, r: float):
    """For each center: (c_i^2 - (r_i^2 - r^2)), used in b_i = v^2 * that - (v.c_i)^2."""
    return np.einsum("ij,ij->i", centers, centers) - (radii**2 - r**2)


def build_reduced_system(arr: SphereArrangement) -> ReducedSystem:
    n = arr.n
    origin = arr.spheres[-1].center.copy()
    r = arr.spheres[-1].radius
    centers = arr.centers - origin
    translated = SphereArrangement.from_arrays(centers, arr.radii)
    others = centers[:-1]

    sv = np.linalg.svd(others, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= SPAN_RTOL * sv[0] or np.linalg.matrix_rank(others, tol=SPAN_RTOL * sv[0]) < n:
        raise AffinelyDependentCenters(
            "sphere centers do not affinely span R^n; use a closed-form family or perturb"
        )

    # column-pivoted QR on the centers-as-columns picks the best-conditioned basis
    _, _, piv = scipy.linalg.qr(others.T, pivoting=True, mode="economic")
    basis = tuple(sorted(int(i) for i in piv[:n]))
    rest = [i for i in range(len(others)) if i not in basis]
    M = others[list(basis)]
    minv = np.linalg.inv(M)

    v = variables(n)
    v2 = dot_poly(v, v)
    kappa = _b_coefficients(others, arr.radii[:-1], r)

    def b(i):
        vc = dot_poly(v, others[i])
        return v2 * kappa[i] - vc * vc

    bvec = [b(i) for i in basis]
    # q = 2 v^2 p, a vector of quadratic forms
    q = [dot_poly(minv[k], bvec) for k in range(n)]

    cubic = dot_poly(q, v)
    quartic = dot_poly(q, q) - (4 * r * r) * v2 * v2
    quadrics = [dot_poly(q, others[i]) - b(i) for i in rest]
    polys = [f.scaled_to_unit() for f in [cubic, quartic, *quadrics]]
    return ReducedSystem(PolySystem(polys), basis, translated, origin, minv)


def back_substitute_p(v, red: ReducedSystem) -> np.ndarray:
    """Moment point for the direction ``v`` in original coordinates (``p . v = 0``)."""
    return back_substitute_line(v, red).p


def back_substitute_line(v, red: ReducedSystem) -> Line:
    v = np.asarray(v, dtype=complex)
    v2 = dot(v, v)
    if v2 == 0:
        raise IsotropicDirection("back substitution needs v^2 != 0")
    arr = red.translated
    r = arr.spheres[-1].radius
    idx = list(red.basis_indices)
    c = arr.centers[idx]
    kappa = _b_coefficients(c, arr.radii[idx], r)
    b = v2 * kappa - (c @ v) ** 2
    p = red.minv @ b / (2 * v2)
    return normalize_moment(p + red.origin, v)


@dataclass(frozen=True)
class HyperplaneSystem:
    """Reduced system for centers spanning an affine hyperplane.

    Coordinates are rotated so the hyperplane is ``x_1 = 0`` and translated
    so the last center is the origin.  The in-plane part ``p'`` of the moment
    point solves ``n - 1`` linear equations, ``p . v = 0`` gives
    ``p_1 = -q'.v' / (2 v^2 v_1)``, and ``p^2 = r^2`` becomes the sextic

        (q'.v')^2 + v_1^2 q'.q' - 4 r^2 v_1^2 (v^2)^2 = 0,

    next to ``n - 2`` quadrics from the surplus spheres.  The Bezout number
    ``6 * 2**(n-2)`` equals ``3 * 2**(n-1)``.
    """

    system: PolySystem
    basis_indices: tuple[int, ...]
    rotation: np.ndarray  # rows: normal first, then an in-plane basis
    origin: np.ndarray
    planar: np.ndarray  # in-plane coordinates of the translated centers
    radii: np.ndarray
    minv: np.ndarray

    @property
    def n(self) -> int:
        return len(self.origin)

    @property
    def arrangement(self) -> SphereArrangement:
        return SphereArrangement.from_arrays(
            np.c_[np.zeros(len(self.planar)), self.planar] @ self.rotation + self.origin, self.radii
        )

    def lines(self, w, v1_tol: float = 1e-8) -> list[Line]:
        """Tangent lines whose direction has rotated coordinates ``w``.

        When ``w`` lies in the hyperplane direction (``w_1 = 0``) the moment
        coordinate ``p_1`` is fixed only up to sign, giving two lines.
        """
        w = np.asarray(w, dtype=complex)
        v = self.rotation.T @ w
        v2 = dot(w, w)
        if v2 == 0:
            raise IsotropicDirection("back substitution needs v^2 != 0")
        r = self.radii[-1]
        idx = list(self.basis_indices)
        c = self.planar[idx]
        kappa = _b_coefficients(c, self.radii[idx], r)
        b = v2 * kappa - (c @ w[1:]) ** 2
        pp = self.minv @ b / (2 * v2)
        if abs(w[0]) > v1_tol * np.linalg.norm(w):
            p1s = [-dot(pp, w[1:]) / w[0]]
        else:
            root = np.sqrt(complex(r * r - dot(pp, pp)))
            p1s = [root, -root]
        out = []
        for p1 in p1s:
            p = np.r_[p1, pp] @ self.rotation + self.origin
            out.append(normalize_moment(p, v))
        return out


def build_hyperplane_system(arr: SphereArrangement) -> HyperplaneSystem:
    n = arr.n
    origin = arr.spheres[-1].center.copy()
    r = arr.spheres[-1].radius
    centers = arr.centers - origin
    others = centers[:-1]
    _, sv, vt = np.linalg.svd(others)
    if sv[-2] <= SPAN_RTOL * sv[0]:
        raise AffinelyDependentCenters("sphere centers do not span an affine hyperplane")
    if sv[-1] > 1e-9 * sv[0]:
        raise ValueError("sphere centers affinely span R^n; use build_reduced_system")
    rotation = np.r_[vt[-1:], vt[:-1]]
    planar_all = centers @ rotation.T
    planar = planar_all[:, 1:]
    m = n - 1
    _, _, piv = scipy.linalg.qr(planar[:-1].T, pivoting=True, mode="economic")
    basis = tuple(sorted(int(i) for i in piv[:m]))
    rest = [i for i in range(len(others)) if i not in basis]
    minv = np.linalg.inv(planar[list(basis)])

    v = variables(n)
    v1, vp = v[0], v[1:]
    v2 = dot_poly(v, v)
    kappa = _b_coefficients(planar[:-1], arr.radii[:-1], r)

    def b(i):
        vc = dot_poly(vp, planar[i])
        return v2 * kappa[i] - vc * vc

    bvec = [b(i) for i in basis]
    q = [dot_poly(minv[k], bvec) for k in range(m)]
    qv = dot_poly(q, vp)
    sextic = qv * qv + v1 * v1 * dot_poly(q, q) - (4 * r * r) * v1 * v1 * v2 * v2
    quadrics = [dot_poly(q, planar[i]) - b(i) for i in rest]
    polys = [f.scaled_to_unit() for f in [sextic, *quadrics]]
    return HyperplaneSystem(PolySystem(polys), basis, rotation, origin, planar, arr.radii.copy(), minv)


# dual basis and cubic coefficients


def dual_basis(centers) -> np.ndarray:
    """Rows ``c'_i`` with ``c'_i . c_j = delta_ij``."""
    C = np.asarray(centers, dtype=float)
    if C.shape[0] != C.shape[1]:
        raise ValueError("need n vectors in R^n")
    if np.linalg.matrix_rank(C) < C.shape[0]:
        raise np.linalg.LinAlgError("basis vectors are linearly dependent")
    return np.linalg.inv(C).T


@dataclass(frozen=True)
class CubicCoefficients:
    alpha: dict[tuple[int, int], float]
    beta: dict[tuple[int, int, int], float]


def cubic_coefficients(centers) -> CubicCoefficients:
    C = np.asarray(centers, dtype=float)
    G = C @ C.T
    n = len(C)
    alpha = {}
    for i in range(n):
        for j in range(n):
            if i != j:
                alpha[(i, j)] = G[i, i] * G[j, j] - G[i, j] * G[j, i]
    beta = {}
    for i, j, k in combinations(range(n), 3):
        beta[(i, j, k)] = (
            (G[i, j] * G[k, k] - G[i, k] * G[k, j])
            + (G[i, k] * G[j, j] - G[i, j] * G[j, k])
            + (G[j, k] * G[i, i] - G[j, i] * G[i, k])
        )
    return CubicCoefficients(alpha, beta)


def dual_basis_cubic(coeffs: CubicCoefficients, n: int) -> Polynomial:
    """``sum alpha_ij t_i^2 t_j + 2 sum beta_ijk t_i t_j t_k`` in the basis coordinates ``t``."""
    t = variables(n)
    f = Polynomial({}, n)
    for (i, j), a in coeffs.alpha.items():
        f = f + a * t[i] * t[i] * t[j]
    for (i, j, k), b in coeffs.beta.items():
        f = f + 2 * b * t[i] * t[j] * t[k]
    return f


def simplex_cubic(n: int) -> Polynomial:
    if n < 3:
        raise ValueError("n must be >= 3")
    coeffs = CubicCoefficients(
        {(i, j): 1.0 for i in range(n) for j in range(n) if i != j},
        {ijk: 1.0 for ijk in combinations(range(n), 3)},
    )
    return dual_basis_cubic(coeffs, n)


# projective quadrics and Plucker coordinates


@dataclass(frozen=True)
class ProjectiveQuadric:
    Q: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=complex)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("quadric matrix must be square")
        if not np.allclose(Q, Q.T, atol=1e-12 * max(1.0, np.abs(Q).max())):
            raise ValueError("quadric matrix must be symmetric")
        Q = (Q + Q.T) / 2
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    @property
    def n(self) -> int:
        """Dimension of the projective space P^n."""
        return self.Q.shape[0] - 1

    def normalized(self) -> "ProjectiveQuadric":
        return ProjectiveQuadric(self.Q / np.linalg.norm(self.Q))

    def __call__(self, x, y=None) -> complex:
        y = x if y is None else y
        return complex(np.asarray(x) @ self.Q @ np.asarray(y))


def homogenize_sphere(center, radius: float) -> ProjectiveQuadric:
    """``sum (x_i - c_i x_0)^2 - r^2 x_0^2`` as a symmetric matrix on ``(x_0, x)``."""
    c = np.asarray(center, dtype=float)
    n = len(c)
    Q = np.zeros((n + 1, n + 1))
    Q[0, 0] = c @ c - radius**2
    Q[0, 1:] = Q[1:, 0] = -c
    Q[1:, 1:] = np.eye(n)
    return ProjectiveQuadric(Q)


def quadric_at_infinity(n: int) -> np.ndarray:
    """Matrix of ``x_1^2 + ... + x_n^2`` on the hyperplane ``x_0 = 0``."""
    return np.eye(n)


def restrict_to_infinity(q: ProjectiveQuadric) -> np.ndarray:
    return np.asarray(q.Q[1:, 1:])


def plucker_pairs(n: int) -> list[tuple[int, int]]:
    """Index pairs ``(i, j)``, ``i < j``, of Plucker coordinates of lines in P^n."""
    return list(combinations(range(n + 1), 2))


def plucker_coordinates(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    return np.array([x[i] * y[j] - x[j] * y[i] for i, j in plucker_pairs(len(x) - 1)])


def plucker_tangency_form(q: ProjectiveQuadric) -> np.ndarray:
    """Second compound of ``Q``: the Gram form of ``Q`` restricted to a line.

    For ``P = x ^ y``, ``P^T C P = (x^T Q x)(y^T Q y) - (x^T Q y)^2``.
    """
    Q = q.Q
    pairs = plucker_pairs(q.n)
    C = np.empty((len(pairs), len(pairs)), dtype=complex)
    for a, (i, j) in enumerate(pairs):
        for b, (k, l) in enumerate(pairs):
            C[a, b] = Q[i, k] * Q[j, l] - Q[i, l] * Q[j, k]
    return C


def tangency_on_line(q: ProjectiveQuadric, x, y) -> complex:
    return q(x) * q(y) - q(x, y) ** 2


def plucker_relations(n: int) -> list[Polynomial]:
    """Quadratic relations cutting out G(2, n+1) in the Plucker coordinates."""
    pairs = plucker_pairs(n)
    index = {pr: k for k, pr in enumerate(pairs)}
    P = variables(len(pairs))
    rels = []
    for i, j, k, l in combinations(range(n + 1), 4):
        rels.append(
            P[index[i, j]] * P[index[k, l]]
            - P[index[i, k]] * P[index[j, l]]
            + P[index[i, l]] * P[index[j, k]]
        )
    return rels


def quadratic_form_poly(C: np.ndarray) -> Polynomial:
    m = C.shape[0]
    terms = {}
    for a in range(m):
        for b in range(a, m):
            coef = C[a, b] if a == b else C[a, b] + C[b, a]
            mono = [0] * m
            mono[a] += 1
            mono[b] += 1
            terms[tuple(mono)] = terms.get(tuple(mono), 0) + coef
    return Polynomial(terms, m)


# Bezout-type bounds


def bezout_bound_spheres(n: int) -> int:
    _check_n(n)
    return 3 * 2 ** (n - 1)


def grassmannian_degree(n: int) -> int:
    """Degree of the Plucker embedding of lines in P^n (a Catalan number)."""
    _check_n(n)
    return comb(2 * n - 2, n - 1) // n


def bezout_bound_quadrics(n: int) -> int:
    return 2 ** (2 * n - 2) * grassmannian_degree(n)


def _check_n(n: int):
    if int(n) != n or n < 3:
        raise ValueError(f"n must be an integer >= 3, got {n}")
