"""Geometric primitives: spheres, lines in C^n, and the tangency residual.

Vectors are complex and the dot product is the Euclidean *bilinear* form
(no conjugation), so ``dot(v, v)`` can vanish for nonzero complex ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

RESIDUAL_TOL = 1e-8
REALITY_TOL = 1e-7


class TangentiaError(Exception):
    """Base class for errors raised by this package."""


class AffinelyDependentCenters(TangentiaError):
    pass


class IsotropicDirection(TangentiaError):
    """Raised when an operation needs ``v^2 != 0``."""


class DiscriminantVanishes(TangentiaError):
    pass


class DegenerateRadius(TangentiaError):
    pass


class ZeroCoordinateRoot(TangentiaError):
    pass


class UnresolvedCluster(TangentiaError):
    pass


class NonFiniteSolutionSet(TangentiaError):
    pass


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=complex).reshape(-1)


def dot(x, y) -> complex:
    """Bilinear dot product ``sum x_i y_i``."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return complex(np.sum(x * y))


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.shape[0]


@dataclass(frozen=True)
class SphereArrangement:
    n: int
    spheres: tuple[Sphere, ...]

    def __post_init__(self):
        spheres = tuple(self.spheres)
        object.__setattr__(self, "spheres", spheres)
        if self.n < 3:
            raise ValueError(f"ambient dimension must be >= 3, got {self.n}")
        if len(spheres) != 2 * self.n - 2:
            raise ValueError(
                f"expected 2n-2 = {2 * self.n - 2} spheres for n={self.n}, got {len(spheres)}"
            )
        for s in spheres:
            if s.dim != self.n:
                raise ValueError(f"sphere center has dimension {s.dim}, expected {self.n}")

    @classmethod
    def from_arrays(cls, centers, radii) -> "SphereArrangement":
        centers = np.asarray(centers, dtype=float)
        radii = np.broadcast_to(np.asarray(radii, dtype=float), (centers.shape[0],))
        return cls(centers.shape[1], tuple(Sphere(c, r) for c, r in zip(centers, radii)))

    @property
    def centers(self) -> np.ndarray:
        return np.array([s.center for s in self.spheres])

    @property
    def radii(self) -> np.ndarray:
        return np.array([s.radius for s in self.spheres])

    def transformed(self, rotation=None, shift=None, scale: float = 1.0) -> "SphereArrangement":
        """Apply ``x -> scale * (R x) + shift`` to the centers, scaling radii by ``scale``."""
        c = self.centers
        if rotation is not None:
            c = c @ np.asarray(rotation, dtype=float).T
        c = scale * c
        if shift is not None:
            c = c + np.asarray(shift, dtype=float)
        return SphereArrangement.from_arrays(c, scale * self.radii)


@dataclass(frozen=True)
class Line:
    """Line ``{p + t v}`` in C^n with moment point ``p`` (``p . v = 0``)."""

    p: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        p, v = _vec(self.p), _vec(self.v)
        if p.shape != v.shape:
            raise ValueError("p and v must have equal dimension")
        if not np.any(v):
            raise ValueError("direction vector must be nonzero")
        p.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.p.shape[0]

    def scaled(self) -> "Line":
        """Same line with ``v`` rescaled so its largest-modulus coordinate is 1."""
        k = int(np.argmax(np.abs(self.v)))
        return Line(self.p, self.v / self.v[k])


@dataclass(frozen=True)
class SolutionRecord:
    line: Line
    residual: float
    is_real: bool
    multiplicity: int = 1
    v_isotropic: bool = False


def tangency_residual(s: Sphere, line: Line) -> complex:
    """``v^2 p^2 - 2 v^2 p.c + v^2 c^2 - (v.c)^2 - r^2 v^2``.

    Zero iff the line is tangent to the sphere, provided ``v^2 != 0`` and
    ``p . v = 0``.
    """
    p, v, c = line.p, line.v, s.center
    v2 = dot(v, v)
    vc = dot(v, c)
    return v2 * dot(p, p) - 2 * v2 * dot(p, c) + v2 * dot(c, c) - vc * vc - s.radius**2 * v2


def max_residual(arrangement: SphereArrangement, line: Line) -> float:
    """Largest |tangency residual| over all spheres, with ``v`` at unit max-modulus."""
    line = line.scaled()
    return max(abs(tangency_residual(s, line)) for s in arrangement.spheres)


def distance_point_line(c, line: Line) -> float:
    c = np.asarray(c, dtype=float)
    if np.max(np.abs(line.p.imag)) > 0 or np.max(np.abs(line.v.imag)) > 0:
        raise ValueError("distance_point_line needs a real line")
    p, v = line.p.real, line.v.real
    v2 = float(v @ v)
    if v2 <= 0:
        raise IsotropicDirection("direction has v^2 = 0")
    d = p - c
    return float(np.sqrt(max(d @ d - (v @ d) ** 2 / v2, 0.0)))


def normalize_moment(p, v) -> Line:
    """Move ``p`` along the line so that ``p . v = 0``."""
    p, v = _vec(p), _vec(v)
    v2 = dot(v, v)
    if v2 == 0:
        raise IsotropicDirection("cannot normalize moment point: v^2 = 0")
    return Line(p - (dot(p, v) / v2) * v, v)


def is_real_line(line: Line, tol: float = REALITY_TOL) -> bool:
    """True iff a real representative of ``(p, v)`` exists.

    ``v`` is scaled so its largest-modulus coordinate is 1, after which a real
    line has both ``p`` and ``v`` real up to ``tol``.
    """
    sc = line.scaled()
    scale = max(1.0, float(np.max(np.abs(sc.p))))
    return bool(np.max(np.abs(sc.v.imag)) <= tol and np.max(np.abs(sc.p.imag)) <= tol * scale)


def conjugate_line(line: Line) -> Line:
    return Line(np.conj(line.p), np.conj(line.v))


def fubini_study(u, w) -> float:
    """Chordal distance between the projective points ``[u]`` and ``[w]``."""
    u, w = _vec(u), _vec(w)
    u = u / np.linalg.norm(u)
    w = w / np.linalg.norm(w)
    # sine of the angle via the orthogonal residual; sqrt(1 - cos^2) loses half the digits
    return float(min(1.0, np.linalg.norm(u - np.vdot(w, u) * w)))


def line_distance(a: Line, b: Line) -> float:
    """Distance between lines: direction by projective distance, moment by relative gap."""
    dp = float(np.linalg.norm(a.p - b.p)) / (1.0 + float(np.linalg.norm(a.p)))
    return max(fubini_study(a.v, b.v), dp)


@dataclass
class LineMatch:
    pairs: list[tuple[int, int]] = field(default_factory=list)
    max_distance: float = 0.0


def match_lines(left: Sequence[Line], right: Sequence[Line]) -> LineMatch:
    """Optimal one-to-one matching between two line lists (Hungarian on ``line_distance``)."""
    from scipy.optimize import linear_sum_assignment

    if len(left) == 0 or len(right) == 0:
        return LineMatch([], 0.0 if len(left) == len(right) else np.inf)
    cost = np.array([[line_distance(a, b) for b in right] for a in left])
    rows, cols = linear_sum_assignment(cost)
    worst = float(cost[rows, cols].max())
    if len(left) != len(right):
        worst = np.inf
    return LineMatch(list(zip(rows.tolist(), cols.tolist())), worst)
