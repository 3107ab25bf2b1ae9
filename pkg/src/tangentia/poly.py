"""Sparse multivariate polynomials with complex coefficients.

Terms are kept in graded-lexicographic order (highest first) so that
printing, evaluation and compilation are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

Monomial = tuple[int, ...]


def _grlex_key(m: Monomial):
    return (-sum(m), tuple(-e for e in m))


class Polynomial:
    __slots__ = ("nvars", "_terms")

    def __init__(self, terms: Mapping[Monomial, complex] | Iterable = (), nvars: int | None = None):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Monomial, complex] = {}
        for mono, coef in items:
            mono = tuple(int(e) for e in mono)
            if nvars is None:
                nvars = len(mono)
            if len(mono) != nvars:
                raise ValueError(f"monomial {mono} does not have {nvars} variables")
            if any(e < 0 for e in mono):
                raise ValueError(f"negative exponent in {mono}")
            acc[mono] = acc.get(mono, 0j) + complex(coef)
        if nvars is None:
            raise ValueError("nvars is required for an empty polynomial")
        self.nvars = nvars
        self._terms = {m: acc[m] for m in sorted(acc, key=_grlex_key) if acc[m] != 0}

    # constructors

    @classmethod
    def constant(cls, c, nvars: int) -> "Polynomial":
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def variable(cls, i: int, nvars: int) -> "Polynomial":
        if not 0 <= i < nvars:
            raise IndexError(f"variable index {i} out of range for {nvars} variables")
        mono = [0] * nvars
        mono[i] = 1
        return cls({tuple(mono): 1.0}, nvars)

    @classmethod
    def linear(cls, coeffs, constant=0.0) -> "Polynomial":
        """``sum coeffs[i] x_i + constant``."""
        coeffs = list(coeffs)
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            mono = [0] * n
            mono[i] = 1
            terms[tuple(mono)] = c
        terms[(0,) * n] = constant
        return cls(terms, n)

    # container protocol

    @property
    def terms(self) -> dict[Monomial, complex]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        if isinstance(other, (int, float, complex)):
            other = Polynomial.constant(other, self.nvars)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __repr__(self):
        if not self._terms:
            return "Polynomial(0)"
        parts = []
        for m, c in self._terms.items():
            mono = "*".join(f"x{i}^{e}" if e > 1 else f"x{i}" for i, e in enumerate(m) if e)
            parts.append(f"({c:g}){'*' + mono if mono else ''}")
        return " + ".join(parts)

    # arithmetic

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("polynomials have different variable counts")
            return other
        return Polynomial.constant(other, self.nvars)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0j) + c
        return Polynomial(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self._terms.items()}, self.nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = complex(other)
            return Polynomial({m: c * a for m, a in self._terms.items()}, self.nvars)
        other = self._coerce(other)
        out: dict[Monomial, complex] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0j) + c1 * c2
        return Polynomial(out, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = Polynomial.constant(1.0, self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # analysis

    def total_degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(m) for m in self._terms)

    def is_homogeneous(self) -> bool:
        return len({sum(m) for m in self._terms}) <= 1

    def max_coefficient(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def evaluate(self, x) -> complex:
        x = np.asarray(x, dtype=complex).reshape(-1)
        if x.shape[0] != self.nvars:
            raise ValueError(f"expected {self.nvars} values, got {x.shape[0]}")
        total = 0j
        for m, c in self._terms.items():
            term = c
            for xi, e in zip(x, m):
                if e:
                    term *= xi**e
            total += term
        return complex(total)

    __call__ = evaluate

    def differentiate(self, i: int) -> "Polynomial":
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable index {i} out of range for {self.nvars} variables")
        out = {}
        for m, c in self._terms.items():
            if m[i]:
                d = list(m)
                d[i] -= 1
                out[tuple(d)] = c * m[i]
        return Polynomial(out, self.nvars)

    def substitute_linear(self, rows: Sequence["Polynomial"]) -> "Polynomial":
        """Compose with ``x_i -> rows[i]`` (each a polynomial in a common ring)."""
        if len(rows) != self.nvars:
            raise ValueError("need one substitution per variable")
        target = rows[0].nvars if rows else 0
        powers: list[dict[int, Polynomial]] = [{0: Polynomial.constant(1.0, target)} for _ in rows]

        def power(i, e):
            cache = powers[i]
            if e not in cache:
                cache[e] = power(i, e - 1) * rows[i]
            return cache[e]

        out = Polynomial({}, target)
        for m, c in self._terms.items():
            term = Polynomial.constant(c, target)
            for i, e in enumerate(m):
                if e:
                    term = term * power(i, e)
            out = out + term
        return out

    def scaled_to_unit(self) -> "Polynomial":
        s = self.max_coefficient()
        return self if s == 0 else self * (1.0 / s)


def variables(nvars: int) -> list[Polynomial]:
    return [Polynomial.variable(i, nvars) for i in range(nvars)]


def dot_poly(a: Sequence, b: Sequence):
    """Bilinear sum ``a_i b_i`` of polynomials / scalars."""
    total = 0
    for x, y in zip(a, b):
        total = total + x * y
    return total


class PolySystem:
    def __init__(self, polys: Sequence[Polynomial]):
        polys = list(polys)
        if not polys:
            raise ValueError("a polynomial system needs at least one polynomial")
        nv = polys[0].nvars
        if any(p.nvars != nv for p in polys):
            raise ValueError("inconsistent variable counts in system")
        self.polys = polys
        self.nvars = nv

    def __len__(self):
        return len(self.polys)

    def __iter__(self):
        return iter(self.polys)

    def __getitem__(self, i):
        return self.polys[i]

    def degrees(self) -> list[int]:
        return [p.total_degree() for p in self.polys]

    def is_square(self) -> bool:
        return len(self.polys) == self.nvars

    def evaluate(self, x) -> np.ndarray:
        return np.array([p.evaluate(x) for p in self.polys])

    def compile(self) -> "CompiledSystem":
        return CompiledSystem(self)


def total_degree(f: Polynomial) -> int:
    return f.total_degree()


def is_homogeneous(f: Polynomial) -> bool:
    return f.is_homogeneous()


def evaluate(f: Polynomial, x) -> complex:
    return f.evaluate(x)


def differentiate(f: Polynomial, i: int) -> Polynomial:
    return f.differentiate(i)


def jacobian(system: PolySystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.shape[0] != system.nvars:
        raise ValueError(f"expected {system.nvars} values, got {x.shape[0]}")
    return np.array(
        [[p.differentiate(j).evaluate(x) for j in range(system.nvars)] for p in system.polys]
    )


@dataclass(frozen=True)
class AffinePatch:
    """Affine chart ``{coeffs . v = 1}`` of projective space.

    The variable with the largest ``|coeffs[k]|`` is eliminated.
    """

    coeffs: np.ndarray

    @property
    def eliminated(self) -> int:
        return int(np.argmax(np.abs(self.coeffs)))

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def substitution(self) -> list[Polynomial]:
        n, k = self.dim, self.eliminated
        m = n - 1
        rows = []
        for i in range(n):
            if i == k:
                lin = [-self.coeffs[j] / self.coeffs[k] for j in range(n) if j != k]
                rows.append(Polynomial.linear(lin, 1.0 / self.coeffs[k]))
            else:
                rows.append(Polynomial.variable(i if i < k else i - 1, m))
        return rows

    def apply(self, system: PolySystem) -> PolySystem:
        for p in system:
            if not p.is_homogeneous():
                raise ValueError("affine patch needs homogeneous polynomials")
        rows = self.substitution()
        return PolySystem([p.substitute_linear(rows) for p in system])

    def lift(self, x) -> np.ndarray:
        """Homogeneous coordinates for a point of the chart."""
        x = np.asarray(x, dtype=complex)
        k = self.eliminated
        full = np.insert(x, k, 0.0, axis=-1)
        rest = full @ self.coeffs
        full[..., k] = (1.0 - rest) / self.coeffs[k]
        return full

    def project(self, v) -> np.ndarray:
        """Chart coordinates of a homogeneous point (requires ``coeffs . v != 0``)."""
        v = np.asarray(v, dtype=complex)
        v = v / (v @ self.coeffs)
        return np.delete(v, self.eliminated, axis=-1)


def substitute_affine_patch(system: PolySystem, ell) -> PolySystem:
    ell = np.asarray(ell, dtype=complex)
    if not np.any(ell):
        raise ValueError("linear functional must be nonzero")
    return AffinePatch(ell).apply(system)


class CompiledSystem:
    """Vectorized evaluation of a system and its Jacobian at many points."""

    def __init__(self, system: PolySystem):
        self.nvars = system.nvars
        self.neqs = len(system)
        exps, coefs, owner = [], [], []
        for k, p in enumerate(system):
            for m, c in p.items():
                exps.append(m)
                coefs.append(c)
                owner.append(k)
        self.exps = np.array(exps, dtype=int).reshape(-1, self.nvars)
        self.maxdeg = int(self.exps.max()) if self.exps.size else 0
        t = len(coefs)
        # term-to-equation summation matrix carrying the coefficients
        self.coef_matrix = np.zeros((t, self.neqs), dtype=complex)
        self.coef_matrix[np.arange(t), owner] = coefs
        self._deriv = []
        for j in range(self.nvars):
            e = self.exps.copy()
            mult = e[:, j].astype(float)
            e[:, j] = np.maximum(e[:, j] - 1, 0)
            self._deriv.append((e, self.coef_matrix * mult[:, None]))

    def _monomials(self, powers: np.ndarray, exps: np.ndarray) -> np.ndarray:
        # powers: (P, nvars, maxdeg+1); returns (P, T)
        out = np.ones((powers.shape[0], exps.shape[0]), dtype=complex)
        for i in range(self.nvars):
            out *= powers[:, i, exps[:, i]]
        return out

    def _powers(self, x: np.ndarray) -> np.ndarray:
        pw = np.ones(x.shape + (self.maxdeg + 1,), dtype=complex)
        for d in range(1, self.maxdeg + 1):
            pw[..., d] = pw[..., d - 1] * x
        return pw

    def evaluate(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=complex))
        return self._monomials(self._powers(x), self.exps) @ self.coef_matrix

    def evaluate_and_jacobian(self, x):
        """Values ``(P, neqs)`` and Jacobians ``(P, neqs, nvars)``."""
        x = np.atleast_2d(np.asarray(x, dtype=complex))
        pw = self._powers(x)
        vals = self._monomials(pw, self.exps) @ self.coef_matrix
        jac = np.empty((x.shape[0], self.neqs, self.nvars), dtype=complex)
        for j, (e, cm) in enumerate(self._deriv):
            jac[:, :, j] = self._monomials(pw, e) @ cm
        return vals, jac
