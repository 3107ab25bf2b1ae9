import numpy as np
import pytest
import sympy

from tangentia.closed_form import crosspolytope_arrangement, crosspolytope_tangents
from tangentia.core import AffinelyDependentCenters, Line, SphereArrangement, max_residual, tangency_residual
from tangentia.formulation import (
    ProjectiveQuadric,
    bezout_bound_quadrics,
    bezout_bound_spheres,
    build_hyperplane_system,
    build_reduced_system,
    cubic_coefficients,
    dual_basis,
    dual_basis_cubic,
    grassmannian_degree,
    homogenize_sphere,
    plucker_coordinates,
    plucker_relations,
    plucker_tangency_form,
    simplex_cubic,
    tangency_on_line,
)

from conftest import random_arrangement


def arrangement_tangent_to(line: Line, rng, n: int) -> SphereArrangement:
    """Spheres with random centers, radii chosen so that ``line`` is tangent to each."""
    p, v = line.p.real, line.v.real
    centers = rng.normal(size=(2 * n - 2, n))
    radii = []
    for c in centers:
        d = p - c
        radii.append(np.sqrt(d @ d - (d @ v) ** 2 / (v @ v)))
    return SphereArrangement.from_arrays(centers, radii)


def test_known_tangent_solves_reduced_system(rng):
    for n in (3, 4, 5):
        v = rng.normal(size=n)
        p = rng.normal(size=n)
        p -= (p @ v) / (v @ v) * v
        line = Line(p, v)
        arr = arrangement_tangent_to(line, rng, n)
        red = build_reduced_system(arr)
        assert len(red.system) == n - 1  # square after the affine patch
        assert red.system.degrees() == [3, 4] + [2] * (n - 3)
        assert np.abs(red.system.evaluate(v)).max() < 1e-10
        (back,) = red.lines(v)
        assert np.allclose(back.p, p)
        assert max_residual(arr, back) < 1e-10


def test_reduced_system_is_homogeneous(rng):
    red = build_reduced_system(random_arrangement(4, 3))
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    lam = 0.7 - 0.3j
    vals, scaled = red.system.evaluate(v), red.system.evaluate(lam * v)
    assert np.allclose(scaled, vals * lam ** np.array(red.system.degrees()))


def test_affinely_dependent_rejected():
    with pytest.raises(AffinelyDependentCenters):
        build_reduced_system(crosspolytope_arrangement(4, 0.95))


def test_hyperplane_system_contains_closed_form_lines():
    for n in (3, 4, 5):
        hs = build_hyperplane_system(crosspolytope_arrangement(n, 0.9))
        assert hs.system.degrees() == [6] + [2] * (n - 2)
        sol = crosspolytope_tangents(n, 0.9)
        for line in sol.lines:
            w = hs.rotation @ line.v
            assert np.abs(hs.system.evaluate(w)).max() < 1e-9


def test_hyperplane_system_rejects_spanning():
    with pytest.raises(ValueError):
        build_hyperplane_system(random_arrangement(3, 1))


def test_dual_basis(rng):
    C = rng.normal(size=(4, 4))
    D = dual_basis(C)
    assert np.allclose(D @ C.T, np.eye(4))


def test_dual_basis_cubic_identity(rng):
    # equal radii: sum_i (v^2 c_i^2 - (v.c_i)^2) t_i with v = sum t_i c_i
    for n in (3, 4, 5):
        C = rng.normal(size=(n, n))
        f = dual_basis_cubic(cubic_coefficients(C), n)
        for _ in range(10):
            t = rng.normal(size=n) + 1j * rng.normal(size=n)
            v = t @ C
            vv = v @ v
            direct = sum((vv * (c @ c) - (v @ c) ** 2) * ti for c, ti in zip(C, t))
            assert f(t) == pytest.approx(direct, rel=1e-10)


def test_regular_simplex_coefficients():
    basis = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1]]) / np.sqrt(2)  # edge 1, pairwise 60 degrees
    cc = cubic_coefficients(basis)
    assert all(a == pytest.approx(0.75) for a in cc.alpha.values())
    assert all(b == pytest.approx(0.75) for b in cc.beta.values())
    e = 1.7
    cc2 = cubic_coefficients(e * basis)
    assert all(a == pytest.approx(0.75 * e**4) for a in cc2.alpha.values())
    assert all(b == pytest.approx(0.75 * e**4) for b in cc2.beta.values())


def test_simplex_cubic_factorization(rng):
    f = simplex_cubic(3)
    worst = 0.0
    for _ in range(100):
        t = rng.normal(size=3)
        worst = max(worst, abs(f(t) - (t[0] + t[1]) * (t[0] + t[2]) * (t[1] + t[2])))
    assert worst < 1e-12


def test_simplex_cubic_factorization_symbolic():
    t1, t2, t3 = sympy.symbols("t1 t2 t3")
    f = simplex_cubic(3)
    expr = sum(complex(c).real * t1 ** m[0] * t2 ** m[1] * t3 ** m[2] for m, c in f.items())
    assert sympy.expand(expr - (t1 + t2) * (t1 + t3) * (t2 + t3)) == 0


def test_homogenized_unit_sphere():
    q = homogenize_sphere([0, 0, 0], 1.0)
    assert np.allclose(q.Q, np.diag([-1, 1, 1, 1]))
    assert q.normalized().Q == pytest.approx(q.Q / 2)


def test_quadric_must_be_symmetric():
    with pytest.raises(ValueError):
        ProjectiveQuadric(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_plucker_form_equals_affine_residual(rng):
    for n in (3, 4):
        c = rng.normal(size=n)
        r = 1.3
        q = homogenize_sphere(c, r)
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        p = rng.normal(size=n) + 1j * rng.normal(size=n)
        p -= (p @ v) / (v @ v) * v
        x = np.r_[1.0, p]
        y = np.r_[0.0, v]
        P = plucker_coordinates(x, y)
        form = P @ plucker_tangency_form(q) @ P
        affine = tangency_residual(SphereArrangement.from_arrays(np.tile(c, (2 * n - 2, 1)), r).spheres[0], Line(p, v))
        assert form == pytest.approx(tangency_on_line(q, x, y))
        assert form == pytest.approx(affine)


def test_plucker_relations_vanish(rng):
    for n in (3, 4):
        P = plucker_coordinates(rng.normal(size=n + 1), rng.normal(size=n + 1))
        rels = plucker_relations(n)
        assert len(rels) == sum(1 for _ in __import__("itertools").combinations(range(n + 1), 4))
        assert max(abs(f(P)) for f in rels) < 1e-12


def test_bounds_tables():
    assert [bezout_bound_spheres(n) for n in (3, 4, 5, 6, 7)] == [12, 24, 48, 96, 192]
    assert [bezout_bound_quadrics(n) for n in (3, 4, 5, 6, 7)] == [32, 320, 3584, 43008, 540672]
    assert [grassmannian_degree(n) for n in (3, 4, 5, 6, 7)] == [2, 5, 14, 42, 132]
    with pytest.raises(ValueError):
        bezout_bound_spheres(2)
