import math

import numpy as np
import pytest
import sympy
from scipy.optimize import brentq

from tangentia.closed_form import (
    CrosspolytopeParams,
    DegenerateRadius,
    DiscriminantVanishes,
    Thm4Params,
    crosspolytope_predicted_real,
    crosspolytope_real_window,
    crosspolytope_tangents,
    cubic_discriminant,
    discriminant_from_coefficients,
    discriminant_ok,
    gray_signs,
    perturbed_crosspolytope_tangents,
    reality_region,
    region_sample,
    squares_cubic,
    thm4_real_count,
    thm4_tangents,
)
from tangentia.core import Line, dot, line_distance, match_lines


def line_set_distance(lines_a, lines_b):
    return match_lines([l.scaled() for l in lines_a], [l.scaled() for l in lines_b]).max_distance


def test_gray_signs_order_and_coverage():
    seq = list(gray_signs(3))
    assert len(set(seq)) == 8
    assert seq[0] == (1, 1, 1)
    for s, t in zip(seq, seq[1:]):
        assert sum(x != y for x, y in zip(s, t)) == 1


def test_gamma_delta():
    p = Thm4Params(4, 2.0, 1.5)
    assert p.gamma == pytest.approx(2.4)
    assert p.delta == pytest.approx(2.49)
    assert Thm4Params(5, 2.0, 1.0).gamma == pytest.approx(8 / 3)
    assert Thm4Params(5, 2.0, 1.0).delta == pytest.approx(97 / 36)
    assert Thm4Params(7, math.sqrt(2), 1.0).gamma == pytest.approx(2)


def test_params_validation():
    with pytest.raises(ValueError):
        Thm4Params(3, 2.0, 1.0)
    with pytest.raises(ValueError):
        CrosspolytopeParams(4, 1.0, -1.0)


@pytest.mark.parametrize("n, r2", [(4, 2.45), (5, 2.68)])
def test_thm4_all_real(n, r2):
    p = Thm4Params(n, 2.0, math.sqrt(r2))
    assert reality_region(p)
    sol = thm4_tangents(p)
    assert sol.total == 3 * 2 ** (n - 1)
    assert sol.real_count == sol.total
    assert sol.max_residual < 1e-10
    assert all(abs(dot(l.p, l.v)) < 1e-12 for l in sol.lines)
    assert len({tuple(np.round(l.v, 8)) + tuple(np.round(l.p, 8)) for l in sol.lines}) == sol.total


def test_thm4_symmetry():
    sol = thm4_tangents(Thm4Params(5, 2.0, math.sqrt(2.68)))
    lines = sol.lines
    cyc = [Line(l.p[[2, 0, 1, 3, 4]], l.v[[2, 0, 1, 3, 4]]) for l in lines]
    assert line_set_distance(lines, cyc) < 1e-12
    flip = np.array([1, 1, 1, -1, 1])
    flipped = [Line(l.p * flip, l.v * flip) for l in lines]
    assert line_set_distance(lines, flipped) < 1e-12


def test_thm4_a_squared_two_vanishes():
    with pytest.raises(DiscriminantVanishes):
        thm4_tangents(Thm4Params(4, math.sqrt(2), math.sqrt(2.45)))


def test_reality_region_examples():
    assert reality_region(Thm4Params(4, 2.0, math.sqrt(2.45)))
    assert not reality_region(Thm4Params(5, math.sqrt(6), 1.7))  # gamma = 3
    assert not reality_region(Thm4Params(4, 1.0, 1.0))


def test_reality_region_matches_enumeration():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = int(rng.integers(4, 7))
        p = Thm4Params(n, float(rng.uniform(1, 3)), float(rng.uniform(0.1, 1.8)))
        if not discriminant_ok(p, 1e-6):
            continue
        assert (thm4_real_count(p) == 3 * 2 ** (n - 1)) == reality_region(p)


def test_delta_increasing_in_a():
    for n in (4, 5, 6, 8):
        a = np.linspace(math.sqrt(2) + 1e-3, 5, 400)
        d = [Thm4Params(n, x, 1.0).delta for x in a]
        assert np.all(np.diff(d) > 0)


def test_delta_derivative_in_gamma():
    g, h = 2.3, 1e-6
    delta = lambda x: x + (3 - x) ** 2 / 4
    assert (delta(g + h) - delta(g - h)) / (2 * h) == pytest.approx(1 + (g - 3) / 2, rel=1e-8)


def test_region_sample_counts():
    rows = region_sample(5, np.linspace(1.05, 2.95, 15), np.linspace(0.05, 1.7, 15))
    for c in rows:
        if c.on_discriminant:
            continue
        assert c.count_real + c.count_complex == 48
        assert c.all_real == (c.count_complex == 0)
        if reality_region(Thm4Params(5, c.a, c.r)):
            assert c.all_real


def test_region_adjacency():
    """Where the real count jumps between grid neighbours, a discriminant factor changes sign."""
    a_grid = np.linspace(1.02, 2.98, 40)
    r_grid = np.linspace(0.02, 1.72, 40)
    rows = region_sample(4, a_grid, r_grid)
    grid = {(c.a, c.r): c for c in rows}
    for i, a in enumerate(a_grid):
        for j in range(len(r_grid) - 1):
            c0, c1 = grid[(a, r_grid[j])], grid[(a, r_grid[j + 1])]
            if c0.on_discriminant or c1.on_discriminant or c0.count_real == c1.count_real:
                continue
            f0 = np.sign(Thm4Params(4, a, r_grid[j]).discriminant_factors())
            f1 = np.sign(Thm4Params(4, a, r_grid[j + 1]).discriminant_factors())
            assert np.any(f0 != f1)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_crosspolytope_window(n):
    lo, hi = crosspolytope_real_window(n)
    sol = crosspolytope_tangents(n, 0.5 * (lo + hi))
    assert sol.total == 2**n
    assert sol.real_count == 2**n
    assert sol.max_residual < 1e-10


def test_crosspolytope_n3_values():
    sol = crosspolytope_tangents(3, 0.9)
    p1 = sorted(abs(l.p[0].real) for l in sol.lines if abs(l.v[0]) < 1e-12)
    assert p1 == pytest.approx([math.sqrt(0.31)] * 4)


@pytest.mark.parametrize("n, r", [(4, 2.0), (5, 0.5), (3, 1.3), (6, 0.3)])
def test_crosspolytope_outside_window(n, r):
    sol = crosspolytope_tangents(n, r)
    assert sol.total == 2**n
    assert sol.real_count == crosspolytope_predicted_real(n, r)
    assert sol.max_residual < 1e-10


def test_crosspolytope_symmetries():
    n = 5
    sol = crosspolytope_tangents(n, 0.95)
    for k in range(2, n):
        f = np.ones(n)
        f[k] = -1
        assert line_set_distance(sol.lines, [Line(l.p * f, l.v * f) for l in sol.lines]) < 1e-12


def test_crosspolytope_degenerate_radius():
    with pytest.raises(DegenerateRadius):
        crosspolytope_tangents(4, 1.0)
    with pytest.raises(DegenerateRadius):
        crosspolytope_tangents(4, math.sqrt(1 - 1 / 3))


@pytest.mark.parametrize("n", [4, 5])
def test_perturbed_family(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        p = CrosspolytopeParams(n, float(rng.uniform(0.3, 2.0)), float(rng.uniform(0.2, 2.5)))
        sol = perturbed_crosspolytope_tangents(p)
        assert sol.total == 3 * 2 ** (n - 1)
        assert sol.max_residual < 1e-9
        assert cubic_discriminant(p) != 0
        assert (sol.total - sol.real_count) % 2 == 0


def test_perturbed_limit_contains_crosspolytope():
    n, r = 4, 0.9
    cross = crosspolytope_tangents(n, r).lines
    for eps in (1e-2, 1e-3, 1e-4):
        pert = perturbed_crosspolytope_tangents(CrosspolytopeParams(n, r, 1 + eps)).lines
        worst = max(min(line_distance(c.scaled(), q.scaled()) for q in pert) for c in cross)
        assert worst < 10 * eps


def test_discriminant_double_root():
    # (x - 2)^2 (x + 1) = x^3 - 3x^2 + 4
    assert discriminant_from_coefficients([4, 0, -3, 1]) == pytest.approx(0, abs=1e-12)
    assert discriminant_from_coefficients([-6, 11, -6, 1]) == pytest.approx(4)


def test_discriminant_matches_sympy_and_root_count():
    x = sympy.symbols("x")
    for a in (0.7, 1.5, 2.0):
        for r in np.linspace(0.6, 1.2, 25):
            c = squares_cubic(CrosspolytopeParams(4, float(r), a))
            poly = sum(sympy.Float(float(ci), 30) * x**k for k, ci in enumerate(c))
            ref = float(sympy.discriminant(poly, x))
            d = discriminant_from_coefficients(c)
            assert d == pytest.approx(ref, rel=1e-8, abs=1e-12 * np.abs(c).max() ** 4)
            nreal = len(sympy.Poly(poly, x).real_roots()) if abs(d) > 1e-8 else None
            if nreal is not None:
                assert nreal == (3 if d > 0 else 1)


def test_perturbed_on_discriminant_raises():
    a = 0.7
    r0 = brentq(lambda r: cubic_discriminant(CrosspolytopeParams(4, r, a)), 0.7, 0.76, xtol=1e-15)
    with pytest.raises(DiscriminantVanishes):
        perturbed_crosspolytope_tangents(CrosspolytopeParams(4, r0, a))
