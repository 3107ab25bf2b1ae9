"""Total-degree homotopy continuation and the end-to-end solving pipelines.

Paths are tracked in lockstep (one numpy batch over all live paths), each
with its own ``t`` and step size.  The homotopy is

    H(x, t) = (1 - t) * gamma * G(x) + t * F(x),

with the start system ``G_i = x_i^{d_i} - g_i`` and a random unit ``gamma``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import (
    REALITY_TOL,
    RESIDUAL_TOL,
    Line,
    NonFiniteSolutionSet,
    SolutionRecord,
    SphereArrangement,
    UnresolvedCluster,
    dot,
    fubini_study,
    is_real_line,
    max_residual,
)
from .formulation import (
    ProjectiveQuadric,
    HyperplaneSystem,
    ReducedSystem,
    build_hyperplane_system,
    build_reduced_system,
    plucker_pairs,
    plucker_relations,
    plucker_tangency_form,
    quadratic_form_poly,
)
from .poly import AffinePatch, CompiledSystem, Polynomial, PolySystem

log = logging.getLogger(__name__)

DIVERGENCE_NORM = 1e8
SINGULAR_COND = 1e8


@dataclass(frozen=True)
class TrackerConfig:
    step_init: float = 0.01
    step_min: float = 1e-12
    step_max: float = 0.1
    newton_tol: float = 1e-10
    newton_max_iters: int = 3
    endgame_radius: float = 1e-4
    dedup_tol: float = 1e-6
    reality_tol: float = REALITY_TOL
    residual_tol: float = RESIDUAL_TOL
    seed: int = 0
    max_steps: int = 20000
    refine_max_iters: int = 60

    def __post_init__(self):
        if not 0 < self.step_min <= self.step_init <= self.step_max < 1:
            raise ValueError("need 0 < step_min <= step_init <= step_max < 1")
        for name in ("newton_tol", "endgame_radius", "dedup_tol", "reality_tol", "residual_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed & 0xFFFFFFFFFFFFFFFF, stream])


class PathStatus(str, Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    TRUNCATED = "truncated"
    SINGULAR = "singular-endpoint"


@dataclass
class PathResult:
    endpoint: np.ndarray
    status: PathStatus
    final_residual: float
    condition_estimate: float
    steps: int = 0


@dataclass
class RefineResult:
    x: np.ndarray
    residual: float
    iterations: int
    singular: bool


# start systems


@dataclass(frozen=True)
class StartSystem:
    degrees: tuple[int, ...]
    constants: np.ndarray

    def system(self) -> PolySystem:
        k = len(self.degrees)
        polys = []
        for i, (d, g) in enumerate(zip(self.degrees, self.constants)):
            mono = [0] * k
            mono[i] = d
            polys.append(Polynomial({tuple(mono): 1.0, (0,) * k: -g}, k))
        return PolySystem(polys)

    def solutions(self) -> np.ndarray:
        roots = []
        for d, g in zip(self.degrees, self.constants):
            base = abs(g) ** (1.0 / d) * np.exp(1j * np.angle(g) / d)
            roots.append(base * np.exp(2j * np.pi * np.arange(d) / d))
        return np.array(list(itertools.product(*roots)), dtype=complex)

    def evaluate_and_jacobian(self, x: np.ndarray):
        d = np.array(self.degrees)
        vals = x**d - self.constants
        jac = np.zeros(x.shape + (x.shape[-1],), dtype=complex)
        idx = np.arange(x.shape[-1])
        jac[:, idx, idx] = d * x ** (d - 1)
        return vals, jac


def total_degree_start(system: PolySystem, rng: np.random.Generator | None = None):
    """Start system ``x_i^{d_i} - g_i`` (``|g_i| = 1``) and its ``prod d_i`` roots."""
    if not system.is_square():
        raise ValueError(f"need a square system, got {len(system)} equations in {system.nvars} unknowns")
    if any(p.is_zero() for p in system):
        raise ValueError("system contains the zero polynomial")
    rng = rng or np.random.default_rng(0)
    degs = tuple(system.degrees())
    g = np.exp(2j * np.pi * rng.random(len(degs)))
    start = StartSystem(degs, g)
    return start, start.solutions()


# tracking


def _solve_batch(J: np.ndarray, b: np.ndarray):
    """Solve ``J x = b`` per batch entry; rows that fail come back as nan."""
    try:
        out = np.linalg.solve(J, b[..., None])[..., 0]
        ok = np.all(np.isfinite(out), axis=-1)
    except np.linalg.LinAlgError:
        out = np.full(b.shape, np.nan, dtype=complex)
        ok = np.zeros(b.shape[0], dtype=bool)
        for i in range(b.shape[0]):
            try:
                out[i] = np.linalg.solve(J[i], b[i])
                ok[i] = np.all(np.isfinite(out[i]))
            except np.linalg.LinAlgError:
                pass
    return out, ok


class Homotopy:
    def __init__(self, start: StartSystem, target: CompiledSystem, gamma: complex):
        self.start = start
        self.target = target
        self.gamma = gamma

    def eval(self, x, t):
        g, gj = self.start.evaluate_and_jacobian(x)
        f, fj = self.target.evaluate_and_jacobian(x)
        s = (1 - t)[:, None] * self.gamma
        H = s * g + t[:, None] * f
        Hx = s[..., None] * gj + t[:, None, None] * fj
        Ht = f - self.gamma * g
        return H, Hx, Ht

    def velocity(self, x, t):
        _, Hx, Ht = self.eval(x, t)
        dx, ok = _solve_batch(Hx, -Ht)
        return dx, ok

    def predict(self, x, t, h):
        hh = h[:, None]
        k1, ok1 = self.velocity(x, t)
        k2, ok2 = self.velocity(x + 0.5 * hh * k1, t + 0.5 * h)
        k3, ok3 = self.velocity(x + 0.5 * hh * k2, t + 0.5 * h)
        k4, ok4 = self.velocity(x + hh * k3, t + h)
        xp = x + hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return xp, ok1 & ok2 & ok3 & ok4

    def correct(self, x, t, tol, iters):
        ok = np.ones(x.shape[0], dtype=bool)
        conv = np.zeros(x.shape[0], dtype=bool)
        prev = np.full(x.shape[0], np.inf)
        first = None
        for _ in range(iters):
            H, Hx, _ = self.eval(x, t)
            dx, good = _solve_batch(Hx, -H)
            ok &= good
            dx = np.where(good[:, None], dx, 0)
            x = x + dx
            nd = np.linalg.norm(dx, axis=1)
            if first is None:
                first = nd
            scale = 1.0 + np.linalg.norm(x, axis=1)
            conv |= nd <= tol * scale
            # the corrector must contract
            ok &= conv | (nd <= 0.5 * prev)
            prev = nd
        return x, ok & conv, first


def track_all(
    target: PolySystem,
    cfg: TrackerConfig = TrackerConfig(),
    *,
    stream: int = 0,
) -> list[PathResult]:
    """Track every path of the total-degree homotopy to ``target``."""
    rng = cfg.rng(stream)
    start, x0 = total_degree_start(target, rng)
    gamma = complex(np.exp(2j * np.pi * rng.random()))
    compiled = target.compile()
    hom = Homotopy(start, compiled, gamma)
    return _track(hom, x0, cfg, target)


def _track(hom: Homotopy, x0: np.ndarray, cfg: TrackerConfig, target: PolySystem) -> list[PathResult]:
    npaths = x0.shape[0]
    x = x0.copy()
    t = np.zeros(npaths)
    h = np.full(npaths, cfg.step_init)
    streak = np.zeros(npaths, dtype=int)
    minhits = np.zeros(npaths, dtype=int)
    steps = np.zeros(npaths, dtype=int)
    status: list[PathStatus | None] = [None] * npaths
    active = np.ones(npaths, dtype=bool)

    while active.any():
        idx = np.flatnonzero(active)
        xa, ta = x[idx], t[idx]
        ha = np.minimum(h[idx], 1.0 - ta)
        xp, okp = hom.predict(xa, ta, ha)
        xc, okc, _ = hom.correct(xp, ta + ha, cfg.newton_tol, cfg.newton_max_iters)
        good = okp & okc & np.all(np.isfinite(xc), axis=1)
        steps[idx] += 1

        gi = idx[good]
        x[gi] = xc[good]
        t[gi] = np.where(ha[good] >= 1.0 - ta[good], 1.0, ta[good] + ha[good])
        streak[gi] += 1
        minhits[gi] = 0
        grow = gi[streak[gi] >= 3]
        h[grow] = np.minimum(2 * h[grow], cfg.step_max)
        streak[grow] = 0

        bi = idx[~good]
        h[bi] *= 0.5
        streak[bi] = 0

        for i in gi:
            if t[i] >= 1.0:
                active[i] = False
                status[i] = PathStatus.CONVERGED
            elif np.linalg.norm(x[i]) > DIVERGENCE_NORM:
                active[i] = False
                status[i] = PathStatus.DIVERGED
        for i in bi:
            if h[i] < cfg.step_min:
                if 1.0 - t[i] < cfg.endgame_radius:
                    active[i] = False
                    status[i] = PathStatus.SINGULAR
                else:
                    minhits[i] += 1
                    if minhits[i] >= 2:
                        active[i] = False
                        status[i] = PathStatus.DIVERGED
                    else:
                        h[i] = cfg.step_min
        for i in np.flatnonzero(active & (steps >= cfg.max_steps)):
            active[i] = False
            status[i] = PathStatus.TRUNCATED

    results = []
    for i in range(npaths):
        st = status[i]
        if st in (PathStatus.CONVERGED, PathStatus.SINGULAR):
            ref = refine(x[i], hom.target, max_iters=cfg.refine_max_iters)
            cond = _condition(hom.target, ref.x)
            if ref.singular or cond > SINGULAR_COND:
                st = PathStatus.SINGULAR
            elif ref.residual >= cfg.residual_tol:
                st = PathStatus.SINGULAR
            results.append(PathResult(ref.x, st, ref.residual, cond, int(steps[i])))
        else:
            res = float(np.max(np.abs(hom.target.evaluate(x[i])[0]))) if np.all(np.isfinite(x[i])) else np.inf
            results.append(PathResult(x[i].copy(), st, res, np.inf, int(steps[i])))
    return results


def _condition(compiled: CompiledSystem, x) -> float:
    _, J = compiled.evaluate_and_jacobian(x)
    with np.errstate(all="ignore"):
        c = np.linalg.cond(J[0])
    return float(c) if np.isfinite(c) else np.inf


def refine(x, system, tol: float = 1e-12, max_iters: int = 60) -> RefineResult:
    """Newton's method on ``system`` (a PolySystem or CompiledSystem) from ``x``.

    Stops once the residual is below ``tol``.  Convergence that stays linear
    (successive steps shrinking by less than a factor of 10) marks the root
    as singular, as does a numerically singular Jacobian.
    """
    compiled = system.compile() if isinstance(system, PolySystem) else system
    x = np.asarray(x, dtype=complex).copy()
    best_x = x.copy()
    f, J = compiled.evaluate_and_jacobian(x)
    best_res = float(np.max(np.abs(f[0])))
    ratios = []
    prev = None
    it = 0
    singular = False
    while it < max_iters and best_res >= tol:
        it += 1
        try:
            dx = np.linalg.lstsq(J[0], -f[0], rcond=None)[0] if J[0].shape[0] != J[0].shape[1] else np.linalg.solve(J[0], -f[0])
        except np.linalg.LinAlgError:
            singular = True
            break
        if not np.all(np.isfinite(dx)):
            singular = True
            break
        x = x + dx
        f, J = compiled.evaluate_and_jacobian(x)
        res = float(np.max(np.abs(f[0])))
        nd = float(np.linalg.norm(dx))
        if prev is not None and prev > 1e-10 * (1 + np.linalg.norm(x)):
            # ratios of roundoff-sized steps say nothing about the convergence rate
            ratios.append(nd / prev)
        prev = nd
        if res < best_res:
            best_res, best_x = res, x.copy()
        elif res > 1e3 * best_res and it > 3:
            break
        if nd <= 1e-15 * (1 + np.linalg.norm(x)):
            break
    if len(ratios) >= 3 and np.median(ratios[-3:]) > 0.1:
        singular = True
    return RefineResult(best_x, best_res, it, singular)


# clustering and classification


def _canonical(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return v / v[np.argmax(np.abs(v))]


def cluster_endpoints(points, singular, dedup_tol: float) -> list[list[int]]:
    """Single-linkage clusters of projective points.

    Two simple endpoints merge below ``dedup_tol``; a pair involving a
    singular endpoint merges below ``sqrt(dedup_tol)`` since multiple roots
    are only resolved to roughly the square root of working accuracy.  A
    pair of distinct clusters closer than ten times its merge threshold is
    ambiguous and raises :class:`UnresolvedCluster`.
    """
    m = len(points)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    loose = np.sqrt(dedup_tol)
    dist = np.zeros((m, m))
    thr = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            d = fubini_study(points[i], points[j])
            tau = loose if (singular[i] or singular[j]) else dedup_tol
            dist[i, j] = dist[j, i] = d
            thr[i, j] = thr[j, i] = tau
            if d < tau:
                parent[find(i)] = find(j)
    roots = [find(i) for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            if roots[i] != roots[j] and dist[i, j] < 10 * thr[i, j]:
                raise UnresolvedCluster(
                    f"endpoints {i} and {j} are {dist[i, j]:.2e} apart, too close to "
                    f"the merge threshold {thr[i, j]:.1e}; retune dedup_tol"
                )
    groups: dict[int, list[int]] = {}
    for i, r in enumerate(roots):
        groups.setdefault(r, []).append(i)
    return list(groups.values())


def _sort_key(vals: np.ndarray):
    z = np.round(np.asarray(vals, dtype=complex), 6) + 0.0  # drop negative zeros
    return tuple(itertools.chain.from_iterable((float(c.real) + 0.0, float(c.imag) + 0.0) for c in z))


@dataclass
class SolutionSet:
    records: list[SolutionRecord]
    raw_path_count: int
    patch: np.ndarray
    config: TrackerConfig
    paths: list[PathResult] = field(default_factory=list, repr=False)
    isotropic_count: int = 0

    @property
    def total(self) -> int:
        """Number of solutions counted with multiplicity."""
        return sum(r.multiplicity for r in self.records)

    @property
    def distinct(self) -> int:
        return len(self.records)

    @property
    def real_count(self) -> int:
        return sum(r.multiplicity for r in self.records if r.is_real)

    @property
    def lines(self) -> list[Line]:
        return [r.line for r in self.records]

    def status_counts(self) -> dict[str, int]:
        out = {s.value: 0 for s in PathStatus}
        for p in self.paths:
            out[p.status.value] += 1
        return out


def _refine_cluster(members: list[PathResult], target: CompiledSystem, cfg: TrackerConfig) -> np.ndarray:
    if len(members) == 1:
        return members[0].endpoint
    centroid = np.mean([m.endpoint for m in members], axis=0)
    ref = refine(centroid, target, max_iters=cfg.refine_max_iters)
    best = min(members, key=lambda m: m.final_residual)
    return ref.x if ref.residual <= best.final_residual else centroid


def deduplicate_and_classify(
    paths: list[PathResult],
    red: ReducedSystem | HyperplaneSystem,
    cfg: TrackerConfig,
    patch: AffinePatch,
    target: PolySystem,
) -> SolutionSet:
    """Cluster endpoints, recover the moment points and classify the lines."""
    arr = red.arrangement
    usable = [p for p in paths if p.status in (PathStatus.CONVERGED, PathStatus.SINGULAR)]
    usable.sort(key=lambda p: _sort_key(_canonical(patch.lift(p.endpoint))))
    homog = [patch.lift(p.endpoint) for p in usable]
    groups = cluster_endpoints(homog, [p.status is PathStatus.SINGULAR for p in usable], cfg.dedup_tol)
    compiled = target.compile()

    records = []
    isotropic = 0
    for g in groups:
        members = [usable[i] for i in g]
        x = _refine_cluster(members, compiled, cfg)
        w = patch.lift(x)
        w = w / np.linalg.norm(w)
        if abs(dot(w, w)) < 1e-10:
            # excluded for spanning centers; kept out of the record list
            isotropic += len(members)
            log.debug("dropping isotropic endpoint %s", w)
            continue
        # clustered (multiple) roots are less accurate, so widen the in-plane test
        lines = red.lines(w, v1_tol=1e-4 if len(members) > 1 else 1e-8)
        mult = len(members) // len(lines) if len(members) >= len(lines) else 1
        for line in lines:
            line = line.scaled()
            records.append(
                SolutionRecord(
                    line=line,
                    residual=max_residual(arr, line),
                    is_real=is_real_line(line, cfg.reality_tol),
                    multiplicity=mult,
                    v_isotropic=False,
                )
            )
    records.sort(key=lambda r: _sort_key(np.concatenate([r.line.v, r.line.p])))
    return SolutionSet(records, len(paths), patch.coeffs, cfg, paths, isotropic)


def random_patch(n: int, rng: np.random.Generator) -> AffinePatch:
    return AffinePatch(rng.normal(size=n) + 1j * rng.normal(size=n))


def coordinate_patch(n: int, i: int) -> AffinePatch:
    e = np.zeros(n, dtype=complex)
    e[i] = 1.0
    return AffinePatch(e)


def solve_arrangement(
    arr: SphereArrangement,
    cfg: TrackerConfig = TrackerConfig(),
    patch: AffinePatch | None = None,
    *,
    check_finite: bool = True,
) -> SolutionSet:
    """All common tangent lines of a sphere arrangement with spanning centers."""
    red = build_reduced_system(arr)
    patch = patch or random_patch(arr.n, cfg.rng(1))
    target = patch.apply(red.system)
    paths = track_all(target, cfg, stream=2)
    sols = deduplicate_and_classify(paths, red, cfg, patch, target)
    if check_finite:
        _check_finite(sols)
    return sols


def solve_hyperplane_arrangement(arr: SphereArrangement, cfg: TrackerConfig = TrackerConfig(), patch: AffinePatch | None = None) -> SolutionSet:
    """Common tangents when the centers span exactly an affine hyperplane."""
    hs = build_hyperplane_system(arr)
    patch = patch or random_patch(arr.n, cfg.rng(1))
    target = patch.apply(hs.system)
    paths = track_all(target, cfg, stream=2)
    return deduplicate_and_classify(paths, hs, cfg, patch, target)


def _check_finite(sols: SolutionSet, fraction: float = 0.2):
    """Heuristic for a positive-dimensional solution set.

    Paths that fail, and singular endpoints that do not cluster with any
    other endpoint, both point to a solution curve rather than an isolated
    multiple root.
    """
    bad = sum(p.status in (PathStatus.DIVERGED, PathStatus.TRUNCATED) for p in sols.paths)
    bad += sum(
        1 for r in sols.records if r.multiplicity == 1 and r.residual >= sols.config.residual_tol
    )
    if bad > fraction * sols.raw_path_count:
        raise NonFiniteSolutionSet(
            f"{bad} of {sols.raw_path_count} paths failed or ended on non-isolated points"
        )


# quadrics in projective space


@dataclass(frozen=True)
class PluckerRecord:
    plucker: np.ndarray
    residual: float
    is_real: bool
    multiplicity: int
    at_infinity: bool


@dataclass
class QuadricSolutionSet:
    records: list[PluckerRecord]
    raw_path_count: int
    patch: np.ndarray
    config: TrackerConfig
    paths: list[PathResult] = field(default_factory=list, repr=False)
    excess_paths: int = 0

    @property
    def isolated_count(self) -> int:
        return len(self.records)

    @property
    def real_count(self) -> int:
        return sum(r.is_real for r in self.records)


def plucker_to_line(P) -> Line:
    """Affine line ``(p, v)`` from Plucker coordinates of a line meeting ``x_0 != 0``."""
    P = np.asarray(P, dtype=complex)
    m = len(P)
    n = int(round((1 + np.sqrt(1 + 8 * m)) / 2)) - 1
    idx = {pr: k for k, pr in enumerate(plucker_pairs(n))}

    def get(i, j):
        if i == j:
            return 0j
        return P[idx[i, j]] if i < j else -P[idx[j, i]]

    v = np.array([get(0, j) for j in range(1, n + 1)])
    v2 = dot(v, v)
    p = np.array([sum(get(i, j) * v[j - 1] for j in range(1, n + 1)) for i in range(1, n + 1)]) / v2
    return Line(p, v)


def quadric_equations(quadrics: list[ProjectiveQuadric]) -> tuple[list[Polynomial], list[Polynomial]]:
    """Plucker relations and tangency forms (homogeneous, in C(n+1, 2) variables)."""
    n = quadrics[0].n
    rels = plucker_relations(n)
    tang = [quadratic_form_poly(plucker_tangency_form(q.normalized())).scaled_to_unit() for q in quadrics]
    return rels, tang


def solve_quadrics(quadrics: list[ProjectiveQuadric], cfg: TrackerConfig = TrackerConfig()) -> QuadricSolutionSet:
    """Isolated lines in P^n tangent to ``2n - 2`` quadrics.

    For ``n = 3`` the single Plucker relation and the four tangency forms
    make a square system on a random chart of P^5.  For larger ``n`` the
    overdetermined system is squared up by random linear combinations and
    endpoints are filtered against every original equation.
    """
    n = quadrics[0].n
    if any(q.n != n for q in quadrics):
        raise ValueError("quadrics live in different projective spaces")
    if len(quadrics) != 2 * n - 2:
        raise ValueError(f"expected 2n-2 = {2 * n - 2} quadrics, got {len(quadrics)}")
    rels, tang = quadric_equations(quadrics)
    original = PolySystem(rels + tang)
    m = original.nvars
    rng = cfg.rng(3)
    if len(original) == m - 1:
        square = original
    else:
        # random complex combinations down to m - 1 equations
        A = rng.normal(size=(m - 1, len(original))) + 1j * rng.normal(size=(m - 1, len(original)))
        square = PolySystem(
            [sum((a * f for a, f in zip(row, original.polys)), Polynomial({}, m)) for row in A]
        )
    patch = random_patch(m, rng)
    target = patch.apply(square)
    paths = track_all(target, cfg, stream=4)
    return _classify_quadric_paths(paths, original, patch, target, cfg)


def _classify_quadric_paths(paths, original: PolySystem, patch: AffinePatch, target, cfg) -> QuadricSolutionSet:
    n = int(round((1 + np.sqrt(1 + 8 * original.nvars)) / 2)) - 1
    compiled = original.compile()
    good = [p for p in paths if p.status is PathStatus.CONVERGED]
    excess = len(paths) - len(good)
    points, keep = [], []
    for p in good:
        P = _canonical(patch.lift(p.endpoint))
        res = float(np.max(np.abs(compiled.evaluate(P)[0])))
        if res < cfg.residual_tol:
            points.append(P)
            keep.append(p)
        elif len(original) == original.nvars - 1:
            excess += 1
    groups = cluster_endpoints(points, [False] * len(points), cfg.dedup_tol)
    records = []
    for g in groups:
        P = points[g[0]]
        res = float(np.max(np.abs(compiled.evaluate(P)[0])))
        at_inf = bool(np.max(np.abs(P[:n])) < 1e-8)
        real = bool(np.max(np.abs(P.imag)) <= cfg.reality_tol)
        records.append(PluckerRecord(P, res, real, len(g), at_inf))
    records.sort(key=lambda r: _sort_key(r.plucker))
    return QuadricSolutionSet(records, len(paths), patch.coeffs, cfg, paths, excess)


def random_quadrics(n: int, rng: np.random.Generator, count: int | None = None) -> list[ProjectiveQuadric]:
    count = 2 * n - 2 if count is None else count
    out = []
    for _ in range(count):
        A = rng.normal(size=(n + 1, n + 1))
        out.append(ProjectiveQuadric(A + A.T))
    return out


def spheres_as_quadrics(arr: SphereArrangement) -> list[ProjectiveQuadric]:
    from .formulation import homogenize_sphere

    return [homogenize_sphere(s.center, s.radius) for s in arr.spheres]
