"""Command-line front end.

Exit codes: 0 success, 1 malformed input, 2 degenerate configuration,
3 parameters on a discriminant, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .closed_form import (
    CrosspolytopeParams,
    FamilySolution,
    Thm4Params,
    crosspolytope_tangents,
    perturbed_crosspolytope_tangents,
    region_sample,
    thm4_tangents,
)
from .core import (
    AffinelyDependentCenters,
    DegenerateRadius,
    DiscriminantVanishes,
    Line,
    NonFiniteSolutionSet,
    SolutionRecord,
    SphereArrangement,
    TangentiaError,
    UnresolvedCluster,
    ZeroCoordinateRoot,
    dot,
    is_real_line,
    line_distance,
    match_lines,
    max_residual,
)
from .formulation import bezout_bound_quadrics, bezout_bound_spheres, grassmannian_degree
from .solver import (
    TrackerConfig,
    coordinate_patch,
    random_quadrics,
    solve_arrangement,
    solve_hyperplane_arrangement,
    solve_quadrics,
)

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_DISCRIMINANT, EXIT_VERIFY = 0, 1, 2, 3, 4
MATCH_TOL = 1e-5
BOUND_RANGE = (3, 16)


class InputError(Exception):
    """Malformed command-line input or file contents."""


# serialization


def arrangement_to_json(arr: SphereArrangement) -> dict:
    return {
        "n": arr.n,
        "spheres": [{"center": s.center.tolist(), "radius": s.radius} for s in arr.spheres],
    }


def arrangement_from_json(obj) -> SphereArrangement:
    try:
        n = obj["n"]
        spheres = obj["spheres"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise InputError(f"'n' must be an integer, got {n!r}")
        centers = [np.asarray(s["center"], dtype=float) for s in spheres]
        radii = [float(s["radius"]) for s in spheres]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed arrangement: missing or invalid field {exc}") from exc
    if len(spheres) != 2 * n - 2:
        raise InputError(f"expected 2n-2 = {2 * n - 2} spheres for n={n}, got {len(spheres)}")
    if any(c.shape != (n,) for c in centers):
        raise InputError(f"every center must have {n} coordinates")
    try:
        return SphereArrangement.from_arrays(np.array(centers), radii)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def record_to_json(rec: SolutionRecord) -> dict:
    p, v = rec.line.p, rec.line.v
    return {
        "p_re": p.real.tolist(),
        "p_im": p.imag.tolist(),
        "v_re": v.real.tolist(),
        "v_im": v.imag.tolist(),
        "real": bool(rec.is_real),
        "residual": float(rec.residual),
        "multiplicity": int(rec.multiplicity),
    }


def record_from_json(obj) -> SolutionRecord:
    try:
        p = np.asarray(obj["p_re"], dtype=float) + 1j * np.asarray(obj["p_im"], dtype=float)
        v = np.asarray(obj["v_re"], dtype=float) + 1j * np.asarray(obj["v_im"], dtype=float)
        return SolutionRecord(
            Line(p, v),
            float(obj["residual"]),
            bool(obj["real"]),
            int(obj.get("multiplicity", 1)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed solution record: {exc}") from exc


def solutions_to_json(records, patch=None) -> dict:
    patch = [] if patch is None else [[float(z.real), float(z.imag)] for z in np.asarray(patch)]
    return {"patch": patch, "records": [record_to_json(r) for r in records]}


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = records[0].line.dim if records else 0
    header = ["index", "real", "residual", "multiplicity"]
    for part in ("p_re", "p_im", "v_re", "v_im"):
        header += [f"{part}_{i}" for i in range(n)]
    w.writerow(header)
    for k, r in enumerate(records):
        p, v = r.line.p, r.line.v
        w.writerow(
            [k, int(r.is_real), repr(float(r.residual)), r.multiplicity]
            + [repr(float(x)) for x in np.concatenate([p.real, p.imag, v.real, v.imag])]
        )
    return buf.getvalue()


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _emit_records(records, patch, args):
    if args.out is None:
        return
    if args.format == "csv":
        _emit(records_to_csv(records), args.out)
    else:
        _emit(json.dumps(solutions_to_json(records, patch), indent=1) + "\n", args.out)


# config


def _default_seed() -> int:
    raw = os.environ.get("TANGENTIA_SEED")
    if raw is None:
        return 0
    try:
        return _seed(raw)
    except argparse.ArgumentTypeError:
        return 0


def _seed(text: str) -> int:
    try:
        s = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned integer, got {text!r}")
    if not 0 <= s < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return s


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return x


def _config(args) -> TrackerConfig:
    return TrackerConfig(
        seed=args.seed,
        residual_tol=args.tol_residual,
        dedup_tol=args.tol_dedup,
        reality_tol=args.tol_reality,
    )


def _patch(text: str, n: int):
    if text == "random":
        return None
    if text.startswith("index:"):
        try:
            i = int(text.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad patch index in {text!r}")
        if not 0 <= i < n:
            raise InputError(f"patch index {i} out of range for n={n}")
        return coordinate_patch(n, i)
    raise InputError(f"patch must be 'random' or 'index:<i>', got {text!r}")


def _summary(n: int, total: int, real: int) -> str:
    return f"n={n} total={total} real={real} max={bezout_bound_spheres(n)}"


# commands


def cmd_solve(args) -> int:
    arr = arrangement_from_json(_read_json(args.arrangement))
    cfg = _config(args)
    patch = _patch(args.patch, arr.n)
    sols = solve_arrangement(arr, cfg, patch)
    _emit_records(sols.records, sols.patch, args)
    print(_summary(arr.n, sols.total, sols.real_count))
    return EXIT_OK


def _family_solution(args) -> tuple[FamilySolution, bool]:
    if args.r is None and args.r2 is None:
        raise InputError("give --r or --r2")
    r = math.sqrt(args.r2) if args.r is None else args.r
    if not r > 0:
        raise InputError("radius must be positive")
    if args.name == "thm4":
        if args.a is None:
            raise InputError("thm4 needs --a")
        try:
            prm = Thm4Params(args.n, args.a, r)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        return thm4_tangents(prm, args.tol_reality), True
    if args.name == "crosspolytope":
        if args.n < 3:
            raise InputError("n must be >= 3")
        sol = crosspolytope_tangents(args.n, r, args.tol_reality)
        return sol, False
    a = 0.5 if args.a is None else args.a
    try:
        prm = CrosspolytopeParams(args.n, r, a)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return perturbed_crosspolytope_tangents(prm, args.tol_reality), False


def cmd_family(args) -> int:
    sol, spanning = _family_solution(args)
    _emit_records(sol.records, None, args)
    print(_summary(args.n, sol.total, sol.real_count))
    if not args.verify_homotopy:
        return EXIT_OK
    cfg = _config(args)
    t0 = time.perf_counter()
    if spanning:
        num = solve_arrangement(sol.arrangement, cfg)
    else:
        num = solve_hyperplane_arrangement(sol.arrangement, cfg)
    m = match_lines(sol.lines, num.lines)
    ok = m.max_distance < MATCH_TOL and num.total == sol.total
    print(
        f"homotopy total={num.total} distinct={num.distinct} "
        f"max_distance={m.max_distance:.3e} time={time.perf_counter() - t0:.2f}s "
        f"{'PASS' if ok else 'FAIL'}"
    )
    return EXIT_OK if ok else EXIT_VERIFY


def _grid(lo: float, hi: float, k: int) -> np.ndarray:
    # cell midpoints, so the interval ends (r = 0 in particular) are never sampled
    edges = np.linspace(lo, hi, k + 1)
    return 0.5 * (edges[:-1] + edges[1:])


def cmd_region(args) -> int:
    if args.n < 4:
        raise InputError("region needs n >= 4")
    if args.grid < 1:
        raise InputError("grid must be positive")
    a_grid = _grid(args.a_min, args.a_max, args.grid)
    r_grid = _grid(args.r_min, args.r_max, args.grid)
    rows = region_sample(args.n, a_grid, r_grid)
    if args.format == "json":
        text = json.dumps(
            [
                {
                    "a": c.a,
                    "r": c.r,
                    "on_discriminant": c.on_discriminant,
                    "all_real": c.all_real,
                    "count_real": c.count_real,
                }
                for c in rows
            ]
        ) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a", "r", "on_discriminant", "all_real", "count_real"])
        for c in rows:
            w.writerow([repr(c.a), repr(c.r), int(c.on_discriminant), int(c.all_real), c.count_real])
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


def cmd_bound(args) -> int:
    lo, hi = BOUND_RANGE
    if not lo <= args.n <= hi:
        raise InputError(f"n must lie in [{lo}, {hi}], got {args.n}")
    vals = {
        "spheres": bezout_bound_spheres(args.n),
        "quadrics": bezout_bound_quadrics(args.n),
        "grassmannian": grassmannian_degree(args.n),
    }
    if args.format == "json":
        print(json.dumps({"n": args.n, **vals}))
    else:
        print(" ".join(f"{k}={v}" for k, v in vals.items()))
    return EXIT_OK


def verify_records(arr: SphereArrangement, records, tol_residual: float, tol_reality: float) -> list[str]:
    """Per-line diagnostics; empty when every check passes."""
    problems = []
    for k, rec in enumerate(records):
        line = rec.line
        if line.dim != arr.n:
            problems.append(f"line {k}: dimension {line.dim} != {arr.n}")
            continue
        sc = line.scaled()
        res = max_residual(arr, sc)
        if not res < tol_residual:
            problems.append(f"line {k}: residual {res:.3e} >= {tol_residual:.1e}")
        pv = abs(dot(sc.p, sc.v)) / max(1.0, float(np.linalg.norm(sc.p)))
        if not pv < tol_residual:
            problems.append(f"line {k}: p.v = {pv:.3e}")
        real = is_real_line(sc, tol_reality)
        if real != rec.is_real:
            problems.append(f"line {k}: reality flag {rec.is_real} but recomputed {real}")
    # complex lines come in conjugate pairs because the arrangement is real
    lines = [r.line.scaled() for r in records]
    for k, rec in enumerate(records):
        if rec.is_real:
            continue
        conj = Line(np.conj(lines[k].p), np.conj(lines[k].v))
        partners = [
            j
            for j, other in enumerate(records)
            if j != k and line_distance(conj, lines[j]) < 1e-6 and other.multiplicity == rec.multiplicity
        ]
        if not partners:
            problems.append(f"line {k}: no conjugate partner")
    return problems


def cmd_verify(args) -> int:
    arr = arrangement_from_json(_read_json(args.arrangement))
    sol = _read_json(args.solutions)
    if not isinstance(sol, dict) or "records" not in sol:
        raise InputError("solutions file must contain 'records'")
    records = [record_from_json(r) for r in sol["records"]]
    problems = verify_records(arr, records, args.tol_residual, args.tol_reality)
    for msg in problems:
        print(msg)
    total = sum(r.multiplicity for r in records)
    status = "PASS" if not problems else "FAIL"
    print(f"verify {status}: {len(records)} records, total={total}, {len(problems)} problems")
    return EXIT_OK if not problems else EXIT_VERIFY


def cmd_quadrics(args) -> int:
    cfg = _config(args)
    if args.file:
        from .formulation import ProjectiveQuadric

        obj = _read_json(args.file)
        try:
            quads = [ProjectiveQuadric(np.asarray(q, dtype=float)) for q in obj["quadrics"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed quadrics file: {exc}") from exc
        n = quads[0].n if quads else 0
    else:
        n = args.n
        if n < 3:
            raise InputError("n must be >= 3")
        quads = random_quadrics(n, cfg.rng(10))
    if len(quads) != 2 * n - 2:
        raise InputError(f"expected 2n-2 = {2 * n - 2} quadrics for n={n}, got {len(quads)}")
    t0 = time.perf_counter()
    res = solve_quadrics(quads, cfg)
    print(
        f"n={n} isolated={res.isolated_count} real={res.real_count} "
        f"paths={res.raw_path_count} excess={res.excess_paths} "
        f"bezout={bezout_bound_quadrics(n)} time={time.perf_counter() - t0:.1f}s"
    )
    return EXIT_OK


# argument parsing


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=_seed, default=_default_seed(), help="RNG seed (default: $TANGENTIA_SEED or 0)")
    p.add_argument("--tol-residual", type=_positive, default=TrackerConfig.residual_tol)
    p.add_argument("--tol-dedup", type=_positive, default=TrackerConfig.dedup_tol)
    p.add_argument("--tol-reality", type=_positive, default=TrackerConfig.reality_tol)
    p.add_argument("--patch", default="random", help="'random' or 'index:<i>'")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output path (default: no solution file / stdout for tables)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tangentia", description="Common tangent lines to spheres and quadrics.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an arrangement file by homotopy continuation")
    p.add_argument("arrangement")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("family", help="closed-form symmetric families")
    p.add_argument("name", choices=("thm4", "crosspolytope", "perturbed"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--r2", type=float, help="squared radius (alternative to --r)")
    p.add_argument("--verify-homotopy", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_family)

    p = sub.add_parser("region", help="classify an (a, r) grid for the tetrahedron-plus-axes family")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a-min", type=float, default=1.0)
    p.add_argument("--a-max", type=float, default=3.0)
    p.add_argument("--r-min", type=float, default=0.0)
    p.add_argument("--r-max", type=float, default=math.sqrt(3.0))
    p.add_argument("--grid", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=cmd_region, format="csv")

    p = sub.add_parser("bound", help="Bezout bounds and Grassmannian degree")
    p.add_argument("n", type=int)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("verify", help="check a solutions file against an arrangement")
    p.add_argument("arrangement")
    p.add_argument("solutions")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("quadrics", help="tangent lines to 2n-2 quadrics in P^n")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--file", help="JSON file {'quadrics': [matrix, ...]}")
    _add_common(p)
    p.set_defaults(func=cmd_quadrics)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AffinelyDependentCenters, NonFiniteSolutionSet, UnresolvedCluster) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, AffinelyDependentCenters):
            print("hint: for the crosspolytope families use `tangentia family`", file=sys.stderr)
        return EXIT_DEGENERATE
    except (DiscriminantVanishes, DegenerateRadius, ZeroCoordinateRoot) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DISCRIMINANT
    except TangentiaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
