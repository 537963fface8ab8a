"""Command-line front end.

Exit status: 0 on success, 2 when an invariant does not hold, 1 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

from .analysis import (
    AnalysisError,
    BudgetExceeded,
    locality_check,
    search_mu,
    shape_volumes,
    staircase_sweep,
    table_mismatches,
    table_rows,
)
from .generators import (
    GeneratorError,
    befill,
    cantor_grid,
    class_regular,
    hc,
    mu2_shape,
    regular,
)
from .geometry import GeometryError, root, space
from .metrics import measure
from .partition import (
    NotContiguous,
    Partition,
    PartitionError,
    classified_to_json,
    classify,
    partition,
    partition_from_json,
    partition_to_json,
    partition_from_cells,
)
from .sfc import CURVE_FAMILIES, CurveError, curve as make_curve
from .spacetree import (
    Grid,
    GridError,
    InvalidGrid,
    cells_from_json,
    coverage,
    grid_to_json,
    params_from_json,
    validate_grid,
)

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2
FAMILIES = ("regular", "class-regular", "cantor", "hc", "befill", "mu2-shape")


class UsageError(Exception):
    pass


class InvariantViolation(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load_json(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _load_shape(path: str | None, k: int, d: int):
    if path is None:
        return frozenset([root(space(k, d))])
    obj = _load_json(path)
    try:
        params = params_from_json(obj)
        return frozenset(cells_from_json(params, obj.get("cells"), "$.cells"))
    except GridError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _curve(name: str, d: int, k: int | None = None):
    try:
        c = make_curve(name, d)
    except CurveError as exc:
        raise UsageError(str(exc)) from exc
    if k is not None and c.params.k != k:
        raise UsageError(f"curve {name} needs k={c.params.k}, got --k {k}")
    return c


def _need(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError(f"--family {args.family} requires " + ", ".join("--" + m for m in missing))


def cmd_gen(args) -> int:
    fam = args.family
    if fam == "regular":
        _need(args, "M")
        text = grid_to_json(regular(space(args.k, args.d), args.M))
    elif fam == "class-regular":
        _need(args, "M", "c", "r")
        text = grid_to_json(class_regular(space(args.k, args.d), args.c, args.r, args.M))
    elif fam == "cantor":
        _need(args, "M")
        if (args.k, args.d) != (3, 2):
            raise UsageError("the cantor family needs --k 3 --d 2")
        text = grid_to_json(cantor_grid(args.M))
    elif fam == "hc":
        _need(args, "M", "c")
        Q = _load_shape(args.shape, args.k, args.d)
        text = partition_to_json(partition_from_cells(hc(Q, args.M, args.c)))
    elif fam == "befill":
        _need(args, "M", "V")
        c = _curve(args.curve, args.d, args.k)
        Q = _load_shape(args.shape, args.k, args.d)
        text = partition_to_json(partition_from_cells(befill(Q, args.V, args.M, c)))
    else:
        _need(args, "N")
        c = _curve(args.curve, args.d, args.k)
        cells, G = mu2_shape(args.N, c)
        text = partition_to_json(partition_from_cells(cells, G, c))
    _write(args.out, text)
    return EXIT_OK


def _load_cells_and_grid(path: str):
    """Return (cells, grid or None) from grid or partition JSON."""
    text = _read(path)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        if "range" in obj or "grid" in obj:
            P = partition_from_json(text)
            return P.cells, P.grid
        params = params_from_json(obj)
        cells = cells_from_json(params, obj.get("cells"), "$.cells")
    except (GridError, PartitionError) as exc:
        raise UsageError(f"{path}: {exc}") from exc
    if coverage(params, cells) == 1:
        G = Grid(params, cells)
        validate_grid(G)
        return G.cells, G
    return frozenset(cells), None


def cmd_measure(args) -> int:
    cells, grid = _load_cells_and_grid(args.input)
    if args.partition:
        pcells, _ = _load_cells_and_grid(args.partition)
        if grid is None:
            raise UsageError("--in must be a grid when --partition is given")
        if not pcells <= grid.cells:
            raise InvariantViolation("partition cells are not cells of the grid")
        X, G = pcells, grid if args.explicit_grid else None
    else:
        X, G = (grid, None) if grid is not None and cells == grid.cells else (cells, None)
    codims = [args.c] if args.c is not None else []
    d = next(iter(cells)).params.d
    if any(not 0 <= c <= d for c in codims):
        raise UsageError(f"--c must lie in [0, {d}]")
    _write(args.out, measure(X, G, codims).to_json())
    return EXIT_OK


def cmd_classify(args) -> int:
    cells, grid = _load_cells_and_grid(args.input)
    view = classify(frozenset(cells))
    _write(args.out, classified_to_json(view))
    return EXIT_OK


def cmd_table(args) -> int:
    rows = table_rows(args.max_M, k=args.k, d=args.d, min_M=args.min_M)
    if not rows:
        raise UsageError(f"no table rows for k={args.k}, d={args.d}")
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["grid", "k", "d", "M", "dv", "ds", "dr_num", "dr_den"])
        for r in rows:
            w.writerow([r.grid, r.k, r.d, r.M, r.dv, r.ds, r.dr.numerator, r.dr.denominator])
    finally:
        if out is not sys.stdout:
            out.close()
    bad = table_mismatches(rows)
    if bad:
        for m in bad:
            print(f"mismatch: {m.grid} M={m.M} {m.what}: measured {m.measured}, "
                  f"closed form {m.expected}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_staircase(args) -> int:
    c = _curve(args.curve, args.d, args.k)
    Q = _load_shape(args.shape, c.params.k, c.params.d)
    vols = shape_volumes(Q, args.M)
    pts = staircase_sweep(vols, c.params.k, c.params.d, args.points)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["V", "R_num", "R_den", "regime_c", "alpha"])
        for p in pts:
            alpha = "" if p.alpha is None else f"{float(p.alpha):.6f}"
            w.writerow([p.V, p.R.numerator, p.R.denominator, p.regime, alpha])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _q(x: Fraction | None):
    return None if x is None else f"{x.numerator}/{x.denominator}"


def cmd_search_mu(args) -> int:
    c = _curve(args.curve, args.d)
    try:
        est = search_mu(c, args.c, args.depth_bound, args.M, args.budget)
    except BudgetExceeded as exc:
        raise UsageError(str(exc)) from exc
    payload = {
        "curve": c.family, "c": est.c, "shapes": est.shapes, "M": est.M,
        "best": _q(est.best), "lower_bound": _q(est.lower_bound),
        "analytic_lower": _q(est.analytic_lower), "analytic_upper": _q(est.analytic_upper),
        "witness": [{"l": b.depth, "x": list(b.coords)} for b in sorted(est.witness)],
    }
    _write(args.out, json.dumps(payload, separators=(",", ":")) + "\n")
    return EXIT_OK if est.consistent else EXIT_INVARIANT


def cmd_locality(args) -> int:
    c = _curve(args.curve, args.d)
    rep = locality_check(c, args.M, args.samples, args.seed)
    payload = {"curve": c.family, "M": rep.M, "pairs": rep.pairs, "max_ratio": _q(rep.max_ratio),
               "max_ratio_decimal": f"{float(rep.max_ratio):.6f}", "bound": _q(rep.bound),
               "worst": list(rep.worst), "ok": rep.ok}
    _write(args.out, json.dumps(payload, separators=(",", ":")) + "\n")
    return EXIT_OK if rep.ok else EXIT_INVARIANT


def cmd_validate(args) -> int:
    obj = _load_json(args.input)
    try:
        params = params_from_json(obj)
        G = Grid(params, cells_from_json(params, obj.get("cells"), "$.cells"))
    except GridError as exc:
        raise UsageError(f"{args.input}: {exc}") from exc
    try:
        validate_grid(G)
    except (InvalidGrid, GeometryError) as exc:
        raise InvariantViolation(str(exc)) from exc
    if "range" in obj:
        try:
            partition_from_json(json.dumps(obj))
        except PartitionError as exc:
            raise InvariantViolation(str(exc)) from exc
    print(f"ok: {len(G)} cells, depth {G.depth}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sfcpart", description="Adaptive k^d grids, SFC partitions and their surface/volume extremes.")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a grid or partition family")
    g.add_argument("--family", required=True, choices=FAMILIES)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("-M", type=int)
    g.add_argument("--c", type=int)
    g.add_argument("--r", type=int)
    g.add_argument("--V", type=int)
    g.add_argument("--N", type=int)
    g.add_argument("--curve", choices=CURVE_FAMILIES, default="hilbert2d")
    g.add_argument("--shape", help="shape JSON (default: the unit cube)")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    m = sub.add_parser("measure", help="dv/ds/cv/cs/dr/diameter report")
    m.add_argument("--in", dest="input", required=True)
    m.add_argument("--partition")
    m.add_argument("--explicit-grid", action="store_true",
                   help="measure the partition against the --in grid instead of its minimal grid")
    m.add_argument("--c", type=int)
    m.add_argument("--out")
    m.set_defaults(func=cmd_measure)

    c = sub.add_parser("classify", help="pre-classification and classification of a partition")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_classify)

    t = sub.add_parser("table", help="dv/ds of the reference grid families")
    t.add_argument("--k", type=int)
    t.add_argument("--d", type=int)
    t.add_argument("--max-M", dest="max_M", type=int, default=10)
    t.add_argument("--min-M", dest="min_M", type=int, default=1)
    t.add_argument("--out")
    t.set_defaults(func=cmd_table)

    s = sub.add_parser("staircase", help="maximal surface-to-volume ratio against volume")
    s.add_argument("--curve", required=True, choices=CURVE_FAMILIES)
    s.add_argument("--k", type=int)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("-M", type=int, required=True)
    s.add_argument("--points", type=int, default=64)
    s.add_argument("--shape")
    s.add_argument("--out")
    s.set_defaults(func=cmd_staircase)

    u = sub.add_parser("search-mu", help="bounded search over curve shapes")
    u.add_argument("--curve", required=True, choices=CURVE_FAMILIES)
    u.add_argument("--d", type=int, default=2)
    u.add_argument("--c", type=int, required=True)
    u.add_argument("--depth-bound", dest="depth_bound", type=int, required=True)
    u.add_argument("-M", type=int)
    u.add_argument("--budget", type=int, default=200_000)
    u.add_argument("--out")
    u.set_defaults(func=cmd_search_mu)

    lo = sub.add_parser("locality", help="sampled locality ratios on a regular grid")
    lo.add_argument("--curve", required=True, choices=CURVE_FAMILIES)
    lo.add_argument("--d", type=int, default=2)
    lo.add_argument("-M", type=int, required=True)
    lo.add_argument("--samples", type=int, default=100_000)
    lo.add_argument("--seed", type=int, required=True)
    lo.add_argument("--out")
    lo.set_defaults(func=cmd_locality)

    v = sub.add_parser("validate", help="check that a grid tiles the unit cube")
    v.add_argument("--in", dest="input", required=True)
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (InvalidGrid, NotContiguous) as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (UsageError, GridError, PartitionError, GeometryError, GeneratorError,
            AnalysisError, CurveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
