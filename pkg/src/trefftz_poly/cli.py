"""Command-line front end: ``mesh``, ``run``, ``converge`` and ``verify-basis``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .benchmarks import (
    CASES,
    CSV_HEADER,
    ConvergenceError,
    ConvergenceRecord,
    build_meshes,
    get_case,
    run_case,
    run_convergence,
    write_plot_data,
)
from .exceptions import MeshError, TrefftzPolyError
from .geometry import generate_mesh, parse_domain, tiled_area
from .material import Material
from .mesh_io import read_mesh, write_mesh
from .trefftz import TrefftzModeSet, default_ordering, verify_mode_set

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

STRING_KEYS = {"regime", "direction"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {v}")
    return v


def _sizes(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes must be comma-separated integers: {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("sizes must be positive")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("sizes must be strictly increasing")
    return vals


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` comments.  Values are floats except regime/direction."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{no}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            if k in STRING_KEYS:
                out[k] = v
            else:
                try:
                    out[k] = float(v)
                except ValueError:
                    raise ValueError(f"{path}:{no}: {k} needs a number, got {v!r}") from None
    return out


def _case_overrides(args) -> dict:
    over = read_config(args.config) if getattr(args, "config", None) else {}
    for key in ("E", "nu", "regime"):
        val = getattr(args, key, None)
        if val is not None:
            over[key] = val
    return over


def _make_case(args):
    try:
        return get_case(args.benchmark, **_case_overrides(args))
    except TypeError as exc:
        raise ValueError(f"bad override for {args.benchmark}: {exc}") from None


def _methods(name: str) -> list[str]:
    return ["pfem", "ht"] if name == "both" else [name]


def _add_material(p):
    p.add_argument("--E", type=float, help="Young's modulus override")
    p.add_argument("--nu", type=float, help="Poisson ratio override")
    p.add_argument("--regime", choices=["plane_stress", "plane_strain"])
    p.add_argument("--config", help="key=value file with material/geometry overrides")
    p.add_argument("--modes", type=_positive_int,
                   help="fixed HT mode count (default: N_dof - 1 per element)")
    p.add_argument("--raw-pfem", action="store_true",
                   help="PFEM without the gradient consistency correction")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="trefftz-poly", description="Hybrid Trefftz and Wachspress polygonal FEM for 2D elasticity")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("mesh", help="generate CVT polygon meshes")
    m.add_argument("--domain", required=True,
                   help="rect:LxD[@x0,y0] | plate_hole:side,radius | annulus:r_in,r_out")
    m.add_argument("--cells", type=_sizes, required=True, help="cell count(s), comma-separated")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--lloyd", type=_nonneg_int, default=100, help="Lloyd iterations")
    m.add_argument("-o", "--output", required=True,
                   help="output path; use '{n}' for the cell count when several are given")

    r = sub.add_parser("run", help="solve one benchmark on one mesh")
    r.add_argument("--benchmark", required=True, choices=sorted(CASES))
    r.add_argument("--method", required=True, choices=["ht", "pfem"])
    r.add_argument("--mesh", required=True, help="polymesh file")
    r.add_argument("--csv", help="append the result row here (header written if new)")
    r.add_argument("--dump", help="write per-node displacements here")
    _add_material(r)

    c = sub.add_parser("converge", help="convergence study on generated meshes")
    c.add_argument("--benchmark", required=True, choices=sorted(CASES))
    c.add_argument("--method", default="both", choices=["ht", "pfem", "both"])
    c.add_argument("--sizes", type=_sizes, help="cell counts (default: the benchmark's sequence)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--lloyd", type=_nonneg_int, default=100)
    c.add_argument("--csv", help="CSV output (default: stdout)")
    c.add_argument("--plot-prefix", help="write <prefix>_<method>_<norm>.dat plot data")
    _add_material(c)

    v = sub.add_parser("verify-basis", help="finite-difference check of the T-complete modes")
    v.add_argument("--kmax", type=_positive_int, default=6)
    v.add_argument("--E", type=float, default=1.0)
    v.add_argument("--nu", type=float, default=0.3)
    v.add_argument("--regime", choices=["plane_stress", "plane_strain"], default="plane_stress")
    v.add_argument("--samples", type=_positive_int, default=20)
    v.add_argument("--h-fd", type=float, default=1e-5)
    return p


def cmd_mesh(args, out) -> int:
    domain = parse_domain(args.domain)
    if len(args.cells) > 1 and "{n}" not in args.output:
        raise UsageError("several --cells values need '{n}' in --output")
    for n in args.cells:
        mesh = generate_mesh(domain, n, seed=args.seed, lloyd_iters=args.lloyd)
        path = args.output.replace("{n}", str(n))
        write_mesh(mesh, path)
        q = mesh.quality()
        out.write(f"{path}: cells {mesh.n_cells} nodes {mesh.n_nodes} "
                  f"quality min {q.min():.4f} mean {q.mean():.4f}\n")
    return EXIT_OK


def _check_mesh_matches(case, mesh, path):
    need = {bc.marker for bc in case.bcs.dirichlet} | {bc.marker for bc in case.bcs.neumann}
    missing = need - mesh.markers
    if missing:
        raise MeshError(f"{path} does not match benchmark {case.name}: "
                        f"missing boundary markers {sorted(missing)}")
    sd = case.domain.signed_distance(mesh.nodes)
    if np.any(sd > 1e-8 * case.domain.diameter):
        raise MeshError(f"{path} does not match benchmark {case.name}: "
                        f"nodes lie outside {case.domain.describe()}")
    target = tiled_area(mesh, case.domain)
    area = float(mesh.areas().sum())
    if abs(area - target) > 1e-6 * target:
        raise MeshError(f"{path} does not match benchmark {case.name}: "
                        f"mesh area {area:.8g}, domain needs {target:.8g}")


def cmd_run(args, out) -> int:
    case = _make_case(args)
    mesh = read_mesh(args.mesh)
    _check_mesh_matches(case, mesh, args.mesh)
    res, sol = run_case(case, mesh, args.method, m=args.modes, consistent=not args.raw_pfem)
    if args.csv:
        new = not os.path.exists(args.csv) or os.path.getsize(args.csv) == 0
        with open(args.csv, "a", encoding="ascii", newline="\n") as fh:
            if new:
                fh.write(CSV_HEADER + "\n")
            fh.write(res.csv_row() + "\n")
    else:
        out.write(CSV_HEADER + "\n" + res.csv_row() + "\n")
    if args.dump:
        d = sol.nodal()
        with open(args.dump, "w", encoding="ascii", newline="\n") as fh:
            fh.write("# node x y u_x u_y\n")
            for i, ((x, y), (ux, uy)) in enumerate(zip(mesh.nodes, d)):
                fh.write(f"{i} {x:.17g} {y:.17g} {ux:.17g} {uy:.17g}\n")
    return EXIT_OK


def _fmt_slope(s):
    return "n/a" if s is None else f"{s:.4f}"


def cmd_converge(args, out) -> int:
    case = _make_case(args)
    sizes = args.sizes or list(case.sizes)
    meshes = build_meshes(case, sizes, args.seed, args.lloyd)
    fh = open(args.csv, "w", encoding="ascii", newline="\n") if args.csv else out
    records = []
    try:
        fh.write(CSV_HEADER + "\n")
        for method in _methods(args.method):
            rec = ConvergenceRecord(case.name, method)
            try:
                rec = run_convergence(case, method, meshes, m=args.modes,
                                      consistent=not args.raw_pfem)
            except ConvergenceError as exc:
                for r in exc.record.rows:
                    fh.write(r.csv_row() + "\n")
                raise
            for r in rec.rows:
                fh.write(r.csv_row() + "\n")
            fh.flush()
            records.append(rec)
    finally:
        if fh is not out:
            fh.close()
    for rec in records:
        for col in ("l2_error", "energy_error"):
            out.write(f"{rec.benchmark} {rec.method} {col} slope: {_fmt_slope(rec.slope(col))}\n")
            if args.plot_prefix:
                with open(f"{args.plot_prefix}_{rec.method}_{col}.dat", "w",
                          encoding="ascii", newline="\n") as pf:
                    write_plot_data(rec, col, pf)
    return EXIT_OK


def cmd_verify_basis(args, out) -> int:
    mat = Material(args.E, args.nu, args.regime)
    m = len([p for p in default_ordering(4 * args.kmax) if p[1] <= args.kmax])
    report = verify_mode_set(TrefftzModeSet(mat, m), args.samples, args.h_fd)
    out.write(f"E={args.E:g} nu={args.nu:g} {args.regime} kmax={args.kmax} modes={m}\n")
    out.write(report.table() + "\n")
    out.write(f"{'all modes pass' if report.passed else f'{len(report.failures)} mode(s) FAIL'}\n")
    return EXIT_OK if report.passed else EXIT_RUNTIME


COMMANDS = {"mesh": cmd_mesh, "run": cmd_run, "converge": cmd_converge,
            "verify-basis": cmd_verify_basis}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"trefftz-poly: error: {exc}\n")
        return EXIT_USAGE
    except (TrefftzPolyError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"trefftz-poly: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
