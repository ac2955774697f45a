"""Command-line entry point: ``alfeld-elast verify | convergence | solve``."""
import argparse
import os
import sys

from threadpoolctl import threadpool_limits

from .dof_numbering import METHODS
from .materials import MaterialError, manufactured_case, parse_material

ROBUST_NUS = (0.3, 0.4999, 0.49999)


def _levels(text):
    try:
        levels = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must be comma-separated integers, got {text!r}") from None
    if not levels or any(n < 1 for n in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
        raise argparse.ArgumentTypeError("levels must be positive and strictly increasing")
    return levels


def _material(text):
    try:
        return parse_material(text)
    except MaterialError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    p = argparse.ArgumentParser(prog="alfeld-elast",
                                description="Mixed elasticity elements on Alfeld splits.")
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS threads (default: $ALFELD_ELAST_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the structural verification suite")
    v.add_argument("--ndim", type=int, choices=(2, 3, 4), help="only this dimension (default: all)")
    v.add_argument("--trials", type=int, default=100, help="random-geometry trials (default 100)")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--summary", help="write 'name status value' lines to this file")

    c = sub.add_parser("convergence", help="manufactured-solution convergence study")
    c.add_argument("--method", choices=METHODS, required=True)
    c.add_argument("--levels", type=_levels, default=[2, 4, 8])
    c.add_argument("--material", type=_material, default=parse_material("iso:E=1,nu=0.3"))
    c.add_argument("--case", default="trig", choices=("trig", "divfree", "bubble"))
    c.add_argument("--postprocess", action="store_true", help="also compute u* (jkm, p0)")
    c.add_argument("--robustness", action="store_true",
                   help="sweep nu over 0.3, 0.4999, 0.49999 (divfree case)")
    c.add_argument("--out", help="CSV output path")

    s = sub.add_parser("solve", help="single solve with optional VTK output")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--mesh", help="mesh file (vertices/cells text format)")
    g.add_argument("--cube", type=int, help="unit cube with n subdivisions per side")
    s.add_argument("--method", choices=METHODS, required=True)
    s.add_argument("--material", type=_material, default=parse_material("iso:E=1,nu=0.3"))
    s.add_argument("--case", default="trig", choices=("trig", "divfree", "bubble"))
    s.add_argument("--postprocess", action="store_true")
    s.add_argument("--vtk", help="write the solution as legacy VTK")
    return p


def _usage_error(msg):
    print(f"alfeld-elast: error: {msg}", file=sys.stderr)
    raise SystemExit(2)


def _threads(args):
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("ALFELD_ELAST_THREADS", "1")
        try:
            n = int(env)
        except ValueError:
            _usage_error(f"ALFELD_ELAST_THREADS={env!r} is not an integer")
    if n < 1:
        _usage_error("thread count must be positive")
    return n


def cmd_verify(args, out):
    from .verification import run_verification
    ndims = (args.ndim,) if args.ndim else (2, 3, 4)
    report = run_verification(ndims, trials=args.trials, seed=args.seed)
    print(report.text(), file=out)
    lines = report.summary_lines()
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        print("\n".join(lines), file=out)
    return 0 if report.status == "PASS" else 1


def cmd_convergence(args, out):
    from .study import StudyConfig, StudyError, convergence_study, csv_text, robustness_study
    try:
        cfg = StudyConfig(args.method, args.levels, args.material, args.postprocess, args.out, args.case)
    except ValueError as exc:
        print(f"alfeld-elast: error: {exc}", file=sys.stderr)
        return 2
    try:
        report = convergence_study(cfg, log=lambda m: print(m, file=sys.stderr))
    except StudyError as exc:
        print(f"study aborted: {exc}", file=sys.stderr)
        if exc.report is not None:
            print(csv_text(exc.report), file=out, end="")
        return 1
    print(csv_text(report), file=out, end="")
    bad = [r["n"] for r in report.rows if r.get("cea_ok") is False]
    if bad:
        print(f"Cea-type inequality violated at n = {bad}", file=sys.stderr)
    code = 1 if bad else 0
    if args.robustness:
        if args.method not in ("jkm", "p0", "reduced"):
            print("robustness sweep is defined for jkm, p0 and reduced", file=sys.stderr)
            return 2
        E = 1.0
        res = robustness_study(args.method, args.levels, ROBUST_NUS, E=E)
        print("nu,n,err_sigma_L2,err_sigma_A,ratio_L2", file=out)
        for r in res["rows"]:
            ratio = res["ratio"][r["nu"], r["n"]]
            print(f"{r['nu']},{r['n']},{r['err_sigma_L2']:.10e},{r['err_sigma_A']:.10e},{ratio:.6f}", file=out)
    return code


def cmd_solve(args, out):
    from .mesh import MeshError, alfeld_split, generate_cube_mesh, read_mesh
    from .methods import run_method
    from .postprocess import postprocess_displacement
    from .study import error_norms, export_vtk
    try:
        if args.mesh:
            with open(args.mesh) as fh:
                mesh = read_mesh(fh.read())
        else:
            mesh = generate_cube_mesh(args.cube)
        cx = alfeld_split(mesh)
    except (OSError, MeshError) as exc:
        print(f"alfeld-elast: error: {exc}", file=sys.stderr)
        return 1
    case = manufactured_case(args.material, args.case)
    sol = run_method(args.method, cx, args.material, case.f)
    pp = None
    if args.postprocess:
        pp = postprocess_displacement(sol, allow_p0=True)
    print(f"method {args.method}: {sol.diagnostics['size']} unknowns, "
          f"relative residual {sol.diagnostics['residual']:.3e}", file=out)
    row = error_norms(sol, case, pp)
    for k in ("h", "err_sigma_A", "err_sigma_L2", "err_u_L2", "err_Pu_L2", "err_ustar_L2", "err_Pi_sigma_A"):
        if row.get(k) is not None:
            print(f"  {k} = {row[k]:.6e}", file=out)
    if args.vtk:
        export_vtk(sol, args.vtk)
        print(f"wrote {args.vtk}", file=out)
    return 0


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    with threadpool_limits(limits=_threads(args)):
        try:
            return {"verify": cmd_verify, "convergence": cmd_convergence, "solve": cmd_solve}[args.command](args, out)
        except (ArithmeticError, RuntimeError, ValueError, MaterialError) as exc:
            print(f"alfeld-elast: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1


if __name__ == "__main__":
    sys.exit(main())
