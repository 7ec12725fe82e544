"""Command line: ``epflow run | converge | compare``."""
import argparse
import os
import sys

from ..errors import ConfigError, DomainMismatch, SolverError
from .analysis import COMPONENTS, N_REF, convergence_table, error_norms, format_table, \
    reference_solution
from .output import write_report, write_table
from .problems import resolve_problem
from .runner import run, run_many

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _cells(text):
    try:
        cells = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad cell list {text!r}") from None
    if not cells:
        raise argparse.ArgumentTypeError("empty cell list")
    return cells


def _keyval(text):
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), val.strip()


def build_parser():
    p = argparse.ArgumentParser(prog="epflow", description="1-D elastic-plastic moving-mesh solver")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, cells_type=int, cells_default=None):
        sp.add_argument("--problem", required=True, help="accuracy | piston | wilkins | config file")
        sp.add_argument("--cells", type=cells_type, default=cells_default)
        sp.add_argument("--t-final", type=float, default=None, dest="t_final")
        sp.add_argument("--set", type=_keyval, action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key")

    r = sub.add_parser("run", help="run one problem and write CSV output")
    common(r)
    r.add_argument("--mode", choices=("mmcc", "ccl"), default=None)
    r.add_argument("--out", default="epflow-out")
    r.add_argument("--trajectory-every", type=int, default=1)

    c = sub.add_parser("converge", help="error table against a fine CCL reference")
    common(c, _cells, [50, 100, 200, 400])
    c.add_argument("--mode", choices=("mmcc", "ccl"), default=None)
    c.add_argument("--norms", default="l1,l2")
    c.add_argument("--n-ref", type=int, default=N_REF)
    c.add_argument("--sample", choices=("center", "average"), default="center")
    c.add_argument("--out", default=None, help="directory for table CSVs")

    m = sub.add_parser("compare", help="MMCC vs CCL errors at one resolution")
    common(m)
    m.add_argument("--n-ref", type=int, default=N_REF)
    m.add_argument("--sample", choices=("center", "average"), default="center")
    return p


def _config(args, **extra):
    over = dict(args.set)
    over.update({"t_final": args.t_final, **extra})
    if isinstance(args.cells, int):
        over["cells"] = args.cells
    if getattr(args, "mode", None):
        over["mode"] = args.mode
    return resolve_problem(args.problem, **over)


def cmd_run(args):
    cfg = _config(args)
    rep = run(cfg, trajectory_every=args.trajectory_every)
    paths = write_report(rep, args.out)
    print(f"{cfg.name}: N={cfg.n_cells} mode={cfg.mode} steps={rep.steps} "
          f"t={rep.t_final:.6e} s wall={rep.wall_time:.2f} s drift={rep.max_drift():.2e}")
    for e in rep.events:
        print(f"note: {e}")
    print(f"wrote {len(paths)} files to {args.out}")
    return EXIT_OK


def cmd_converge(args):
    cfg = _config(args)
    norms = [n.strip() for n in args.norms.split(",") if n.strip()]
    for n in norms:
        if n not in ("l1", "l2"):
            raise ConfigError(f"unknown norm {n!r}")
    ref = reference_solution(cfg, args.n_ref)
    tab = convergence_table(cfg, args.cells, ref, sample=args.sample)
    for n in norms:
        print(f"{n.upper()} error, {cfg.name}, mode={cfg.mode}, reference N={args.n_ref}")
        print(format_table(tab, n))
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            write_table(tab, os.path.join(args.out, f"{cfg.name}-{n}.csv"), n)
    return EXIT_OK


def cmd_compare(args):
    cfg = _config(args)
    ref = reference_solution(cfg, args.n_ref)
    reps = run_many([cfg.replace(mode="mmcc"), cfg.replace(mode="ccl")])
    print(f"{'mode':>5} " + " ".join(f"{c:>10}" for c in COMPONENTS) + "  (L1)")
    rows = {}
    for mode, rep in zip(("mmcc", "ccl"), reps):
        if isinstance(rep, Exception):
            raise rep
        l1, _ = error_norms(rep, ref, args.sample)
        rows[mode] = l1
        print(f"{mode:>5} " + " ".join(f"{v:10.3E}" for v in l1))
    better = "yes" if rows["mmcc"][0] <= rows["ccl"][0] else "no"
    print(f"MMCC L1(rho) <= CCL L1(rho): {better}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "converge": cmd_converge, "compare": cmd_compare}[args.command]
    try:
        return handler(args)
    except (ConfigError, DomainMismatch) as exc:
        print(f"epflow: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"epflow: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
