"""Command-line front end: solves, sweeps, verifications and gluing
experiments, emitting CSV/JSON artifacts.

Exit codes: 0 success, 2 validation failure (bad flags/config), 3 numerical
failure (library errors, reported by name).  Output files are written
atomically; identical configurations produce byte-identical CSV.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import curvature_ops as co
from . import gluing_lab as gl
from . import model_comparison as mc
from . import tensor_lab as tl
from .errors import KeconeError
from .ke_profile import ModelParams, fit_decay_rate, solve_profile, verify_claims

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------


def _resolve_output(path: str | None) -> str | None:
    if path is None:
        return None
    if os.path.dirname(path):
        return path
    outdir = os.environ.get("KECONE_OUTDIR", "")
    return os.path.join(outdir, path) if outdir else path


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".kecone-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, path: str | None, gnuplot_cols=None) -> None:
    path = _resolve_output(path)
    if path is None:
        sys.stdout.write(text)
        return
    _write_atomic(path, text)
    if gnuplot_cols:
        gp = [f"set datafile separator ','",
              f"set key autotitle columnhead",
              f"set logscale y"]
        plots = ", ".join(f"'{os.path.basename(path)}' using 1:{k} with lines"
                          for k in gnuplot_cols)
        gp.append(f"plot {plots}")
        _write_atomic(path + ".gp", "\n".join(gp) + "\n")


def _render(obj_csv_writer, obj_json_dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(obj_json_dict(), indent=1) + "\n"
    buf = io.StringIO()
    obj_csv_writer(buf)
    return buf.getvalue()


def _load_config(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_solve(args) -> int:
    prof = solve_profile(ModelParams(args.n, args.c), args.t_max, args.tol)
    text = _render(prof.to_csv, prof.to_json_dict, args.format)
    _emit(text, args.output, gnuplot_cols=(2,) if args.gnuplot else None)
    return 0


def _cmd_curvature(args) -> int:
    prof = solve_profile(ModelParams(args.n, args.c), args.t_max, args.tol)
    cprof = co.curvature_profile(prof)

    def json_dict():
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "curvature_profile",
            "params": {"n": args.n, "c": args.c},
            "t": cprof.t.tolist(), "Ktr": cprof.K_tr.tolist(),
            "Kdisk": cprof.K_disk.tolist(), "lambda": cprof.lam.tolist(),
            "m": cprof.m.tolist(), "mu": cprof.mu_mixed.tolist(),
        }

    text = _render(cprof.to_csv, json_dict, args.format)
    _emit(text, args.output, gnuplot_cols=(2, 3) if args.gnuplot else None)
    return 0


def _parse_sweep(spec: str):
    lo, hi, count = spec.split(":")
    return np.linspace(float(lo), float(hi), int(count))


def _cmd_alphamap(args) -> int:
    rows = mc.alpha_sweep(args.n, _parse_sweep(args.sweep), args.t_max, args.tol)

    def to_csv(fh):
        fh.write("c,alpha\n")
        for c, a in rows:
            fh.write("%.17g,%.17g\n" % (c, a))

    def json_dict():
        return {"schema_version": SCHEMA_VERSION, "kind": "alpha_map",
                "n": args.n, "c": rows[:, 0].tolist(), "alpha": rows[:, 1].tolist()}

    _emit(_render(to_csv, json_dict, args.format), args.output,
          gnuplot_cols=(2,) if args.gnuplot else None)
    return 0


def _resolve_c(args) -> float:
    given_c = args.c is not None
    given_alpha = getattr(args, "alpha", None) is not None
    if given_c == given_alpha:
        raise ValueError("exactly one of --c / --alpha must be given")
    if given_c:
        return args.c
    return mc.find_c_for_alpha(args.n, args.alpha, args.t_max, args.tol)


def _cmd_compare(args) -> int:
    c = _resolve_c(args)
    prof = solve_profile(ModelParams(args.n, c), args.t_max, args.tol)
    dprof = mc.disk_profile(prof)
    alpha = mc.alpha_of_c(dprof)
    rep = mc.compare_with_ball(dprof, alpha)
    text = _render(rep.to_csv, rep.to_json_dict, args.format)
    _emit(text, args.output, gnuplot_cols=(2, 3) if args.gnuplot else None)
    return 0


def _cmd_glue(args) -> int:
    radii = [float(r) for r in args.radii.split(",")]
    rows = []
    for R in radii:
        g = gl.build_glued_profile(args.n, args.d, R, tol=args.tol)
        rep = gl.newton_resolve(g)
        rows.append((R, g.sup_defect, rep.correction_norm, rep.newton_iters))

    def to_csv(fh):
        fh.write("R,sup_defect,correction_norm,newton_iters\n")
        for r in rows:
            fh.write("%.17g,%.17g,%.17g,%d\n" % r)

    def json_dict():
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "gluing_sweep",
            "n": args.n, "d": args.d,
            "rows": [{"R": r, "sup_defect": s, "correction_norm": cn,
                      "newton_iters": it} for r, s, cn, it in rows],
        }

    _emit(_render(to_csv, json_dict, args.format), args.output,
          gnuplot_cols=(2, 3) if args.gnuplot else None)
    return 0


def _cmd_vsn(args) -> int:
    R0 = tl.constant_hsc_tensor(args.n, args.hsc)
    verdict = tl.vsn_test(tl.hermitian_from_riemann(R0), args.trials, args.seed)
    doc = {"schema_version": SCHEMA_VERSION, "kind": "vsn_verdict",
           "n": args.n, "hsc": args.hsc, **verdict.to_json_dict()}
    _emit(json.dumps(doc, indent=1) + "\n", args.output)
    return 0


def _cmd_verify_all(args) -> int:
    n = args.n
    checks = []

    for c in (0.9, 0.95):
        prof = solve_profile(ModelParams(n, c), 20.0, 1e-10)
        rep = verify_claims(prof, 1e-3)
        checks.append((f"claims 1-4 (c={c})", rep.all_passed))
        if c == 0.9:
            series = np.column_stack([prof.t, np.abs(prof.w - 1.0)])
            fit = fit_decay_rate(series, (5.0, 15.0))
            checks.append(("claim 5 decay rate >= 0.9",
                           fit.rate >= 0.9 and fit.r_squared >= 0.99))
            cprof = co.curvature_profile(prof)
            op0 = co.assemble_point_operator(cprof, 0.0)
            res = co.extremize_sectional(op0, 1000, args.seed)
            target = -(n + 1.0) + n / c ** 2
            checks.append(("sup-K matches -(n+1)+n/c^2",
                           abs(res.max_K - target) <= 1e-6))
            eig_ok = True
            for t in np.linspace(0.0, 15.0, 11):
                op = co.assemble_point_operator(cprof, float(t))
                eig_ok &= bool(np.max(np.abs(op.ricci_eigenvalues()
                                             + 2.0 * (n + 1.0))) <= 1e-7)
            checks.append(("Einstein eigenvalues = -2(n+1)", eig_ok))

    rng = np.random.default_rng(args.seed)
    ok = True
    for _ in range(20):
        lam = rng.uniform(0.2, 2.0, n)
        xi = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        H = tl.hermitian_from_form(np.diag(lam))
        q = H.quadratic_form(xi)
        ident = (abs(np.sum(lam * np.diag(xi))) ** 2
                 + np.sum(np.outer(lam, lam) * np.abs(xi) ** 2))
        ok &= abs(-q - ident) <= 1e-10 * max(1.0, ident)
    ball = tl.vsn_test(tl.hermitian_from_riemann(tl.constant_hsc_tensor(n, -4.0)),
                       200, args.seed)
    checks.append(("VSN identity + ball tensor", ok and ball.is_vsn))

    radii = (8.0, 12.0, 16.0)
    sups = [gl.build_glued_profile(n, 2, R).sup_defect for R in radii]
    decreasing = all(a > b for a, b in zip(sups, sups[1:]))
    slope = np.polyfit(radii, np.log(sups), 1)[0]
    checks.append(("gluing defect decay", decreasing and slope < 0))

    width = max(len(name) for name, _ in checks)
    all_ok = True
    for name, passed in checks:
        print(f"{name:<{width}}  {'PASS' if passed else 'FAIL'}")
        all_ok &= passed
    return 0 if all_ok else 3


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p, with_c=False, c_default=None, with_alpha=False):
    p.add_argument("--n", type=int, default=2, help="complex dimension (>= 2)")
    if with_c:
        p.add_argument("--c", type=float, default=c_default,
                       help="initial value f(0) in (sqrt(n/(n+1)), 1]")
    if with_alpha:
        p.add_argument("--alpha", type=float, default=None,
                       help="cone parameter (alternative to --c)")
    p.add_argument("--t-max", type=float, default=20.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", default=None,
                   help="output path (default stdout; bare names resolve "
                        "against $KECONE_OUTDIR)")
    p.add_argument("--gnuplot", action="store_true",
                   help="also write a gnuplot script next to the CSV")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kecone",
        description="Invariant Kahler-Einstein cone-metric numerics: profile "
                    "solves, curvature extremization, cone-parameter map, "
                    "ball comparison and collar gluing experiments.",
    )
    parser.add_argument("--config", default=None,
                        help="key=value file; command-line flags override it")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    p = subparsers["solve"] = sub.add_parser("solve", help="solve the profile equation")
    _add_common(p, with_c=True, c_default=0.9)
    p.set_defaults(func=_cmd_solve)

    p = subparsers["curvature"] = sub.add_parser(
        "curvature", help="curvature functions of the profile")
    _add_common(p, with_c=True, c_default=0.9)
    p.set_defaults(func=_cmd_curvature)

    p = subparsers["alphamap"] = sub.add_parser(
        "alphamap", help="cone-parameter map over a c sweep")
    _add_common(p)
    p.add_argument("--sweep", default="0.85:0.999:20", help="lo:hi:count in c")
    p.set_defaults(func=_cmd_alphamap)

    p = subparsers["compare"] = sub.add_parser(
        "compare", help="comparison with the pulled-back ball metric")
    _add_common(p, with_c=True, with_alpha=True)
    p.set_defaults(func=_cmd_compare)

    p = subparsers["glue"] = sub.add_parser(
        "glue", help="collar gluing sweep over radii")
    _add_common(p)
    p.add_argument("--d", type=int, default=2, help="cone order (>= 1)")
    p.add_argument("--radii", default="8,12,16,20", help="comma-separated radii")
    p.set_defaults(func=_cmd_glue)

    p = subparsers["vsn"] = sub.add_parser(
        "vsn", help="very-strong-negativity verdict for the constant-HSC "
                    "model tensor")
    _add_common(p)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--hsc", type=float, default=-4.0)
    p.set_defaults(func=_cmd_vsn)

    p = subparsers["verify-all"] = sub.add_parser(
        "verify-all", help="run the invariant suite and print a table")
    _add_common(p)
    p.set_defaults(func=_cmd_verify_all)

    return parser, subparsers


def _coerce(subparser, key, val):
    for action in subparser._actions:
        if action.dest == key and action.type is not None:
            return action.type(val)
    return val


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    # config file provides per-command defaults; explicit flags override
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            config = _load_config(argv[idx + 1])
        except (OSError, ValueError, IndexError) as exc:
            print(f"error[config]: {exc}", file=sys.stderr)
            return 2
        known = set()
        for p in subparsers.values():
            known |= {a.dest for a in p._actions}
        bad = set(config) - known
        if bad:
            print(f"error[config]: unknown keys {sorted(bad)}", file=sys.stderr)
            return 2
        for p in subparsers.values():
            local = {k: _coerce(p, k, v) for k, v in config.items()
                     if any(a.dest == k for a in p._actions)}
            p.set_defaults(**local)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except KeconeError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error[validation]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
