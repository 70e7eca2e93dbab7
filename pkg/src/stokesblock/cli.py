"""Command-line front end.

Exit status: 0 success, 1 usage error, 2 computation error, 3 a verdict
or certificate failed.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .blockop import (FluidParams, assemble_shifted, assemble_stokes,
                      classified_extremes, full_spectrum, inertia_counts,
                      operator_metadata, reynolds_number, spectrum_csv)
from .dimensional import (ScenarioScales, diagram_svg, lattice_certificate,
                          stability_diagram)
from .errors import StokesBlockError, ValidationError
from .grid import (Rectangle, assemble_operators, build_grid,
                   continuum_lambda1, dirichlet_lambda1)
from .qnr import (QnrBudget, cloud_csv, qnr_certificate, qnr_envelope,
                  random_saddle_form, stokes_form)
from .report import (SWEEP_AXES, ScenarioConfig, _clean, report_json,
                     run_scenario, run_sweep, sweep_json, trend_csv)
from .subspace import angle_sweep, angle_sweep_csv, operator_angle_norm

EXIT_OK, EXIT_USAGE, EXIT_COMPUTATION, EXIT_VERDICT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _dims(text):
    try:
        dp, dm = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers like 5,4, got {text!r}")
    if dp < 1 or dm < 1:
        raise argparse.ArgumentTypeError("dimensions must be positive")
    return dp, dm


def _scenario_flags(p, with_n=True, with_tau=False, with_mu=False):
    p.add_argument("--nu", type=float, default=1.0, help="viscosity")
    p.add_argument("--v-star", type=float, default=1.0, help="velocity scale v*")
    p.add_argument("--side-a", type=float, default=1.0, help="rectangle side along x")
    p.add_argument("--side-b", type=float, default=1.0, help="rectangle side along y")
    if with_n:
        p.add_argument("--n", type=int, default=16, help="interior nodes per direction")
    if with_tau:
        p.add_argument("--tau", type=float, default=1.0, help="time scale")
    if with_mu:
        p.add_argument("--mu", type=float, default=None,
                       help="shift mu for the operator S - mu J (default: none; "
                            "stability-report uses nu*lambda1_h/2)")
    p.add_argument("--seed", type=int, default=0, help="random seed")


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="stokesblock", description=__doc__.splitlines()[0],
                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", help="full spectrum of S (or S - mu J)", formatter_class=fmt)
    _scenario_flags(p, with_mu=True)
    p.add_argument("--out", help="CSV file for index,eigenvalue,residual")
    p.add_argument("--json", dest="json_out", help="JSON file for operator metadata")

    p = sub.add_parser("angle", help="operator angle between E_S((0,inf)) and H_plus",
                       formatter_class=fmt)
    _scenario_flags(p)
    p.add_argument("--re-values", type=_float_list, default=None,
                   help="comma-separated Re*_h values for a sweep at fixed nu")
    p.add_argument("--out", help="JSON (single run) or CSV (sweep) output")

    p = sub.add_parser("qnr", help="quadratic numerical range certificate", formatter_class=fmt)
    _scenario_flags(p)
    p.add_argument("--random-forms", type=int, default=0,
                   help="number of random saddle forms (0: use the Stokes form)")
    p.add_argument("--dims", type=_dims, default=(5, 4), help="d_plus,d_minus for random forms")
    p.add_argument("--complex", action="store_true", help="complex coupling for random forms")
    p.add_argument("--samples", type=int, default=200, help="random QNR samples per form")
    p.add_argument("--witnesses", action="store_true", help="include witness vectors")
    p.add_argument("--out", help="JSON certificate output")
    p.add_argument("--cloud", help="CSV sample cloud of the first form")

    p = sub.add_parser("stability-report", help="full scenario report", formatter_class=fmt)
    _scenario_flags(p, with_tau=True, with_mu=True)
    p.add_argument("--out", help="JSON report output")

    p = sub.add_parser("sweep", help="scenario sweep over one parameter", formatter_class=fmt)
    _scenario_flags(p, with_tau=True)
    p.add_argument("--axis", choices=SWEEP_AXES, default="nu", help="swept parameter")
    p.add_argument("--values", type=_float_list, default=[1.0, 2.0, 4.0, 8.0],
                   help="comma-separated values")
    p.add_argument("--out", help="CSV trend table")
    p.add_argument("--json", dest="json_out", help="JSON with all reports")

    p = sub.add_parser("diagram", help="stability diagram geometry", formatter_class=fmt)
    _scenario_flags(p, with_n=False, with_tau=True)
    p.add_argument("--theta-norm", type=float, default=None, help="operator angle to mark")
    p.add_argument("--out", help="JSON geometry output")
    p.add_argument("--svg", help="SVG rendering output")

    p = sub.add_parser("lattice-check", help="exponent lattice certificate", formatter_class=fmt)
    p.add_argument("--window", type=int, default=10, help="check |m|, |n| <= window")
    p.add_argument("--out", help="JSON output")
    return parser


def _check_writable(*paths):
    for path in paths:
        if path is None:
            continue
        folder = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(folder) or not os.access(folder, os.W_OK):
            raise UsageError(f"cannot write to {path!r}")
        if os.path.exists(path) and not os.access(path, os.W_OK):
            raise UsageError(f"cannot write to {path!r}")


def _write_json(obj, path):
    text = json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _setup(args):
    params = FluidParams(args.nu, args.v_star)
    rect = Rectangle(args.side_a, args.side_b)
    if args.n < 2:
        raise ValidationError(f"n must be >= 2, got {args.n}")
    ops = assemble_operators(build_grid(rect, args.n, args.n))
    return params, ops


def cmd_spectrum(args):
    _check_writable(args.out, args.json_out)
    params, ops = _setup(args)
    op = assemble_stokes(ops, params) if args.mu is None else assemble_shifted(ops, params, args.mu)
    spec = full_spectrum(op)
    print(f"dim {op.dim}  counts (+,0,-) {spec.counts}  residual {spec.residual_norm:.3e}")
    if args.mu is None:
        inertia_counts(spec)
        lam1_s, bottom = classified_extremes(spec)
        print(f"lambda1_S {lam1_s:.10g}  bottom {bottom:.10g}")
    else:
        print(f"min eig {spec.bottom:.10g}")
    if args.out:
        spectrum_csv(spec, args.out)
    if args.json_out:
        meta = operator_metadata(op, ops.grid)
        meta.update({"counts": list(spec.counts), "residual_norm": spec.residual_norm,
                     "zero_threshold": spec.zero_threshold})
        _write_json(meta, args.json_out)
    return EXIT_OK


def cmd_angle(args):
    _check_writable(args.out)
    params, ops = _setup(args)
    lam1_h = dirichlet_lambda1(ops)
    if args.re_values:
        rows = angle_sweep(ops, params.nu, args.re_values, lam1_h)
        bad = 0
        for row in rows:
            ok = row["margin"] >= -1e-6
            bad += not ok
            print(f"Re*_h {row['re_star']:.4f}  theta {row['theta_norm']:.6f}  "
                  f"tan2theta {row['tan2theta']:.6f}  margin {row['margin']:.3e}  "
                  f"{'pass' if ok else 'FAIL'}")
        if args.out:
            angle_sweep_csv(rows, args.out)
        return EXIT_VERDICT if bad else EXIT_OK
    spec = full_spectrum(assemble_stokes(ops, params))
    angle = operator_angle_norm(spec, ops.grid.split)
    re = reynolds_number(params, lam1_h)
    theta = angle.theta_norm
    tan2 = math.tan(2 * theta)
    print(f"theta_norm {theta:.10g}  tan2theta {tan2:.10g}  Re*_h {re:.10g}  "
          f"0.5*arctan(Re*_h) {0.5 * math.atan(re):.10g}")
    if args.out:
        _write_json({"theta_norm": theta, "tan2theta": tan2, "re_star_h": re,
                     "p_minus_q_norm": angle.p_minus_q_norm,
                     "principal_angles": angle.principal_angles.tolist()}, args.out)
    return EXIT_OK if tan2 <= re + 1e-6 else EXIT_VERDICT


def cmd_qnr(args):
    _check_writable(args.out, args.cloud)
    if args.samples < 1:
        raise ValidationError("--samples must be positive")
    if args.random_forms < 0:
        raise ValidationError("--random-forms must be non-negative")
    certs = []
    first_form = None
    if args.random_forms:
        rng = np.random.default_rng(args.seed)
        for i in range(args.random_forms):
            form = random_saddle_form(rng, *args.dims, complex_coupling=args.complex)
            first_form = first_form or form
            certs.append(qnr_certificate(form, QnrBudget(args.samples, args.seed + i),
                                              args.witnesses))
    else:
        params, ops = _setup(args)
        first_form = stokes_form(ops, params)
        certs.append(qnr_certificate(first_form, QnrBudget(args.samples, args.seed),
                                          args.witnesses))
    items = sorted(certs[0]["items"])
    for key in items:
        n_ok = sum(c["items"][key]["pass"] for c in certs)
        print(f"item {key:>3}: {n_ok}/{len(certs)} pass")
    n_all = sum(c["all_pass"] for c in certs)
    print(f"forms with every item passing: {n_all}/{len(certs)}")
    if args.out:
        _write_json({"seed": args.seed, "dims": list(args.dims) if args.random_forms else None,
                     "n_forms": len(certs), "all_pass": n_all == len(certs),
                     "certificates": certs}, args.out)
    if args.cloud:
        cloud_csv(qnr_envelope(first_form, QnrBudget(args.samples, args.seed)), args.cloud)
    return EXIT_OK if n_all == len(certs) else EXIT_VERDICT


def _config(args):
    return ScenarioConfig(side_a=args.side_a, side_b=args.side_b, n=args.n, nu=args.nu,
                          v_star=args.v_star, tau=args.tau, mu=getattr(args, "mu", None),
                          seed=args.seed)


def cmd_stability_report(args):
    _check_writable(args.out)
    rep = run_scenario(_config(args))
    for v in rep.verdicts:
        print(f"{v.status:>4}  {v.name:<32} margin {v.margin:+.3e}")
    print(f"Re*_h {rep.spectral['re_star_h']:.6f}  passed: {rep.passed}")
    if args.out:
        report_json(rep, args.out)
    return EXIT_OK if rep.passed else EXIT_VERDICT


def cmd_sweep(args):
    _check_writable(args.out, args.json_out)
    if not args.values:
        raise ValidationError("--values must not be empty")
    sweep = run_sweep(args.axis, args.values, _config(args))
    for row in sweep.trends:
        print(f"{args.axis}={row['value']:<8g} Re*_h {row['re_star_h']:.4f}  "
              f"bottom {row['bottom']:.6g}  theta {row['theta_norm']:.6f}  fails {row['n_fail']}")
    for key, val in sweep.summary.items():
        print(f"{key}: {val}")
    if args.out:
        trend_csv(sweep, args.out)
    if args.json_out:
        sweep_json(sweep, args.json_out)
    return EXIT_OK if sweep.summary["all_passed"] else EXIT_VERDICT


def cmd_diagram(args):
    _check_writable(args.out, args.svg)
    rect = Rectangle(args.side_a, args.side_b)
    scales = ScenarioScales(args.nu, args.v_star, continuum_lambda1(rect), args.tau)
    d = stability_diagram(scales, args.theta_norm)
    print(f"endpoints ({d.left:.6g}, {d.right:.6g})  apex {d.apex:.6g}  "
          f"2theta {d.two_theta:.6g}  Re* {d.numbers.re_star:.6g}")
    print(f"geometric mean error {d.geometric_mean_error:.2e}  "
          f"tan identity error {d.tan_identity_error:.2e}")
    if args.out:
        _write_json(d.to_dict(), args.out)
    if args.svg:
        diagram_svg(d, args.svg)
    return EXIT_OK if d.identities_hold else EXIT_VERDICT


def cmd_lattice_check(args):
    _check_writable(args.out)
    if args.window < 0:
        raise ValidationError("--window must be non-negative")
    cert = lattice_certificate(args.window)
    print(f"r.s = {cert['r_dot_s']}  c = {cert['c']}  d = {cert['d']}  c.d = {cert['c_dot_d']}")
    print(f"parity rule checked on {cert['pairs_checked']} pairs, "
          f"{len(cert['parity_mismatches'])} mismatches; pass: {cert['pass']}")
    if args.out:
        _write_json(cert, args.out)
    return EXIT_OK if cert["pass"] else EXIT_VERDICT


COMMANDS = {
    "spectrum": cmd_spectrum, "angle": cmd_angle, "qnr": cmd_qnr,
    "stability-report": cmd_stability_report, "sweep": cmd_sweep,
    "diagram": cmd_diagram, "lattice-check": cmd_lattice_check,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValidationError) as exc:
        print(f"stokesblock: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StokesBlockError, np.linalg.LinAlgError) as exc:
        print(f"stokesblock: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTATION
    except OSError as exc:
        print(f"stokesblock: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
