"""Scenario reports and parameter sweeps.

A scenario is one rectangle, one grid resolution and one set of fluid
parameters. `run_scenario` evaluates every module on it and collects the
resulting inequalities as verdicts. Each verdict stores ``lhs``, ``rhs``
and ``tolerance`` and passes when ``lhs <= rhs + tolerance``; a verdict
whose hypothesis does not hold gets status ``"n/a"`` instead.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .blockop import (FluidParams, _emit, assemble_shifted, assemble_stokes,
                      classified_extremes, full_spectrum, inertia_counts,
                      kernel_residual, reynolds_number, trial_bracket)
from .dimensional import (ScenarioScales, dimensionless_numbers,
                          lattice_certificate, stability_diagram)
from .errors import ScenarioError, StokesBlockError, SweepAborted, ValidationError
from .grid import (Rectangle, assemble_operators, build_grid,
                   continuum_lambda1, dirichlet_lambda1)
from .qnr import QnrBudget, qnr_envelope, stokes_form
from .subspace import (birman_schwinger_check, gamma_estimate,
                       operator_angle_norm, subordination)
from .symbol import (SymbolMatrix, decay_exponent, essential_spectra,
                     symbol_comparison, symbol_eigenvalues)

__all__ = [
    "ScenarioConfig", "Verdict", "StabilityReport", "SweepResult",
    "run_scenario", "run_sweep", "report_json", "trend_csv", "sweep_json",
    "recompute_status",
    "SCHEMA_NAME", "SCHEMA_VERSION", "SWEEP_AXES",
]

SCHEMA_NAME = "stokesblock.stability-report"
SCHEMA_VERSION = 1
SWEEP_AXES = ("nu", "v_star", "n", "re_star", "tau")


@dataclass(frozen=True)
class ScenarioConfig:
    side_a: float = 1.0
    side_b: float = 1.0
    n: int = 16
    nu: float = 1.0
    v_star: float = 1.0
    tau: float = 1.0
    mu: float = None
    seed: int = 0
    qnr_samples: int = 32
    birman_points: int = 21

    def __post_init__(self):
        Rectangle(self.side_a, self.side_b)
        FluidParams(self.nu, self.v_star)
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool) or self.n < 2:
            raise ValidationError(f"n must be an integer >= 2, got {self.n!r}")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValidationError(f"tau must be positive, got {self.tau!r}")
        if self.mu is not None and not (math.isfinite(self.mu) and self.mu > 0):
            raise ValidationError(f"mu must be positive, got {self.mu!r}")
        if self.qnr_samples < 1 or self.birman_points < 1:
            raise ValidationError("sample counts must be positive")

    def argv(self):
        """Command line reproducing this scenario."""
        args = ["stability-report", "--side-a", repr(self.side_a), "--side-b", repr(self.side_b),
                "--n", str(self.n), "--nu", repr(self.nu), "--v-star", repr(self.v_star),
                "--tau", repr(self.tau), "--seed", str(self.seed)]
        if self.mu is not None:
            args += ["--mu", repr(self.mu)]
        return args


@dataclass(frozen=True)
class Verdict:
    name: str
    lhs: float
    rhs: float
    tolerance: float
    status: str
    note: str = ""

    @property
    def margin(self):
        return self.rhs + self.tolerance - self.lhs

    @property
    def passed(self):
        return self.status == "pass"

    def to_dict(self):
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "tolerance": self.tolerance, "margin": self.margin,
                "status": self.status, "note": self.note}


def _verdict(name, lhs, rhs, tol, applicable=True, note=""):
    lhs, rhs, tol = float(lhs), float(rhs), float(tol)
    if not applicable:
        status = "n/a"
    else:
        status = "pass" if lhs <= rhs + tol else "fail"
    return Verdict(name, lhs, rhs, tol, status, note)


def recompute_status(v):
    """Status re-derived from a verdict dict (for consumers of the JSON)."""
    if v["status"] == "n/a":
        return "n/a"
    return "pass" if v["lhs"] <= v["rhs"] + v["tolerance"] else "fail"


@dataclass
class StabilityReport:
    scenario: dict
    spectral: dict
    angles: dict
    shifted: dict
    symbols: dict
    dimensionless: dict
    verdicts: list = field(default_factory=list)
    decoupled: bool = False

    @property
    def failed(self):
        return [v for v in self.verdicts if v.status == "fail"]

    @property
    def passed(self):
        return not self.failed

    def verdict(self, name):
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_dict(self):
        return {
            "schema": {"name": SCHEMA_NAME, "version": SCHEMA_VERSION,
                       "package_version": __version__},
            "scenario": self.scenario,
            "decoupled": self.decoupled,
            "spectral": self.spectral,
            "angles": self.angles,
            "shifted": self.shifted,
            "symbols": self.symbols,
            "dimensionless": self.dimensionless,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "summary": {
                "n_pass": sum(v.status == "pass" for v in self.verdicts),
                "n_fail": sum(v.status == "fail" for v in self.verdicts),
                "n_na": sum(v.status == "n/a" for v in self.verdicts),
                "passed": self.passed,
            },
        }


def _clean(obj):
    # JSON-safe copy: numpy scalars become Python floats, non-finite become strings
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def report_json(report, target=None):
    """Deterministic JSON (sorted keys, fixed indentation, trailing newline)."""
    text = json.dumps(_clean(report.to_dict()), indent=2, sort_keys=True) + "\n"
    return _emit(text, target)


def run_scenario(config=ScenarioConfig()):
    '''Evaluate every module on one scenario and collect the verdicts.'''
    try:
        return _run_scenario(config)
    except StokesBlockError as exc:
        raise ScenarioError(f"scenario {asdict(config)} failed: {exc}", config, exc) from exc


def _run_scenario(cfg):
    rect = Rectangle(cfg.side_a, cfg.side_b)
    grid = build_grid(rect, cfg.n, cfg.n)
    ops = assemble_operators(grid)
    params = FluidParams(cfg.nu, cfg.v_star)
    nu, v = params.nu, params.v_star
    decoupled = v == 0.0

    lam1_h = dirichlet_lambda1(ops)
    lam1_c = continuum_lambda1(rect)
    re_h = reynolds_number(params, lam1_h)
    re_c = reynolds_number(params, lam1_c)

    op = assemble_stokes(ops, params)
    spec = full_spectrum(op)
    counts = inertia_counts(spec)
    lam1_s, bottom = classified_extremes(spec)
    s_norm = spec.norm
    bracket = trial_bracket(ops, params, lam1_h)
    k_res = kernel_residual(op)
    sub_neg, sub_pos = subordination(spec)

    angle = operator_angle_norm(spec, grid.split)
    theta = angle.theta_norm
    tan2 = math.tan(2 * theta) if 2 * theta < math.pi / 2 else math.inf
    theta_bound = 0.5 * math.atan(re_h)

    mu_opt = 0.5 * nu * lam1_h
    mu = cfg.mu if cfg.mu is not None else mu_opt
    t_op = assemble_shifted(ops, params, mu)
    t_min = float(np.linalg.eigvalsh(t_op.matrix)[0])
    t_norm = t_op.norm
    if mu != mu_opt:
        t_opt = assemble_shifted(ops, params, mu_opt)
        t_opt_min = float(np.linalg.eigvalsh(t_opt.matrix)[0])
        t_opt_norm = t_opt.norm
    else:
        t_opt_min, t_opt_norm = t_min, t_norm
    gamma = gamma_estimate(ops, params, mu_opt, lam1_h)
    bs = birman_schwinger_check(ops, params, cfg.birman_points, lam1_h, s_norm)

    ess_s_h, ess_t_h, slab_h = essential_spectra(params, lam1_h)
    ess_s_c, ess_t_c, slab_c = essential_spectra(params, lam1_c)
    comparison = symbol_comparison(ops, params, spec, lam1_h)
    t_sym = symbol_eigenvalues(SymbolMatrix(nu, v, math.sqrt(lam1_h), True, lam1_h))
    alpha_h = decay_exponent(nu, lam1_h, re_h)
    alpha_c = decay_exponent(nu, lam1_c, re_c)
    decay_ratio = alpha_h / (2.0 * t_opt_min) if (re_h < 1 and t_opt_min > 0) else None

    env = qnr_envelope(stokes_form(ops, params), QnrBudget(cfg.qnr_samples, cfg.seed))

    scales = ScenarioScales(nu, v, lam1_c, cfg.tau)
    scales_h = ScenarioScales(nu, v, lam1_h, cfg.tau)
    nums = dimensionless_numbers(scales)
    nums_h = dimensionless_numbers(scales_h)
    diagram = stability_diagram(scales_h, theta)
    diagram_c = stability_diagram(scales)
    lattice = lattice_certificate()

    ts = 1e-9 * s_norm
    verdicts = [
        _verdict("lambda1_S_lower_bound", nu * lam1_h, lam1_s, ts),
        _verdict("trial_bracket_upper", lam1_s, min(bracket["upper"].values()), ts),
        _verdict("bottom_lower_bound", -v * v / nu, bottom, ts),
        _verdict("bottom_vs_reynolds", abs(bottom), 0.25 * re_h ** 2 * lam1_s, ts),
        _verdict("inertia_pattern", 0, 0, 0, note=f"counts {list(counts)}"),
        _verdict("kernel_residual", k_res, 0.0, 1e-10 * max(s_norm, 1.0)),
        _verdict("tan2theta_bound", tan2, re_h, 1e-6),
        _verdict("theta_symbol_bound", theta, theta_bound, 1e-6),
        _verdict("sin_theta_identity", abs(math.sin(theta) - angle.p_minus_q_norm), 0.0, 1e-8),
        _verdict("stability_law_i", abs(bottom), 0.25 * lam1_s, 0.0, re_h < 1,
                 "needs Re*_h < 1"),
        _verdict("stability_law_ii", theta, math.pi / 8, 0.0, re_h < 1, "needs Re*_h < 1"),
        _verdict("stability_law_iii", 0.5 * nu * lam1_h * (1 - re_h), t_opt_min,
                 1e-8 * t_opt_norm, re_h < 1, "needs Re*_h < 1"),
        _verdict("subordination", sub_neg, sub_pos, 0.0, re_h < 2, "needs Re*_h < 2"),
        _verdict("birman_schwinger_consistency", bs.n_disagreements, 0, 0),
        _verdict("gamma_envelope", gamma.exact, gamma.envelope, 1e-10),
        _verdict("gamma_envelope_at_mu_opt", abs(gamma.envelope - re_h), 0.0,
                 1e-12 * max(1.0, re_h)),
        _verdict("slab_bound", slab_h, t_opt_min, 1e-8 * t_opt_norm),
        _verdict("slab_equals_inf_ess_T", abs(slab_h - ess_t_h[0]), 0.0,
                 1e-12 * max(1.0, abs(ess_t_h[0])), re_h >= 2, "needs Re*_h >= 2"),
        _verdict("decay_identity", abs(alpha_h - 2 * t_sym[0]), 0.0, 1e-12),
        _verdict("decay_lower_bound", alpha_h, 2 * t_opt_min, 1e-8 * t_opt_norm,
                 re_h < 1, "needs Re*_h < 1"),
        _verdict("symbol_lambda_plus_agreement", abs(comparison["lambda1_ratio"] - 1), 0.05, 0.0,
                 re_h <= 0.5, "needs Re*_h <= 0.5"),
        _verdict("qnr_inf_equals_bottom", abs(env.inf_estimate - bottom), 0.0, 1e-8 * s_norm),
        _verdict("qnr_sup_equals_top", abs(env.sup_estimate - spec.eigenvalues[-1]), 0.0,
                 1e-8 * s_norm),
        _verdict("product_identity", abs(nums.product - cfg.tau * v * v / nu), 0.0,
                 1e-12 * max(1.0, nums.product)),
        _verdict("ratio_identity", abs(nums.ratio - cfg.tau * nu * lam1_c), 0.0,
                 1e-12 * max(1.0, nums.ratio)),
        _verdict("geometric_mean_identity", diagram.geometric_mean_error, 0.0, 1e-12),
        _verdict("diagram_tan_identity", diagram.tan_identity_error, 0.0, 1e-12),
        _verdict("lattice_certificate", len(lattice["parity_mismatches"]) + (not lattice["pass"]),
                 0, 0),
    ]

    scenario = asdict(cfg)
    scenario["grid"] = grid.to_dict()
    scenario["mu_used"] = mu
    scenario["argv"] = cfg.argv()
    return StabilityReport(
        scenario=scenario,
        spectral={
            "lambda1_h": lam1_h, "lambda1_continuum": lam1_c,
            "lambda1_S": lam1_s, "bottom": bottom, "top": float(spec.eigenvalues[-1]),
            "inertia": list(counts), "residual_norm": spec.residual_norm,
            "zero_threshold": spec.zero_threshold, "norm_S": s_norm,
            "kernel_residual": k_res, "trial_bracket": bracket,
            "re_star_h": re_h, "re_star_continuum": re_c,
            "subordination": {"max_abs_nonpositive": sub_neg, "min_positive": sub_pos},
            "qnr": {"inf_estimate": env.inf_estimate, "sup_estimate": env.sup_estimate,
                    "samples": cfg.qnr_samples, "seed": cfg.seed},
        },
        angles={
            "theta_norm": theta, "tan2theta": tan2, "bound_re_star_h": re_h,
            "theta_symbol_bound": theta_bound, "p_minus_q_norm": angle.p_minus_q_norm,
            "n_angles": int(angle.principal_angles.size),
        },
        shifted={
            "mu": mu, "mu_opt": mu_opt, "min_eig_T": t_min, "norm_T": t_norm,
            "min_eig_T_opt": t_opt_min, "norm_T_opt": t_opt_norm,
            "slab_bound_h": slab_h, "slab_bound_continuum": slab_c,
            "gamma_mu_opt": {"exact": gamma.exact, "envelope": gamma.envelope},
            "birman_schwinger": bs.to_dict(),
        },
        symbols={
            "k_h": math.sqrt(lam1_h),
            "s_eigenvalues": [comparison["lambda_minus"], comparison["lambda_plus"]],
            "t_eigenvalues": list(t_sym),
            "bottom_ratio": comparison["bottom_ratio"],
            "lambda1_ratio": comparison["lambda1_ratio"],
            "ratio_by_continuity": comparison["ratio_by_continuity"],
            "alpha_h": alpha_h, "alpha_continuum": alpha_c,
            "alpha_unstable": alpha_h < 0, "decay_ratio": decay_ratio,
            "ess_S_h": list(ess_s_h), "ess_T_h": list(ess_t_h),
            "ess_S_continuum": list(ess_s_c), "ess_T_continuum": list(ess_t_c),
        },
        dimensionless={
            "continuum": nums.to_dict(), "discrete": nums_h.to_dict(),
            "diagram": diagram.to_dict(), "diagram_continuum": diagram_c.to_dict(),
            "lattice": {"pass": lattice["pass"], "pairs_checked": lattice["pairs_checked"]},
        },
        verdicts=verdicts,
        decoupled=decoupled,
    )


@dataclass
class SweepResult:
    axis: str
    values: list
    reports: list
    trends: list
    summary: dict


_TREND_COLUMNS = [
    "value", "n", "nu", "v_star", "re_star_h", "lambda1_h", "lambda1_h_rel_error",
    "lambda1_S", "bottom", "bottom_scaled", "reynolds_bound_ratio", "theta_norm", "tan2theta",
    "min_eig_T", "decay_ratio", "n_fail",
]


def _trend_row(value, rep):
    sp, sc = rep.spectral, rep.scenario
    v, nu = sc["v_star"], sc["nu"]
    re = sp["re_star_h"]
    quarter = 0.25 * re * re * sp["lambda1_S"]
    return {
        "value": float(value), "n": sc["n"], "nu": nu, "v_star": v, "re_star_h": re,
        "lambda1_h": sp["lambda1_h"],
        "lambda1_h_rel_error": abs(sp["lambda1_h"] - sp["lambda1_continuum"]) / sp["lambda1_continuum"],
        "lambda1_S": sp["lambda1_S"], "bottom": sp["bottom"],
        "bottom_scaled": abs(sp["bottom"]) * nu / (v * v) if v > 0 else None,
        "reynolds_bound_ratio": abs(sp["bottom"]) / quarter if quarter > 0 else None,
        "theta_norm": rep.angles["theta_norm"], "tan2theta": rep.angles["tan2theta"],
        "min_eig_T": rep.shifted["min_eig_T_opt"],
        "decay_ratio": rep.symbols["decay_ratio"],
        "n_fail": len(rep.failed),
    }


def _monotonicity(xs):
    xs = [x for x in xs if x is not None]
    if len(xs) < 2:
        return "n/a"
    d = np.diff(xs)
    if np.all(d > 0):
        return "increasing"
    if np.all(d < 0):
        return "decreasing"
    if np.all(d == 0):
        return "constant"
    return "non-monotone"


def _observed_order(rows):
    # convergence order of lambda1_h in h = side / (n + 1)
    out = []
    for a, b in zip(rows, rows[1:]):
        ea, eb = a["lambda1_h_rel_error"], b["lambda1_h_rel_error"]
        if ea > 0 and eb > 0:
            out.append(math.log(ea / eb) / math.log((b["n"] + 1) / (a["n"] + 1)))
    return out


def run_sweep(axis, values, base=ScenarioConfig()):
    '''Run a scenario per value of one parameter.

    ``axis`` is one of ``nu, v_star, n, re_star, tau``. For ``re_star`` the
    velocity is set to ``Re nu sqrt(lambda1_h) / 2`` on the base grid. A
    failing scenario raises `SweepAborted` carrying the finished reports.
    '''
    if axis not in SWEEP_AXES:
        raise ValidationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ValidationError("sweep needs at least one value")
    lam1_h = None
    if axis == "re_star":
        grid = build_grid(Rectangle(base.side_a, base.side_b), base.n, base.n)
        lam1_h = dirichlet_lambda1(assemble_operators(grid))
    reports = []
    for val in values:
        try:
            if axis == "re_star":
                cfg = replace(base, v_star=float(val) * base.nu * math.sqrt(lam1_h) / 2.0)
            elif axis == "n":
                cfg = replace(base, n=int(val))
            else:
                cfg = replace(base, **{axis: float(val)})
            reports.append(run_scenario(cfg))
        except StokesBlockError as exc:
            raise SweepAborted(f"sweep over {axis} stopped at {val}: {exc}",
                               reports, val, exc) from exc
    trends = [_trend_row(val, rep) for val, rep in zip(values, reports)]
    summary = {col: _monotonicity([row[col] for row in trends])
               for col in ("bottom_scaled", "reynolds_bound_ratio", "lambda1_h_rel_error",
                           "theta_norm", "decay_ratio", "min_eig_T")}
    summary["all_passed"] = all(rep.passed for rep in reports)
    if axis == "n":
        summary["lambda1_h_observed_order"] = _observed_order(trends)
    return SweepResult(axis, values, reports, trends, summary)


def trend_csv(sweep, target=None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_TREND_COLUMNS)
    for row in sweep.trends:
        writer.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                         for c in _TREND_COLUMNS])
    return _emit(buf.getvalue(), target)


def sweep_json(sweep, target=None):
    obj = {
        "schema": {"name": SCHEMA_NAME + ".sweep", "version": SCHEMA_VERSION,
                   "package_version": __version__},
        "axis": sweep.axis, "values": sweep.values,
        "trends": sweep.trends, "summary": sweep.summary,
        "reports": [rep.to_dict() for rep in sweep.reports],
    }
    text = json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
    return _emit(text, target)
