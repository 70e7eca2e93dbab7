"""Principal-symbol analysis and closed-form stability quantities.

The symbol of the Stokes operator at wave number ``k`` is the Hermitian
matrix ``[[nu k^2, i v* k], [-i v* k, 0]]``; the shifted operator at
``mu = nu lambda1 / 2`` has ``[[nu k^2 - nu lambda1/2, i v* k],
[-i v* k, nu lambda1/2]]``. Everything here is evaluated in closed form.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .blockop import (FluidParams, _emit, assemble_shifted, assemble_stokes,
                      classified_extremes, full_spectrum, reynolds_number)
from .errors import ValidationError
from .grid import dirichlet_lambda1
from .qnr import hermitian_2x2_eigs

__all__ = [
    "SymbolMatrix", "symbol_eigenvalues", "symbol_comparison", "symbol_angle",
    "decay_exponent", "decay_exponent_relations", "essential_spectra",
    "sweep_csv",
]


def _positive(name, x):
    if not (math.isfinite(x) and x > 0):
        raise ValidationError(f"{name} must be positive, got {x!r}")
    return float(x)


@dataclass(frozen=True)
class SymbolMatrix:
    nu: float
    v_star: float
    k: float
    shifted: bool = False
    lambda1_omega: float = None

    def __post_init__(self):
        FluidParams(self.nu, self.v_star)
        if not (math.isfinite(self.k) and self.k >= 0):
            raise ValidationError(f"wave number must be non-negative, got {self.k!r}")
        if self.shifted:
            if self.lambda1_omega is None:
                raise ValidationError("shifted symbol needs lambda1_omega")
            _positive("lambda1_omega", self.lambda1_omega)

    def entries(self):
        """``(a, b, d)`` for the matrix ``[[a, conj(b)], [b, d]]``."""
        a = self.nu * self.k ** 2
        d = 0.0
        if self.shifted:
            half = 0.5 * self.nu * self.lambda1_omega
            a -= half
            d = half
        return a, -1j * self.v_star * self.k, d

    def matrix(self):
        a, b, d = self.entries()
        return np.array([[a, np.conj(b)], [b, d]])


def symbol_eigenvalues(sym):
    """``(lambda_minus, lambda_plus)`` of the Hermitian 2x2 symbol."""
    a, b, d = sym.entries()
    return hermitian_2x2_eigs(a, b, d)


def symbol_angle(params, lambda1_omega):
    """Rotation angle ``0.5 * arctan(Re*)`` of the positive symbol eigenvector."""
    _positive("lambda1_omega", lambda1_omega)
    return 0.5 * math.atan(reynolds_number(params, lambda1_omega))


def decay_exponent(nu, lambda1_omega, re_star):
    """``nu * lambda1 * (1 - Re*)``; negative values mean the unstable regime."""
    _positive("nu", nu)
    _positive("lambda1_omega", lambda1_omega)
    return nu * lambda1_omega * (1.0 - re_star)


def essential_spectra(params, lambda1_omega):
    '''Closed-form essential spectra of ``S`` and ``T`` and the slab bound.

    Returns ``(ess_S, ess_T, slab_bound)`` with ``ess_S`` and ``ess_T``
    ordered pairs and ``slab_bound = nu lambda1/2 * (1 - Re* max(1, Re*/2))``.
    '''
    _positive("lambda1_omega", lambda1_omega)
    nu, v = params.nu, params.v_star
    half = 0.5 * nu * lambda1_omega
    ess_s = (-v * v / nu, -0.5 * v * v / nu)
    ess_t = (half - v * v / nu, half - 0.5 * v * v / nu)
    re = reynolds_number(params, lambda1_omega)
    slab = half * (1.0 - re * max(1.0, 0.5 * re))
    return ess_s, ess_t, slab


def symbol_comparison(ops, params, spec=None, lambda1_h=None):
    '''Compare the discrete spectrum with the symbol at ``k = sqrt(lambda1_h)``.

    Returns a dict with the symbol eigenvalues, ``bottom / lambda_minus``
    and ``lambda1_S / lambda_plus``. At ``v* = 0`` both the bottom and
    ``lambda_minus`` vanish; the bottom ratio is then set to 1 (its limit)
    and ``ratio_by_continuity`` is raised.
    '''
    if lambda1_h is None:
        lambda1_h = dirichlet_lambda1(ops)
    if spec is None:
        spec = full_spectrum(assemble_stokes(ops, params))
    lam1_s, bottom = classified_extremes(spec)
    k = math.sqrt(lambda1_h)
    lam_minus, lam_plus = symbol_eigenvalues(SymbolMatrix(params.nu, params.v_star, k))
    by_continuity = params.v_star == 0.0
    bottom_ratio = 1.0 if by_continuity else bottom / lam_minus
    return {
        "nu": params.nu, "v_star": params.v_star,
        "lambda1_h": float(lambda1_h), "k": k,
        "lambda_minus": lam_minus, "lambda_plus": lam_plus,
        "bottom": bottom, "lambda1_S": lam1_s,
        "bottom_ratio": float(bottom_ratio),
        "lambda1_ratio": lam1_s / lam_plus,
        "ratio_by_continuity": by_continuity,
        "re_star_h": reynolds_number(params, lambda1_h),
    }


def decay_exponent_relations(ops, params, re_values=(0.4, 0.2, 0.1, 0.05), lambda1_h=None):
    '''Decay exponent against the shifted symbol and the discrete ``T``.

    ``identity_error`` is ``|alpha - 2 lambda_min(t)|`` at the scenario
    parameters with the discrete ``lambda1_h``. The sweep keeps ``nu`` and
    sets ``v* = Re nu sqrt(lambda1_h) / 2``; each row records ``alpha``,
    ``min eig T`` at ``mu_opt`` and their ratio ``alpha / (2 min eig T)``.
    Rows with ``Re >= 1`` have no ratio (the bound needs ``Re < 1``).
    '''
    if lambda1_h is None:
        lambda1_h = dirichlet_lambda1(ops)
    re = reynolds_number(params, lambda1_h)
    alpha = decay_exponent(params.nu, lambda1_h, re)
    t = SymbolMatrix(params.nu, params.v_star, math.sqrt(lambda1_h), True, lambda1_h)
    t_min = symbol_eigenvalues(t)[0]
    rows = []
    mu = 0.5 * params.nu * lambda1_h
    for r in re_values:
        p = FluidParams(params.nu, r * params.nu * math.sqrt(lambda1_h) / 2.0)
        op = assemble_shifted(ops, p, mu)
        w_min = float(np.linalg.eigvalsh(op.matrix)[0])
        a = decay_exponent(p.nu, lambda1_h, reynolds_number(p, lambda1_h))
        applicable = r < 1.0 and w_min > 0
        rows.append({
            "re_star": r, "alpha": a, "min_eig_T": w_min,
            "ratio": a / (2.0 * w_min) if applicable else None,
            "t_norm": op.norm,
        })
    return {
        "re_star_h": re, "alpha": alpha, "t_symbol_min": t_min,
        "identity_error": abs(alpha - 2.0 * t_min),
        "unstable": alpha < 0,
        "sweep": rows,
    }


def sweep_csv(rows, columns, target=None):
    """Write dict rows as CSV; ``None`` becomes an empty field."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        out = []
        for c in columns:
            val = row.get(c)
            if val is None:
                out.append("")
            elif isinstance(val, float):
                out.append(repr(val))
            else:
                out.append(str(val))
        writer.writerow(out)
    return _emit(buf.getvalue(), target)
