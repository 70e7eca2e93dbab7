"""Stokes block operator, its shifted variant, and classified spectra."""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import StructuralError, ValidationError
from .grid import dirichlet_lambda1
from .linalg import symmetric_eig

__all__ = [
    "FluidParams", "BlockOperator", "SpectrumResult", "assemble_stokes",
    "assemble_shifted", "full_spectrum", "classified_extremes",
    "inertia_counts", "reynolds_number", "kernel_residual",
    "trial_bracket", "perturbation_constant", "spectrum_csv",
    "operator_metadata", "symmetric_norm", "dump_json",
]

ZERO_THRESHOLD_FACTOR = 1e-8


@dataclass(frozen=True)
class FluidParams:
    nu: float = 1.0
    v_star: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.nu) and self.nu > 0):
            raise ValidationError(f"nu must be positive, got {self.nu!r}")
        if not (math.isfinite(self.v_star) and self.v_star >= 0):
            raise ValidationError(f"v_star must be non-negative, got {self.v_star!r}")
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "v_star", float(self.v_star))


@dataclass(frozen=True)
class BlockOperator:
    matrix: np.ndarray = field(repr=False)
    split: tuple
    params: FluidParams
    shift_mu: float = 0.0

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def norm(self):
        """Spectral norm (largest absolute eigenvalue)."""
        return symmetric_norm(self.matrix)

    def blocks(self):
        nv = self.split[0]
        m = self.matrix
        return m[:nv, :nv], m[:nv, nv:], m[nv:, :nv], m[nv:, nv:]


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    counts: tuple
    residual_norm: float
    zero_threshold: float
    norm: float
    residuals: np.ndarray = field(repr=False, default=None)
    operator: BlockOperator = field(repr=False, default=None)

    @property
    def bottom(self):
        return float(self.eigenvalues[0])


def symmetric_norm(m):
    """Spectral norm of a symmetric matrix via Lanczos (dense SVD if tiny)."""
    m = np.asarray(m)
    if m.shape[0] <= 64:
        return float(np.linalg.norm(m, 2)) if m.size else 0.0
    v0 = np.ones(m.shape[0])
    w = spla.eigsh(m, k=1, which="LM", return_eigenvectors=False, v0=v0, tol=1e-13)
    return float(abs(w[0]))


def _as_dense(m):
    return m.toarray() if hasattr(m, "toarray") else np.asarray(m)


def assemble_stokes(ops, params):
    """Dense matrix [[nu L_vel, v* G], [v* G.T, 0]] of the Stokes operator."""
    return assemble_shifted(ops, params, 0.0)


def assemble_shifted(ops, params, mu):
    """Stokes matrix minus ``mu * J`` with ``J = I_velocity (+) (-I_pressure)``."""
    if not math.isfinite(mu):
        raise ValidationError(f"mu must be finite, got {mu!r}")
    nv, n_p = ops.grid.split
    lap = _as_dense(ops.L)
    grad = _as_dense(ops.G)
    m = np.zeros((nv + n_p, nv + n_p))
    ns = ops.grid.n_scalar
    m[:ns, :ns] = params.nu * lap
    m[ns:nv, ns:nv] = params.nu * lap
    m[:nv, nv:] = params.v_star * grad
    m[nv:, :nv] = params.v_star * grad.T
    if mu != 0.0:
        m[np.arange(nv), np.arange(nv)] -= mu
        m[np.arange(nv, nv + n_p), np.arange(nv, nv + n_p)] += mu
    return BlockOperator(matrix=m, split=(nv, n_p), params=params, shift_mu=float(mu))


def full_spectrum(op, method="mrrr"):
    """Eigendecomposition with sign counts and residual certificate.

    Accepts a `BlockOperator` or a bare symmetric matrix.
    """
    if isinstance(op, BlockOperator):
        m, block = op.matrix, op
    else:
        m, block = np.asarray(op), None
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("full_spectrum needs a square matrix")
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if asym != 0.0:
        raise ValidationError(f"matrix is not exactly symmetric (max asymmetry {asym:.3e})")
    w, v = symmetric_eig(m, method=method)
    residuals = np.linalg.norm(m @ v - v * w, axis=0) if m.size else np.zeros(0)
    norm = float(np.max(np.abs(w))) if w.size else 0.0
    tz = ZERO_THRESHOLD_FACTOR * norm
    counts = (int(np.sum(w > tz)), int(np.sum(np.abs(w) <= tz)), int(np.sum(w < -tz)))
    return SpectrumResult(
        eigenvalues=w, eigenvectors=v, counts=counts,
        residual_norm=float(residuals.max()) if residuals.size else 0.0,
        zero_threshold=tz, norm=norm, residuals=residuals, operator=block)


def classified_extremes(spec):
    """``(lambda1_S, bottom)``: smallest positive eigenvalue and the minimum."""
    w = spec.eigenvalues
    positive = w[w > spec.zero_threshold]
    if positive.size == 0:
        raise StructuralError("spectrum has no positive eigenvalue")
    return float(positive[0]), float(w[0])


def inertia_counts(spec):
    '''Sign counts ``(n_pos, n_zero, n_neg)`` checked against the block split.

    For an assembled Stokes matrix with ``v* > 0`` the pattern is
    ``(n_velocity, 1, n_pressure - 1)``; for ``v* = 0`` the decoupled
    pattern ``(n_velocity, n_pressure, 0)`` is expected instead. Without
    operator context the counts are returned unchecked.
    '''
    counts = spec.counts
    op = spec.operator
    if op is None or op.shift_mu != 0.0:
        return counts
    nv, n_p = op.split
    expected = (nv, n_p, 0) if op.params.v_star == 0 else (nv, 1, n_p - 1)
    if counts != expected:
        w = spec.eigenvalues
        tz = spec.zero_threshold
        n_pos, n_zero, n_neg = expected
        # eigenvalues whose sign class disagrees with the expected ordering
        labels = np.where(w > tz, 1, np.where(w < -tz, -1, 0))
        want = np.concatenate([-np.ones(n_neg), np.zeros(n_zero), np.ones(n_pos)])
        bad = w[labels != want]
        raise StructuralError(
            f"inertia {counts} differs from expected {expected}", offending=bad.tolist())
    return counts


def reynolds_number(params, lambda1_omega):
    """Generalized Reynolds number ``2 v* / (nu sqrt(lambda1))``."""
    if not lambda1_omega > 0:
        raise ValidationError("lambda1_omega must be positive")
    return 2.0 * params.v_star / (params.nu * math.sqrt(lambda1_omega))


def kernel_residual(op):
    """``||S (0 (+) 1)|| / ||0 (+) 1||`` for the constant pressure field."""
    nv, n_p = op.split
    x = np.concatenate([np.zeros(nv), np.ones(n_p)]) / math.sqrt(n_p)
    return float(np.linalg.norm(op.matrix @ x))


def trial_bracket(ops, params, lambda1_h=None):
    '''Two-sided bracket for the first positive eigenvalue.

    With ``f`` the ground state of the velocity Laplacian placed in one
    component, returns a dict with the lower end ``nu * lambda1_h`` and,
    per component, the upper end ``nu * lambda1_h + v* ||D f|| / ||f||``.
    '''
    lam, phi = dirichlet_lambda1(ops, return_vector=True)
    if lambda1_h is None:
        lambda1_h = lam
    ns = ops.grid.n_scalar
    zero = np.zeros(ns)
    upper = {}
    for name, f in (("x", np.concatenate([phi, zero])), ("y", np.concatenate([zero, phi]))):
        upper[name] = float(params.nu * lambda1_h
                            + params.v_star * np.linalg.norm(ops.D @ f) / np.linalg.norm(f))
    return {"lower": params.nu * lambda1_h, "upper": upper}


def perturbation_constant(ops):
    """Largest eigenvalue of ``G.T L_vel^{-1} G``.

    To second order in ``v*`` the bottom of the spectrum is
    ``-(v*^2 / nu)`` times this constant.
    """
    lap = _as_dense(ops.L)
    grad = _as_dense(ops.G)
    ns = ops.grid.n_scalar
    chol = np.linalg.cholesky(lap)
    gx = np.linalg.solve(chol, grad[:ns])
    gy = np.linalg.solve(chol, grad[ns:])
    schur = gx.T @ gx + gy.T @ gy
    return float(np.linalg.eigvalsh(schur)[-1])


def spectrum_csv(spec, target=None):
    """CSV with columns ``index,eigenvalue,residual``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "eigenvalue", "residual"])
    for i, (lam, res) in enumerate(zip(spec.eigenvalues, spec.residuals)):
        writer.writerow([i, repr(float(lam)), repr(float(res))])
    return _emit(buf.getvalue(), target)


def operator_metadata(op, grid=None):
    """JSON-ready summary of a block operator."""
    meta = {
        "split": list(op.split),
        "params": {"nu": op.params.nu, "v_star": op.params.v_star},
        "shift_mu": op.shift_mu,
        "norms": {
            "spectral": op.norm,
            "frobenius": float(np.linalg.norm(op.matrix)),
            "max_abs_entry": float(np.max(np.abs(op.matrix))),
        },
    }
    if grid is not None:
        meta["grid"] = grid.to_dict()
    return meta


def _emit(text, target):
    if target is None:
        return text
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return None


def dump_json(obj, target=None):
    text = json.dumps(obj, indent=2) + "\n"
    return _emit(text, target)
