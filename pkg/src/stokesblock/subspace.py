"""Spectral subspaces, principal angles and the Birman-Schwinger quantity."""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .blockop import (FluidParams, _as_dense, _emit, assemble_shifted,
                      assemble_stokes, full_spectrum, reynolds_number)
from .errors import EndpointCollisionError, StructuralError, ValidationError
from .grid import dirichlet_lambda1

__all__ = [
    "SubspaceBasis", "AngleResult", "GammaEstimate", "BirmanSchwingerReport",
    "spectral_projection_basis", "principal_angles", "operator_angle_norm",
    "gamma_estimate", "birman_schwinger_check", "subordination",
    "angle_sweep", "angle_sweep_csv", "canonical_basis",
]

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True)
class SubspaceBasis:
    columns: np.ndarray = field(repr=False)
    origin_tag: str = ""

    def __post_init__(self):
        c = np.asarray(self.columns)
        if c.ndim != 2:
            raise ValidationError("basis columns must form a 2D array")
        if c.shape[1]:
            err = np.max(np.abs(c.conj().T @ c - np.eye(c.shape[1])))
            if err > ORTHONORMALITY_TOL:
                raise ValidationError(f"basis is not orthonormal (error {err:.2e})")

    @property
    def ambient_dim(self):
        return self.columns.shape[0]

    @property
    def dim(self):
        return self.columns.shape[1]

    def projector(self):
        c = self.columns
        return c @ c.conj().T


@dataclass(frozen=True)
class AngleResult:
    principal_angles: np.ndarray = field(repr=False)
    theta_norm: float
    p_minus_q_norm: float


def canonical_basis(ambient_dim, indices, origin_tag=""):
    """Basis of coordinate vectors ``e_i`` for ``i in indices``."""
    cols = np.zeros((ambient_dim, len(indices)))
    cols[list(indices), np.arange(len(indices))] = 1.0
    return SubspaceBasis(cols, origin_tag)


def spectral_projection_basis(spec, interval, origin_tag=None):
    '''Eigenvectors whose eigenvalues lie strictly inside ``interval``.

    Endpoints may be infinite. An eigenvalue closer than half the zero
    threshold to a finite endpoint is ambiguous and raises
    `EndpointCollisionError`; half rather than the full threshold keeps
    ``(tau_z, inf)`` admissible for spectra whose zero eigenvalue is at
    rounding level.
    '''
    lo, hi = interval
    if not lo < hi:
        raise ValidationError(f"empty interval ({lo}, {hi})")
    w = spec.eigenvalues
    guard = 0.5 * spec.zero_threshold
    for end in (lo, hi):
        if math.isfinite(end):
            close = w[np.abs(w - end) <= guard]
            if close.size:
                raise EndpointCollisionError(
                    f"eigenvalue(s) {close.tolist()} within {guard:.3e} of endpoint {end}")
    mask = (w > lo) & (w < hi)
    tag = origin_tag if origin_tag is not None else f"E(({lo}, {hi}))"
    return SubspaceBasis(spec.eigenvectors[:, mask], tag)


def principal_angles(u, v):
    '''Principal angles between ``span(u)`` and ``span(v)``.

    Angles come from the singular values of ``u^H v`` (cosines); those
    below pi/4 are recomputed from the sines, the singular values of
    ``v - u u^H v``, which keeps small angles accurate. ``p_minus_q_norm``
    is the norm of the projector difference, computed independently.
    '''
    if u.ambient_dim != v.ambient_dim:
        raise ValidationError(
            f"ambient dimensions differ: {u.ambient_dim} vs {v.ambient_dim}")
    a, b = u.columns, v.columns
    k = min(a.shape[1], b.shape[1])
    if k == 0:
        angles = np.zeros(0)
    else:
        if a.shape[1] < b.shape[1]:
            a, b = b, a
        # b has the smaller dimension; project it onto span(a)
        cross = a.conj().T @ b
        cosines = np.clip(scipy.linalg.svdvals(cross), 0.0, 1.0)
        angles = np.sort(np.arccos(cosines))
        sines = np.clip(scipy.linalg.svdvals(b - a @ cross), 0.0, 1.0)
        small = np.sort(np.arcsin(sines))
        mask = angles < math.pi / 4
        angles = np.where(mask, small[:k], angles)
        angles = np.sort(angles)
    diff = u.projector() - v.projector()
    pq = float(np.max(np.abs(np.linalg.eigvalsh(diff)))) if diff.size else 0.0
    theta = float(angles.max()) if angles.size else 0.0
    return AngleResult(principal_angles=angles, theta_norm=theta, p_minus_q_norm=pq)


def operator_angle_norm(spec, split):
    """Angle between the positive spectral subspace and ``H_plus``."""
    nv, n_p = split
    n_pos = spec.counts[0]
    if n_pos != nv:
        raise StructuralError(
            f"positive subspace has dimension {n_pos}, expected n_velocity = {nv}",
            offending=spec.eigenvalues[spec.eigenvalues > spec.zero_threshold][:5].tolist())
    positive = spectral_projection_basis(
        spec, (spec.zero_threshold, math.inf), origin_tag="E_S((0,inf))")
    h_plus = canonical_basis(nv + n_p, range(nv), origin_tag="H_plus")
    return principal_angles(positive, h_plus)


@dataclass(frozen=True)
class GammaEstimate:
    exact: float
    envelope: float
    mu: float
    lambda1_h: float


def gamma_estimate(ops, params, mu, lambda1_h=None):
    '''Exact discrete gamma(mu) and its Poincare envelope.

    ``exact = (v*/sqrt(mu)) * sigma_max(D (nu L_vel - mu)^{-1/2})``, the
    supremum of ``2 v* |<Dv, p>| / (<(nu L_vel - mu) v, v> + mu ||p||^2)``,
    evaluated through a Cholesky factor. ``envelope`` is
    ``v* / sqrt((nu - mu / lambda1_h) mu)``.
    '''
    if lambda1_h is None:
        lambda1_h = dirichlet_lambda1(ops)
    upper = params.nu * lambda1_h
    if not 0.0 < mu < upper:
        raise ValidationError(f"mu = {mu} outside the admissible interval (0, {upper})")
    envelope = params.v_star / math.sqrt((params.nu - mu / lambda1_h) * mu)
    if params.v_star == 0.0:
        return GammaEstimate(0.0, envelope, float(mu), float(lambda1_h))
    ns = ops.grid.n_scalar
    a = params.nu * _as_dense(ops.L) - mu * np.eye(ns)
    r = scipy.linalg.cholesky(a, lower=False)
    div = _as_dense(ops.D)
    # (D R^{-1})^T = R^{-T} D^T, per velocity component
    mx = scipy.linalg.solve_triangular(r, div[:, :ns].T, trans="T")
    my = scipy.linalg.solve_triangular(r, div[:, ns:].T, trans="T")
    gram = mx.T @ mx + my.T @ my
    sigma = math.sqrt(max(np.linalg.eigvalsh(gram)[-1], 0.0))
    exact = params.v_star / math.sqrt(mu) * sigma
    return GammaEstimate(float(exact), float(envelope), float(mu), float(lambda1_h))


@dataclass(frozen=True)
class BirmanSchwingerReport:
    points: list
    tolerance: float
    n_disagreements: int
    lambda1_h: float
    params: FluidParams

    @property
    def consistent(self):
        return self.n_disagreements == 0

    def to_dict(self):
        return {
            "params": {"nu": self.params.nu, "v_star": self.params.v_star},
            "lambda1_h": self.lambda1_h,
            "tolerance": self.tolerance,
            "n_disagreements": self.n_disagreements,
            "consistent": self.consistent,
            "points": self.points,
        }


def _min_eigenvalue(m):
    return float(scipy.linalg.eigvalsh(m, subset_by_index=[0, 0])[0])


def birman_schwinger_check(ops, params, n_points=21, lambda1_h=None, s_norm=None):
    '''Compare ``min eig(S - mu J) > 0`` with ``gamma(mu) < 1`` over a mu sweep.

    The sweep uses ``n_points`` equispaced interior points of
    ``(0, nu * lambda1_h)``. A point disagrees when the two predicates
    differ and the minimum eigenvalue is farther than ``1e-8 ||S||``
    from zero.
    '''
    if lambda1_h is None:
        lambda1_h = dirichlet_lambda1(ops)
    if s_norm is None:
        s_norm = assemble_stokes(ops, params).norm
    tol = 1e-8 * s_norm
    upper = params.nu * lambda1_h
    points = []
    bad = 0
    for i in range(1, n_points + 1):
        mu = upper * i / (n_points + 1)
        g = gamma_estimate(ops, params, mu, lambda1_h)
        t_min = _min_eigenvalue(assemble_shifted(ops, params, mu).matrix)
        predicate = g.exact < 1.0
        positive = t_min > 0.0
        agree = predicate == positive or abs(t_min) <= tol
        bad += not agree
        points.append({
            "mu": mu, "gamma": g.exact, "envelope": g.envelope,
            "min_eig_T": t_min, "gamma_below_one": predicate,
            "T_positive": positive, "consistent": agree,
        })
    return BirmanSchwingerReport(points, tol, bad, float(lambda1_h), params)


def subordination(spec):
    """``(max |lambda| over lambda <= tau_z, min lambda over lambda > tau_z)``."""
    w = spec.eigenvalues
    tz = spec.zero_threshold
    lower = w[w <= tz]
    upper = w[w > tz]
    return (float(np.max(np.abs(lower))) if lower.size else 0.0,
            float(upper.min()) if upper.size else math.inf)


def angle_sweep(ops, nu, re_values, lambda1_h=None):
    '''Operator angle for a list of discrete Reynolds numbers at fixed ``nu``.

    ``v*`` is chosen as ``Re * nu * sqrt(lambda1_h) / 2``. Each row holds
    ``re_star, theta_norm, tan2theta, bound, margin`` with
    ``bound = re_star`` and ``margin = bound - tan2theta``.
    '''
    if lambda1_h is None:
        lambda1_h = dirichlet_lambda1(ops)
    rows = []
    for re in re_values:
        params = FluidParams(nu, re * nu * math.sqrt(lambda1_h) / 2.0)
        spec = full_spectrum(assemble_stokes(ops, params))
        angle = operator_angle_norm(spec, ops.grid.split)
        tan2 = math.tan(2 * angle.theta_norm) if 2 * angle.theta_norm < math.pi / 2 else math.inf
        check = reynolds_number(params, lambda1_h)
        rows.append({
            "re_star": check, "theta_norm": angle.theta_norm,
            "tan2theta": tan2, "bound": check, "margin": check - tan2,
        })
    return rows


def angle_sweep_csv(rows, target=None):
    buf = io.StringIO()
    cols = ["re_star", "theta_norm", "tan2theta", "bound", "margin"]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([repr(float(row[c])) for c in cols])
    return _emit(buf.getvalue(), target)
