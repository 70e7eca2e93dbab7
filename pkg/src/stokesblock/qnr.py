"""Saddle-point forms and their quadratic numerical range.

A saddle-point form on ``C^{d+} (+) C^{d-}`` is given by two positive
semidefinite matrices ``a_plus``, ``a_minus`` and a coupling ``v`` of shape
``(d-, d+)``. Its operator is ``[[a_plus, v^H], [v, -a_minus]]`` and the
quadratic numerical range is the union, over unit vectors ``x+`` and
``x-``, of the spectra of

    [[a+[x+],      conj(v[x+, x-])],
     [v[x+, x-],  -a-[x-]        ]]

with ``v[x+, x-] = <x-, v x+>``.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .blockop import _emit
from .errors import ValidationError
from .linalg import symmetric_eig

__all__ = [
    "SaddleForm", "QnrSample", "QnrBudget", "QnrEnvelope",
    "block_operator_of_form", "qnr_sample", "qnr_envelope",
    "qnr_certificate", "random_saddle_form", "stokes_form",
    "hermitian_2x2_eigs", "cloud_csv",
]

PSD_TOL = 1e-12


def hermitian_2x2_eigs(a, b, d):
    """Eigenvalues ``(low, high)`` of ``[[a, conj(b)], [b, d]]`` for real a, d.

    The eigenvalue of larger modulus comes from ``mean +- rad``; the other
    one from the determinant, which avoids cancellation.
    """
    mean = 0.5 * (a + d)
    rad = math.hypot(0.5 * (a - d), abs(b))
    if rad == 0.0:
        return mean, mean
    big = mean + math.copysign(rad, mean)
    other = (a * d - abs(b) ** 2) / big if big != 0.0 else mean - rad
    return (other, big) if mean >= 0 else (big, other)


def _hermitian_2x2_vector(a, b, d, lam):
    # kernel of [[a - lam, conj(b)], [b, d - lam]], picked from the stabler row
    r1 = np.array([-np.conj(b), a - lam])
    r2 = np.array([d - lam, -b])
    c = r1 if np.linalg.norm(r1) >= np.linalg.norm(r2) else r2
    nrm = np.linalg.norm(c)
    if nrm == 0.0:
        return np.array([1.0, 0.0])
    return c / nrm


def _check_psd(name, m):
    if m.shape[0] == 0:
        return
    if np.max(np.abs(m - m.conj().T), initial=0.0) != 0.0:
        raise ValidationError(f"{name} is not exactly Hermitian")
    w = np.linalg.eigvalsh(m)
    scale = max(np.max(np.abs(w)), 1.0)
    if w[0] < -PSD_TOL * scale:
        raise ValidationError(f"{name} is not positive semidefinite (min eigenvalue {w[0]:.3e})")


@dataclass(frozen=True)
class SaddleForm:
    a_plus: np.ndarray = field(repr=False)
    a_minus: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        ap = np.atleast_2d(np.asarray(self.a_plus))
        am = np.atleast_2d(np.asarray(self.a_minus))
        cp = np.asarray(self.v)
        if cp.ndim == 1 or cp.ndim == 0:
            cp = cp.reshape(am.shape[0], ap.shape[0])
        if ap.shape[0] != ap.shape[1] or am.shape[0] != am.shape[1]:
            raise ValidationError("a_plus and a_minus must be square")
        if cp.shape != (am.shape[0], ap.shape[0]):
            raise ValidationError(
                f"coupling has shape {cp.shape}, expected {(am.shape[0], ap.shape[0])}")
        _check_psd("a_plus", ap)
        _check_psd("a_minus", am)
        object.__setattr__(self, "a_plus", ap)
        object.__setattr__(self, "a_minus", am)
        object.__setattr__(self, "v", cp)

    @property
    def dims(self):
        return self.a_plus.shape[0], self.a_minus.shape[0]

    @property
    def is_complex(self):
        return any(np.iscomplexobj(m) for m in (self.a_plus, self.a_minus, self.v))

    def value(self, z):
        """Quadratic form ``b[z] = <z, B z>`` for a full vector ``z``."""
        dp = self.dims[0]
        zp, zm = z[:dp], z[dp:]
        return float(np.real(
            np.vdot(zp, self.a_plus @ zp) - np.vdot(zm, self.a_minus @ zm)
            + 2.0 * np.vdot(zm, self.v @ zp).real))


@dataclass(frozen=True)
class QnrSample:
    x_plus: np.ndarray = field(repr=False)
    x_minus: np.ndarray = field(repr=False)
    matrix2: np.ndarray = field(repr=False)
    eigs: tuple


@dataclass(frozen=True)
class QnrBudget:
    n_samples: int = 200
    seed: int = 0
    refine_steps: int = 25

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError("sample budget must be positive")
        if self.refine_steps < 0:
            raise ValidationError("refine_steps must be non-negative")


@dataclass(frozen=True)
class QnrEnvelope:
    inf_estimate: float
    sup_estimate: float
    cloud: np.ndarray = field(repr=False)
    tags: tuple = field(repr=False)
    seed: int = 0


def block_operator_of_form(form):
    """The Hermitian matrix ``[[a_plus, v^H], [v, -a_minus]]``."""
    ap, am, cp = form.a_plus, form.a_minus, form.v
    dtype = np.result_type(ap, am, cp, np.float64)
    dp, dm = form.dims
    m = np.zeros((dp + dm, dp + dm), dtype=dtype)
    m[:dp, :dp] = ap
    m[dp:, dp:] = -am
    m[dp:, :dp] = cp
    m[:dp, dp:] = cp.conj().T
    return m


def qnr_sample(form, x_plus, x_minus):
    """The 2x2 compression of the form to a pair of unit vectors."""
    xp = np.asarray(x_plus)
    xm = np.asarray(x_minus)
    np_, nm = np.linalg.norm(xp), np.linalg.norm(xm)
    if np_ == 0.0 or nm == 0.0:
        raise ValidationError("qnr_sample needs nonzero vectors")
    xp = xp / np_
    xm = xm / nm
    ap = float(np.real(np.vdot(xp, form.a_plus @ xp)))
    am = float(np.real(np.vdot(xm, form.a_minus @ xm)))
    coupling = np.vdot(xm, form.v @ xp)
    if not form.is_complex:
        coupling = float(np.real(coupling))
    m2 = np.array([[ap, np.conj(coupling)], [coupling, -am]])
    return QnrSample(xp, xm, m2, hermitian_2x2_eigs(ap, coupling, -am))


def _split(u, dp):
    # normalized components; a vanishing one is replaced by e_1
    parts = []
    for part in (u[:dp], u[dp:]):
        nrm = np.linalg.norm(part)
        if nrm <= 1e-300 or part.size == 0:
            e1 = np.zeros(part.size, dtype=u.dtype)
            if part.size:
                e1[0] = 1.0
            parts.append(e1)
        else:
            parts.append(part / nrm)
    return parts


def _orth(vectors):
    q, r = np.linalg.qr(np.column_stack(vectors))
    keep = np.abs(np.diag(r)) > 1e-12 * max(np.abs(r[0, 0]), 1e-300)
    return q[:, keep]


def _refine(form, bmat, xp, xm, which, steps):
    '''Monotone block Rayleigh-Ritz descent toward an extreme of the range.

    Each step compresses the form to ``span{x+, r+} (+) span{x-, r-}``,
    where ``r`` is ``B`` applied to the current 2x2 Ritz vector, and takes
    the split extreme eigenvector of the compression as the new pair.
    '''
    dp = form.dims[0]
    sample = qnr_sample(form, xp, xm)
    for _ in range(steps):
        lam = sample.eigs[0] if which == "min" else sample.eigs[1]
        c = _hermitian_2x2_vector(sample.matrix2[0, 0], sample.matrix2[1, 0],
                                  sample.matrix2[1, 1], lam)
        z = np.concatenate([c[0] * sample.x_plus, c[1] * sample.x_minus])
        r = bmat @ z
        up = _orth([sample.x_plus, r[:dp]]) if dp else np.zeros((0, 0))
        um = _orth([sample.x_minus, r[dp:]])
        basis = np.zeros((bmat.shape[0], up.shape[1] + um.shape[1]),
                         dtype=np.result_type(up, um))
        basis[:dp, :up.shape[1]] = up
        basis[dp:, up.shape[1]:] = um
        comp = basis.conj().T @ bmat @ basis
        comp = 0.5 * (comp + comp.conj().T)
        w, y = np.linalg.eigh(comp)
        pick = 0 if which == "min" else -1
        y = basis @ y[:, pick]
        new_p, new_m = _split(y, dp)
        candidate = qnr_sample(form, new_p, new_m)
        better = (candidate.eigs[0] < sample.eigs[0]) if which == "min" else (candidate.eigs[1] > sample.eigs[1])
        if not better:
            break
        sample = candidate
    return sample


def _random_unit(rng, d, complex_):
    x = rng.standard_normal(d)
    if complex_:
        x = x + 1j * rng.standard_normal(d)
    return x / np.linalg.norm(x)


def qnr_envelope(form, budget=QnrBudget()):
    '''Estimate ``inf`` and ``sup`` of the quadratic numerical range.

    Random unit pairs (normalized Gaussians drawn in a fixed order from
    ``budget.seed``) populate the cloud; the extreme eigenvectors of the
    block operator, split into normalized components, seed a monotone
    local refinement. The split eigenvector already attains the extreme
    eigenvalue, so the estimates match ``min/max eig(B)`` to rounding.
    '''
    if not isinstance(budget, QnrBudget):
        budget = QnrBudget(**budget)
    rng = np.random.default_rng(budget.seed)
    dp, dm = form.dims
    cplx = form.is_complex
    rows, tags = [], []
    for _ in range(budget.n_samples):
        s = qnr_sample(form, _random_unit(rng, dp, cplx), _random_unit(rng, dm, cplx))
        rows.append(s.eigs)
        tags.append("random")
    bmat = block_operator_of_form(form)
    w, vec = symmetric_eig(bmat)
    for label, idx, which in (("min", 0, "min"), ("max", -1, "max")):
        xp, xm = _split(vec[:, idx], dp)
        seeded = qnr_sample(form, xp, xm)
        rows.append(seeded.eigs)
        tags.append(f"seed-{label}")
        refined = _refine(form, bmat, xp, xm, which, budget.refine_steps)
        rows.append(refined.eigs)
        tags.append(f"refined-{label}")
    cloud = np.array(rows, dtype=float)
    return QnrEnvelope(float(cloud[:, 0].min()), float(cloud[:, 1].max()),
                       cloud, tuple(tags), budget.seed)


def _vector_json(x):
    if np.iscomplexobj(x):
        return [[float(t.real), float(t.imag)] for t in x]
    return [float(t) for t in x]


def qnr_certificate(form, budget=QnrBudget(), include_witnesses=False):
    '''Numerical certificate for the quadratic numerical range properties.

    Items: (i) each eigenvalue of ``B`` is an eigenvalue of the 2x2 sample
    built from its split eigenvector; (ii) sampled numerical-range values
    and QNR points lie in ``[min eig, max eig]``; (iii) each sampled QNR
    eigenvalue equals ``b[c1 x+ (+) c2 x-]`` for the 2x2 eigenvector ``c``;
    (iv) the envelope matches the extreme eigenvalues; (v) ``a+[x+]``
    (``-a-[x-]``) is reached with ``x-`` (``x+``) orthogonal to the
    coupling image when the other space has dimension > 1; (vi) no
    eigenvalue lies in the gap ``(-alpha-, alpha+)``.
    '''
    if not isinstance(budget, QnrBudget):
        budget = QnrBudget(**budget)
    dp, dm = form.dims
    bmat = block_operator_of_form(form)
    w, vec = symmetric_eig(bmat)
    bnorm = max(float(np.max(np.abs(w))), 1e-300)
    rng = np.random.default_rng(budget.seed + 1)
    cplx = form.is_complex
    items = {}

    worst = 0.0
    witnesses = []
    for lam, u in zip(w, vec.T):
        xp, xm = _split(u, dp)
        s = qnr_sample(form, xp, xm)
        gap = min(abs(s.eigs[0] - lam), abs(s.eigs[1] - lam))
        worst = max(worst, gap)
        if include_witnesses:
            witnesses.append({"eigenvalue": float(lam), "x_plus": _vector_json(xp),
                              "x_minus": _vector_json(xm)})
    items["i"] = {"pass": bool(worst <= 1e-6), "max_distance": worst, "tolerance": 1e-6}
    if include_witnesses:
        items["i"]["witnesses"] = witnesses

    env = qnr_envelope(form, budget)
    eps = 1e-10 * bnorm
    rq = []
    for _ in range(budget.n_samples):
        z = _random_unit(rng, dp + dm, cplx)
        rq.append(form.value(z))
    rq = np.array(rq)
    inside_w = bool(np.all((rq >= w[0] - eps) & (rq <= w[-1] + eps)))
    inside_qnr = bool(np.all((env.cloud >= w[0] - eps) & (env.cloud <= w[-1] + eps)))
    items["ii"] = {"pass": inside_w and inside_qnr, "numerical_range_inside": inside_w,
                   "qnr_cloud_inside": inside_qnr, "tolerance": eps}

    worst = 0.0
    for _ in range(budget.n_samples):
        s = qnr_sample(form, _random_unit(rng, dp, cplx), _random_unit(rng, dm, cplx))
        for lam in s.eigs:
            c = _hermitian_2x2_vector(s.matrix2[0, 0], s.matrix2[1, 0], s.matrix2[1, 1], lam)
            z = np.concatenate([c[0] * s.x_plus, c[1] * s.x_minus])
            worst = max(worst, abs(form.value(z) - lam))
    items["iii"] = {"pass": bool(worst <= eps), "max_error": worst, "tolerance": eps}

    tol4 = 1e-8 * bnorm
    inf_err = abs(env.inf_estimate - w[0])
    sup_err = abs(env.sup_estimate - w[-1])
    items["iv"] = {"pass": bool(inf_err <= tol4 and sup_err <= tol4),
                   "inf_estimate": env.inf_estimate, "min_eig": float(w[0]),
                   "sup_estimate": env.sup_estimate, "max_eig": float(w[-1]),
                   "inf_error": inf_err, "sup_error": sup_err, "tolerance": tol4}

    v_item = {"tolerance": eps}
    ok = True
    if dm > 1:
        worst = 0.0
        for _ in range(min(budget.n_samples, 50)):
            xp = _random_unit(rng, dp, cplx)
            xm = _orthogonal_unit(rng, form.v @ xp, dm, cplx)
            s = qnr_sample(form, xp, xm)
            target = float(np.real(np.vdot(xp, form.a_plus @ xp)))
            worst = max(worst, min(abs(e - target) for e in s.eigs))
        v_item["a_plus_max_error"] = worst
        ok &= worst <= eps
    else:
        v_item["a_plus"] = "not applicable (dim H- = 1)"
    if dp > 1:
        worst = 0.0
        for _ in range(min(budget.n_samples, 50)):
            xm = _random_unit(rng, dm, cplx)
            xp = _orthogonal_unit(rng, form.v.conj().T @ xm, dp, cplx)
            s = qnr_sample(form, xp, xm)
            target = -float(np.real(np.vdot(xm, form.a_minus @ xm)))
            worst = max(worst, min(abs(e - target) for e in s.eigs))
        v_item["a_minus_max_error"] = worst
        ok &= worst <= eps
    else:
        v_item["a_minus"] = "not applicable (dim H+ = 1)"
    v_item["pass"] = bool(ok)
    items["v"] = v_item

    alpha_p = max(float(np.linalg.eigvalsh(form.a_plus)[0]), 0.0) if dp else 0.0
    alpha_m = max(float(np.linalg.eigvalsh(form.a_minus)[0]), 0.0) if dm else 0.0
    inside = w[(w > -alpha_m + 1e-10) & (w < alpha_p - 1e-10)]
    items["vi"] = {"pass": bool(inside.size == 0), "alpha_plus": alpha_p,
                   "alpha_minus": alpha_m, "violations": inside.tolist()}

    return {
        "dims": [dp, dm],
        "seed": budget.seed,
        "n_samples": budget.n_samples,
        "operator_norm": bnorm,
        "items": items,
        "all_pass": all(item["pass"] for item in items.values()),
    }


def _orthogonal_unit(rng, direction, d, cplx):
    x = _random_unit(rng, d, cplx)
    nrm = np.linalg.norm(direction)
    if nrm > 0:
        u = direction / nrm
        x = x - u * np.vdot(u, x)
    return x / np.linalg.norm(x)


def random_saddle_form(rng, d_plus, d_minus, complex_coupling=False):
    """Random form with Wishart-type PSD diagonal blocks and Gaussian coupling."""
    xp = rng.standard_normal((d_plus, d_plus))
    xm = rng.standard_normal((d_minus, d_minus))
    ap = xp @ xp.T / d_plus
    am = xm @ xm.T / d_minus
    ap = 0.5 * (ap + ap.T)
    am = 0.5 * (am + am.T)
    v = rng.standard_normal((d_minus, d_plus))
    if complex_coupling:
        v = v + 1j * rng.standard_normal((d_minus, d_plus))
    return SaddleForm(ap, am, v)


def stokes_form(ops, params):
    """Saddle form of the Stokes operator: ``(nu L_vel, 0, -v* D)``."""
    lap_vel = ops.L_velocity.toarray() * params.nu
    n_p = ops.grid.n_pressure
    return SaddleForm(lap_vel, np.zeros((n_p, n_p)), -params.v_star * ops.D.toarray())


def cloud_csv(envelope, target=None):
    """CSV with columns ``eig_low,eig_high,tag``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["eig_low", "eig_high", "tag"])
    for (lo, hi), tag in zip(envelope.cloud, envelope.tags):
        writer.writerow([repr(float(lo)), repr(float(hi)), tag])
    return _emit(buf.getvalue(), target)
