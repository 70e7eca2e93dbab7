import io
import json
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from stokesblock.blockop import (FluidParams, assemble_shifted, assemble_stokes,
                                 classified_extremes, dump_json, full_spectrum,
                                 inertia_counts, kernel_residual, operator_metadata,
                                 perturbation_constant, reynolds_number, spectrum_csv,
                                 trial_bracket)
from stokesblock.errors import StructuralError, ValidationError
from stokesblock.grid import dirichlet_lambda1, fd_spectrum
from stokesblock.linalg import jacobi_eig

from conftest import unit_ops

# frozen from scipy.linalg.eigh (LAPACK evr) and cross-checked by the Jacobi oracle
N3_LAMBDA1_S = 18.946192532322456
N3_BOTTOM = -0.9880037639257531


@pytest.mark.parametrize("kw", [{"nu": 0.0}, {"nu": -1.0}, {"v_star": -0.1}, {"nu": math.nan}])
def test_params_validation(kw):
    with pytest.raises(ValidationError):
        FluidParams(**kw)


def test_reynolds_number_values():
    lam = 2 * math.pi ** 2
    assert reynolds_number(FluidParams(1, 1), lam) == pytest.approx(math.sqrt(2) / math.pi, rel=1e-15)
    assert reynolds_number(FluidParams(1, 1), lam) == pytest.approx(0.450158, abs=1e-6)
    assert reynolds_number(FluidParams(2, 1), lam) == pytest.approx(0.225079, abs=1e-6)
    assert reynolds_number(FluidParams(1, 0), lam) == 0.0
    with pytest.raises(ValidationError):
        reynolds_number(FluidParams(), 0.0)


def test_block_structure():
    ops = unit_ops(2)
    p = FluidParams(1.0, 1.0)
    op = assemble_stokes(ops, p)
    assert op.matrix.shape == (12, 12)
    assert np.array_equal(op.matrix, op.matrix.T)
    a, b, c, d = op.blocks()
    lap = ops.L.toarray()
    assert np.array_equal(a, scipy.linalg.block_diag(lap, lap))
    assert np.array_equal(b, ops.G.toarray())
    assert np.array_equal(c, ops.G.toarray().T)
    assert not d.any()
    op2 = assemble_stokes(ops, FluidParams(2.0, 1.0))
    assert np.array_equal(op2.blocks()[0], 2 * a)


def test_shift_identities():
    ops = unit_ops(4)
    p = FluidParams(1.5, 0.7)
    s = assemble_stokes(ops, p).matrix
    assert np.array_equal(assemble_shifted(ops, p, 0.0).matrix, s)
    nv, n_p = ops.grid.split
    j = np.diag(np.concatenate([np.ones(nv), -np.ones(n_p)]))
    mu = 3.25
    t = assemble_shifted(ops, p, mu)
    assert t.shift_mu == mu
    assert np.array_equal(t.matrix + mu * j, s)


def test_full_spectrum_small_examples():
    spec = full_spectrum(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(spec.eigenvalues, [1, 2, 3])
    spec = full_spectrum(np.array([[1.0, 1.0], [1.0, 0.0]]))
    assert spec.eigenvalues == pytest.approx([-0.618033988749895, 1.618033988749895], abs=1e-15)
    with pytest.raises(ValidationError):
        full_spectrum(np.array([[1.0, 2.0], [2.0 + 1e-15, 0.0]]))


def test_decoupled_spectrum_n3():
    ops = unit_ops(3)
    spec = full_spectrum(assemble_stokes(ops, FluidParams(1.0, 0.0)))
    fd = fd_spectrum(ops.grid)
    pos = spec.eigenvalues[spec.eigenvalues > spec.zero_threshold]
    assert np.allclose(pos, np.sort(np.repeat(fd, 2)), rtol=1e-12)
    assert inertia_counts(spec) == (18, 9, 0)
    lam1, bottom = classified_extremes(spec)
    assert lam1 == pytest.approx(18.745166004060973, rel=1e-12)
    assert bottom == 0.0


@pytest.mark.parametrize("n,expected", [(2, (8, 1, 3)), (3, (18, 1, 8))])
def test_inertia_pattern(n, expected):
    spec = full_spectrum(assemble_stokes(unit_ops(n), FluidParams()))
    assert inertia_counts(spec) == expected


def test_coupled_n3_against_frozen_oracle():
    op = assemble_stokes(unit_ops(3), FluidParams())
    spec = full_spectrum(op)
    lam1, bottom = classified_extremes(spec)
    assert lam1 == pytest.approx(N3_LAMBDA1_S, rel=1e-12)
    assert bottom == pytest.approx(N3_BOTTOM, rel=1e-12)
    wj, _ = jacobi_eig(op.matrix)
    assert np.allclose(wj, spec.eigenvalues, atol=1e-12)


def test_spectrum_certificates(spec16):
    v = spec16.eigenvectors
    assert np.abs(v.T @ v - np.eye(v.shape[0])).max() < 1e-10
    assert spec16.residual_norm <= 1e-9 * spec16.norm
    assert spec16.zero_threshold == pytest.approx(1e-8 * spec16.norm)
    assert sum(spec16.counts) == v.shape[0]


def test_inertia_violation_is_structural():
    op = assemble_stokes(unit_ops(3), FluidParams())
    spec = full_spectrum(op)
    # fake an operator record whose split does not match the matrix
    bad = type(spec)(spec.eigenvalues, spec.eigenvectors, spec.counts, spec.residual_norm,
                     spec.zero_threshold, spec.norm, spec.residuals,
                     type(op)(op.matrix, (17, 10), op.params))
    with pytest.raises(StructuralError) as exc:
        inertia_counts(bad)
    assert exc.value.offending


def test_kernel_is_constant_pressure(ops16, spec16):
    op = spec16.operator
    assert kernel_residual(op) <= 1e-12 * spec16.norm
    assert spec16.counts[1] == 1


@pytest.mark.parametrize("nu,v", [(1, 1), (2, 0.5), (4, 2), (1, 0)])
def test_lower_bounds_and_bracket(nu, v):
    ops = unit_ops(8)
    p = FluidParams(nu, v)
    spec = full_spectrum(assemble_stokes(ops, p))
    lam_h = dirichlet_lambda1(ops)
    lam1, bottom = classified_extremes(spec)
    tol = 1e-9 * spec.norm
    assert lam1 >= nu * lam_h - tol
    assert bottom >= -v * v / nu - tol
    br = trial_bracket(ops, p, lam_h)
    assert br["lower"] == pytest.approx(nu * lam_h)
    assert lam1 <= min(br["upper"].values()) + tol


def test_bottom_refinement_monotone():
    p = FluidParams()
    bottoms = [classified_extremes(full_spectrum(assemble_stokes(unit_ops(n), p)))[1]
               for n in (4, 8, 16)]
    assert bottoms[0] > bottoms[1] > bottoms[2] >= -1.0


def test_small_velocity_perturbation_oracle():
    ops = unit_ops(8)
    c = perturbation_constant(ops)
    lam_h = dirichlet_lambda1(ops)
    nu = 1.0
    v = 1e-2 * nu * math.sqrt(lam_h)
    bottom = classified_extremes(full_spectrum(assemble_stokes(ops, FluidParams(nu, v))))[1]
    assert bottom == pytest.approx(-(v * v / nu) * c, rel=1e-2)


def test_outputs(spec16, ops16):
    text = spectrum_csv(spec16)
    lines = text.splitlines()
    assert lines[0] == "index,eigenvalue,residual"
    assert len(lines) == 1 + spec16.eigenvalues.size
    i, lam, res = lines[1].split(",")
    assert float(lam) == spec16.eigenvalues[0]
    meta = operator_metadata(spec16.operator, ops16.grid)
    assert meta["split"] == [512, 256]
    assert meta["norms"]["spectral"] == pytest.approx(spec16.norm, rel=1e-10)
    buf = io.StringIO()
    dump_json(meta, buf)
    assert json.loads(buf.getvalue()) == json.loads(dump_json(meta))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 10), st.floats(0, 5), st.integers(2, 5))
def test_property_symmetric_and_bounded(nu, v, n):
    ops = unit_ops(n)
    op = assemble_stokes(ops, FluidParams(nu, v))
    assert np.array_equal(op.matrix, op.matrix.T)
    spec = full_spectrum(op)
    tol = 1e-9 * spec.norm
    assert spec.bottom >= -v * v / nu - tol
    assert classified_extremes(spec)[0] >= nu * dirichlet_lambda1(ops) - tol
