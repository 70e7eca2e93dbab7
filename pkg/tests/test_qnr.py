import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stokesblock.blockop import FluidParams, assemble_stokes, classified_extremes, full_spectrum
from stokesblock.errors import ValidationError
from stokesblock.grid import dirichlet_lambda1
from stokesblock.qnr import (QnrBudget, SaddleForm, block_operator_of_form, cloud_csv,
                             hermitian_2x2_eigs, qnr_certificate, qnr_envelope,
                             qnr_sample, random_saddle_form, stokes_form)

from conftest import unit_ops

GOLDEN = ((1 - math.sqrt(5)) / 2, (1 + math.sqrt(5)) / 2)


def _scalar_form():
    return SaddleForm(np.array([[1.0]]), np.array([[0.0]]), np.array([[1.0]]))


def test_form_validation():
    with pytest.raises(ValidationError):
        SaddleForm(np.array([[-1.0]]), np.array([[0.0]]), np.array([[1.0]]))
    with pytest.raises(ValidationError):
        SaddleForm(np.array([[1.0, 2.0], [0.0, 1.0]]), np.eye(1), np.ones((1, 2)))
    with pytest.raises(ValidationError):
        SaddleForm(np.eye(2), np.eye(1), np.ones((2, 1)))


def test_scalar_instance():
    f = _scalar_form()
    assert np.array_equal(block_operator_of_form(f), [[1.0, 1.0], [1.0, 0.0]])
    s = qnr_sample(f, [1.0], [1.0])
    assert s.eigs == pytest.approx(GOLDEN, abs=1e-15)
    env = qnr_envelope(f, QnrBudget(5))
    assert env.inf_estimate == pytest.approx(GOLDEN[0], abs=1e-15)
    assert env.sup_estimate == pytest.approx(GOLDEN[1], abs=1e-15)


def test_zero_vectors_and_budget():
    f = _scalar_form()
    with pytest.raises(ValidationError):
        qnr_sample(f, [0.0], [1.0])
    with pytest.raises(ValidationError):
        QnrBudget(0)


def test_decoupled_form():
    rng = np.random.default_rng(2)
    f = random_saddle_form(rng, 4, 3)
    f0 = SaddleForm(f.a_plus, f.a_minus, np.zeros((3, 4)))
    b = block_operator_of_form(f0)
    expect = np.sort(np.concatenate([np.linalg.eigvalsh(f.a_plus), -np.linalg.eigvalsh(f.a_minus)]))
    assert np.allclose(np.linalg.eigvalsh(b), expect)
    s = qnr_sample(f0, rng.standard_normal(4), rng.standard_normal(3))
    ap = s.x_plus @ f.a_plus @ s.x_plus
    am = s.x_minus @ f.a_minus @ s.x_minus
    assert sorted(s.eigs) == pytest.approx(sorted([ap, -am]), abs=1e-14)
    env = qnr_envelope(f0)
    assert env.inf_estimate == pytest.approx(-np.linalg.eigvalsh(f.a_minus)[-1], abs=1e-12)
    assert env.sup_estimate == pytest.approx(np.linalg.eigvalsh(f.a_plus)[-1], abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.booleans())
def test_property_sample_hermitian_and_outside_gap(seed, cplx):
    rng = np.random.default_rng(seed)
    f = random_saddle_form(rng, 3, 2, complex_coupling=cplx)
    xp = rng.standard_normal(3) + (1j * rng.standard_normal(3) if cplx else 0)
    xm = rng.standard_normal(2) + (1j * rng.standard_normal(2) if cplx else 0)
    s = qnr_sample(f, xp, xm)
    assert np.allclose(s.matrix2, s.matrix2.conj().T)
    assert abs(np.linalg.norm(s.x_plus) - 1) < 1e-12 and abs(np.linalg.norm(s.x_minus) - 1) < 1e-12
    ref = np.linalg.eigvalsh(s.matrix2)
    assert np.allclose(s.eigs, ref, atol=1e-12)
    am, ap = -s.matrix2[1, 1].real, s.matrix2[0, 0].real
    # both eigenvalues avoid (-a_minus[x-], a_plus[x+])
    assert s.eigs[0] <= -am + 1e-12 and s.eigs[1] >= ap - 1e-12


def test_hermitian_2x2_formula():
    lo, hi = hermitian_2x2_eigs(2.0, 1 + 1j, -1.0)
    assert (lo, hi) == pytest.approx(tuple(np.linalg.eigvalsh([[2, 1 - 1j], [1 + 1j, -1]])), abs=1e-14)


def test_envelope_monotone_in_budget():
    f = random_saddle_form(np.random.default_rng(9), 5, 4)
    small = qnr_envelope(f, QnrBudget(50, seed=3, refine_steps=0))
    big = qnr_envelope(f, QnrBudget(200, seed=3, refine_steps=0))
    # the first 50 random points are shared, so the sampled hull can only grow
    assert np.array_equal(small.cloud[:50], big.cloud[:50])
    r_small = small.cloud[:50]
    r_big = big.cloud[:200]
    assert r_big[:, 0].min() <= r_small[:, 0].min()
    assert r_big[:, 1].max() >= r_small[:, 1].max()


def test_certificate_random_forms():
    rng = np.random.default_rng(7)
    for i in range(10):
        f = random_saddle_form(rng, 5, 4, complex_coupling=bool(i % 2))
        cert = qnr_certificate(f, QnrBudget(100, seed=i))
        assert cert["all_pass"], cert["items"]
        assert cert["items"]["iv"]["inf_error"] <= 1e-8 * cert["operator_norm"]


def test_certificate_positive_definite_blocks():
    # d+ = 2, d- = 1 with a_minus = 0.5 leaves a gap (-0.5, alpha+)
    f = SaddleForm(np.diag([1.0, 3.0]), np.array([[0.5]]), np.array([[0.7, -0.2]]))
    cert = qnr_certificate(f, QnrBudget(60))
    w = np.linalg.eigvalsh(block_operator_of_form(f))
    assert not np.any((w > -0.5) & (w < 1.0))
    assert cert["items"]["vi"]["alpha_minus"] == pytest.approx(0.5)
    assert cert["items"]["vi"]["alpha_plus"] == pytest.approx(1.0)
    assert cert["all_pass"]
    assert "not applicable" in cert["items"]["v"]["a_plus"]


def test_certificate_witnesses_json():
    f = random_saddle_form(np.random.default_rng(1), 2, 2, complex_coupling=True)
    cert = qnr_certificate(f, QnrBudget(20), include_witnesses=True)
    text = json.dumps(cert)
    assert len(cert["items"]["i"]["witnesses"]) == 4
    assert json.loads(text)["all_pass"] == cert["all_pass"]


def test_stokes_form_matches_assembly_and_extremes():
    ops = unit_ops(6)
    p = FluidParams(1.3, 0.8)
    f = stokes_form(ops, p)
    op = assemble_stokes(ops, p)
    assert np.array_equal(block_operator_of_form(f), op.matrix)
    spec = full_spectrum(op)
    env = qnr_envelope(f, QnrBudget(20))
    assert abs(env.inf_estimate - classified_extremes(spec)[1]) <= 1e-8 * spec.norm
    cert = qnr_certificate(f, QnrBudget(20))
    assert cert["items"]["vi"]["pass"]
    assert cert["items"]["vi"]["alpha_plus"] == pytest.approx(p.nu * dirichlet_lambda1(ops), rel=1e-10)
    lam1 = classified_extremes(spec)[0]
    assert lam1 >= cert["items"]["vi"]["alpha_plus"] - 1e-9 * spec.norm


def test_cloud_csv():
    env = qnr_envelope(_scalar_form(), QnrBudget(3))
    lines = cloud_csv(env).splitlines()
    assert lines[0] == "eig_low,eig_high,tag"
    assert len(lines) == 1 + 3 + 4
    assert lines[-1].endswith("refined-max")
