import math

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

import oracles
from cdklab import (
    HorizonError,
    JacobiParameters,
    NotStrongLebesguePoint,
    PerturbedEigenvalue,
    RandomDiagonal,
    UndefinedWeight,
    apply,
    boundary_F,
    catalog,
    eigenvalue_and_mass,
    rank_one_F,
    second_kind_weight_via_strip,
    stieltjes_dF,
    stieltjes_F,
    weights,
)

FREE = catalog("free")
CHEB = catalog("chebyshev1")
CUSTOM = JacobiParameters((0.8, 0.3, 1.1), (0.2, -0.4), 0.55, 0.05)


def test_free_and_arcsine_at_2i():
    assert stieltjes_F(FREE, 2j) == pytest.approx(oracles.FREE_F_2I, abs=1e-14)
    assert stieltjes_F(CHEB, 2j) == pytest.approx(oracles.ARCSINE_F_2I, abs=1e-14)


@pytest.mark.parametrize("z", [0.3 + 0.5j, -1.7 + 0.01j, 0.9 - 0.2j, 3 + 4j, -0.2 - 2j])
def test_closed_forms_off_axis(z):
    assert stieltjes_F(FREE, z) == pytest.approx(oracles.free_F(z), abs=1e-13)
    assert stieltjes_F(CHEB, z) == pytest.approx(oracles.arcsine_F(z), abs=1e-13)


@pytest.mark.parametrize("z", [0.4 + 0.3j, -1.5 + 1j, 2j])
def test_custom_head_matches_gauss_rule(z):
    ref = oracles.gauss_F(CUSTOM.head_a, CUSTOM.head_b, CUSTOM.tail_a, CUSTOM.tail_b, z)
    assert stieltjes_F(CUSTOM, z) == pytest.approx(ref, abs=1e-10)


def test_large_z_asymptotics():
    for P in (FREE, CHEB, CUSTOM):
        assert stieltjes_F(P, 1e6j) == pytest.approx(1e-6j, abs=1e-9)


def test_real_z_rejected():
    with pytest.raises(ValueError):
        stieltjes_F(FREE, 0.3)


def test_horizon_limited_params_need_explicit_closure():
    P = apply(FREE, RandomDiagonal(0.2, 0.6, seed=1, horizon=50))
    with pytest.raises(HorizonError):
        stieltjes_F(P, 1j)
    assert stieltjes_F(P.truncated(), 1j).imag > 0


def test_derivative_matches_finite_differences():
    h = 1e-5
    for P in (FREE, CUSTOM):
        for z in (0.3 + 0.5j, -0.8 + 0.1j):
            fd = (stieltjes_F(P, z + h) - stieltjes_F(P, z - h)) / (2 * h)
            assert stieltjes_dF(P, z) == pytest.approx(fd, rel=1e-7, abs=1e-9)


def test_derivative_off_spectrum_on_the_axis():
    # Free measure: F(x) = 2(sqrt(x^2 - 1) - x), F'(x) = 2(x / sqrt(x^2 - 1) - 1).
    for x in (1.25, 2.0, -3.0):
        exact = 2 * (x / (math.copysign(1, x) * math.sqrt(x * x - 1)) - 1)
        assert stieltjes_dF(FREE, x).real == pytest.approx(exact, rel=1e-12)
    assert stieltjes_dF(FREE, 1.25).real == pytest.approx(4 / 3, rel=1e-14)


def test_boundary_values_of_closed_forms():
    bv = boundary_F(FREE, 0.0)
    assert bv.F == pytest.approx(2j, abs=1e-6) and bv.err_estimate <= 1e-6 and bv.converged
    assert boundary_F(FREE, 0.3).F == pytest.approx(oracles.FREE_F_03, abs=1e-6)
    assert boundary_F(CHEB, 0.0).F == pytest.approx(1j, abs=1e-6)
    assert len(bv.eps_path) == 31 and bv.eps_path[0] == 2.0**-10 and bv.eps_path[-1] == 2.0**-40


def test_boundary_value_at_band_edge_is_flagged_not_raised():
    # The arcsine density blows up at 1: F(1 + i eps) ~ eps^-1/2.
    bv = boundary_F(CHEB, 1.0)
    assert not bv.converged and bv.message
    with pytest.raises(NotStrongLebesguePoint):
        weights(CHEB, 1.0)


def test_richardson_option():
    bv = boundary_F(FREE, 0.3, richardson=True)
    assert bv.F == pytest.approx(oracles.FREE_F_03, abs=1e-9)


def test_rank_one_transform():
    assert rank_one_F(2j, 0.0) == 2j
    assert rank_one_F(2j, 1.0) == pytest.approx(0.8 + 0.4j, abs=1e-15)
    with pytest.raises(PerturbedEigenvalue):
        rank_one_F(-1.0, 1.0)


def test_weights_free_and_arcsine():
    wb = weights(FREE, 0.0)
    assert wb.w == pytest.approx(oracles.W_FREE_0, abs=1e-9)
    assert wb.w_tilde == pytest.approx(oracles.W_TILDE_FREE_0, abs=1e-9)
    assert second_kind_weight_via_strip(FREE, 0.0) == pytest.approx(0.25 * oracles.W_FREE_0, abs=1e-9)
    wb1 = weights(FREE, 0.0, beta1=1.0)
    assert wb1.w_beta == pytest.approx(oracles.W_BETA1_FREE_0, abs=1e-9)
    wc = weights(CHEB, 0.0)
    assert wc.w == pytest.approx(1 / math.pi, abs=1e-9)
    assert wc.w_tilde == pytest.approx(1 / math.pi, abs=1e-9)
    assert second_kind_weight_via_strip(CHEB, 0.0) == pytest.approx(0.5 * 2 / math.pi, abs=1e-9)


def test_weight_bundle_invariants():
    for x in (-0.7, 0.0, 0.45):
        for beta in (-0.6, 0.3, 2.0):
            wb = weights(CUSTOM, x, beta1=beta)
            F = wb.F
            assert wb.w_tilde * abs(F) ** 2 == pytest.approx(wb.w, rel=1e-10)
            den = 1 + 2 * beta * F.real + beta * beta * abs(F) ** 2
            assert wb.w_beta * den == pytest.approx(wb.w, rel=1e-10)


def test_weight_off_support_is_zero():
    wb = weights(FREE, 2.0)
    assert wb.w == pytest.approx(0, abs=1e-9)


def test_undefined_second_kind_weight(monkeypatch):
    from cdklab import stieltjes
    from cdklab.stieltjes import BoundaryValue

    monkeypatch.setattr(stieltjes, "boundary_F", lambda *a, **k: BoundaryValue(0.0, 0j, (), 0.0, True))
    with pytest.raises(UndefinedWeight):
        stieltjes.weights(FREE, 0.0)


def test_eigenvalue_examples():
    ev = eigenvalue_and_mass(FREE, 1.0, (1.01, 2.0))
    assert ev.E == pytest.approx(1.25, abs=1e-12)
    assert ev.mass == pytest.approx(0.75, abs=1e-10)
    assert eigenvalue_and_mass(FREE, 0.4, (1.01, 3.0)) is None
    ev = eigenvalue_and_mass(FREE, -1.0, (-2.0, -1.01))
    assert ev.E == pytest.approx(-1.25, abs=1e-12)
    assert ev.mass == pytest.approx(0.75, abs=1e-10)
    assert eigenvalue_and_mass(FREE, 0.0, (1.01, 3.0)) is None


def test_eigenvalue_bracket_must_avoid_spectrum():
    with pytest.raises(ValueError):
        eigenvalue_and_mass(FREE, 1.0, (0.5, 2.0))


def test_eigenvalue_of_general_head_matches_matrix():
    # Largest eigenvalue of a big truncation of the perturbed matrix.
    beta = 1.3
    ev = eigenvalue_and_mass(CUSTOM, beta, (CUSTOM.essential_spectrum[1] + 1e-6, 10.0))
    a, b = oracles.coeffs(CUSTOM.head_a, CUSTOM.head_b, CUSTOM.tail_a, CUSTOM.tail_b, 3000)
    b[0] += beta
    vals, vecs = eigh_tridiagonal(b, a[:-1])
    k = int(np.argmax(vals))
    assert ev.E == pytest.approx(vals[k], abs=1e-10)
    assert ev.mass == pytest.approx(vecs[0, k] ** 2, abs=1e-10)
