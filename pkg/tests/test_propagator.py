import math

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import figure_params
from hpzpair.coefficients import MarkovCoefficients, PhysicalParams, RegimeTag, coefficients
from hpzpair.covariance import Covariance4, sigma_to_q
from hpzpair.errors import ConfluentSpectrumError, DivergenceError, InvalidInput
from hpzpair.gaussian import epr_initial, symplectic_eigenvalues
from hpzpair.oracle import master_equation_residual, moment_rhs, r2_quadrature
from hpzpair.propagator import (
    MarkovPropagator,
    build_drift,
    gaussian_cf,
    spectral_decompose,
)

FIGS = ["fig1", "fig2", "fig3", "fig4", "fig5"]


def _prop(fig):
    params, p, r_s = figure_params(fig)
    return MarkovPropagator(coefficients(params)), epr_initial(p, r_s)


@pytest.mark.parametrize("fig", FIGS)
def test_projector_identities(fig):
    prop, _ = _prop(fig)
    P = prop.spectrum.projectors
    for j in range(4):
        for k in range(4):
            expect = P[j] if j == k else np.zeros((4, 4))
            assert np.max(np.abs(P[j] @ P[k] - expect)) < 1e-10
    assert np.max(np.abs(P.sum(axis=0) - np.eye(4))) < 1e-10


def test_eigenvalues_match_roots():
    prop, _ = _prop("fig2")
    lam = prop.spectrum.lambdas
    roots = prop.coeffs.roots
    assert np.allclose(sorted(lam[:2], key=lambda z: z.imag), sorted([-roots.z2, -roots.z3], key=lambda z: z.imag))
    assert np.allclose(lam[2:], [1j * prop.coeffs.omega_d, -1j * prop.coeffs.omega_d])
    assert np.allclose(np.sort_complex(lam), np.sort_complex(np.linalg.eigvals(prop.drift)))


def test_reconstruction():
    prop, _ = _prop("fig2")
    assert np.max(np.abs(prop.spectrum.reconstruct() - prop.drift)) < 1e-12


def test_exp_against_expm(rng):
    prop, _ = _prop("fig4")
    for t in rng.uniform(0, 30, 5):
        assert np.allclose(prop.exp_drift(t), expm(-prop.drift * t), rtol=1e-10, atol=1e-12)
        assert np.allclose(prop.exp_drift(t, sign=1), expm(prop.drift * t), rtol=1e-10, atol=1e-10)


def test_semigroup(rng):
    prop, _ = _prop("fig1")
    for t1, t2 in rng.uniform(0, 20, (10, 2)):
        lhs = prop.exp_drift(t1, 1) @ prop.exp_drift(t2, 1)
        assert np.max(np.abs(lhs - prop.exp_drift(t1 + t2, 1))) < 1e-9 * max(1.0, np.abs(lhs).max())


def test_vectorised_times_match_scalar():
    prop, s0 = _prop("fig3")
    ts = np.array([0.0, 1.5, 40.0])
    many = prop.evolve_many(s0, ts)
    for t, s in zip(ts, many):
        assert np.allclose(s, prop.evolve(s0, t).sigma, rtol=1e-14, atol=1e-12)


def test_initial_value():
    prop, s0 = _prop("fig2")
    assert np.allclose(prop.evolve(s0, 0.0).sigma, s0.sigma, atol=1e-12)
    assert np.all(prop.r2(0.0) == 0.0)


@pytest.mark.parametrize("fig", ["fig1", "fig2", "fig4"])
def test_r2_against_quadrature(fig):
    prop, _ = _prop(fig)
    for t in (0.3, 7.0, 25.0):
        assert np.max(np.abs(prop.r2(t) - r2_quadrature(prop.drift, prop.R, t))) < 1e-8


@pytest.mark.parametrize("fig", FIGS)
def test_r2_infinity_entries(fig):
    prop, _ = _prop(fig)
    c = prop.coeffs
    r2 = prop.r2(math.inf)
    assert r2[0, 0] == pytest.approx(c.D_pp / (4 * c.lam), abs=1e-10)
    assert r2[1, 1] == pytest.approx((c.D_pp + 8 * c.D_px * c.lam * c.m) / (16 * c.lam * c.m**2 * c.omega_c_sq), abs=1e-10)
    assert np.all(r2[2:, :] == 0) and np.all(r2[:, 2:] == 0)
    assert np.allclose(prop.r2(5000.0), r2, atol=1e-12)


def test_r2_symmetric_and_real(rng):
    prop, _ = _prop("fig1")
    r = prop.r2(rng.uniform(0, 100, 20))
    assert r.shape == (20, 4, 4)
    assert np.all(r == np.swapaxes(r, -1, -2))


def test_cm_fixed_point():
    prop, _ = _prop("fig2")
    q = prop.r2(math.inf)
    assert np.max(np.abs(moment_rhs(q, prop.drift, prop.R)[:2, :2])) < 1e-12


@pytest.mark.parametrize("fig", FIGS)
def test_rate_matches_moment_equation_and_fd(fig, rng):
    prop, s0 = _prop(fig)
    q0 = sigma_to_q(s0.sigma)
    h = 1e-6
    for t in rng.uniform(0.1, 50, 5):
        rate = prop.quadratic_form_rate(q0, t)
        rhs = moment_rhs(prop.quadratic_form(q0, t), prop.drift, prop.R)
        assert np.max(np.abs(rate - rhs)) < 1e-9 * max(1.0, np.abs(rhs).max())
        fd = (prop.quadratic_form(q0, t + h) - prop.quadratic_form(q0, t - h)) / (2 * h)
        assert np.max(np.abs(fd - rhs)) < 1e-6 * max(1.0, np.abs(q0).max())


@pytest.mark.parametrize("fig", FIGS)
def test_master_equation_substitution(fig, rng):
    prop, s0 = _prop(fig)
    q0 = sigma_to_q(s0.sigma)
    for t, w in zip(rng.uniform(0, 50, 20), rng.normal(size=(20, 4))):
        r = master_equation_residual(prop.coeffs, prop.quadratic_form(q0, t), prop.quadratic_form_rate(q0, t), w)
        assert abs(r) < 1e-8


def test_transpose_placement_matters(rng):
    """Putting the transpose on the right projector breaks the substitution check."""
    prop, s0 = _prop("fig1")
    P = prop.spectrum.projectors[:2]
    lam = prop.spectrum.lambdas[:2]
    t = 3.0
    wrong = sum(
        P[k] @ prop.R @ P[l].T * (1 - np.exp(-(lam[k] + lam[l]) * t)) / (lam[k] + lam[l]) for k in range(2) for l in range(2)
    ).real
    assert np.max(np.abs(wrong - prop.r2(t))) > 1e-3


def test_asymptotic_matches_evolution():
    prop, s0 = _prop("fig4")
    t = 6000.0  # cross blocks decay like exp(-lambda t), lambda ~ 0.0078
    assert np.allclose(prop.asymptotic(s0, t).sigma, prop.evolve(s0, t).sigma, atol=1e-10)


def test_relative_block_period():
    prop, s0 = _prop("fig4")
    T = prop.coeffs.asymptotic_period
    a = prop.asymptotic(s0, 5000.0).sigma[2:, 2:]
    b = prop.asymptotic(s0, 5000.0 + T).sigma[2:, 2:]
    c = prop.asymptotic(s0, 5000.0 + T / 3).sigma[2:, 2:]
    assert np.allclose(a, b, atol=1e-10)
    assert not np.allclose(a, c, atol=1e-3)


def test_characteristic_function_consistency(rng):
    prop, s0 = _prop("fig2")
    cf0 = gaussian_cf(sigma_to_q(s0.sigma))
    for t, w in zip(rng.uniform(0, 20, 5), rng.normal(scale=0.05, size=(5, 4))):
        q = sigma_to_q(prop.evolve(s0, t).sigma)
        assert prop.characteristic(w, t, cf0) == pytest.approx(math.exp(-w @ q @ w), rel=1e-10)


def test_closed_system_conserves_spectrum():
    prop = MarkovPropagator(coefficients(PhysicalParams(gamma=0.0, kappa=0.5)))
    s0 = epr_initial(1.3, 0.8)
    for t in (0.0, 3.3, 17.0):
        s = symplectic_eigenvalues(prop.evolve(s0, t))
        assert s.nu1 == pytest.approx(1.3, abs=1e-10) and s.nu2 == pytest.approx(1.3, abs=1e-10)
    assert np.all(prop.r2(np.inf) == 0)


def test_divergence_without_damping():
    c = MarkovCoefficients.from_abcd(0.0, 0.0, 0.0, 0.1, PhysicalParams(gamma=0.0), RegimeTag.EXACT_FINITE_T)
    prop = MarkovPropagator(c)
    with pytest.raises(DivergenceError):
        prop.r2(math.inf)


def test_confluent_spectra():
    c = coefficients(PhysicalParams())
    drift = build_drift(c)
    drift[0, 0] = 2 * math.sqrt(c.omega_c_sq)  # lambda = omega_c
    with pytest.raises(ConfluentSpectrumError):
        spectral_decompose(drift)
    with pytest.raises(ConfluentSpectrumError):
        MarkovPropagator(coefficients(PhysicalParams(kappa=-0.25)))


def test_negative_time_rejected():
    prop, s0 = _prop("fig1")
    with pytest.raises(InvalidInput):
        prop.evolve(s0, -1.0)
    with pytest.raises(InvalidInput):
        prop.r2(-0.1)


def test_closed_system_drift_entries():
    c = coefficients(PhysicalParams(gamma=0.0, kappa=0.0))
    M = build_drift(c)
    expect = np.zeros((4, 4))
    expect[0, 1], expect[1, 0], expect[2, 3], expect[3, 2] = 0.5, -2.0, 2.0, -0.5
    assert np.array_equal(M, expect)
    sp = spectral_decompose(M)
    assert np.allclose(sp.lambdas[2:], [1j, -1j])
    lower = (sp.projectors[2] + sp.projectors[3])[2:, 2:]
    assert np.allclose(lower, np.eye(2), atol=1e-14)


@pytest.mark.parametrize("fig", FIGS)
def test_trace_is_two_lambda(fig):
    prop, _ = _prop(fig)
    assert np.trace(prop.drift) == pytest.approx(2 * prop.coeffs.lam, rel=1e-14)


def test_underdamped_pair_is_conjugate():
    prop, _ = _prop("fig2")
    lam, P = prop.spectrum.lambdas, prop.spectrum.projectors
    assert prop.coeffs.lam < prop.coeffs.omega_c
    assert lam[0] == pytest.approx(np.conj(lam[1]))
    assert np.allclose(P[0], np.conj(P[1]), atol=1e-14)


def test_large_time_rotation_block():
    prop, _ = _prop("fig4")
    wd, t = prop.coeffs.omega_d, 6000.0
    E = prop.exp_drift(t)
    rot = [[math.cos(wd * t), -2 / wd * math.sin(wd * t)], [wd / 2 * math.sin(wd * t), math.cos(wd * t)]]
    assert np.max(np.abs(E[:2, :2])) < 1e-15
    assert np.allclose(E[2:, 2:], rot, atol=1e-9)


def test_asymptotic_at_fifty_decay_times():
    prop, s0 = _prop("fig4")
    t = 50 / prop.coeffs.lam
    assert np.max(np.abs(prop.asymptotic(s0, t).sigma - prop.evolve(s0, t).sigma)) < 1e-8


def test_asymptotic_cm_block_constant():
    prop, s0 = _prop("fig4")
    a = prop.asymptotic(s0, 100.0).sigma[:2, :2]
    b = prop.asymptotic(s0, 137.3).sigma[:2, :2]
    assert np.array_equal(a, b)


def test_trace_preserved():
    prop, s0 = _prop("fig1")
    cf0 = gaussian_cf(sigma_to_q(s0.sigma))
    for t in (0.0, 1.0, 50.0, 1e4):
        assert prop.characteristic(np.zeros(4), t, cf0) == 1.0


def test_asymptotic_characteristic_function(rng):
    prop, s0 = _prop("fig4")
    cf0 = gaussian_cf(sigma_to_q(s0.sigma))
    t = 6000.0
    q = sigma_to_q(prop.asymptotic(s0, t).sigma)
    for w in rng.normal(scale=0.1, size=(5, 4)):
        assert prop.characteristic(w, t, cf0).real == pytest.approx(math.exp(-w @ q @ w), rel=1e-9)


def test_cm_relative_decoupling():
    prop, _ = _prop("fig3")
    s0 = Covariance4(np.diag([2.0, 3.0, 1.5, 4.0]))
    sig = prop.evolve_many(s0, np.linspace(0, 100, 11))
    assert np.all(sig[:, :2, 2:] == 0) and np.all(sig[:, 2:, :2] == 0)


def test_r2_monotone(rng):
    prop, _ = _prop("fig2")
    ts = np.linspace(0, 200, 401)
    r = prop.r2(ts)
    for w in rng.normal(size=(10, 4)):
        v = np.einsum("i,tij,j->t", w, r, w)
        assert np.all(np.diff(v) >= -1e-12 * max(1.0, abs(v).max()))
