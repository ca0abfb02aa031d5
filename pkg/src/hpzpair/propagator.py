"""Closed-form Markovian evolution in CMR phase space.

The characteristic function obeys

    rho_c(w, t) = rho_c0(exp(-M t) w) * exp(-w^T R2(t) w)

with M the 4x4 drift matrix over (Delta, K, delta, k) and R2(t) the
accumulated diffusion.  Everything is built from the spectral projectors
of M, so no matrix exponential is ever formed numerically.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coefficients import MarkovCoefficients, PhysicalParams, RegimeTag, coefficients
from .covariance import Covariance4, Frame, q_to_sigma, sigma_to_q
from .errors import ConfluentSpectrumError, DivergenceError, ImaginaryResidue, InvalidInput

CONFLUENT_TOL = 1e-10
IMAG_TOL = 1e-10


def build_drift(coeffs: MarkovCoefficients) -> np.ndarray:
    """Drift matrix of the characteristics, d w / dt = M w (hbar = 1)."""
    m = coeffs.m
    drift = np.zeros((4, 4))
    drift[0, 0] = 2.0 * coeffs.lam
    drift[0, 1] = 1.0 / (2.0 * m)
    drift[1, 0] = -2.0 * m * coeffs.omega_c_sq
    drift[2, 3] = 2.0 / m
    drift[3, 2] = -m * coeffs.omega_d_sq / 2.0
    return drift


def diffusion_matrix(coeffs: MarkovCoefficients) -> np.ndarray:
    """R with w^T R w = D_pp Delta^2 - 2 D_px Delta K."""
    R = np.zeros((4, 4))
    R[0, 0] = coeffs.D_pp
    R[0, 1] = R[1, 0] = -coeffs.D_px
    return R


@dataclass(frozen=True, eq=False)
class DriftSpectrum:
    """Eigenvalues Lambda_1..4 and rank-one projectors P_1..4 of the drift matrix."""

    lambdas: np.ndarray  # (4,) complex
    projectors: np.ndarray  # (4, 4, 4) complex

    def exp(self, t, sign: int = -1) -> np.ndarray:
        """exp(sign * M t) for scalar or 1-d array ``t``."""
        t_arr = np.asarray(t, dtype=float)
        phases = np.exp(sign * np.multiply.outer(t_arr, self.lambdas))
        out = np.einsum("...j,jab->...ab", phases, self.projectors)
        return _checked_real(out, "exp(M t)")

    def exp_rate(self, t, sign: int = -1) -> np.ndarray:
        """d/dt exp(sign * M t)."""
        t_arr = np.asarray(t, dtype=float)
        phases = sign * self.lambdas * np.exp(sign * np.multiply.outer(t_arr, self.lambdas))
        out = np.einsum("...j,jab->...ab", phases, self.projectors)
        return _checked_real(out, "d exp(M t)/dt")

    def reconstruct(self) -> np.ndarray:
        return _checked_real(np.einsum("j,jab->ab", self.lambdas, self.projectors), "M")


def _checked_real(values: np.ndarray, name: str) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(values.real))) if values.size else 1.0)
    if values.size and float(np.max(np.abs(values.imag))) > IMAG_TOL * scale:
        raise ImaginaryResidue(f"{name} keeps imaginary part {np.max(np.abs(values.imag)):.3e}")
    return np.ascontiguousarray(values.real)


def spectral_decompose(drift: np.ndarray) -> DriftSpectrum:
    """Closed-form eigenvalues and projectors of the block drift matrix.

    Raises:
        ConfluentSpectrumError: at critical damping (lambda = omega_c) or
            omega_d = 0, where M is not diagonalisable.
    """
    drift = np.asarray(drift, dtype=float)
    m = 1.0 / (2.0 * drift[0, 1])
    lam = drift[0, 0] / 2.0
    wc2 = -drift[1, 0] / (2.0 * m)
    wd2 = -2.0 * drift[3, 2] / m
    if abs(wc2) < 1e-300 or abs(lam * lam - wc2) <= CONFLUENT_TOL * abs(wc2):
        raise ConfluentSpectrumError(f"critical damping: lambda^2 = {lam * lam:g}, omega_c^2 = {wc2:g}")
    if wd2 <= 0 or math.sqrt(wd2) <= CONFLUENT_TOL:
        raise ConfluentSpectrumError(f"omega_d^2 = {wd2:g}: relative block is not oscillatory")
    root = cmath.sqrt(complex(lam * lam - wc2))
    wd = math.sqrt(wd2)
    lambdas = np.array([lam + root, lam - root, 1j * wd, -1j * wd], dtype=complex)

    projectors = np.zeros((4, 4, 4), dtype=complex)
    for j in (0, 1):
        L = lambdas[j]
        pref = 1.0 / (1.0 - L * L / wc2)
        projectors[j, 0, 0] = -pref * L * L / wc2
        projectors[j, 0, 1] = -pref * L / (2.0 * m * wc2)
        projectors[j, 1, 0] = pref * 2.0 * m * L
        projectors[j, 1, 1] = pref
    for j in (2, 3):
        L = lambdas[j]
        projectors[j, 2, 2] = 0.5
        projectors[j, 2, 3] = 1.0 / (m * L)
        projectors[j, 3, 2] = m * L / 4.0
        projectors[j, 3, 3] = 0.5
    return DriftSpectrum(lambdas, projectors)


def exp_drift(spectrum: DriftSpectrum, t, sign: int = -1) -> np.ndarray:
    if np.any(np.asarray(t) < 0):
        raise InvalidInput("t must be non-negative")
    return spectrum.exp(t, sign)


def _accumulation_weight(x: np.ndarray, t) -> np.ndarray:
    """(1 - exp(-x t)) / x with the x -> 0 limit t; t may be infinite."""
    tt = np.multiply.outer(np.asarray(t, dtype=float), np.ones(x.shape))
    xx = np.broadcast_to(x, tt.shape)
    out = np.empty(tt.shape, dtype=complex)
    inf = np.isinf(tt)
    fin = ~inf
    xt = xx[fin] * tt[fin]
    small = np.abs(xt) < 1e-8
    vals = np.empty_like(xt)
    vals[small] = tt[fin][small] * (1.0 - 0.5 * xt[small])
    vals[~small] = -np.expm1(-xt[~small]) / xx[fin][~small]
    out[fin] = vals
    with np.errstate(divide="ignore"):
        out[inf] = 1.0 / xx[inf]
    return out


def _pair_terms(spectrum: DriftSpectrum, R: np.ndarray):
    P = spectrum.projectors[:2]
    terms = np.einsum("kba,bc,lcd->klad", P, R, P)  # P_k^T R P_l
    sums = spectrum.lambdas[:2, None] + spectrum.lambdas[None, :2]
    return terms, sums


def r2_matrix(spectrum: DriftSpectrum, R: np.ndarray, t) -> np.ndarray:
    """Accumulated diffusion R2(t) = sum_kl P_k^T R P_l (1 - e^{-(L_k+L_l)t}) / (L_k+L_l).

    ``t`` may be ``math.inf`` for the asymptotic value, or a 1-d array.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InvalidInput("t must be non-negative")
    if not np.any(R):
        return np.zeros(t_arr.shape + (4, 4))
    terms, sums = _pair_terms(spectrum, R)
    if np.any(np.isinf(t_arr)) and np.any(sums.real <= 0) and np.any(R != 0):
        raise DivergenceError("R2(t) has no t -> infinity limit when lambda = 0 and diffusion is on")
    weights = _accumulation_weight(sums, t_arr)
    out = np.einsum("...kl,klad->...ad", weights, terms)
    out = _checked_real(out, "R2")
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def r2_rate(spectrum: DriftSpectrum, R: np.ndarray, t) -> np.ndarray:
    """d R2 / dt = sum_kl P_k^T R P_l exp(-(L_k+L_l) t)."""
    terms, sums = _pair_terms(spectrum, R)
    phases = np.exp(-np.multiply.outer(np.asarray(t, dtype=float), sums))
    out = _checked_real(np.einsum("...kl,klad->...ad", phases, terms), "dR2/dt")
    return 0.5 * (out + np.swapaxes(out, -1, -2))


class MarkovPropagator:
    """Drift spectrum plus diffusion kernel for one parameter set.

    Immutable after construction; safe to share between workers.
    """

    def __init__(self, coeffs: MarkovCoefficients):
        self.coeffs = coeffs
        self.drift = build_drift(coeffs)
        self.R = diffusion_matrix(coeffs)
        self.spectrum = spectral_decompose(self.drift)
        self.drift.setflags(write=False)
        self.R.setflags(write=False)

    @classmethod
    def from_params(cls, params: PhysicalParams, regime=RegimeTag.EXACT_FINITE_T) -> "MarkovPropagator":
        return cls(coefficients(params, regime))

    def exp_drift(self, t, sign: int = -1) -> np.ndarray:
        return exp_drift(self.spectrum, t, sign)

    def r2(self, t) -> np.ndarray:
        return r2_matrix(self.spectrum, self.R, t)

    def quadratic_form(self, q0: np.ndarray, t) -> np.ndarray:
        """Q(t) = E^T Q0 E + R2(t) with E = exp(-M t); vectorised over ``t``."""
        E = self.exp_drift(t)
        q = np.swapaxes(E, -1, -2) @ q0 @ E + self.r2(t)
        return 0.5 * (q + np.swapaxes(q, -1, -2))

    def quadratic_form_rate(self, q0: np.ndarray, t) -> np.ndarray:
        """dQ/dt from the spectral forms of dE/dt and dR2/dt."""
        E = self.exp_drift(t)
        dE = self.spectrum.exp_rate(t)
        ET = np.swapaxes(E, -1, -2)
        dET = np.swapaxes(dE, -1, -2)
        return dET @ q0 @ E + ET @ q0 @ dE + r2_rate(self.spectrum, self.R, t)

    def evolve(self, sigma0: Covariance4, t: float) -> Covariance4:
        return evolve_covariance(self, sigma0, t)

    def evolve_many(self, sigma0: Covariance4, times) -> np.ndarray:
        """CMR covariances at every time in ``times`` as an (n, 4, 4) array."""
        sigma0.expect(Frame.CMR)
        times = np.asarray(times, dtype=float)
        return q_to_sigma(self.quadratic_form(sigma_to_q(sigma0.sigma), times))

    def asymptotic(self, sigma0: Covariance4, t: float) -> Covariance4:
        return asymptotic_covariance(self, sigma0, t)

    def characteristic(self, w, t: float, initial_cf: Callable) -> complex:
        return evaluate_characteristic(self, w, t, initial_cf)


def evolve_covariance(prop: MarkovPropagator, sigma0: Covariance4, t: float) -> Covariance4:
    """CMR covariance at time ``t`` from the closed-form solution."""
    sigma0.expect(Frame.CMR)
    if t < 0:
        raise InvalidInput("t must be non-negative")
    q = prop.quadratic_form(sigma_to_q(sigma0.sigma), float(t))
    return Covariance4(q_to_sigma(q), Frame.CMR)


def asymptotic_covariance(prop: MarkovPropagator, sigma0: Covariance4, t: float) -> Covariance4:
    """Long-time covariance: stationary CM block, rotating relative block."""
    sigma0.expect(Frame.CMR)
    spec = prop.spectrum
    phases = np.exp(-spec.lambdas[2:] * t)
    E_rel = _checked_real(np.einsum("j,jab->ab", phases, spec.projectors[2:]), "exp(M t)")
    q0 = sigma_to_q(sigma0.sigma)
    q = E_rel.T @ q0 @ E_rel + prop.r2(math.inf)
    return Covariance4(q_to_sigma(q), Frame.CMR)


def gaussian_cf(q0: np.ndarray) -> Callable:
    """Zero-mean Gaussian characteristic function exp(-w^T Q0 w)."""
    q0 = np.asarray(q0, dtype=float)
    return lambda w: complex(np.exp(-np.asarray(w) @ q0 @ np.asarray(w)))


def evaluate_characteristic(prop: MarkovPropagator, w, t: float, initial_cf: Callable) -> complex:
    """rho_c(w, t) for an arbitrary initial characteristic function."""
    w = np.asarray(w, dtype=float)
    w0 = prop.exp_drift(float(t)) @ w
    return complex(initial_cf(w0)) * math.exp(-float(w @ prop.r2(float(t)) @ w))
