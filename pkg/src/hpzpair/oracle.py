"""Brute-force validators for the closed-form pipeline.

Nothing here is used on the production path.  Each routine reaches the same
quantity by a different road: fixed-step RK4 on the moment equation,
unsimplified coefficient expressions, truncated spectral series, adaptive
quadrature with a dense matrix exponential.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import expm

from . import _accel
from ._accel import njit
from .coefficients import MarkovCoefficients, PhysicalParams
from .covariance import Covariance4, Frame, q_to_sigma, sigma_to_q
from .errors import StepSizeError
from .special import CubicRoots, k_function

DT_SAFETY = 1e-3
#: Default step is the admissible maximum divided by this; at the maximum the
#: truncation error on large squeezed states is a few 1e-8.
DEFAULT_REFINE = 4


# ---------------------------------------------------------------------------
# moment equation
# ---------------------------------------------------------------------------


def moment_rhs(Q: np.ndarray, M: np.ndarray, R: np.ndarray) -> np.ndarray:
    """dQ/dt = -M^T Q - Q M + R_sym."""
    r_sym = 0.5 * (R + R.T)
    out = -M.T @ Q - Q @ M + r_sym
    return 0.5 * (out + out.T)


@njit
def _rhs_nb(Q, M, R, out):
    for i in range(4):
        for j in range(4):
            acc = 0.5 * (R[i, j] + R[j, i])
            for k in range(4):
                acc -= M[k, i] * Q[k, j] + Q[i, k] * M[k, j]
            out[i, j] = acc


@njit
def _rk4_nb(Q0, M, R, dt, n_steps, stride, out):
    Q = Q0.copy()
    k1 = np.empty((4, 4))
    k2 = np.empty((4, 4))
    k3 = np.empty((4, 4))
    k4 = np.empty((4, 4))
    tmp = np.empty((4, 4))
    out[0] = Q
    rec = 1
    for step in range(1, n_steps + 1):
        _rhs_nb(Q, M, R, k1)
        for i in range(4):
            for j in range(4):
                tmp[i, j] = Q[i, j] + 0.5 * dt * k1[i, j]
        _rhs_nb(tmp, M, R, k2)
        for i in range(4):
            for j in range(4):
                tmp[i, j] = Q[i, j] + 0.5 * dt * k2[i, j]
        _rhs_nb(tmp, M, R, k3)
        for i in range(4):
            for j in range(4):
                tmp[i, j] = Q[i, j] + dt * k3[i, j]
        _rhs_nb(tmp, M, R, k4)
        for i in range(4):
            for j in range(4):
                Q[i, j] += dt / 6.0 * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
        if step % stride == 0:
            out[rec] = Q
            rec += 1
    return out


def _compose(a, b):
    """(I + a)(I + b) - I, keeping only the small part."""
    return a + b + a @ b


def _rk4_np(Q0, M, R, dt, n_steps, stride, out):
    """Same RK4 recursion without a Python loop over steps.

    The moment equation is linear with constant coefficients, so one RK4
    step is a fixed affine map on vec(Q).  It is assembled once as a 17x17
    augmented matrix I + E, raised to the ``stride`` power by repeated
    squaring and applied once per output sample.  Only E is ever stored so
    rounding stays relative to the per-step increment.
    """
    eye = np.eye(4)
    # vec(-M^T Q - Q M) = L vec(Q) for row-major vec
    L = -(np.kron(M.T, eye) + np.kron(eye, M.T))
    r = (0.5 * (R + R.T)).ravel()
    hL = dt * L
    E = np.zeros((17, 17))
    term = np.eye(16)
    shift = np.zeros((16, 16))
    for k in range(1, 5):
        shift += term / math.factorial(k)
        term = term @ hL
        E[:16, :16] += term / math.factorial(k)
    E[:16, 16] = dt * shift @ r

    acc = np.zeros((17, 17))
    base, n = E, stride
    while n:
        if n & 1:
            acc = _compose(acc, base)
        n >>= 1
        if n:
            base = _compose(base, base)

    v = np.append(np.asarray(Q0, dtype=float).ravel(), 1.0)
    out[0] = Q0
    for rec in range(1, n_steps // stride + 1):
        v = v + acc @ v
        q = v[:16].reshape(4, 4)
        out[rec] = 0.5 * (q + q.T)
    return out


def max_step(M: np.ndarray, omega: float = 1.0) -> float:
    """Largest admissible RK4 step, 1e-3 / max(Omega, omega_d, omega_c, 2 lambda).

    The rates are read back from the drift entries.
    """
    m = 1.0 / (2.0 * M[0, 1])
    lam = 0.5 * M[0, 0]
    wc = math.sqrt(abs(M[1, 0]) / (2.0 * m))
    wd = math.sqrt(abs(M[3, 2]) * 2.0 / m)
    return DT_SAFETY / max(omega, wd, wc, 2.0 * abs(lam))


def integrate_trajectory(M, R, sigma0: Covariance4, t_end: float, dt: float | None = None, n_out: int = 2, omega: float = 1.0):
    """RK4 in the quadratic-form representation, sampled at ``n_out`` times.

    Returns ``(times, sigmas)`` with ``times = linspace(0, t_end, n_out)``.
    The step actually used is the largest value <= ``dt`` that divides every
    sampling interval evenly.
    """
    sigma0.expect(Frame.CMR)
    M = np.ascontiguousarray(M, dtype=float)
    R = np.ascontiguousarray(R, dtype=float)
    bound = max_step(M, omega)
    if dt is None:
        dt = bound / DEFAULT_REFINE
    elif dt > bound * (1 + 1e-12):
        raise StepSizeError(f"dt = {dt:g} exceeds the stability bound {bound:g}")
    if n_out < 2:
        raise ValueError("n_out must be >= 2")
    intervals = n_out - 1
    stride = max(1, math.ceil(t_end / intervals / dt)) if t_end > 0 else 1
    n_steps = stride * intervals
    h = t_end / n_steps
    q0 = np.ascontiguousarray(sigma_to_q(sigma0.sigma))
    out = np.empty((n_out, 4, 4))
    kernel = _rk4_nb if _accel.use_numba() else _rk4_np
    kernel(q0, M, R, h, n_steps, stride, out)
    return np.linspace(0.0, t_end, n_out), q_to_sigma(out)


def integrate_moments(M, R, sigma0: Covariance4, t_end: float, dt: float | None = None, omega: float = 1.0) -> Covariance4:
    """Covariance at ``t_end`` from fixed-step RK4 on the moment equation."""
    _, sig = integrate_trajectory(M, R, sigma0, t_end, dt, 2, omega)
    return Covariance4(sig[-1], Frame.CMR)


# ---------------------------------------------------------------------------
# unsimplified coefficients
# ---------------------------------------------------------------------------


def AB_long(roots: CubicRoots, M: float) -> tuple[float, float]:
    """A and B with the (Oc + z2)(Oc + z3) denominators kept."""
    g, oc = roots.gamma, roots.omega_c
    _, z2, z3 = roots
    den = (oc + z2) * (oc + z3)
    A = -2.0 * M * g * oc**2 * (oc + z2 + z3) / den
    B = 2.0 * g * oc**2 / den
    return A.real, B.real


def CD_long(roots: CubicRoots, params: PhysicalParams, branch: str = "auto") -> tuple[complex, complex]:
    """C and D before Vieta simplification: cyclic single-integral sum plus
    the triple-integral remainder.  Returned complex so the caller can check
    the imaginary residue."""
    g, oc, T, M = params.gamma, params.omega_c, params.temperature, params.M
    z = roots.as_array()
    K = np.asarray(k_function(z, params.nu, oc, branch))
    z1, z2, z3 = z
    k1, k2, k3 = K
    pi = math.pi

    cyc_c = 0j
    cyc_d = 0j
    for a, b, c, ka in ((z1, z2, z3, k1), (z2, z3, z1, k2), (z3, z1, z2, k3)):
        base = 2.0 * g * oc**2 / (pi * (oc - a) * (a - b) * (a - c)) * ka
        cyc_c += base * a
        cyc_d += base * M * a * a

    prod = (oc + z1) * (oc + z2) * (oc + z3)
    g4 = 4.0 * g * g * oc**4
    C = (
        cyc_c
        - g4 * T / (z1 * (z1 + z2) * (z1 + z3) * prod)
        - g4 * (z1**2 * (z2 + z3) + oc * (z1**2 + z2 * z3)) / (pi * (z1**2 - z2**2) * (z1**2 - z3**2) * (oc - z1) * prod) * k1
        + g4 * z2 / (pi * (z1**2 - z2**2) * (z2 - z3) * (oc**2 - z2**2) * (oc + z3)) * k2
        + g4 * z3 / (pi * (z1**2 - z3**2) * (z3 - z2) * (oc**2 - z3**2) * (oc + z2)) * k3
    )
    D = (
        cyc_d
        + g4 * M * T / ((z1 + z2) * (z1 + z3) * prod)
        - g4 * M * z1**2 * (z1**2 + z2 * z3 + oc * (z2 + z3)) / (pi * (z1**2 - z2**2) * (z1**2 - z3**2) * (oc - z1) * prod) * k1
        + g4 * M * z2**2 / (pi * (z1**2 - z2**2) * (z2 - z3) * (oc**2 - z2**2) * (oc + z3)) * k2
        + g4 * M * z3**2 / (pi * (z1**2 - z3**2) * (z3 - z2) * (oc**2 - z3**2) * (oc + z2)) * k3
    )
    return complex(C), complex(D)


# ---------------------------------------------------------------------------
# spectral series
# ---------------------------------------------------------------------------


def _mode_weights(nu: float, n_terms: int) -> np.ndarray:
    """Eigenvalues of one thermal mode, 2/(nu+1) ((nu-1)/(nu+1))^N."""
    r = (nu - 1.0) / (nu + 1.0)
    return 2.0 / (nu + 1.0) * r ** np.arange(n_terms)


def entropy_series(nu1: float, nu2: float, n_terms: int = 500) -> float:
    """-sum lambda ln lambda over the truncated two-mode spectrum."""
    lam = np.outer(_mode_weights(nu1, n_terms), _mode_weights(nu2, n_terms)).ravel()
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


def schatten_series(nu1: float, nu2: float, n_terms: int = 500) -> float:
    """sum |lambda| over the truncated spectrum; negative weights allowed."""
    a = np.abs(_mode_weights(nu1, n_terms))
    b = np.abs(_mode_weights(nu2, n_terms))
    return float(a.sum() * b.sum())


def purity_det(sigma) -> float:
    """Tr rho^2 = 1 / sqrt(det sigma) for a two-mode Gaussian state."""
    return 1.0 / math.sqrt(np.linalg.det(np.asarray(sigma, dtype=float)))


# ---------------------------------------------------------------------------
# diffusion integral and master equation
# ---------------------------------------------------------------------------


def r2_quadrature(M: np.ndarray, R: np.ndarray, t: float, epsabs: float = 1e-12) -> np.ndarray:
    """int_0^t exp(-M^T s) R_sym exp(-M s) ds with a dense expm per node."""
    r_sym = 0.5 * (R + R.T)

    def integrand(s):
        E = expm(-M * s)
        return E.T @ r_sym @ E

    val, _ = quad_vec(integrand, 0.0, t, epsabs=epsabs, epsrel=1e-12, limit=2000)
    return 0.5 * (val + val.T)


def master_equation_residual(coeffs: MarkovCoefficients, Q: np.ndarray, Qdot: np.ndarray, w) -> float:
    """Residual per unit rho_c of the constant-coefficient equation for
    rho_c = exp(-w^T Q w), written out with the named constants.

    With w = (Delta, K, delta, k), every first derivative of rho_c equals
    -2 (Q w)_i rho_c.
    """
    d, K, dl, k = np.asarray(w, dtype=float)
    m, lam = coeffs.m, coeffs.lam
    grad = -2.0 * (Q @ np.asarray(w, dtype=float))
    lhs = (
        -float(w @ Qdot @ w)
        + (K / (2.0 * m) + 2.0 * lam * d) * grad[0]
        - 2.0 * m * coeffs.omega_c_sq * d * grad[1]
        + 2.0 * k / m * grad[2]
        - m * coeffs.omega_d_sq * dl / 2.0 * grad[3]
    )
    rhs = 2.0 * coeffs.D_px * d * K - coeffs.D_pp * d * d
    return lhs - rhs
