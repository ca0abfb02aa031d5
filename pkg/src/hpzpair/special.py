"""Cubic roots of the Lorentz-Drude problem, complex digamma and the K kernel.

All quantities are dimensionless with hbar = m = Omega = 1.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit
from .errors import DomainError, NonConvergence, PoleError

#: Below this k_B T / (hbar Omega) the finite-temperature K kernel is
#: replaced by its closed T = 0 form.
ZERO_T_THRESHOLD = 1e-8

_POLE_TOL = 1e-12
_ASYMPTOTIC_RADIUS = 15.0

# B_2k / (2k) for k = 1..9
_BERNOULLI_OVER_2K = np.array(
    [
        1.0 / 6.0 / 2.0,
        -1.0 / 30.0 / 4.0,
        1.0 / 42.0 / 6.0,
        -1.0 / 30.0 / 8.0,
        5.0 / 66.0 / 10.0,
        -691.0 / 2730.0 / 12.0,
        7.0 / 6.0 / 14.0,
        -3617.0 / 510.0 / 16.0,
        43867.0 / 798.0 / 18.0,
    ]
)


# ---------------------------------------------------------------------------
# cubic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CubicRoots:
    """Roots of ``z^3 + Oc z^2 + O^2 z + O^2 Oc - 2 g Oc^2``, ordered by real part."""

    z1: complex
    z2: complex
    z3: complex
    omega: float
    omega_c: float
    gamma: float

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2, self.z3], dtype=complex)

    def __iter__(self):
        return iter((self.z1, self.z2, self.z3))

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return _cubic_coefficients(self.omega, self.omega_c, self.gamma)

    def residuals(self) -> np.ndarray:
        a2, a1, a0 = self.coefficients
        z = self.as_array()
        return np.abs(((z + a2) * z + a1) * z + a0)

    def vieta_residuals(self) -> tuple[float, float, float]:
        z1, z2, z3 = self.z1, self.z2, self.z3
        a2, a1, a0 = self.coefficients
        return (
            abs(z1 + z2 + z3 + a2),
            abs(z1 * z2 + z2 * z3 + z3 * z1 - a1),
            abs(z1 * z2 * z3 + a0),
        )

    @property
    def stable(self) -> bool:
        return max(self.z1.real, self.z2.real, self.z3.real) < 0.0

    def min_separation(self) -> float:
        z1, z2, z3 = self.z1, self.z2, self.z3
        return min(abs(z1 - z2), abs(z1 - z3), abs(z2 - z3))


def _cubic_coefficients(omega, omega_c, gamma):
    return (omega_c, omega * omega, omega * omega * omega_c - 2.0 * gamma * omega_c * omega_c)


def _newton_polish(z, a2, a1, a0):
    p = ((z + a2) * z + a1) * z + a0
    dp = (3.0 * z + 2.0 * a2) * z + a1
    if dp == 0:
        return z
    z_new = z - p / dp
    p_new = ((z_new + a2) * z_new + a1) * z_new + a0
    return z_new if abs(p_new) <= abs(p) else z


def solve_cubic(omega: float, omega_c: float, gamma: float) -> CubicRoots:
    """Roots z1, z2, z3 of the Lorentz-Drude cubic.

    Companion-matrix eigenvalues followed by one guarded Newton step.  When
    the discriminant is negative the complex pair is built as an exact
    conjugate pair.  Roots are sorted by real part; on ties the root with
    positive imaginary part comes first.
    """
    if not (omega > 0 and omega_c > 0 and gamma >= 0):
        raise DomainError(f"need omega > 0, omega_c > 0, gamma >= 0; got {omega}, {omega_c}, {gamma}")
    a2, a1, a0 = _cubic_coefficients(float(omega), float(omega_c), float(gamma))
    companion = np.array([[-a2, -a1, -a0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    raw = np.linalg.eigvals(companion)
    disc = 18 * a2 * a1 * a0 - 4 * a2**3 * a0 + a2**2 * a1**2 - 4 * a1**3 - 27 * a0**2

    if disc < 0:
        i_real = int(np.argmin(np.abs(raw.imag)))
        real_root = complex(_newton_polish(float(raw[i_real].real), a2, a1, a0))
        others = np.delete(raw, i_real)
        upper = complex(others[np.argmax(others.imag)])
        upper = complex(_newton_polish(upper, a2, a1, a0))
        # p(-Oc) = -2 g Oc^2 together with z1 + z2 + z3 = -Oc gives
        # Re z2 = -g Oc^2 / |Oc + z2|^2 without cancellation, so the sign of
        # the damping survives even when g is tiny.
        re = -gamma * omega_c**2 / abs(omega_c + upper) ** 2
        upper = complex(re, abs(upper.imag))
        real_root = complex(-omega_c - 2.0 * re)
        roots = [real_root, upper, upper.conjugate()]
    else:
        roots = [complex(_newton_polish(float(r.real), a2, a1, a0)) for r in raw]

    roots.sort(key=lambda z: (z.real, -z.imag))
    out = CubicRoots(roots[0], roots[1], roots[2], float(omega), float(omega_c), float(gamma))
    bound = 1e-10 * max(1.0, omega_c**3)
    res = out.residuals()
    if not np.all(res < bound):
        raise NonConvergence(f"cubic root residuals {res} exceed {bound:.3g}")
    return out


# ---------------------------------------------------------------------------
# digamma
# ---------------------------------------------------------------------------


@njit
def _digamma_right_nb(z, coeffs):
    acc = 0j
    while abs(z) < 15.0:
        acc -= 1.0 / z
        z += 1.0
    inv2 = 1.0 / (z * z)
    series = 0j
    power = inv2
    for k in range(coeffs.shape[0]):
        series += coeffs[k] * power
        power *= inv2
    return acc + cmath.log(z) - 0.5 / z - series


@njit
def _digamma_kernel_nb(z, coeffs, out):
    for i in range(z.shape[0]):
        zi = z[i]
        if zi.real < 0.5:
            out[i] = _digamma_right_nb(1.0 - zi, coeffs) - math.pi / cmath.tan(math.pi * zi)
        else:
            out[i] = _digamma_right_nb(zi, coeffs)
    return out


def _digamma_kernel_np(z: np.ndarray) -> np.ndarray:
    refl = z.real < 0.5
    w = np.where(refl, 1.0 - z, z)
    acc = np.zeros_like(w)
    small = np.abs(w) < _ASYMPTOTIC_RADIUS
    while small.any():
        acc[small] -= 1.0 / w[small]
        w[small] += 1.0
        small = np.abs(w) < _ASYMPTOTIC_RADIUS
    inv2 = 1.0 / (w * w)
    series = np.zeros_like(w)
    power = inv2.copy()
    for c in _BERNOULLI_OVER_2K:
        series += c * power
        power *= inv2
    out = acc + np.log(w) - 0.5 / w - series
    if refl.any():
        out[refl] -= np.pi / np.tan(np.pi * z[refl])
    return out


def _is_pole(z: np.ndarray) -> np.ndarray:
    re = z.real
    return (np.abs(z.imag) < _POLE_TOL) & (re < _POLE_TOL) & (np.abs(re - np.round(re)) < _POLE_TOL)


def digamma(z):
    """Complex digamma function Psi(z) = Gamma'(z) / Gamma(z).

    Upward recurrence until ``|z| >= 15`` followed by the asymptotic
    Bernoulli series; reflection for ``Re z < 1/2``.  Accepts scalars or
    arrays and always returns complex values.

    Raises:
        PoleError: at non-positive integers.
    """
    arr = np.asarray(z, dtype=complex)
    flat = np.ascontiguousarray(arr.ravel())
    poles = _is_pole(flat)
    if poles.any():
        raise PoleError(f"digamma pole at {flat[poles][0]}")
    if _accel.use_numba():
        out = _digamma_kernel_nb(flat, _BERNOULLI_OVER_2K, np.empty_like(flat))
    else:
        out = _digamma_kernel_np(flat.copy())
    out = out.reshape(arr.shape)
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# K(z_i, nu)
# ---------------------------------------------------------------------------

_BRANCHES = ("finite", "zero", "classical", "auto")


def k_function(z, nu: float, omega_c: float, branch: str = "auto"):
    """The kernel ``K(z, nu) = Psi(1 - z/nu) - Psi(Oc/nu)`` and its limits.

    ``nu = 2 pi k_B T / hbar``.  ``branch`` is one of

    * ``"finite"``: the digamma difference,
    * ``"zero"``: ``log(-z / Oc)`` (principal branch), the nu -> 0 limit,
    * ``"classical"``: ``nu / Oc``, the high-temperature limit,
    * ``"auto"``: ``"zero"`` when ``nu / 2pi`` is below :data:`ZERO_T_THRESHOLD`,
      otherwise ``"finite"``.
    """
    if branch not in _BRANCHES:
        raise ValueError(f"unknown branch {branch!r}")
    zz = np.asarray(z, dtype=complex)
    if np.any(zz.real >= 0):
        raise DomainError("K(z, nu) requires Re z < 0")
    if nu < 0:
        raise DomainError("nu must be non-negative")
    if branch == "auto":
        branch = "zero" if nu / (2 * math.pi) < ZERO_T_THRESHOLD else "finite"
    if branch == "zero":
        out = np.log(-zz / omega_c)
    elif branch == "classical":
        out = np.full(zz.shape, nu / omega_c, dtype=complex)
    else:
        if nu == 0:
            raise DomainError("finite-temperature branch needs nu > 0")
        out = np.asarray(digamma(1.0 - zz / nu)) - digamma(omega_c / nu)
    return complex(out) if np.ndim(out) == 0 else out
