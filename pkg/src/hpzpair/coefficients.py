"""Markovian coefficients A, B, C, D of the two-oscillator master equation.

Lorentz-Drude Ohmic bath, every temperature / coupling regime.  Units:
hbar = 1 throughout; ``m`` and ``Omega`` are carried explicitly but the
CLI always sets them to 1.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import (
    DegenerateRootsError,
    ImaginaryResidue,
    InvalidInput,
    RegimeMismatch,
    StabilityError,
)
from .special import ZERO_T_THRESHOLD, CubicRoots, digamma, k_function, solve_cubic

DEGENERATE_ROOT_TOL = 1e-8
IMAG_TOL = 1e-10


class RegimeTag(str, Enum):
    EXACT_FINITE_T = "ExactFiniteT"
    EXACT_ZERO_T = "ExactZeroT"
    EXACT_CLASSICAL = "ExactClassical"
    WEAK_FINITE_T = "WeakFiniteT"
    WEAK_ZERO_T = "WeakZeroT"
    WEAK_CLASSICAL = "WeakClassical"

    @property
    def weak(self) -> bool:
        return self.value.startswith("Weak")

    @classmethod
    def parse(cls, text: str) -> "RegimeTag":
        for tag in cls:
            if text.lower() in (tag.value.lower(), tag.name.lower()):
                return tag
        raise InvalidInput(f"unknown regime {text!r}; expected one of {[t.value for t in cls]}")


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensionless bath and system parameters.

    ``omega_c`` and ``gamma`` are in units of Omega, ``temperature`` is
    k_B T / (hbar Omega) and ``kappa`` is in units of m Omega^2.
    """

    omega_c: float = 40.0
    gamma: float = 1.0 / 128.0
    temperature: float = 1.0
    kappa: float = 0.0
    omega: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        for name in ("omega_c", "gamma", "temperature", "kappa", "omega", "m"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidInput(f"{name} must be finite, got {value}")
        if self.omega <= 0 or self.omega_c <= 0 or self.m <= 0:
            raise InvalidInput("omega, omega_c and m must be positive")
        if self.gamma < 0:
            raise InvalidInput("gamma must be non-negative")
        if self.temperature < 0:
            raise InvalidInput("temperature must be non-negative")

    @property
    def M(self) -> float:
        return 2.0 * self.m

    @property
    def mu(self) -> float:
        return 0.5 * self.m

    @property
    def gamma_crit(self) -> float:
        return self.omega**2 / (2.0 * self.omega_c)

    @property
    def kappa_crit(self) -> float:
        return -self.m * self.omega**2 / 4.0

    @property
    def nu(self) -> float:
        return 2.0 * math.pi * self.temperature

    def roots(self) -> CubicRoots:
        return solve_cubic(self.omega, self.omega_c, self.gamma)


def _decimal(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def _omega_d_sq(params: PhysicalParams) -> float:
    """Omega^2 + 4 kappa / m in exact rational arithmetic on the shortest
    decimal form of each input.

    Near kappa_crit the sum cancels almost completely, and the binary
    rounding of a value like -0.249999 would otherwise leak into omega_d.
    """
    o, k, m = _decimal(params.omega), _decimal(params.kappa), _decimal(params.m)
    return float(o * o + 4 * k / m)


@dataclass(frozen=True)
class MarkovCoefficients:
    """A, B, C, D and the derived drift/diffusion constants.

    ``omega_c`` here is the renormalised centre-of-mass frequency
    (omega_c^2 = Omega^2 + A / 2m), not the bath cutoff.
    """

    A: float
    B: float
    C: float
    D: float
    lam: float
    omega_c_sq: float
    omega_d_sq: float
    D_px: float
    D_pp: float
    m: float = 1.0
    regime: RegimeTag = RegimeTag.EXACT_FINITE_T
    roots: CubicRoots | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_abcd(cls, A, B, C, D, params: PhysicalParams, regime: RegimeTag, roots=None):
        m = params.m
        return cls(
            A=float(A),
            B=float(B),
            C=float(C),
            D=float(D),
            lam=float(B) / 2.0,
            omega_c_sq=params.omega**2 + float(A) / (2.0 * m),
            omega_d_sq=_omega_d_sq(params),
            D_px=float(C) / 2.0,
            D_pp=float(D),
            m=m,
            regime=regime,
            roots=roots,
        )

    @property
    def omega_c(self) -> float:
        return math.sqrt(self.omega_c_sq) if self.omega_c_sq >= 0 else math.nan

    @property
    def omega_d(self) -> float:
        return math.sqrt(self.omega_d_sq) if self.omega_d_sq >= 0 else math.nan

    @property
    def asymptotic_period(self) -> float:
        """Period pi / omega_d of the undamped covariance oscillation."""
        return math.pi / self.omega_d

    def as_dict(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "C": self.C,
            "D": self.D,
            "lambda": self.lam,
            "omega_c_eff": self.omega_c,
            "omega_d": self.omega_d,
            "D_px": self.D_px,
            "D_pp": self.D_pp,
        }


@dataclass(frozen=True)
class StabilityReport:
    roots_stable: bool
    drift_stable: bool
    diffusion_stable: bool
    margins: dict

    @property
    def stable(self) -> bool:
        return self.roots_stable and self.drift_stable and self.diffusion_stable

    def failures(self) -> list[str]:
        return [k for k, v in self.margins.items() if v < 0]


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def _real(value: complex, name: str) -> float:
    value = complex(value)
    if abs(value.imag) > IMAG_TOL * max(1.0, abs(value.real)):
        raise ImaginaryResidue(f"{name} has imaginary part {value.imag:.3e}")
    return value.real


def exact_AB(roots: CubicRoots, M: float) -> tuple[float, float]:
    """A = -M z1 (z2 + z3), B = -(z2 + z3)."""
    z1, z2, z3 = roots
    # a closed system sits on Re z = 0 legitimately; with damping that means gamma >= gamma_crit
    if max(z1.real, z2.real, z3.real) > 0 or (roots.gamma > 0 and not roots.stable):
        raise StabilityError(f"cubic root with non-negative real part: {roots.as_array()}")
    A = -M * z1 * (z2 + z3)
    B = -(z2 + z3)
    return _real(A, "A"), _real(B, "B")


def _cd_terms(roots: CubicRoots, kvals, M: float) -> tuple[complex, complex]:
    """The K-weighted parts of C and D (hbar = 1)."""
    z1, z2, z3 = roots
    k1, k2, k3 = kvals
    s23 = z2 + z3
    c = (
        s23 * (z1 * z1 + z2 * z3) / ((z1 - z2) * (z1 - z3)) * k1
        + (z1 + z3) * s23 * z2 / ((z1 - z2) * (z3 - z2)) * k2
        + (z1 + z2) * s23 * z3 / ((z1 - z3) * (z2 - z3)) * k3
    ) / math.pi
    d = M * (
        z1 * z1 * s23 * s23 / ((z1 - z2) * (z1 - z3)) * k1
        + (z1 + z3) * s23 * z2 * z2 / ((z1 - z2) * (z3 - z2)) * k2
        + (z1 + z2) * s23 * z3 * z3 / ((z1 - z3) * (z2 - z3)) * k3
    ) / math.pi
    return c, d


def _guard_degenerate(roots: CubicRoots) -> None:
    if roots.min_separation() < DEGENERATE_ROOT_TOL * roots.omega:
        raise DegenerateRootsError(f"roots too close: {roots.as_array()}")


def exact_CD(roots: CubicRoots, params: PhysicalParams, branch: str = "auto") -> tuple[float, float]:
    """Exact Markovian C and D at temperature ``params.temperature``.

    ``branch`` is forwarded to :func:`k_function`; with ``"auto"`` the
    T = 0 closed form is used below :data:`ZERO_T_THRESHOLD`.
    """
    _guard_degenerate(roots)
    z1, z2, z3 = roots
    T = params.temperature
    kvals = k_function(roots.as_array(), params.nu, params.omega_c, branch)
    c, d = _cd_terms(roots, kvals, params.M)
    c += T * (z2 + z3) / z1
    d += -T * params.M * (z2 + z3)
    return _real(c, "C"), _real(d, "D")


def exact_CD_zero_T(roots: CubicRoots, params: PhysicalParams) -> tuple[float, float]:
    _guard_degenerate(roots)
    kvals = k_function(roots.as_array(), 0.0, params.omega_c, "zero")
    c, d = _cd_terms(roots, kvals, params.M)
    return _real(c, "C"), _real(d, "D")


def exact_CD_classical(roots: CubicRoots, params: PhysicalParams) -> tuple[float, float]:
    z1, z2, z3 = roots
    T = params.temperature
    return _real(T * (z2 + z3) / z1, "C"), _real(-T * params.M * (z2 + z3), "D")


def weak_AB(params: PhysicalParams) -> tuple[float, float]:
    g, oc, o = params.gamma, params.omega_c, params.omega
    denom = oc * oc + o * o
    return -2.0 * params.M * g * oc**3 / denom, 2.0 * g * oc * oc / denom


def weak_CD(params: PhysicalParams) -> tuple[float, float]:
    """Weak-coupling C, D at finite temperature.

    C uses ``2 pi T / Oc + Psi(1 - i O/nu) + Psi(1 + i O/nu) - 2 Psi(1 + Oc/nu)``
    in the bracket; the additive reading is the one that reproduces the
    principal-value integral and both of its limits.
    """
    if params.temperature < ZERO_T_THRESHOLD:
        return weak_CD_zero_T(params)
    g, oc, o, T = params.gamma, params.omega_c, params.omega, params.temperature
    nu = params.nu
    denom = oc * oc + o * o
    psi = digamma(np.array([1.0 - 1j * o / nu, 1.0 + 1j * o / nu, 1.0 + oc / nu]))
    bracket = 2.0 * math.pi * T / oc + psi[0] + psi[1] - 2.0 * psi[2]
    c = g * oc * oc / (math.pi * denom) * bracket
    d = params.M * g * oc * oc * o / denom / math.tanh(o / (2.0 * T))
    return _real(c, "C"), float(d)


def weak_CD_zero_T(params: PhysicalParams) -> tuple[float, float]:
    g, oc, o = params.gamma, params.omega_c, params.omega
    denom = oc * oc + o * o
    c = -2.0 * g * oc * oc / math.pi * math.log(oc / o) / denom
    d = params.M * g * oc * oc * o / denom
    return c, d


def weak_CD_classical(params: PhysicalParams) -> tuple[float, float]:
    g, oc, o, T = params.gamma, params.omega_c, params.omega, params.temperature
    denom = oc * oc + o * o
    return 2.0 * g * oc / denom * T, 2.0 * g * params.M * T * oc * oc / denom


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def coefficients(
    params: PhysicalParams,
    regime: RegimeTag | str = RegimeTag.EXACT_FINITE_T,
    on_mismatch: str = "warn",
) -> MarkovCoefficients:
    """Markovian coefficients for one row of the regime table.

    ``on_mismatch`` controls what happens when a classical regime is asked
    for with k_B T < hbar Omega_c: ``"warn"`` (default), ``"raise"`` or
    ``"ignore"``.
    """
    regime = RegimeTag.parse(regime) if isinstance(regime, str) else regime

    if regime in (RegimeTag.EXACT_CLASSICAL, RegimeTag.WEAK_CLASSICAL) and params.temperature < params.omega_c:
        msg = (
            f"classical regime requested with k_B T/(hbar Omega) = {params.temperature:g} "
            f"below Omega_c/Omega = {params.omega_c:g}"
        )
        if on_mismatch == "raise":
            raise InvalidInput(msg)
        if on_mismatch == "warn":
            warnings.warn(msg, RegimeMismatch, stacklevel=2)

    if params.gamma == 0.0:
        roots = params.roots()
        return MarkovCoefficients.from_abcd(0.0, 0.0, 0.0, 0.0, params, regime, roots)

    if regime.weak:
        A, B = weak_AB(params)
        if regime is RegimeTag.WEAK_FINITE_T:
            C, D = weak_CD(params)
        elif regime is RegimeTag.WEAK_ZERO_T:
            C, D = weak_CD_zero_T(params)
        else:
            C, D = weak_CD_classical(params)
        roots = params.roots() if params.gamma < params.gamma_crit else None
        return MarkovCoefficients.from_abcd(A, B, C, D, params, regime, roots)

    roots = params.roots()
    A, B = exact_AB(roots, params.M)
    if regime is RegimeTag.EXACT_FINITE_T:
        C, D = exact_CD(roots, params)
    elif regime is RegimeTag.EXACT_ZERO_T:
        C, D = exact_CD_zero_T(roots, params)
    else:
        C, D = exact_CD_classical(roots, params)
    return MarkovCoefficients.from_abcd(A, B, C, D, params, regime, roots)


def check_stability(coeffs: MarkovCoefficients, roots: CubicRoots | None = None) -> StabilityReport:
    """Signed margins for every stability bound; negative means violated.

    A closed system (gamma = 0, all coefficients zero) counts as root-stable:
    its undamped modes sit on the boundary the allowed range 0 <= gamma
    includes.
    """
    roots = roots if roots is not None else coeffs.roots
    closed = roots is not None and roots.gamma == 0.0
    if roots is None:
        root_margin = math.inf
    else:
        root_margin = -max(z.real for z in roots)
    m = coeffs.m
    margins = {
        "roots": math.inf if closed else root_margin,
        "lambda": coeffs.lam,
        "omega_c_sq": coeffs.omega_c_sq,
        "omega_d_sq": coeffs.omega_d_sq,
        "D_pp": coeffs.D_pp,
        "D_pp+8D_px*lambda*m": coeffs.D_pp + 8.0 * coeffs.D_px * coeffs.lam * m,
    }
    return StabilityReport(
        roots_stable=margins["roots"] > 0,
        drift_stable=margins["lambda"] >= 0 and margins["omega_c_sq"] >= 0 and margins["omega_d_sq"] >= 0,
        diffusion_stable=margins["D_pp"] >= 0 and margins["D_pp+8D_px*lambda*m"] >= 0,
        margins=margins,
    )
