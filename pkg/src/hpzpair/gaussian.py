"""Information quantities of two-mode Gaussian states.

Entropies are in nats, logarithmic negativity in bits.  Covariances follow
the vacuum = identity convention, so physical states have symplectic
eigenvalues >= 1.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _accel
from ._accel import njit
from .covariance import OMEGA, Covariance4, Frame, cmr_to_lab
from .errors import DomainError, NonPhysicalSpectrum

DEFAULT_TOL = 1e-9
TAU = np.diag([1.0, 1.0, 1.0, -1.0])


@dataclass(frozen=True)
class SymplecticSpectrum:
    nu1: float
    nu2: float

    def __post_init__(self):
        if self.nu1 > self.nu2:
            a, b = self.nu2, self.nu1
            object.__setattr__(self, "nu1", a)
            object.__setattr__(self, "nu2", b)

    def __iter__(self):
        return iter((self.nu1, self.nu2))


@dataclass(frozen=True)
class InfoReport:
    t: float
    nu1: float
    nu2: float
    nuA: float
    nuB: float
    nu1_pt: float
    purity: float
    S_total: float
    S_A: float
    S_B: float
    C_xi: float
    E_N: float
    positive: bool
    separable: bool

    def as_dict(self) -> dict:
        return asdict(self)


#: Column order of every tabular output.
REPORT_FIELDS = tuple(InfoReport.__dataclass_fields__)


def _as_matrix(sigma) -> np.ndarray:
    return sigma.sigma if isinstance(sigma, Covariance4) else np.asarray(sigma, dtype=float)


def _lab(sigma) -> np.ndarray:
    if isinstance(sigma, Covariance4):
        return sigma.expect(Frame.LAB).sigma
    return np.asarray(sigma, dtype=float)


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------


def symplectic_eigenvalues(sigma, tol: float = DEFAULT_TOL) -> SymplecticSpectrum:
    """Symplectic eigenvalues of a 4x4 covariance.

    Positive-definite input goes through sigma = L L^T: the singular values
    of L^T Omega L are (nu1, nu1, nu2, nu2), and nu1 = sqrt(det sigma) / nu2
    keeps full relative accuracy on strongly squeezed states.  Anything else
    falls back to the eigenvalues of -(Omega sigma)^2 = (nu1^2, nu1^2,
    nu2^2, nu2^2), averaged in pairs.

    Raises:
        NonPhysicalSpectrum: if an eigenvalue has a negative real part
            beyond ``tol`` (relative to the matrix scale).
    """
    s = _as_matrix(sigma)
    try:
        L = np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        pass
    else:
        big = float(np.linalg.svd(L.T @ OMEGA @ L, compute_uv=False)[:2].mean())
        return SymplecticSpectrum(float(np.prod(np.diag(L))) / big, big)
    a = OMEGA @ s
    ev = np.sort(np.linalg.eigvals(-(a @ a)).real)
    scale = max(1.0, float(np.max(np.abs(s)))) ** 2
    if ev[0] < -tol * scale:
        raise NonPhysicalSpectrum(f"-(Omega sigma)^2 has eigenvalue {ev[0]:.3e}")
    ev = np.clip(ev, 0.0, None)
    return SymplecticSpectrum(math.sqrt(0.5 * (ev[0] + ev[1])), math.sqrt(0.5 * (ev[2] + ev[3])))


def single_mode_symplectic(block: np.ndarray) -> float:
    """Positive eigenvalue of i Omega_1 sigma_X, i.e. sqrt(det sigma_X)."""
    d = float(np.linalg.det(np.asarray(block, dtype=float)))
    if d < 0:
        raise NonPhysicalSpectrum(f"single-mode block has negative determinant {d:.3e}")
    return math.sqrt(d)


def positivity_check(spectrum: SymplecticSpectrum, tol: float = DEFAULT_TOL) -> bool:
    return spectrum.nu1 > 1.0 - tol and spectrum.nu2 > 1.0 - tol


def purity(spectrum: SymplecticSpectrum) -> float:
    return 1.0 / (spectrum.nu1 * spectrum.nu2)


# ---------------------------------------------------------------------------
# entropies
# ---------------------------------------------------------------------------


def _mode_entropy(nu, tol: float = DEFAULT_TOL):
    """Entropy of one thermal mode with symplectic eigenvalue ``nu``.

    Equal to 1/2 (1+nu) ln(1+nu) + 1/2 (1-nu) ln(nu-1) - ln 2, written as
    ((nu+1)/2) log1p((nu-1)/2) - x ln x with x = (nu-1)/2 so that the
    nu -> 1 limit is exact.  Values below ``1 - tol`` give NaN.
    """
    nu = np.asarray(nu, dtype=float)
    x = 0.5 * np.clip(nu - 1.0, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        xlogx = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
        out = 0.5 * (nu + 1.0) * np.log1p(x) - xlogx
    out = np.where(nu < 1.0 - tol, np.nan, np.where(nu <= 1.0, 0.0, out))
    return float(out) if out.ndim == 0 else out


def entropy_total(spectrum: SymplecticSpectrum, tol: float = DEFAULT_TOL) -> float:
    """von Neumann entropy S_{A+B} in nats."""
    if spectrum.nu1 < 1.0 - tol:
        raise DomainError(f"entropy undefined for nu1 = {spectrum.nu1:.6g} < 1")
    return _mode_entropy(spectrum.nu1, tol) + _mode_entropy(spectrum.nu2, tol)


def entropy_sub(sigma_lab, subsystem: str, tol: float = DEFAULT_TOL) -> float:
    """Entropy of oscillator ``"A"`` (first) or ``"B"`` (second), in nats."""
    s = _lab(sigma_lab)
    if subsystem not in ("A", "B"):
        raise ValueError("subsystem must be 'A' or 'B'")
    sl = slice(0, 2) if subsystem == "A" else slice(2, 4)
    nu = single_mode_symplectic(s[sl, sl])
    if nu < 1.0 - tol:
        raise DomainError(f"entropy undefined for nu_{subsystem} = {nu:.6g} < 1")
    return _mode_entropy(nu, tol)


def mutual_information(sigma_lab, tol: float = DEFAULT_TOL) -> float:
    """C_xi = S_A + S_B - S_{A+B}; small negative rounding is clipped to 0."""
    s = _lab(sigma_lab)
    c = entropy_sub(s, "A", tol) + entropy_sub(s, "B", tol) - entropy_total(symplectic_eigenvalues(s, tol), tol)
    return 0.0 if -tol < c < 0.0 else c


# ---------------------------------------------------------------------------
# partial transpose and negativity
# ---------------------------------------------------------------------------


def partial_transpose(sigma_lab):
    """Flip the second oscillator's momentum: tau sigma tau."""
    if isinstance(sigma_lab, Covariance4):
        return Covariance4(TAU @ _lab(sigma_lab) @ TAU, Frame.LAB)
    return TAU @ np.asarray(sigma_lab, dtype=float) @ TAU


def schatten_norm(spectrum: SymplecticSpectrum) -> float:
    """Trace norm of a Gaussian operator from its symplectic spectrum."""
    n1, n2 = spectrum.nu1, spectrum.nu2
    return 4.0 / ((abs(n1 - 1.0) - (1.0 + n1)) * (abs(n2 - 1.0) - (1.0 + n2)))


def log_negativity(sigma_lab) -> float:
    """E_N = log2 of the trace norm of the partially transposed state.

    Rounding can push the norm of a separable state a few ulps below 1;
    it is floored at 1 so that E_N >= 0.
    """
    pt = symplectic_eigenvalues(partial_transpose(_lab(sigma_lab)))
    return math.log2(max(1.0, schatten_norm(pt)))


def epr_initial(p: float, r_s: float) -> Covariance4:
    """p times the two-mode-squeezed covariance, in the CMR frame."""
    if p < 1.0:
        raise DomainError(f"mixing parameter p must be >= 1, got {p}")
    c, s = math.cosh(2.0 * r_s), math.sinh(2.0 * r_s)
    sigma = p * np.array(
        [
            [c, 0.0, s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, -s, 0.0, c],
        ]
    )
    return Covariance4(sigma, Frame.CMR)


# ---------------------------------------------------------------------------
# single point and batch reports
# ---------------------------------------------------------------------------


def info_report(t: float, sigma_cmr: Covariance4, tol: float = DEFAULT_TOL) -> InfoReport:
    """Every information quantity at one time point.

    Entropies of a non-physical state are reported as NaN with
    ``positive=False`` instead of raising.
    """
    lab = cmr_to_lab(sigma_cmr).sigma
    spec = symplectic_eigenvalues(sigma_cmr.sigma, tol)
    nuA = math.sqrt(max(np.linalg.det(lab[:2, :2]), 0.0))
    nuB = math.sqrt(max(np.linalg.det(lab[2:, 2:]), 0.0))
    pt = symplectic_eigenvalues(partial_transpose(lab), tol)
    return _assemble(t, spec.nu1, spec.nu2, nuA, nuB, pt.nu1, pt.nu2, tol)


def _assemble(t, nu1, nu2, nuA, nuB, pt1, pt2, tol) -> InfoReport:
    fields = _derived_columns(
        np.array([nu1]), np.array([nu2]), np.array([nuA]), np.array([nuB]), np.array([pt1]), np.array([pt2]), tol
    )
    row = {k: v[0] for k, v in fields.items()}
    return InfoReport(
        t=float(t),
        nu1=float(nu1),
        nu2=float(nu2),
        nuA=float(nuA),
        nuB=float(nuB),
        nu1_pt=float(pt1),
        purity=float(row["purity"]),
        S_total=float(row["S_total"]),
        S_A=float(row["S_A"]),
        S_B=float(row["S_B"]),
        C_xi=float(row["C_xi"]),
        E_N=float(row["E_N"]),
        positive=bool(row["positive"]),
        separable=bool(row["separable"]),
    )


def _derived_columns(nu1, nu2, nuA, nuB, pt1, pt2, tol):
    positive = (nu1 > 1.0 - tol) & (nu2 > 1.0 - tol)
    s_tot = _mode_entropy(nu1, tol) + _mode_entropy(nu2, tol)
    s_a = np.atleast_1d(_mode_entropy(nuA, tol))
    s_b = np.atleast_1d(_mode_entropy(nuB, tol))
    s_tot = np.where(positive, s_tot, np.nan)
    c_xi = s_a + s_b - s_tot
    c_xi = np.where((c_xi < 0) & (c_xi > -tol), 0.0, c_xi)
    with np.errstate(divide="ignore"):
        norm = 4.0 / ((np.abs(pt1 - 1.0) - (1.0 + pt1)) * (np.abs(pt2 - 1.0) - (1.0 + pt2)))
        e_n = np.log2(np.maximum(norm, 1.0))
    return {
        "purity": 1.0 / (nu1 * nu2),
        "S_total": s_tot,
        "S_A": s_a,
        "S_B": s_b,
        "C_xi": c_xi,
        "E_N": e_n,
        "positive": positive,
        "separable": pt1 >= 1.0 - tol,
    }


@njit
def _chol4(s, L):
    for j in range(4):
        acc = s[j, j]
        for k in range(j):
            acc -= L[j, k] * L[j, k]
        if acc <= 0.0:
            return False
        L[j, j] = math.sqrt(acc)
        for i in range(j + 1, 4):
            acc = s[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            L[i, j] = acc / L[j, j]
    return True


@njit
def _williamson_nb(s, omega, L):
    """Singular values of the antisymmetric A = L^T Omega L come in pairs
    (a, a, b, b) with a^2 + b^2 = sum of squared upper entries and
    ab = |Pf A|; no LAPACK call needed."""
    for a in range(4):
        for b in range(4):
            L[a, b] = 0.0
    if not _chol4(s, L):
        return np.nan, np.nan
    A = L.T @ omega @ L
    sq = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            sq += A[i, j] * A[i, j]
    pf = abs(A[0, 1] * A[2, 3] - A[0, 2] * A[1, 3] + A[0, 3] * A[1, 2])
    big = 0.5 * (math.sqrt(sq + 2.0 * pf) + math.sqrt(max(sq - 2.0 * pf, 0.0)))
    return pf / big, big


@njit
def _spectra_kernel_nb(sig_cmr, w, omega, out):
    n = sig_cmr.shape[0]
    L = np.zeros((4, 4))
    for i in range(n):
        s = np.ascontiguousarray(sig_cmr[i])
        out[i, 0], out[i, 1] = _williamson_nb(s, omega, L)
        lab = w @ s @ w.T
        da = lab[0, 0] * lab[1, 1] - lab[0, 1] * lab[1, 0]
        db = lab[2, 2] * lab[3, 3] - lab[2, 3] * lab[3, 2]
        out[i, 2] = math.sqrt(da) if da >= 0 else np.nan
        out[i, 3] = math.sqrt(db) if db >= 0 else np.nan
        for a in range(4):
            lab[a, 3] = -lab[a, 3]
            lab[3, a] = -lab[3, a]
        out[i, 4], out[i, 5] = _williamson_nb(lab, omega, L)
    return out


def _williamson_np(stack: np.ndarray) -> np.ndarray:
    """(n, 2) symplectic spectra via Cholesky + singular values."""
    L = np.linalg.cholesky(stack)
    A = np.swapaxes(L, -1, -2) @ OMEGA @ L
    sv = np.linalg.svd(A, compute_uv=False)
    return np.stack([0.5 * (sv[:, 2] + sv[:, 3]), 0.5 * (sv[:, 0] + sv[:, 1])], axis=1)


def _williamson_np_safe(stack):
    out = np.full((stack.shape[0], 2), np.nan)
    try:
        return _williamson_np(stack)
    except np.linalg.LinAlgError:
        pass
    for i, s in enumerate(stack):
        try:
            out[i] = _williamson_np(s[None])[0]
        except np.linalg.LinAlgError:
            pass
    return out


def _spectra_kernel_np(sig_cmr: np.ndarray, w: np.ndarray) -> np.ndarray:
    lab = w @ sig_cmr @ w.T
    out = np.empty((sig_cmr.shape[0], 6))
    out[:, 0:2] = _williamson_np_safe(sig_cmr)
    with np.errstate(invalid="ignore"):
        out[:, 2] = np.sqrt(np.linalg.det(lab[:, :2, :2]))
        out[:, 3] = np.sqrt(np.linalg.det(lab[:, 2:, 2:]))
    out[:, 4:6] = _williamson_np_safe(TAU @ lab @ TAU)
    return out


def spectra_batch(sigmas_cmr: np.ndarray) -> np.ndarray:
    """Columns nu1, nu2, nuA, nuB, nu1_pt, nu2_pt for a stack of CMR covariances.

    Uses sigma = L L^T and the singular values of L^T Omega L.  Rows whose
    covariance is not positive definite fall back to the eigenvalue route.
    """
    from .covariance import W

    stack = np.ascontiguousarray(np.asarray(sigmas_cmr, dtype=float).reshape(-1, 4, 4))
    if _accel.use_numba():
        out = _spectra_kernel_nb(stack, W, OMEGA, np.empty((stack.shape[0], 6)))
    else:
        out = _spectra_kernel_np(stack, W)
    bad = np.isnan(out[:, [0, 1, 4, 5]]).any(axis=1)
    for i in np.flatnonzero(bad):
        lab = W @ stack[i] @ W.T
        for cols, mat in (((0, 1), stack[i]), ((4, 5), TAU @ lab @ TAU)):
            try:
                out[i, list(cols)] = tuple(symplectic_eigenvalues(mat))
            except NonPhysicalSpectrum:
                pass
    return out


def info_table(times, sigmas_cmr: np.ndarray, tol: float = DEFAULT_TOL) -> dict:
    """Column-wise :class:`InfoReport` data for a whole time grid."""
    times = np.asarray(times, dtype=float)
    sp = spectra_batch(sigmas_cmr)
    cols = {
        "t": times,
        "nu1": sp[:, 0],
        "nu2": sp[:, 1],
        "nuA": sp[:, 2],
        "nuB": sp[:, 3],
        "nu1_pt": sp[:, 4],
    }
    cols.update(_derived_columns(sp[:, 0], sp[:, 1], sp[:, 2], sp[:, 3], sp[:, 4], sp[:, 5], tol))
    return {k: cols[k] for k in REPORT_FIELDS}


def reports_from_table(table: dict):
    n = len(table["t"])
    for i in range(n):
        yield InfoReport(**{k: (bool(table[k][i]) if k in ("positive", "separable") else float(table[k][i])) for k in REPORT_FIELDS})
