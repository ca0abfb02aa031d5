"""Covariance matrices tagged with their phase-space frame.

CMR frame: ordering (X, P, x, p) of centre-of-mass and relative pairs.
Lab frame: ordering (x1, p1, x2, p2).  Convention: vacuum has sigma = 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import FrameError, InvalidInput

OMEGA1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
#: Symplectic form for two modes, block-diagonal in (q, p) pairs.
OMEGA = np.kron(np.eye(2), OMEGA1)

#: Map from CMR to lab coordinates, r = W w.
W = np.array(
    [
        [1.0, 0.0, 0.5, 0.0],
        [0.0, 0.5, 0.0, 1.0],
        [1.0, 0.0, -0.5, 0.0],
        [0.0, 0.5, 0.0, -1.0],
    ]
)
W_INV = np.linalg.inv(W)


class Frame(str, Enum):
    CMR = "cmr"
    LAB = "lab"


@dataclass(frozen=True, eq=False)
class Covariance4:
    """A 4x4 real symmetric covariance matrix and the frame it lives in."""

    sigma: np.ndarray
    frame: Frame = Frame.CMR

    def __post_init__(self):
        s = np.array(self.sigma, dtype=float)
        if s.shape != (4, 4):
            raise InvalidInput(f"covariance must be 4x4, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise InvalidInput("covariance has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(s))))
        if np.max(np.abs(s - s.T)) > 1e-9 * scale:
            raise InvalidInput("covariance is not symmetric")
        s = 0.5 * (s + s.T)
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "frame", Frame(self.frame))

    def expect(self, frame: Frame) -> "Covariance4":
        if self.frame is not Frame(frame):
            raise FrameError(f"expected {Frame(frame).value} frame, got {self.frame.value}")
        return self

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.sigma)
        except np.linalg.LinAlgError:
            return False
        return True

    def quadratic_form(self) -> np.ndarray:
        """Q with characteristic function exp(-w^T Q w)."""
        return sigma_to_q(self.sigma)

    @classmethod
    def from_quadratic_form(cls, q: np.ndarray, frame: Frame = Frame.CMR) -> "Covariance4":
        return cls(q_to_sigma(q), frame)

    def __array__(self, dtype=None, copy=None):
        return self.sigma if dtype is None else self.sigma.astype(dtype)

    def __repr__(self):
        return f"Covariance4(frame={self.frame.value}, sigma={self.sigma.tolist()})"


def sigma_to_q(sigma: np.ndarray) -> np.ndarray:
    """``Q = 1/4 Omega^T sigma Omega``; works on stacks of matrices."""
    q = 0.25 * OMEGA.T @ sigma @ OMEGA
    return 0.5 * (q + np.swapaxes(q, -1, -2))


def q_to_sigma(q: np.ndarray) -> np.ndarray:
    s = 4.0 * OMEGA @ q @ OMEGA.T
    return 0.5 * (s + np.swapaxes(s, -1, -2))


def cmr_to_lab(cov: Covariance4) -> Covariance4:
    """sigma_lab = W sigma_cmr W^T."""
    cov.expect(Frame.CMR)
    return Covariance4(W @ cov.sigma @ W.T, Frame.LAB)


def lab_to_cmr(cov: Covariance4) -> Covariance4:
    cov.expect(Frame.LAB)
    return Covariance4(W_INV @ cov.sigma @ W_INV.T, Frame.CMR)
