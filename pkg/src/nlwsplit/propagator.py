"""Mode-wise linear wave flow and the phi_2 correction operator.

Every operator here is diagonal in k and acts on the pair (u_hat[k], v_hat[k])
by a real 2x2 matrix that depends on lambda = |k| only.  The zero mode uses the
continuous extension of each entry at lambda = 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import SpectralField, TorusGrid

# below this |theta| the phi_2 entries are evaluated from their Taylor series
PHI2_SERIES_THRESHOLD = 0.1


@dataclass(frozen=True, eq=False)
class State:
    """The pair (u, du/dt) in Fourier space."""

    u: SpectralField
    v: SpectralField

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise ValueError("u and v must share a grid")

    @property
    def grid(self) -> TorusGrid:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "State":
        return cls(SpectralField.zeros(grid), SpectralField.zeros(grid))

    def __add__(self, other: "State") -> "State":
        return State(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "State") -> "State":
        return State(self.u - other.u, self.v - other.v)

    def __mul__(self, scalar) -> "State":
        return State(self.u * scalar, self.v * scalar)

    __rmul__ = __mul__

    def is_real(self) -> bool:
        return self.u.is_real() and self.v.is_real()


@dataclass(frozen=True)
class ModeMatrix:
    """Entries (a, b; c, d) of a mode-wise 2x2 action, each broadcastable over k."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def apply(self, uh: np.ndarray, vh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.a * uh + self.b * vh, self.c * uh + self.d * vh

    def det(self) -> np.ndarray:
        return self.a * self.d - self.b * self.c


def wave_matrix(kmag: np.ndarray, t: float) -> ModeMatrix:
    """exp(tA) per mode: (cos, sin/lambda; -lambda sin, cos)."""
    theta = t * kmag
    cos = np.cos(theta)
    # t * sinc(t lambda) = sin(t lambda)/lambda, equal to t at lambda = 0
    b = t * np.sinc(theta / np.pi)
    return ModeMatrix(cos, b, -kmag * np.sin(theta), cos)


def apply_mode_matrix(U: State, m: ModeMatrix) -> State:
    uh, vh = m.apply(U.u.coeffs, U.v.coeffs)
    return State(SpectralField(U.grid, uh), SpectralField(U.grid, vh))


def wave_group(U: State, t: float) -> State:
    return apply_mode_matrix(U, wave_matrix(U.grid.kmag, t))


def half_wave(f: SpectralField, t: float) -> SpectralField:
    """exp(i t |nabla|) f."""
    return SpectralField(f.grid, np.exp(1j * t * f.grid.kmag) * f.coeffs)


def s_map(f: SpectralField, g: SpectralField, t: float) -> SpectralField:
    """cos(t|nabla|) f + |nabla|^{-1} sin(t|nabla|) g."""
    return wave_group(State(f, g), t).u


# phi_2 ----------------------------------------------------------------

def phi2_series(theta):
    """Taylor polynomials through theta^6 of (1 - cos)/theta^2 and (theta - sin)/theta^3."""
    t2 = np.asarray(theta, dtype=np.float64) ** 2
    diag = 0.5 + t2 * (-1.0 / 24 + t2 * (1.0 / 720 - t2 / 40320))
    odd = 1.0 / 6 + t2 * (-1.0 / 120 + t2 * (1.0 / 5040 - t2 / 362880))
    return diag, odd


def phi2_direct(theta):
    """Closed trigonometric forms; lose accuracy like eps / theta^2 near zero."""
    theta = np.asarray(theta, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (1.0 - np.cos(theta)) / theta**2
        odd = (theta - np.sin(theta)) / theta**3
    return diag, odd


def phi2_entries(theta):
    theta = np.asarray(theta, dtype=np.float64)
    small = np.abs(theta) < PHI2_SERIES_THRESHOLD
    sd, so = phi2_series(theta)
    dd, do = phi2_direct(np.where(small, 1.0, theta))
    return np.where(small, sd, dd), np.where(small, so, do)


def phi2_matrix(kmag: np.ndarray, t: float) -> ModeMatrix:
    """phi_2(tA) per mode, theta = t lambda:

        a = d = (1 - cos theta) / theta^2
        b     = (theta - sin theta) / (t^2 lambda^3) = t (theta - sin theta) / theta^3
        c     = (sin theta - theta) / (t^2 lambda)   = -t lambda^2 (theta - sin theta) / theta^3

    At t = 0 this is one half times the identity.
    """
    if not np.isfinite(t):
        raise ValueError(f"phi_2 needs a finite time, got {t}")
    theta = t * kmag
    diag, odd = phi2_entries(theta)
    return ModeMatrix(diag, t * odd, -t * kmag**2 * odd, diag)


def phi2_apply(W: State, t: float) -> State:
    return apply_mode_matrix(W, phi2_matrix(W.grid.kmag, t))

