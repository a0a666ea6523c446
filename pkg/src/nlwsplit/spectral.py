"""Fourier representation of real scalar fields on the torus [0, 2pi)^3.

Coefficients follow the convention

    u(x) = sum_k u_hat[k] exp(i k.x),     k in {-N/2+1, ..., N/2}^3,

so that Parseval reads ||u||_{L^2}^2 = (2 pi)^3 sum_k |u_hat[k]|^2.  Arrays are
stored in numpy FFT index order: index ``j`` along an axis carries wave number
``j`` for ``j <= N/2`` and ``j - N`` otherwise.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Literal, Union

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi
VOLUME = TWO_PI**3

# exponent margin that places sobolev_noise strictly inside H^s
NOISE_EPS = 0.01

_MAGIC = b"NLWF"
_VERSION = 1


@dataclass(frozen=True)
class TorusGrid:
    """Uniform ``n_per_dim``^3 grid on [0, 2pi)^3."""

    n_per_dim: int

    def __post_init__(self):
        n = self.n_per_dim
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise TypeError(f"n_per_dim must be an integer, got {n!r}")
        if n < 4 or n % 2:
            raise ValueError(f"n_per_dim must be even and >= 4, got {n}")

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.n_per_dim
        return (n, n, n)

    @property
    def size(self) -> int:
        return self.n_per_dim**3

    @property
    def cell_volume(self) -> float:
        return (TWO_PI / self.n_per_dim) ** 3

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wave numbers along one axis, Nyquist entry taken as +N/2."""
        n = self.n_per_dim
        k = np.fft.fftfreq(n, 1.0 / n)
        k[n // 2] = n // 2
        return k

    @cached_property
    def k_vectors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = self.wavenumbers
        return (k[:, None, None], k[None, :, None], k[None, None, :])

    @cached_property
    def kmag(self) -> np.ndarray:
        """|k| on the full lattice, shape (N, N, N)."""
        k1, k2, k3 = self.k_vectors
        out = np.sqrt(k1**2 + k2**2 + k3**2)
        out.flags.writeable = False
        return out

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on modes with some |k_i| = N/2 (no conjugate partner on the lattice)."""
        half = self.n_per_dim // 2
        k1, k2, k3 = (np.abs(k) == half for k in self.k_vectors)
        out = np.asarray(k1 | k2 | k3)
        out = np.broadcast_to(out, self.shape).copy()
        out.flags.writeable = False
        return out

    @cached_property
    def _conj_index(self) -> np.ndarray:
        return (-np.arange(self.n_per_dim)) % self.n_per_dim

    def mirror(self, coeffs: np.ndarray) -> np.ndarray:
        """Return the array c[-k] (indices taken modulo N)."""
        idx = self._conj_index
        return coeffs[np.ix_(idx, idx, idx)]

    def physical_coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = TWO_PI * np.arange(self.n_per_dim) / self.n_per_dim
        return (x[:, None, None], x[None, :, None], x[None, None, :])


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable Fourier coefficients of a scalar field on ``grid``."""

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        # takes ownership of the array: it is frozen, not copied
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    # arithmetic -------------------------------------------------------
    def _check(self, other: "SpectralField"):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    # helpers ----------------------------------------------------------
    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def single_mode(cls, grid: TorusGrid, k, amplitude: complex = 1.0) -> "SpectralField":
        """Field amplitude * exp(i k.x) (complex-valued unless k = 0)."""
        c = np.zeros(grid.shape, dtype=np.complex128)
        c[tuple(int(ki) % grid.n_per_dim for ki in k)] = amplitude
        return cls(grid, c)

    def is_real(self, rtol: float = 1e-12) -> bool:
        """Hermitian symmetry u_hat[-k] = conj(u_hat[k])."""
        scale = np.max(np.abs(self.coeffs), initial=0.0)
        if scale == 0.0:
            return True
        defect = np.max(np.abs(self.coeffs - np.conj(self.grid.mirror(self.coeffs))))
        return bool(defect <= rtol * scale)

    def to_physical(self) -> np.ndarray:
        return to_physical(self)


SobolevFlavor = Literal["homogeneous", "inhomogeneous"]


@dataclass(frozen=True)
class SobolevSpec:
    """Weight |k|^s (homogeneous, zero mode dropped) or <k>^s (inhomogeneous)."""

    s: float
    flavor: SobolevFlavor = "homogeneous"

    def __post_init__(self):
        if self.flavor not in ("homogeneous", "inhomogeneous"):
            raise ValueError(f"unknown Sobolev flavor {self.flavor!r}")

    def weights(self, grid: TorusGrid) -> np.ndarray:
        if self.flavor == "inhomogeneous":
            return (1.0 + grid.kmag**2) ** (self.s / 2.0)
        return mode_weights(grid, self.s, zero_mode=0.0)


def mode_weights(grid: TorusGrid, s: float, zero_mode: float) -> np.ndarray:
    """|k|^s off the origin, ``zero_mode`` at k = 0."""
    kmag = grid.kmag
    with np.errstate(divide="ignore"):
        w = np.where(kmag > 0, kmag, 1.0) ** s
    w[0, 0, 0] = zero_mode
    return w


# transforms -----------------------------------------------------------

def to_spectral(samples: np.ndarray, grid: TorusGrid) -> SpectralField:
    samples = np.asarray(samples)
    if samples.shape != grid.shape:
        if samples.size != grid.size:
            raise ValueError(f"got {samples.size} samples for a grid of {grid.size} points")
        samples = samples.reshape(grid.shape)
    if np.iscomplexobj(samples):
        c = sfft.fftn(samples, norm="forward")
    else:
        c = real_samples_to_coeffs(samples)
    return SpectralField(grid, c)


def to_physical(f: SpectralField) -> np.ndarray:
    """Grid samples of ``f``; real dtype when ``f`` is Hermitian-symmetric."""
    if f.is_real():
        n = f.grid.n_per_dim
        return sfft.irfftn(f.coeffs[..., : n // 2 + 1], s=f.grid.shape, norm="forward")
    return sfft.ifftn(f.coeffs, norm="forward")


def hermitian_complete(half: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Rebuild the full coefficient array from the rfft half-spectrum."""
    n = grid.n_per_dim
    full = np.empty(grid.shape, dtype=np.complex128)
    full[..., : n // 2 + 1] = half
    idx = grid._conj_index
    tail = np.arange(n // 2 + 1, n)
    full[..., n // 2 + 1 :] = np.conj(half[np.ix_(idx, idx, n - tail)])
    return full


def real_samples_to_coeffs(samples: np.ndarray) -> np.ndarray:
    grid = TorusGrid(samples.shape[0])
    return hermitian_complete(sfft.rfftn(samples, norm="forward"), grid)


def padded_physical(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Evaluate a real field on an m^3 grid, m >= N.

    ``coeffs`` is either the full (N, N, N) array or its rfft half (N, N, N/2+1);
    only the half is read.  Modes with |k_i| = N/2 are ignored.  The transform is
    done axis by axis so that the zero padding is never transformed.
    """
    n = coeffs.shape[0]
    h = n // 2
    a = np.zeros((m, n, h), dtype=np.complex128)
    a[:h] = coeffs[:h, :, :h]
    a[m - h + 1 :] = coeffs[n - h + 1 :, :, :h]
    a = sfft.ifft(a, axis=0, norm="forward", overwrite_x=True)
    b = np.zeros((m, m, m // 2 + 1), dtype=np.complex128)
    b[:, :h, :h] = a[:, :h]
    b[:, m - h + 1 :, :h] = a[:, n - h + 1 :]
    b[:, :, :h] = sfft.ifft(b[:, :, :h], axis=1, norm="forward", overwrite_x=True)
    return sfft.irfft(b, n=m, axis=2, norm="forward", overwrite_x=True)


def truncate_physical_half(samples: np.ndarray, n: int) -> np.ndarray:
    """Forward transform of real samples on an m^3 grid, cut to the N^3 lattice (rfft half).

    Modes with |k_i| = N/2 are set to zero so the result stays Hermitian.
    """
    m = samples.shape[0]
    h = n // 2
    b = sfft.rfft(samples, axis=2, norm="forward")[:, :, :h]
    b = sfft.fft(b, axis=1, norm="forward", overwrite_x=True)
    a = np.concatenate([b[:, :h], b[:, m - h + 1 :]], axis=1)
    a = sfft.fft(a, axis=0, norm="forward", overwrite_x=True)
    out = np.zeros((n, n, h + 1), dtype=np.complex128)
    out[:h, :h, :h] = a[:h, :h]
    out[:h, n - h + 1 :, :h] = a[:h, h:]
    out[n - h + 1 :, :h, :h] = a[m - h + 1 :, :h]
    out[n - h + 1 :, n - h + 1 :, :h] = a[m - h + 1 :, h:]
    return out


def truncate_physical(samples: np.ndarray, n: int) -> np.ndarray:
    """As :func:`truncate_physical_half`, returning the full coefficient array."""
    return hermitian_complete(truncate_physical_half(samples, n), TorusGrid(n))


# multipliers and norms ------------------------------------------------

Symbol = Union[np.ndarray, Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]]


def apply_multiplier(f: SpectralField, symbol: Symbol) -> SpectralField:
    """Multiply each coefficient by ``symbol(k)``.

    ``symbol`` is either an array broadcastable to the grid shape or a callable
    taking the three broadcastable wave-number components (k1, k2, k3).
    """
    values = symbol(*f.grid.k_vectors) if callable(symbol) else symbol
    values = np.broadcast_to(np.asarray(values), f.grid.shape)
    occupied = f.coeffs != 0
    if not np.all(np.isfinite(values[occupied])):
        raise ValueError("multiplier symbol is not finite on an occupied mode")
    with np.errstate(invalid="ignore", over="ignore"):
        return SpectralField(f.grid, np.where(occupied, values * f.coeffs, 0.0))


def lowpass_mask(grid: TorusGrid, K: float) -> np.ndarray:
    if not np.isfinite(K) or K <= 0:
        raise ValueError(f"cutoff K must be positive and finite, got {K}")
    return grid.kmag < K


def lowpass(f: SpectralField, K: float) -> SpectralField:
    """Sharp projection onto the open ball |k| < K."""
    return SpectralField(f.grid, np.where(lowpass_mask(f.grid, K), f.coeffs, 0.0))


def weighted_l2(coeffs: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sqrt(VOLUME * np.sum(weights**2 * (coeffs.real**2 + coeffs.imag**2))))


def sobolev_norm(f: SpectralField, spec: SobolevSpec) -> float:
    return weighted_l2(f.coeffs, spec.weights(f.grid))


def lebesgue_norm(f: SpectralField, q: float) -> float:
    """Rectangle-rule L^q norm over the grid samples; q = inf gives the grid max."""
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    return lebesgue_norm_samples(to_physical(f), q)


def lebesgue_norm_samples(samples: np.ndarray, q: float) -> float:
    a = np.abs(samples)
    if np.isinf(q):
        return float(a.max())
    n = samples.shape[0]
    cell = (TWO_PI / n) ** 3
    # scale out the max so high powers do not overflow
    top = a.max()
    if top == 0:
        return 0.0
    return float(top * (cell * np.sum((a / top) ** q)) ** (1.0 / q))


def sobolev_noise(grid: TorusGrid, s: float, seed: int, amplitude: float = 1.0) -> SpectralField:
    """Real random field with |u_hat[k]| = amplitude * |k|^(-s - 3/2 - eps).

    Phases come from the Fourier transform of Gaussian white noise, so the
    field is Hermitian-symmetric.  The mean and the modes with |k_i| = N/2 are
    zero.
    """
    rng = np.random.default_rng(seed)
    white = real_samples_to_coeffs(rng.standard_normal(grid.shape))
    mag = np.abs(white)
    phase = np.divide(white, mag, out=np.zeros_like(white), where=mag > 0)
    decay = mode_weights(grid, -s - 1.5 - NOISE_EPS, zero_mode=0.0)
    c = amplitude * decay * phase
    c[grid.nyquist_mask] = 0.0
    return SpectralField(grid, c)


# serialization --------------------------------------------------------

def field_to_record(f: SpectralField) -> dict:
    flat = f.coeffs.reshape(-1)
    inter = np.empty(2 * flat.size)
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    return {"n_per_dim": f.grid.n_per_dim, "coeffs": inter.tolist()}


def field_from_record(record: dict) -> SpectralField:
    grid = TorusGrid(int(record["n_per_dim"]))
    inter = np.asarray(record["coeffs"], dtype=np.float64)
    if inter.size != 2 * grid.size:
        raise ValueError("coefficient record has the wrong length")
    return SpectralField(grid, (inter[0::2] + 1j * inter[1::2]).reshape(grid.shape))


def save_field_json(f: SpectralField, path) -> None:
    Path(path).write_text(json.dumps(field_to_record(f)))


def load_field_json(path) -> SpectralField:
    return field_from_record(json.loads(Path(path).read_text()))


def field_to_bytes(f: SpectralField) -> bytes:
    header = _MAGIC + struct.pack("<II", _VERSION, f.grid.n_per_dim)
    return header + f.coeffs.astype("<c16").tobytes(order="C")


def field_from_bytes(data: bytes) -> SpectralField:
    if data[:4] != _MAGIC:
        raise ValueError("not a spectral field record")
    version, n = struct.unpack("<II", data[4:12])
    if version != _VERSION:
        raise ValueError(f"unsupported field record version {version}")
    grid = TorusGrid(n)
    body = np.frombuffer(data, dtype="<c16", offset=12)
    if body.size != grid.size:
        raise ValueError("truncated field record")
    return SpectralField(grid, body.reshape(grid.shape))
