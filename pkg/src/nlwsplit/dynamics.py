"""Time stepping for  u_tt = Laplace(u) - mu |u|^(alpha-1) u  on the torus.

Written as the first-order system  U' = A U + G(U)  with U = (u, v),
G(U) = (0, g(u)) and g(u) = -mu |u|^(alpha-1) u.  Three one-step maps are
provided: the frequency-filtered Lie splitting, the filtered corrected Lie
splitting (cubic case only) and an unfiltered Strang splitting used as a
reference integrator.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal, Optional

import numpy as np

from .propagator import ModeMatrix, State, phi2_matrix, wave_matrix
from .spectral import (
    VOLUME,
    SpectralField,
    hermitian_complete,
    TorusGrid,
    lowpass_mask,
    mode_weights,
    padded_physical,
    truncate_physical,
    truncate_physical_half,
    weighted_l2,
)

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e8

SchemeName = Literal["lie", "corrected_lie", "strang_ref"]
KRule = Literal["inverse_tau", "inverse_tau_3_2", "fixed", "none"]

DEFAULT_RULE = {"lie": "inverse_tau", "corrected_lie": "inverse_tau_3_2", "strang_ref": "none"}


class ConfigError(ValueError):
    pass


class ResolutionError(ConfigError):
    """The cutoff ball does not fit inside the resolved lattice."""


class UnsupportedSchemeError(ConfigError):
    pass


class BlowUpError(RuntimeError):
    def __init__(self, step: int, time: float, reason: str):
        super().__init__(f"blow-up at step {step} (t = {time:.6g}): {reason}")
        self.step = step
        self.time = time


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 3.0
    mu: int = 1
    # test hook: replace g by zero
    linear: bool = False

    def __post_init__(self):
        if not 3.0 <= self.alpha <= 5.0:
            raise ConfigError(f"alpha must lie in [3, 5], got {self.alpha}")
        if self.mu not in (-1, 1):
            raise ConfigError(f"mu must be -1 or +1, got {self.mu}")

    @property
    def polynomial(self) -> bool:
        return self.alpha in (3.0, 5.0)

    def padded_size(self, n: int) -> int:
        """Grid size on which the nonlinearity is evaluated.

        For alpha = 3, 5 the product of alpha + 1 fields with |k_i| < N/2 is
        exact on this grid; other powers use the 3/2 rule and keep some aliasing.
        """
        if self.alpha == 3.0:
            return 2 * n
        if self.alpha == 5.0:
            return 3 * n
        return 3 * n // 2 + (3 * n // 2) % 2


@dataclass(frozen=True)
class SchemeConfig:
    tau: float
    scheme: SchemeName = "lie"
    k_rule: Optional[KRule] = None
    c: float = 1.0
    k_fixed: Optional[float] = None
    t_end: float = 1.0
    # "warn": log and continue when K exceeds the lattice; "reject": raise
    guard: Literal["warn", "reject"] = "warn"

    def __post_init__(self):
        if self.scheme not in DEFAULT_RULE:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if not (0 < self.tau <= 1):
            raise ConfigError(f"tau must lie in (0, 1], got {self.tau}")
        if not self.t_end >= 0:
            raise ConfigError(f"t_end must be nonnegative, got {self.t_end}")
        if self.c <= 0:
            raise ConfigError(f"c must be positive, got {self.c}")
        if self.rule not in ("inverse_tau", "inverse_tau_3_2", "fixed", "none"):
            raise ConfigError(f"unknown k_rule {self.rule!r}")
        if self.rule == "fixed" and (self.k_fixed is None or self.k_fixed <= 0):
            raise ConfigError("k_rule 'fixed' needs a positive k_fixed")
        if self.guard not in ("warn", "reject"):
            raise ConfigError(f"unknown guard mode {self.guard!r}")
        K = self.cutoff
        if K is not None and K < 1.0 / self.tau * (1 - 1e-12):
            raise ConfigError(f"cutoff K = {K:g} is below 1/tau = {1 / self.tau:g}")

    @property
    def rule(self) -> str:
        return self.k_rule if self.k_rule is not None else DEFAULT_RULE[self.scheme]

    @property
    def cutoff(self) -> Optional[float]:
        rule = self.rule
        if rule == "inverse_tau":
            return self.c / self.tau
        if rule == "inverse_tau_3_2":
            return self.c * self.tau**-1.5
        if rule == "fixed":
            return float(self.k_fixed)
        return None

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_end / self.tau + 1e-9))

    def check_resolution(self, grid: TorusGrid) -> bool:
        """True when the cutoff ball fits in |k| <= N/2 - 1 (or there is no cutoff)."""
        K = self.cutoff
        limit = grid.n_per_dim // 2 - 1
        if K is None or K <= limit:
            return True
        msg = (f"cutoff K = {K:g} exceeds the resolved radius {limit} of the "
               f"{grid.n_per_dim}^3 grid; the filter only removes lattice corners")
        if self.guard == "reject":
            raise ResolutionError(msg)
        log.warning(msg)
        return False


# cached mode-wise operators ---------------------------------------------

@lru_cache(maxsize=32)
def _wave(grid: TorusGrid, t: float) -> ModeMatrix:
    return wave_matrix(grid.kmag, t)


@lru_cache(maxsize=8)
def _phi2(grid: TorusGrid, t: float) -> ModeMatrix:
    return phi2_matrix(grid.kmag, t)


@lru_cache(maxsize=16)
def _mask(grid: TorusGrid, K: Optional[float]) -> Optional[np.ndarray]:
    if K is None:
        return None
    m = lowpass_mask(grid, K)
    return None if m.all() else m


def _filter(c: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    return c if mask is None else np.where(mask, c, 0.0)


# nonlinearity -----------------------------------------------------------

def _power(x: np.ndarray, p: ModelParams) -> np.ndarray:
    """g(x) = -mu |x|^(alpha-1) x on physical samples."""
    y = x * x
    if p.alpha == 3.0:
        y *= x
    elif p.alpha == 5.0:
        y *= y
        y *= x
    else:
        y = np.abs(x) ** (p.alpha - 1.0)
        y *= x
    y *= -p.mu
    return y


def _g_coeffs(uc: np.ndarray, p: ModelParams) -> np.ndarray:
    n = uc.shape[0]
    if p.linear:
        return np.zeros_like(uc)
    x = padded_physical(uc, p.padded_size(n))
    return truncate_physical(_power(x, p), n)


def _g_half(uc: np.ndarray, p: ModelParams, n: int) -> np.ndarray:
    if p.linear:
        return np.zeros((n, n, n // 2 + 1), dtype=np.complex128)
    return truncate_physical_half(_power(padded_physical(uc, p.padded_size(n)), p), n)


def _cubic_terms(uc: np.ndarray, vc: np.ndarray, p: ModelParams):
    """(g(u), H(u, v)) for alpha = 3, sharing one transform of u."""
    n = uc.shape[0]
    if p.linear:
        z = np.zeros_like(uc)
        return z, (z, z)
    m = p.padded_size(n)
    x = padded_physical(uc, m)
    y = padded_physical(vc, m)
    x2 = x * x
    g = truncate_physical(-p.mu * x2 * x, n)
    h2 = truncate_physical(-3.0 * p.mu * x2 * y, n)
    return g, (-g, h2)


def _require_cubic(p: ModelParams) -> None:
    if p.alpha != 3.0:
        raise UnsupportedSchemeError(
            f"the corrected Lie splitting is only defined for alpha = 3, got {p.alpha}")


def g_apply(u: SpectralField, p: ModelParams) -> SpectralField:
    """g(u) = -mu |u|^(alpha-1) u, evaluated on a padded grid and truncated back."""
    return SpectralField(u.grid, _g_coeffs(u.coeffs, p))


def h_apply(U: State, p: ModelParams) -> State:
    """H(u, v) = (-g(u), g'(u) v) with g'(u) = -3 mu u^2."""
    _require_cubic(p)
    _, (h1, h2) = _cubic_terms(U.u.coeffs, U.v.coeffs, p)
    return State(SpectralField(U.grid, h1), SpectralField(U.grid, h2))


# one-step maps ----------------------------------------------------------

def _wrap(grid: TorusGrid, uh: np.ndarray, vh: np.ndarray) -> State:
    return State(SpectralField(grid, uh), SpectralField(grid, vh))


def lie_step(U: State, p: ModelParams, cfg: SchemeConfig) -> State:
    """exp(tau A) [U + tau Pi_K G(U)]."""
    grid, tau = U.grid, cfg.tau
    mask = _mask(grid, cfg.cutoff)
    vh = U.v.coeffs + tau * _filter(_g_coeffs(U.u.coeffs, p), mask)
    return _wrap(grid, *_wave(grid, tau).apply(U.u.coeffs, vh))


def corrected_lie_step(U: State, p: ModelParams, cfg: SchemeConfig) -> State:
    """exp(tau A) Pi_K [U + tau G(U) + tau^2 phi_2(-2 tau A) H(U)]."""
    _require_cubic(p)
    grid, tau = U.grid, cfg.tau
    mask = _mask(grid, cfg.cutoff)
    g, (h1, h2) = _cubic_terms(U.u.coeffs, U.v.coeffs, p)
    c1, c2 = _phi2(grid, -2.0 * tau).apply(h1, h2)
    uh = _filter(U.u.coeffs + tau * tau * c1, mask)
    vh = _filter(U.v.coeffs + tau * g + tau * tau * c2, mask)
    return _wrap(grid, *_wave(grid, tau).apply(uh, vh))


def strang_reference_step(U: State, p: ModelParams, tau: float) -> State:
    """exp(tau/2 A), then v += tau g(u), then exp(tau/2 A); no frequency filter."""
    grid = U.grid
    half = _wave(grid, 0.5 * tau)
    uh, vh = half.apply(U.u.coeffs, U.v.coeffs)
    vh = vh + tau * _g_coeffs(uh, p)
    return _wrap(grid, *half.apply(uh, vh))


def stepper(p: ModelParams, cfg: SchemeConfig) -> Callable[[State], State]:
    if cfg.scheme == "lie":
        return lambda U: lie_step(U, p, cfg)
    if cfg.scheme == "corrected_lie":
        _require_cubic(p)
        return lambda U: corrected_lie_step(U, p, cfg)
    return lambda U: strang_reference_step(U, p, cfg.tau)


def filter_state(U: State, K: Optional[float]) -> State:
    mask = _mask(U.grid, K)
    return _wrap(U.grid, _filter(U.u.coeffs, mask), _filter(U.v.coeffs, mask))


# evolution --------------------------------------------------------------

def energy_norm(U: State) -> float:
    """(||u||_{H^1}^2 + ||v||_{L^2}^2)^(1/2) with the inhomogeneous H^1 weight."""
    w = np.sqrt(1.0 + U.grid.kmag**2)
    return math.hypot(weighted_l2(U.u.coeffs, w), weighted_l2(U.v.coeffs, 1.0))


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    states: list = field(default_factory=list)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i) -> State:
        return self.states[i]

    @property
    def final(self) -> State:
        return self.states[-1]

    def append(self, n: int, t: float, U: State) -> None:
        self.steps.append(n)
        self.times.append(t)
        self.states.append(U)


def _check_finite(U: State, n: int, tau: float, limit: float) -> None:
    if not (np.all(np.isfinite(U.u.coeffs)) and np.all(np.isfinite(U.v.coeffs))):
        raise BlowUpError(n, n * tau, "non-finite coefficients")
    norm = energy_norm(U)
    if not math.isfinite(norm) or norm > limit:
        raise BlowUpError(n, n * tau, f"H^1 x L^2 norm {norm:.3g} exceeds {limit:.3g}")


def evolve(U0: State, p: ModelParams, cfg: SchemeConfig, stride: Optional[int] = 1,
           observe: Optional[Callable[[int, float, State], None]] = None,
           keep: bool = True) -> Trajectory:
    """Iterate the configured scheme from U0 up to t_end.

    Filtered schemes start from Pi_K U0.  States at steps n = 0, stride, 2 stride, ...
    are recorded, and the last step always is; ``stride=None`` records only the
    first and last state.  Each recorded state is passed to ``observe`` if given.
    With ``keep=False`` only the final state is retained in the trajectory, which
    keeps memory flat for long runs.
    """
    cfg.check_resolution(U0.grid)
    n_steps = cfg.n_steps
    if stride is None:
        stride = max(n_steps, 1)
    if stride < 1:
        raise ConfigError(f"stride must be positive, got {stride}")
    step = stepper(p, cfg)
    U = U0 if cfg.scheme == "strang_ref" else filter_state(U0, cfg.cutoff)
    norm0 = energy_norm(U)
    limit = BLOWUP_FACTOR * norm0 if norm0 > 0 else math.inf
    traj = Trajectory()

    def record(n: int, U: State) -> None:
        if observe is not None:
            observe(n, n * cfg.tau, U)
        if keep or n == n_steps:
            traj.append(n, n * cfg.tau, U)

    record(0, U)
    for n in range(1, n_steps + 1):
        U = step(U)
        _check_finite(U, n, cfg.tau, limit)
        if n % stride == 0 or n == n_steps:
            record(n, U)
    return traj


def reference_trajectory(U0: State, p: ModelParams, tau: float, t_end: float,
                         stride: Optional[int] = None) -> Trajectory:
    """Strang splitting up to t_end, run on rfft half-spectra.

    Adjacent half-steps of the linear flow are merged into full steps, so the
    states differ from iterating :func:`strang_reference_step` by round-off only.
    Storage follows :func:`evolve`.
    """
    grid = U0.grid
    n = grid.n_per_dim
    n_steps = int(math.floor(t_end / tau + 1e-9))
    stride = max(n_steps, 1) if stride is None else stride
    if stride < 1:
        raise ConfigError(f"stride must be positive, got {stride}")
    traj = Trajectory()
    traj.append(0, 0.0, U0)
    if n_steps == 0:
        return traj
    cut = (Ellipsis, slice(0, n // 2 + 1))
    hm = _wave(grid, 0.5 * tau)
    half = ModeMatrix(hm.a[cut], hm.b[cut], hm.c[cut], hm.d[cut])
    fm = _wave(grid, tau)
    full = ModeMatrix(fm.a[cut], fm.b[cut], fm.c[cut], fm.d[cut])
    norm0 = energy_norm(U0)
    limit = BLOWUP_FACTOR * norm0 if norm0 > 0 else math.inf
    uh, vh = half.apply(U0.u.coeffs[cut], U0.v.coeffs[cut])
    for k in range(1, n_steps + 1):
        vh += tau * _g_half(uh, p, n)
        if k % stride == 0 or k == n_steps:
            ue, ve = half.apply(uh, vh)
            U = _wrap(grid, hermitian_complete(ue, grid), hermitian_complete(ve, grid))
            _check_finite(U, k, tau, limit)
            traj.append(k, k * tau, U)
            if k < n_steps:
                uh, vh = half.apply(ue, ve)
        else:
            uh, vh = full.apply(uh, vh)
            if k % 64 == 0 and not (np.all(np.isfinite(uh)) and np.all(np.isfinite(vh))):
                raise BlowUpError(k, k * tau, "non-finite coefficients")
    return traj


def reference_solution(U0: State, p: ModelParams, tau: float, t_end: float) -> State:
    return reference_trajectory(U0, p, tau, t_end).final


def energy(U: State, p: ModelParams) -> float:
    """1/2 ||v||^2 + 1/2 ||grad u||^2 + mu/(alpha+1) int |u|^(alpha+1).

    The potential term uses rectangle quadrature on the padded grid, exact for
    alpha = 3, 5.  The linear test hook drops it.
    """
    grid = U.grid
    kinetic = 0.5 * weighted_l2(U.v.coeffs, 1.0) ** 2
    gradient = 0.5 * weighted_l2(U.u.coeffs, mode_weights(grid, 1.0, 0.0)) ** 2
    if p.linear:
        return kinetic + gradient
    m = p.padded_size(grid.n_per_dim)
    x = padded_physical(U.u.coeffs, m)
    potential = p.mu / (p.alpha + 1.0) * VOLUME / m**3 * float(np.sum(np.abs(x) ** (p.alpha + 1.0)))
    return kinetic + gradient + potential
