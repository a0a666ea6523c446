"""Product-space error norms, discrete space-time norms, Strichartz ratios and order fits."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Literal, Optional, Sequence

import numpy as np
import scipy.fft as sfft

from .propagator import State
from .spectral import (
    SobolevSpec,
    SpectralField,
    lebesgue_norm,
    lebesgue_norm_samples,
    lowpass_mask,
    mode_weights,
    sobolev_norm,
    weighted_l2,
)

ERROR_FLOOR = 1e-10


@dataclass(frozen=True)
class PairNormSpec:
    """Norm on X^s x X^(s-1).

    ``homogeneous``: weight |k|^sigma on each component; at k = 0 the weight is
    0 for sigma > 0 and 1 for sigma <= 0, so L^2 pieces and negative-order
    pieces keep the zero mode while gradient pieces drop it.
    ``inhomogeneous``: weight (1 + |k|^2)^(sigma/2).
    """

    s: float
    flavor: Literal["homogeneous", "inhomogeneous"] = "homogeneous"

    def component_weights(self, grid, sigma: float) -> np.ndarray:
        if self.flavor == "inhomogeneous":
            return SobolevSpec(sigma, "inhomogeneous").weights(grid)
        return mode_weights(grid, sigma, zero_mode=0.0 if sigma > 0 else 1.0)


L2_HM1 = PairNormSpec(0.0)
H1_L2 = PairNormSpec(1.0)


def pair_norm(U: State, spec: PairNormSpec) -> float:
    nu = weighted_l2(U.u.coeffs, spec.component_weights(U.grid, spec.s))
    nv = weighted_l2(U.v.coeffs, spec.component_weights(U.grid, spec.s - 1.0))
    return math.hypot(nu, nv)


@dataclass(frozen=True)
class SpacetimeNormSpec:
    p: float
    q: float
    tau: float

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError(f"need p, q >= 1, got ({self.p}, {self.q})")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


def _combine(values: Sequence[float], p: float, tau: float) -> float:
    a = np.asarray(values, dtype=np.float64)
    if a.size == 0:
        raise ValueError("space-time norm of an empty sequence")
    if math.isinf(p):
        return float(a.max())
    top = a.max()
    if top == 0:
        return 0.0
    return float(top * (tau * np.sum((a / top) ** p)) ** (1.0 / p))


def spacetime_norm(fields: Iterable[SpectralField], spec: SpacetimeNormSpec) -> float:
    """(tau sum_n ||F_n||_{L^q}^p)^(1/p); the maximum over n when p = inf."""
    return _combine([lebesgue_norm(f, spec.q) for f in fields], spec.p, spec.tau)


def is_admissible(p: float, q: float, gamma: float, tol: float = 1e-12) -> bool:
    """Wave admissibility in three dimensions.

    p in (2, inf], q in [2, inf), 1/p + 1/q <= 1/2 and 1/p + 3/q = 3/2 - gamma.
    The endpoint (2, inf, 1) is handled separately by :func:`endpoint_ratio`.
    """
    if not (p > 2 and 2 <= q < math.inf):
        return False
    ip, iq = 1.0 / p, 1.0 / q
    return ip + iq <= 0.5 + tol and abs(ip + 3 * iq - (1.5 - gamma)) <= tol


def _filtered_orbit_norms(f: SpectralField, K: float, tau: float, n_steps: int, q: float):
    """||pi_K exp(i n tau |nabla|) f||_{L^q} for n = 0..n_steps."""
    grid = f.grid
    base = np.where(lowpass_mask(grid, K), f.coeffs, 0.0)
    phase = np.exp(1j * tau * grid.kmag)
    out = []
    c = base
    for n in range(n_steps + 1):
        if n:
            c = c * phase
        out.append(lebesgue_norm_samples(sfft.ifftn(c, norm="forward"), q))
    return out


def _check_cutoff(K: float, tau: float) -> None:
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if K < (1.0 / tau) * (1 - 1e-12):
        raise ValueError(f"discrete Strichartz bounds need K >= 1/tau, got K = {K}, tau = {tau}")


def strichartz_ratio(f: SpectralField, K: float, tau: float, p: float, q: float,
                     gamma: float, T: float = 1.0) -> float:
    """||pi_K exp(i n tau |nabla|) f||_{l^p_tau L^q, n <= T/tau} / ||f||_{H-dot^gamma}."""
    if not is_admissible(p, q, gamma):
        raise ValueError(f"({p}, {q}, {gamma}) is not wave admissible")
    _check_cutoff(K, tau)
    denom = sobolev_norm(f, SobolevSpec(gamma))
    if denom == 0:
        raise ValueError("f has zero homogeneous Sobolev norm")
    n_steps = int(math.floor(T / tau + 1e-9))
    return _combine(_filtered_orbit_norms(f, K, tau, n_steps, q), p, tau) / denom


def endpoint_ratio(f: SpectralField, K: float, tau: float, N: int) -> float:
    """||pi_K exp(i n tau |nabla|) f||_{l^2_tau L^inf} / (sqrt(K tau + log(1 + K N tau)) ||f||_{H-dot^1})."""
    _check_cutoff(K, tau)
    h1 = sobolev_norm(f, SobolevSpec(1.0))
    if h1 == 0:
        raise ValueError("f has zero H-dot^1 norm")
    num = _combine(_filtered_orbit_norms(f, K, tau, N, math.inf), 2.0, tau)
    return num / (math.sqrt(K * tau + math.log1p(K * N * tau)) * h1)


# convergence reports ----------------------------------------------------

@dataclass
class ErrorRow:
    tau: float
    K: Optional[float]
    err_l2hm1: float
    err_h1l2: float


@dataclass
class ConvergenceReport:
    rows: list = field(default_factory=list)
    fitted_slope: float = math.nan
    fit_residual: float = math.nan
    fit_rows: int = 0
    manifest: dict = field(default_factory=dict)

    def sort(self) -> None:
        self.rows.sort(key=lambda r: -r.tau)

    def fit(self, last: Optional[int] = None) -> None:
        """Fit the L^2 x H^-1 errors, optionally on the ``last`` finest rows only."""
        self.sort()
        rows = self.rows if last is None else self.rows[-last:]
        self.fitted_slope, self.fit_residual = fit_order([(r.tau, r.err_l2hm1) for r in rows])
        self.fit_rows = sum(1 for r in rows if r.err_l2hm1 > ERROR_FLOOR)

    def to_csv(self) -> str:
        self.sort()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "K", "err_l2hm1", "err_h1l2"])
        for r in self.rows:
            w.writerow([repr(float(r.tau)), "" if r.K is None else repr(float(r.K)),
                        repr(float(r.err_l2hm1)), repr(float(r.err_h1l2))])
        return buf.getvalue()

    def to_json(self) -> str:
        self.sort()
        return json.dumps({
            "manifest": self.manifest,
            "rows": [asdict(r) for r in self.rows],
            "fit": {"slope": _finite_or_none(self.fitted_slope),
                    "residual": _finite_or_none(self.fit_residual), "rows_used": self.fit_rows},
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ConvergenceReport":
        d = json.loads(text)
        fit = d["fit"]
        return cls(rows=[ErrorRow(**r) for r in d["rows"]],
                   fitted_slope=math.nan if fit["slope"] is None else fit["slope"],
                   fit_residual=math.nan if fit["residual"] is None else fit["residual"],
                   fit_rows=fit["rows_used"],
                   manifest=d["manifest"])


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def fit_order(rows: Sequence[tuple[float, float]], floor: float = ERROR_FLOOR) -> tuple[float, float]:
    """Least-squares slope of log2(error) against log2(tau).

    Rows with error at or below ``floor`` are dropped.  The residual is the largest
    absolute deviation of log2(error) from the fitted line.
    """
    usable = [(t, e) for t, e in rows if e > floor and t > 0]
    if len(usable) < 3:
        raise ValueError(f"need at least 3 rows above the error floor {floor:g}, got {len(usable)}")
    x = np.log2([t for t, _ in usable])
    y = np.log2([e for _, e in usable])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return float(slope), residual
