"""Experiment drivers: convergence studies, Strichartz sweeps, energy drift, single runs."""
from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .diagnostics import (
    H1_L2,
    L2_HM1,
    ConvergenceReport,
    ErrorRow,
    endpoint_ratio,
    is_admissible,
    pair_norm,
    strichartz_ratio,
)
from .dynamics import (
    ConfigError,
    ModelParams,
    SchemeConfig,
    energy,
    energy_norm,
    evolve,
    Trajectory,
    reference_trajectory,
)
from .propagator import State
from .spectral import SpectralField, TorusGrid, field_to_bytes, sobolev_noise, to_spectral

log = logging.getLogger(__name__)

KINDS = ("converge", "strichartz", "endpoint", "energy", "run")
K_RULE_NAMES = {"inv": "inverse_tau", "inv32": "inverse_tau_3_2", "none": "none"}


@dataclass
class ExperimentConfig:
    kind: str = "converge"
    alpha: float = 3.0
    mu: int = 1
    n: int = 64
    tau_list: tuple = tuple(2.0**-j for j in range(4, 10))
    k_rule: Optional[str] = None
    c: float = 1.0
    scheme: str = "lie"
    t_end: float = 1.0
    profile: str = "noise"
    s: float = 1.0
    seed: int = 0
    amplitude: float = 0.25
    out: Optional[str] = None
    stride: int = 1
    tau_ref: Optional[float] = None
    guard: str = "warn"
    linear: bool = False
    fit_last: Optional[int] = None
    error_times: str = "end"
    k_factors: tuple = (1.0, 2.0, 4.0, 8.0)
    triples: tuple = ((4.0, 12.0, 1.0), (math.inf, 2.0, 0.0))

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        self.tau_list = tuple(float(t) for t in self.tau_list)
        if any(b >= a for a, b in zip(self.tau_list, self.tau_list[1:])):
            raise ConfigError("tau_list must be strictly descending")
        if any(not 0 < t <= 1 for t in self.tau_list):
            raise ConfigError("every tau must lie in (0, 1]")
        if self.profile not in ("noise", "mode"):
            raise ConfigError(f"unknown data profile {self.profile!r}")
        if self.error_times not in ("end", "common"):
            raise ConfigError(f"error_times must be 'end' or 'common', got {self.error_times!r}")
        self.params  # validates alpha, mu
        try:
            self.grid
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        for tau in self.tau_list:
            self.scheme_config(tau)

    @property
    def params(self) -> ModelParams:
        return ModelParams(float(self.alpha), int(self.mu), bool(self.linear))

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid(int(self.n))

    def resolved_rule(self) -> tuple[Optional[str], Optional[float]]:
        if self.k_rule is None:
            return None, None
        if self.k_rule.startswith("fixed:"):
            try:
                return "fixed", float(self.k_rule.split(":", 1)[1])
            except ValueError as exc:
                raise ConfigError(f"bad fixed cutoff {self.k_rule!r}") from exc
        if self.k_rule in K_RULE_NAMES:
            return K_RULE_NAMES[self.k_rule], None
        if self.k_rule in K_RULE_NAMES.values() or self.k_rule == "fixed":
            return self.k_rule, None
        raise ConfigError(f"unknown k-rule {self.k_rule!r}")

    def scheme_config(self, tau: float, scheme: Optional[str] = None) -> SchemeConfig:
        rule, k_fixed = self.resolved_rule()
        return SchemeConfig(tau=tau, scheme=scheme or self.scheme, k_rule=rule, c=self.c,
                            k_fixed=k_fixed, t_end=self.t_end, guard=self.guard)

    @property
    def reference_tau(self) -> float:
        return self.tau_ref if self.tau_ref is not None else min(self.tau_list) / 32.0

    def manifest(self) -> dict:
        d = asdict(self)
        d["tau_list"] = list(self.tau_list)
        d["k_factors"] = list(self.k_factors)
        d["triples"] = [[_num(x) for x in t] for t in self.triples]
        d["tau_ref"] = self.reference_tau
        d["resolved"] = [
            {"tau": tau, "K": self.scheme_config(tau).cutoff,
             "rule": self.scheme_config(tau).rule,
             "fits_grid": _fits(self.scheme_config(tau), self.grid)}
            for tau in self.tau_list
        ]
        d["version"] = __version__
        return d


def _num(x: float):
    return "inf" if math.isinf(x) else x


def _fits(cfg: SchemeConfig, grid: TorusGrid) -> bool:
    K = cfg.cutoff
    return K is None or K <= grid.n_per_dim // 2 - 1


# config parsing -------------------------------------------------------

_POW = re.compile(r"^\s*2\^(-?\d+)\s*$")


def parse_tau(text: str) -> float:
    m = _POW.match(text)
    if m:
        return 2.0 ** int(m.group(1))
    return float(text)


def parse_tau_list(text: str) -> tuple:
    """``"0.1,0.05"``, ``"2^-4,2^-5"`` or the range ``"2^-4..2^-9"``."""
    text = text.strip()
    if ".." in text and "^" in text:
        lo, hi = (s.strip() for s in text.split(".."))
        a, b = int(_POW.match(lo).group(1)), int(_POW.match(hi).group(1))
        step = -1 if b < a else 1
        return tuple(2.0**j for j in range(a, b + step, step))
    return tuple(parse_tau(t) for t in text.split(",") if t.strip())


def parse_triples(text: str) -> tuple:
    out = []
    for chunk in text.split(";"):
        if chunk.strip():
            out.append(tuple(float(x) for x in chunk.split(",")))
    return tuple(out)


_CONVERTERS = {
    "alpha": float, "mu": int, "n": int, "c": float, "t_end": float, "s": float,
    "seed": int, "amplitude": float, "stride": int, "tau_ref": parse_tau,
    "fit_last": int, "tau_list": parse_tau_list, "triples": parse_triples,
    "k_factors": lambda t: tuple(float(x) for x in t.split(",")),
    "linear": lambda t: t.strip().lower() in ("1", "true", "yes", "on"),
}


def load_config_file(path) -> dict:
    """Read the ``[experiment]`` section of an INI-style key = value file."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not parser.has_section("experiment"):
        raise ConfigError(f"{path} has no [experiment] section")
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for key, raw in parser.items("experiment"):
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[key] = _CONVERTERS.get(key, str)(raw)
        except (ValueError, AttributeError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return values


# initial data ---------------------------------------------------------

def initial_state(cfg: ExperimentConfig) -> State:
    """``noise``: (u, v) rough fields in H^s x H^(s-1); ``mode``: u = amplitude cos(x_1), v = 0."""
    grid = cfg.grid
    if cfg.profile == "noise":
        return State(sobolev_noise(grid, cfg.s, cfg.seed, cfg.amplitude),
                     sobolev_noise(grid, cfg.s - 1.0, cfg.seed + 1, cfg.amplitude))
    x1, x2, x3 = grid.physical_coordinates()
    u = to_spectral(cfg.amplitude * np.cos(x1) + 0.0 * (x2 + x3), grid)
    return State(u, SpectralField.zeros(grid))


# experiments ----------------------------------------------------------

def compute_reference(cfg: ExperimentConfig) -> Trajectory:
    """Strang reference for ``cfg``, storing the states a convergence study compares against."""
    tau_ref = cfg.reference_tau
    stride = None
    if cfg.error_times == "common":
        ratio = max(cfg.tau_list) / tau_ref
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("tau_ref must divide the coarsest step for error_times = common")
        stride = int(round(ratio))
    log.info("reference: Strang, tau_ref = %g, %d steps", tau_ref, int(cfg.t_end / tau_ref + 1e-9))
    return reference_trajectory(initial_state(cfg), cfg.params, tau_ref, cfg.t_end, stride=stride)


def run_convergence(cfg: ExperimentConfig, reference: Optional[Trajectory] = None) -> ConvergenceReport:
    """Errors of the configured scheme against a Strang reference, plus the order fit.

    ``reference`` may be passed to share one reference between studies with the
    same data, model, ``tau_ref`` and ``t_end``; otherwise it is computed here.
    """
    if len(cfg.tau_list) < 3:
        raise ConfigError("a convergence study needs at least three step sizes")
    if cfg.scheme not in ("lie", "corrected_lie"):
        raise ConfigError(f"convergence studies need scheme lie or corrected_lie, got {cfg.scheme!r}")
    p = cfg.params
    U0 = initial_state(cfg)
    tau_ref = cfg.reference_tau
    coarse = max(cfg.tau_list)
    ref = compute_reference(cfg) if reference is None else reference
    ref_at = dict(zip(np.round(np.asarray(ref.times) / tau_ref).astype(int), ref.states))
    if int(round(ref.times[-1] / tau_ref)) != int(math.floor(cfg.t_end / tau_ref + 1e-9)):
        raise ConfigError("the reference trajectory does not reach t_end")
    report = ConvergenceReport(manifest=cfg.manifest())
    for tau in cfg.tau_list:
        sc = cfg.scheme_config(tau)
        log.info("%s: tau = %g, K = %s", sc.scheme, tau, sc.cutoff)
        if cfg.error_times == "common":
            traj = evolve(U0, p, sc, stride=int(round(coarse / tau)))
        else:
            traj = evolve(U0, p, sc, stride=None)
            traj.steps, traj.times, traj.states = traj.steps[-1:], traj.times[-1:], traj.states[-1:]
        e1 = e2 = 0.0
        for t, U in zip(traj.times, traj.states):
            R = ref_at.get(int(round(t / tau_ref)))
            if R is None:
                continue
            diff = R - U
            e1 = max(e1, pair_norm(diff, L2_HM1))
            e2 = max(e2, pair_norm(diff, H1_L2))
        report.rows.append(ErrorRow(tau=tau, K=sc.cutoff, err_l2hm1=e1, err_h1l2=e2))
    try:
        report.fit(cfg.fit_last)
    except ValueError as exc:
        log.warning("no order fit: %s", exc)
    return report


def run_strichartz(cfg: ExperimentConfig) -> list[dict]:
    """Sweep K = factor / tau for each tau and each configured admissible triple."""
    for triple in cfg.triples:
        if not is_admissible(*triple):
            raise ConfigError(f"triple {triple} is not wave admissible")
    f = initial_state(cfg).u
    rows = []
    for p, q, gamma in cfg.triples:
        for tau in cfg.tau_list:
            for factor in cfg.k_factors:
                K = factor / tau
                r = strichartz_ratio(f, K, tau, p, q, gamma, cfg.t_end)
                norm = (K * tau) ** (1.0 / p) if not math.isinf(p) else 1.0
                rows.append({"p": p, "q": q, "gamma": gamma, "tau": tau, "K": K,
                             "ratio": r, "normalized": r / norm})
    return rows


def run_endpoint(cfg: ExperimentConfig) -> list[dict]:
    f = initial_state(cfg).u
    rows = []
    for tau in cfg.tau_list:
        N = int(math.floor(cfg.t_end / tau + 1e-9))
        for factor in cfg.k_factors:
            K = factor / tau
            rows.append({"p": 2.0, "q": math.inf, "gamma": 1.0, "tau": tau, "K": K,
                         "ratio": endpoint_ratio(f, K, tau, N), "N": N})
    return rows


def band_spread(values) -> float:
    """max / min of positive values (the empirical band width of a sweep)."""
    v = np.asarray(list(values), dtype=np.float64)
    return float(v.max() / v.min())


def run_energy(cfg: ExperimentConfig) -> list[dict]:
    """Relative energy deviation |E_n - E_0| / |E_0| at each recorded step, one tau per run.

    Energies are evaluated while the trajectory streams, so no states are kept.
    """
    p = cfg.params
    U0 = initial_state(cfg)
    rows = []
    for tau in cfg.tau_list:
        start = len(rows)

        def observe(n: int, t: float, U: State) -> None:
            e = energy(U, p)
            e0 = e if n == 0 else rows[start]["energy"]
            rows.append({"tau": tau, "step": n, "t": t, "energy": e,
                         "rel_drift": abs(e - e0) / abs(e0) if e0 else abs(e - e0)})

        evolve(U0, p, cfg.scheme_config(tau), stride=cfg.stride, observe=observe, keep=False)
    return rows


def max_drift(rows: list[dict], tau: Optional[float] = None) -> float:
    return max(r["rel_drift"] for r in rows if tau is None or r["tau"] == tau)


def run_single(cfg: ExperimentConfig, out: Optional[Path] = None) -> dict:
    """Evolve one trajectory; optionally persist snapshots, manifest and summary.

    Snapshots are written as the run proceeds, and the returned trajectory holds
    only the final state.
    """
    p = cfg.params
    tau = cfg.tau_list[0]
    sc = cfg.scheme_config(tau)
    manifest = cfg.manifest()
    manifest["run"] = {"tau": tau, "K": sc.cutoff, "scheme": sc.scheme, "n_steps": sc.n_steps}
    snap = None
    if out is not None:
        out = Path(out)
        snap = out / "trajectory"
        snap.mkdir(parents=True, exist_ok=True)
    summary = []

    def observe(n: int, t: float, U: State) -> None:
        summary.append({"step": n, "t": t, "energy": energy(U, p), "norm_h1l2": pair_norm(U, H1_L2),
                        "norm_l2hm1": pair_norm(U, L2_HM1), "energy_norm": energy_norm(U)})
        if snap is not None:
            (snap / f"u_{n:07d}.nlwf").write_bytes(field_to_bytes(U.u))
            (snap / f"v_{n:07d}.nlwf").write_bytes(field_to_bytes(U.v))

    traj = evolve(initial_state(cfg), p, sc, stride=cfg.stride, observe=observe, keep=False)
    if out is not None:
        write_json(out / "manifest.json", manifest)
        write_csv(out / "summary.csv", summary)
    return {"manifest": manifest, "summary": summary, "trajectory": traj}


# persistence ----------------------------------------------------------

def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def write_csv(path, rows: list[dict]) -> None:
    Path(path).write_text(rows_to_csv(rows))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable))


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot serialize {type(x)}")


def _clean(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def save_report(report: ConvergenceReport, out: Path, plot: bool = True) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv())
    (out / "report.json").write_text(report.to_json())
    if plot and report.rows:
        from .plots import emit_plots
        emit_plots(report, out / "convergence.svg")


def save_table(rows: list[dict], out: Path, name: str, manifest: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / f"{name}.csv", rows)
    write_json(out / f"{name}.json", _clean({"manifest": manifest, "rows": rows}))


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
