"""Command-line driver.

    nlwsplit converge   --scheme lie --n 64 --tau-list 2^-4..2^-9 --out results/lie
    nlwsplit strichartz --n 64 --tau-list 2^-5,2^-7 --out results/strichartz
    nlwsplit endpoint   --n 64 --tau-list 2^-5,2^-7
    nlwsplit energy     --scheme strang_ref --tau-list 0.001
    nlwsplit run        --scheme lie --tau-list 2^-6 --stride 8 --out results/run

A ``--config FILE`` with an ``[experiment]`` section supplies defaults; flags win.
Exit codes: 0 success, 2 configuration error, 3 blow-up, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .diagnostics import ConvergenceReport
from .dynamics import BlowUpError, ConfigError
from .experiments import (
    ExperimentConfig,
    band_spread,
    load_config_file,
    max_drift,
    parse_tau,
    parse_tau_list,
    parse_triples,
    rows_to_csv,
    run_convergence,
    run_endpoint,
    run_energy,
    run_single,
    run_strichartz,
    save_report,
    save_table,
)

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with an [experiment] section")
    common.add_argument("--alpha", type=float)
    common.add_argument("--mu", type=int, choices=(-1, 1))
    common.add_argument("--n", type=int, help="grid points per dimension")
    common.add_argument("--tau-list", type=parse_tau_list,
                        help="descending steps, e.g. 2^-4..2^-9 or 0.1,0.05")
    common.add_argument("--k-rule", help="inv | inv32 | fixed:K | none")
    common.add_argument("--c", type=float, help="constant in the cutoff rule")
    common.add_argument("--scheme", choices=("lie", "corrected_lie", "strang_ref"))
    common.add_argument("--t-end", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--s", type=float, help="regularity of the noise data")
    common.add_argument("--amplitude", type=float)
    common.add_argument("--profile", choices=("noise", "mode"))
    common.add_argument("--out", help="output directory")
    common.add_argument("--stride", type=int)
    common.add_argument("--tau-ref", type=parse_tau)
    common.add_argument("--strict-guard", action="store_true",
                        help="reject cutoffs that do not fit inside the grid")
    common.add_argument("--linear", action="store_true", help="test hook: g = 0")
    common.add_argument("--fit-last", type=int, help="fit the order on the finest rows only")
    common.add_argument("--error-times", choices=("end", "common"),
                        help="error at t_end only, or max over the coarsest time grid")
    common.add_argument("--k-factors", type=lambda t: tuple(float(x) for x in t.split(",")))
    common.add_argument("--triples", type=parse_triples, help="e.g. '4,12,1;inf,2,0'")
    common.add_argument("--no-plot", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="nlwsplit", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind, text in (("converge", "convergence study against a Strang reference"),
                       ("strichartz", "discrete Strichartz ratio sweep"),
                       ("endpoint", "endpoint l^2 L^inf ratio sweep"),
                       ("energy", "energy drift of a scheme"),
                       ("run", "single simulation with snapshots")):
        sub.add_parser(kind, parents=[common], help=text)
    return parser


_FLAG_FIELDS = ("alpha", "mu", "n", "tau_list", "k_rule", "c", "scheme", "t_end", "seed", "s",
                "amplitude", "profile", "out", "stride", "tau_ref", "fit_last", "error_times",
                "k_factors", "triples")


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    values = {"kind": args.kind}
    if args.config:
        values.update(load_config_file(args.config))
        values["kind"] = args.kind
    for name in _FLAG_FIELDS:
        v = getattr(args, name)
        if v is not None:
            values[name] = v
    if args.strict_guard:
        values["guard"] = "reject"
    if args.linear:
        values["linear"] = True
    return ExperimentConfig(**values)


def _execute(cfg: ExperimentConfig, plot: bool) -> None:
    out = Path(cfg.out) if cfg.out else None
    manifest = cfg.manifest()
    if cfg.kind == "converge":
        report: ConvergenceReport = run_convergence(cfg)
        sys.stdout.write(report.to_csv())
        print(f"# slope {report.fitted_slope:.4f}  residual {report.fit_residual:.4f}")
        if out:
            save_report(report, out, plot=plot)
    elif cfg.kind in ("strichartz", "endpoint"):
        rows = run_strichartz(cfg) if cfg.kind == "strichartz" else run_endpoint(cfg)
        sys.stdout.write(rows_to_csv(rows))
        key = "normalized" if cfg.kind == "strichartz" else "ratio"
        print(f"# spread of {key}: {band_spread(r[key] for r in rows):.4f}")
        if out:
            save_table(rows, out, cfg.kind, manifest)
    elif cfg.kind == "energy":
        rows = run_energy(cfg)
        for tau in cfg.tau_list:
            print(f"# tau {tau!r}: max relative drift {max_drift(rows, tau):.3e}")
        if out:
            save_table(rows, out, "energy", manifest)
    else:
        result = run_single(cfg, out)
        last = result["summary"][-1]
        print(f"# steps {last['step']}  t {last['t']:.6g}  energy {last['energy']:.10g}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        _execute(cfg, plot=not args.no_plot)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc} (step {exc.step})", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
