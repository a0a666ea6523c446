"""Lie and corrected Lie convergence on shared rough data, plus the smooth-data control.

    python scripts/convergence_study.py --n 32 --out results/convergence

The rough-data Strang reference is computed once and reused by both schemes.
Each study writes report.csv, report.json and convergence.svg to its own folder.
"""
import argparse
import logging
from pathlib import Path

from nlwsplit.experiments import (
    ExperimentConfig,
    compute_reference,
    parse_tau,
    parse_tau_list,
    run_convergence,
    save_report,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--tau-list", type=parse_tau_list, default=parse_tau_list("2^-4..2^-9"))
    ap.add_argument("--tau-ref", type=parse_tau, default=2.0**-14)
    ap.add_argument("--alpha", type=float, default=3.0)
    ap.add_argument("--amplitude", type=float, default=0.25)
    ap.add_argument("--out", type=Path, default=Path("results/convergence"))
    ap.add_argument("--skip-smooth", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    common = dict(kind="converge", n=args.n, alpha=args.alpha, tau_list=args.tau_list,
                  tau_ref=args.tau_ref, amplitude=args.amplitude)
    lie = ExperimentConfig(scheme="lie", k_rule="inv", **common)
    reference = compute_reference(lie)
    studies = [("lie", lie, reference)]
    if args.alpha == 3.0:
        corrected = ExperimentConfig(scheme="corrected_lie", k_rule="inv32", **common)
        studies.append(("corrected_lie", corrected, reference))
        if not args.skip_smooth:
            smooth = ExperimentConfig(scheme="corrected_lie", k_rule="inv32", profile="mode", **common)
            studies.append(("corrected_lie_smooth", smooth, None))
    for name, cfg, ref in studies:
        report = run_convergence(cfg, ref)
        save_report(report, args.out / name)
        print(f"{name:22s} slope {report.fitted_slope:.3f}  residual {report.fit_residual:.3f}")
        print(report.to_csv())


if __name__ == "__main__":
    main()
