"""Corrected Lie with cutoffs that fit inside the grid.

With K = tau^(-3/2) the filter is inside the 64^3 lattice only for tau >= 0.1,
so this study instead scales the grid with the finest cutoff: N is chosen so
that K <= N/2 - 1 for every tau in the list.  Expect long runtimes beyond N = 128.

    python scripts/resolved_corrected.py --tau-list 2^-2..2^-5 --out results/resolved
"""
import argparse
import math
from pathlib import Path

from nlwsplit.experiments import ExperimentConfig, parse_tau_list, run_convergence, save_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tau-list", type=parse_tau_list, default=parse_tau_list("2^-2..2^-5"))
    ap.add_argument("--tau-ref-factor", type=int, default=32)
    ap.add_argument("--out", type=Path, default=Path("results/resolved"))
    args = ap.parse_args()

    k_max = min(args.tau_list) ** -1.5
    n = 2 * (math.ceil(k_max) + 1)
    n += n % 2
    cfg = ExperimentConfig(kind="converge", n=n, scheme="corrected_lie", k_rule="inv32",
                           tau_list=args.tau_list, tau_ref=min(args.tau_list) / args.tau_ref_factor,
                           guard="reject")
    print(f"grid {n}^3, largest cutoff {k_max:.1f}")
    report = run_convergence(cfg)
    save_report(report, args.out)
    print(report.to_csv())
    print(f"slope {report.fitted_slope:.3f}  residual {report.fit_residual:.3f}")


if __name__ == "__main__":
    main()
