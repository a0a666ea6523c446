"""Discrete Strichartz and endpoint ratios of a rough field across cutoffs K = m / tau.

    python scripts/strichartz_sweep.py --n 64 --out results/strichartz
"""
import argparse
import math
from pathlib import Path

from nlwsplit.experiments import (
    ExperimentConfig,
    band_spread,
    parse_tau_list,
    run_endpoint,
    run_strichartz,
    save_table,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--tau-list", type=parse_tau_list, default=(2.0**-5, 2.0**-7))
    ap.add_argument("--max-factor", type=int, default=8)
    ap.add_argument("--out", type=Path, default=Path("results/strichartz"))
    args = ap.parse_args()

    factors = tuple(float(m) for m in range(1, args.max_factor + 1))
    cfg = ExperimentConfig(kind="strichartz", n=args.n, tau_list=args.tau_list, k_factors=factors,
                           triples=((4.0, 12.0, 1.0), (6.0, 6.0, 5.0 / 6.0), (math.inf, 2.0, 0.0)))
    rows = run_strichartz(cfg)
    save_table(rows, args.out, "strichartz", cfg.manifest())
    for triple in cfg.triples:
        sel = [r for r in rows if (r["p"], r["q"], r["gamma"]) == triple]
        print(f"(p, q, gamma) = {triple}: spread of ratio / (K tau)^(1/p) = "
              f"{band_spread(r['normalized'] for r in sel):.3f}")
    ep_cfg = ExperimentConfig(kind="endpoint", n=args.n, tau_list=args.tau_list, k_factors=factors)
    ep = run_endpoint(ep_cfg)
    save_table(ep, args.out, "endpoint", ep_cfg.manifest())
    print(f"endpoint: spread of normalized ratio = {band_spread(r['ratio'] for r in ep):.3f}")


if __name__ == "__main__":
    main()
