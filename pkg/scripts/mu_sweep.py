#!/usr/bin/env python3
"""Sweep the coupling weight mu and record how orthonormal the estimate stays.

Reproduces the mu-sensitivity study: one seeded row-sparse scenario is drawn,
alpha is chosen by cross-validation at the reference mu, and the solver is
rerun across the mu grid recording ||V'V - I||_max each time.  The output CSV
(columns mu,max_dev) feeds the report-plots component's sensitivity figure.

Example (desk scale):
    python scripts/mu_sweep.py --n 100 --p 80 --d 3 --R0 6 --out mu_series.csv
Full scale matches the study setting: --n 250 --p 500 --d 5 --R0 10
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from clrpca.io import atomic_write_text, fmt
from clrpca.linalg import sample_covariance
from clrpca.model_selection import cross_validate
from clrpca.simulation import ScenarioConfig, compose, make_truth, sample_log_basis
from clrpca.solver import SolverConfig, admm_fit, default_hyperparameters
from clrpca.transforms import clr

DEFAULT_MUS = "1,5,10,50,100,500,1000,5000,10000"


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--n", type=int, default=250)
    parser.add_argument("--p", type=int, default=500)
    parser.add_argument("--d", type=int, default=5)
    parser.add_argument("--R0", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--q", type=float, default=0.0)
    parser.add_argument("--mus", default=DEFAULT_MUS,
                        help=f"Comma-separated mu grid (default {DEFAULT_MUS}).")
    parser.add_argument("--alpha", type=float, default=None,
                        help="Penalty level; default selects it by CV at mu=1000.")
    parser.add_argument("--out", required=True, help="Output CSV (mu,max_dev).")
    args = parser.parse_args()

    mus = [float(tok) for tok in args.mus.split(",") if tok.strip()]
    cfg = ScenarioConfig(n=args.n, p=args.p, d=args.d, R0=args.R0, sparsity="row",
                         q=args.q, distribution="normal", replicates=1, seed=args.seed)
    truth = make_truth(cfg, 0)
    Y = sample_log_basis(cfg.n, truth, "normal", (cfg.seed, 0, 2))
    Z = clr(compose(Y))
    S = sample_covariance(Z)
    beta, rho, _ = default_hyperparameters(S)

    alpha = args.alpha
    if alpha is None:
        cv = cross_validate(Z, cfg.d, "row", cfg.q, seed=(cfg.seed, 0, 3))
        alpha = cv.best_alpha
        print(f"cross-validated alpha = {alpha:.6g}")

    lines = ["mu,max_dev"]
    for mu in mus:
        fit = admm_fit(S, cfg.d, SolverConfig(mode="row", q=cfg.q, alpha=alpha,
                                              beta=beta, rho=rho, mu=mu))
        dev = fit.diagnostics.gram_max_dev
        lines.append(f"{fmt(mu)},{fmt(dev)}")
        print(f"mu={mu:<8g} ||V'V - I||_max = {dev:.3e}")
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
