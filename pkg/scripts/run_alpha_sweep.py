#!/usr/bin/env python3
"""Sweep the log-damped critical family f(s) = s^(p*-1)/ln(e+s)^alpha over
alpha and record, per alpha, the radial solution height and the verdicts of
the weighted subcriticality hypotheses.  The interesting feature is the
verdict flip at alpha = p/(N-p)."""

import argparse
import json
from pathlib import Path

import numpy as np

from plapd.existence import sweep_alpha
from plapd.nonlinearity import critical_exponents


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--alpha-min", type=float, default=0.5)
    ap.add_argument("--alpha-max", type=float, default=6.0)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--out", default="alpha_sweep.json")
    args = ap.parse_args()

    threshold = args.p / (args.N - args.p)
    exps = critical_exponents(args.p, args.N)
    print(f"p* = {exps.p_star:.4f}, weighted-hypothesis threshold "
          f"alpha = p/(N-p) = {threshold:.4f}")

    alphas = np.linspace(args.alpha_min, args.alpha_max, args.n)
    rows = sweep_alpha(args.p, args.N, alphas)
    for row in rows:
        sup = f"{row['sup_norm']:.4f}" if row["solved"] else "  ---  "
        print(f"alpha={row['alpha']:6.3f}  sup={sup}  "
              f"h3''={row['h3pp']:<12} h4''={row['h4pp']:<12} h5={row['h5']}")
    Path(args.out).write_text(json.dumps(rows, indent=2) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
