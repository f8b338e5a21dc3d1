#!/usr/bin/env python3
"""Locate the nonexistence threshold of -Delta_p u = f(u) + lambda on the
unit disc empirically: scan a lambda grid with the monotone fixed-point
iteration, bracket the first divergence, bisect, and repeat on a refined
mesh to gauge discretization sensitivity."""

import argparse
import json
from pathlib import Path

from plapd.existence import HomotopyConfig, estimate_lambda_max
from plapd.geometry import mesh_disc
from plapd.nonlinearity import estimate_Lambda, from_spec


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--f", default="power:q=3")
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--bisections", type=int, default=10)
    ap.add_argument("--out", default="lambda_threshold.json")
    args = ap.parse_args()

    f = from_spec(args.f, p=args.p)
    cfg = HomotopyConfig(Lambda=estimate_Lambda(f, args.p))
    results = {}
    for level, h in enumerate((args.h, args.h / 2)):
        mesh = mesh_disc(1.0, h)
        rep = estimate_lambda_max(f, args.p, mesh, cfg=cfg,
                                  bisections=args.bisections)
        results[f"h={h:g}"] = {
            "lambda_hat": rep.lambda_hat,
            "bracket": list(rep.bracket),
            "lower_bound_only": rep.lower_bound_only,
            "anomalies": rep.anomalies,
        }
        tag = (f"lambda_hat = {rep.lambda_hat:.6f} in {rep.bracket}"
               if not rep.lower_bound_only
               else f"no divergence found above lambda = {rep.bracket[0]:g}")
        print(f"h = {h:g} ({mesh.n_nodes} nodes): {tag}")
        if rep.anomalies:
            print("  anomalies:", *rep.anomalies, sep="\n  ")

    Path(args.out).write_text(json.dumps(results, indent=2) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
