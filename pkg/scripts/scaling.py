"""Fit time against sample size, with the log-log slopes of assembly and full fit.

    python3 scripts/scaling.py --sizes 250,500,1000,2000 --repeats 3
"""

import argparse

from sca.experiments import run_scaling_bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="250,500,1000,2000")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--k", type=int, default=10)
    args = ap.parse_args()
    res = run_scaling_bench([int(s) for s in args.sizes.split(",")], repeats=args.repeats, k=args.k)
    print(f"{'n':>6}  {'assembly s':>11}  {'fit s':>9}")
    for n, a, f in zip(res.sizes, res.assembly_seconds, res.fit_seconds):
        print(f"{n:>6}  {a:>11.4f}  {f:>9.4f}")
    print(f"slope: assembly {res.assembly_slope:.2f}, full fit {res.fit_slope:.2f}" + ("  (partial)" if res.partial else ""))


if __name__ == "__main__":
    main()
