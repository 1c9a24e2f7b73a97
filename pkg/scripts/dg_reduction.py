"""Two-source domain generalization against the matching domain adaptation task.

The target replicates the distribution of the second source, so the DG run
(sources d0, d1) and the DA run (source d0, unlabeled target inside the
kernel) address the same classification problem.

    python3 scripts/dg_reduction.py --seeds 50
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from sca.experiments import ExperimentConfig, run_da, run_dg

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=50)
    args = ap.parse_args()
    da_cfg = ExperimentConfig.load(CONFIGS / "synthetic_da_reduction.json")
    dg_cfg = ExperimentConfig.load(CONFIGS / "synthetic_dg_reduction.json")
    da, dg = [], []
    print(f"{'seed':>4}  {'da':>6}  {'dg':>6}  {'raw da':>6}  {'raw dg':>6}")
    for seed in range(args.seeds):
        a = run_da(replace(da_cfg, seed=seed))
        g = run_dg(replace(dg_cfg, seed=seed))
        da.append(a.accuracy)
        dg.append(g.accuracy)
        print(f"{seed:>4}  {a.accuracy:6.3f}  {g.accuracy:6.3f}  {a.raw_accuracy:6.3f}  {g.raw_accuracy:6.3f}")
    diff = 100 * (np.mean(dg) - np.mean(da))
    print(f"mean DA {np.mean(da):.3f}  mean DG {np.mean(dg):.3f}  difference {diff:+.2f} points")


if __name__ == "__main__":
    main()
