#!/usr/bin/env python3
"""Round-trip experiment: simulate a loading cycle, calibrate with both
methods, and score the fits on the training cycle and a held-out path.

Usage: python scripts/run_roundtrip.py [--noise 0.05] [--seed 0]
                                       [--out out/roundtrip]
"""

import argparse
import time
from pathlib import Path

from feecalib import (CalibrationOptions, SolverOptions, add_noise,
                      calibrate_multi_stage, calibrate_single_stage,
                      default_scenario, default_truth, heldout_scenario,
                      predict_next_cycle, resultant, rmse, simulate_cycle)
from feecalib.io import write_cycle_csv, write_report_json


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--noise", type=float, default=0.0,
                        help="relative noise sigma (fraction of peak)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n-starts", type=int, default=4)
    parser.add_argument("--out", default="out/roundtrip")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    scenario = default_scenario()
    truth = default_truth()
    dataset = simulate_cycle(scenario, truth)
    if args.noise > 0.0:
        dataset = add_noise(dataset, args.noise, args.seed)
    write_cycle_csv(out / "cycle.csv", dataset.samples, dataset.f_t_obs,
                    dataset.f_n_obs)

    heldout = heldout_scenario()
    heldout_obs = simulate_cycle(heldout, truth)
    options = CalibrationOptions(solver=SolverOptions(
        n_starts=args.n_starts, seed=args.seed))

    print(f"{'method':>12s} {'F_R train':>10s} {'F_R held-out':>12s} "
          f"{'evals':>8s} {'time':>7s}")
    for name, calibrate in (("multi", calibrate_multi_stage),
                            ("single", calibrate_single_stage)):
        t0 = time.perf_counter()
        report = calibrate(dataset, options=options)
        elapsed = time.perf_counter() - t0
        pred = predict_next_cycle(report.theta_star, heldout)
        f_t, f_n = pred.arrays()
        _, held_pct = rmse(resultant(heldout_obs.f_t_obs,
                                     heldout_obs.f_n_obs),
                           resultant(f_t, f_n))
        write_report_json(out / f"report_{name}.json", report)
        print(f"{name:>12s} {report.rmse_fr_pct:9.3f}% {held_pct:11.3f}% "
              f"{report.function_evaluations:8d} {elapsed:6.1f}s")
    print(f"outputs in {out}/")


if __name__ == "__main__":
    main()
