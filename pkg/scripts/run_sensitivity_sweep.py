#!/usr/bin/env python3
"""Sweep the pseudo-labeling threshold and its decay rate.

Varies one parameter at a time around the defaults (delta0 +/- 50%,
decay rate 0 to 2x) and reports the spread of final accuracies.
"""

import argparse
from pathlib import Path

import numpy as np

from ceal import harness


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/sweep", help="output directory")
    parser.add_argument("--repetitions", type=int, default=5)
    args = parser.parse_args()

    spec = harness.ExperimentSpec(repetitions=args.repetitions)
    d0, dr = spec.ceal.delta0, spec.ceal.decay_rate
    cells = harness.sweep_sensitivity(
        spec,
        delta0_values=[0.5 * d0, 0.75 * d0, d0, 1.25 * d0, 1.5 * d0],
        decay_values=[0.0, 0.5 * dr, dr, 1.5 * dr, 2.0 * dr],
    )
    harness.write_sweep_outputs(cells, Path(args.out))

    for cell in cells:
        print(
            f"delta0={cell.delta0:.4f} decay={cell.decay_rate:.5f} "
            f"final={cell.mean_final_accuracy:.4f} +/- {cell.stddev_final_accuracy:.4f}"
        )
    finals = [c.mean_final_accuracy for c in cells]
    print(f"spread across cells: std={np.std(finals):.4f}")


if __name__ == "__main__":
    main()
