"""Convergence of sampled estimates to the exact oracle on random models.

Thin wrapper over `whatif bench` with desk-scale defaults; writes the
CSV and prints the per-budget error summary.
"""

import argparse

from whatif.cli import main as cli_main


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--models", type=int, default=50)
    parser.add_argument("--blocks", type=int, default=12)
    parser.add_argument("--samples", default="100,1000,5000")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default="bench.csv")
    args = parser.parse_args()

    raise SystemExit(
        cli_main(
            [
                "bench",
                "--models", str(args.models),
                "--blocks", str(args.blocks),
                "--samples", args.samples,
                "--seed", str(args.seed),
                "--workers", str(args.workers),
                "--out", args.out,
            ]
        )
    )


if __name__ == "__main__":
    main()
