"""Per-sample cost of lazy vs eager program style on 15-block models.

Lazy programs evaluate only the ancestors of the statements actually
issued, so per-sample time drops when the query touches part of the
graph; the estimates stay bitwise identical either way.
"""

import argparse
import random
import statistics

import whatif as wi


def pick_model(base_seed, index, n_blocks):
    attempt = 0
    while True:
        gen = random.Random(wi.derive_seed(base_seed, index, attempt))
        scm = wi.generate_scm(gen, n_blocks=n_blocks)
        try:
            return scm, wi.generate_query(gen, scm)
        except wi.DegenerateGraphError:
            attempt += 1


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--models", type=int, default=5)
    parser.add_argument("--blocks", type=int, default=15)
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    ratios = []
    per_sample = {"eager": [], "lazy": []}
    for m in range(args.models):
        scm, query = pick_model(args.seed, m, args.blocks)
        seed = wi.derive_seed(args.seed, m, "run")
        results = {}
        for style in ("eager", "lazy"):
            res = wi.run_inference(
                wi.build_program(scm, query, style), args.samples, seed=seed
            )
            results[style] = res
            per_sample[style].append(res.wall_seconds / res.n_samples)
        same = wi.estimate_expectation(results["eager"]) == wi.estimate_expectation(
            results["lazy"]
        )
        ratio = per_sample["lazy"][-1] / per_sample["eager"][-1]
        ratios.append(ratio)
        print(
            f"model {m}: eager {per_sample['eager'][-1] * 1e6:7.2f}us/sample  "
            f"lazy {per_sample['lazy'][-1] * 1e6:7.2f}us/sample  "
            f"ratio {ratio:.3f}  bitwise-equal={same}"
        )
    print(
        f"median per-sample: eager {statistics.median(per_sample['eager']) * 1e6:.2f}us, "
        f"lazy {statistics.median(per_sample['lazy']) * 1e6:.2f}us, "
        f"ratio {statistics.median(per_sample['lazy']) / statistics.median(per_sample['eager']):.3f}"
    )


if __name__ == "__main__":
    main()
