"""Worked continuous example: counterfactual mean under observed emission.

X, Z ~ N(0,1), Y = X + Z + eps with eps ~ N(0,2).  We observe
Y = 1.2342, force Z to -2.5236 in the twin world, and ask for E[Y'].
Closed form: E[X + eps | Y] = 5Y/6, so the target is 5*1.2342/6 - 2.5236.
"""

import argparse
import time

import whatif as wi


def program(ctx):
    x = ctx.normal(0, 1, name="X")
    z = ctx.normal(0, 1, name="Z")
    y = ctx.observable_normal(x.value + z.value, 2, name="Y", depends_on=[x, z])
    ctx.observe(y, 1.2342)
    ctx.do(z, -2.5236, kind=wi.CF)
    ctx.predict(y.value, label="Y", counterfactual=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--budgets", default="1000,10000,100000", help="comma-separated sample counts"
    )
    args = parser.parse_args()

    exact = 5 * 1.2342 / 6 - 2.5236
    print(f"closed form E[Y'] = {exact:.6f}")
    for n in (int(s) for s in args.budgets.split(",")):
        t0 = time.perf_counter()
        res = wi.run_inference(program, n, seed=args.seed)
        wall = time.perf_counter() - t0
        est = wi.estimate_expectation(res)
        print(
            f"N={n:>7}: estimate {est:+.6f}  error {abs(est - exact):.2e}  "
            f"ESS {wi.ess(res.log_weights):8.1f}  {wall:6.2f}s"
        )


if __name__ == "__main__":
    main()
