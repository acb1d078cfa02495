"""Divergence counts and std(y) for the centred and non-centred funnel across step sizes.

    python scripts/funnel_divergences.py --eps 0.1 0.2 0.3 --seeds 5 --draws 10000
"""

import argparse

from slic.corpus import load
from slic.inference import HmcConfig, hmc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.1])
    ap.add_argument("--steps", type=int, default=16)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--draws", type=int, default=10_000)
    ap.add_argument("--warmup", type=int, default=1_000)
    args = ap.parse_args()

    models = {"cp": load("funnel"), "ncp": load("funnel_ncp")}
    print("eps,seed,param,divergences,std_y,accept")
    for eps in args.eps:
        for seed in range(args.seeds):
            cfg = HmcConfig(step_size=eps, steps=args.steps, iterations=args.draws + args.warmup,
                            warmup=args.warmup, seed=seed)
            for label, fx in models.items():
                d = hmc(fx.program(), fx.data, cfg)
                print(f"{eps},{seed},{label},{d.divergences},{d.std()['y']:.3f},{d.accept_stat.mean():.3f}",
                      flush=True)


if __name__ == "__main__":
    main()
