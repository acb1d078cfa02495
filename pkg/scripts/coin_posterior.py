"""Marginalise the two-coin program and estimate P(c1 = 1 | not both heads) from re-draws.

    python scripts/coin_posterior.py --draws 50000 --seed 0
"""

import argparse

import numpy as np

from slic.condind import marginalize
from slic.corpus import load
from slic.levels import infer
from slic.runtime.model import Model
from slic.shredder import emit, shred


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--show", action="store_true", help="print the blocked program too")
    args = ap.parse_args()

    typed, plan = marginalize(infer(load("coins").program()))
    if args.show:
        print(emit(shred(typed)))
    model = Model(typed.program, {}, typed=typed)
    runner = model.genquant_runner([])
    rng = np.random.default_rng(args.seed)
    heads = sum(runner.draw(rng)["c1"] for _ in range(args.draws))
    print(f"elimination order {plan.order}; log evidence {model.log_density([]):.6f}")
    print(f"P(c1 = 1 | not both heads) ~ {heads / args.draws:.4f} from {args.draws} draws (exact 1/3)")


if __name__ == "__main__":
    main()
