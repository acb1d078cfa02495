"""Statement-execution counts of the marginalised HMM density against chain length.

    python scripts/hmm_elimination_cost.py --max-n 64 --stride 4
"""

import argparse
import time

from slic.condind import marginalize
from slic.corpus import hmm_data, hmm_source
from slic.frontend import parse
from slic.levels import infer
from slic.runtime.model import Model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=64)
    ap.add_argument("--stride", type=int, default=4)
    args = ap.parse_args()
    print("n,order_head,steps,brute_force_runs,seconds")
    for n in range(args.stride, args.max_n + 1, args.stride):
        t0 = time.perf_counter()
        typed, plan = marginalize(infer(parse(hmm_source(n))))
        steps = Model(typed.program, hmm_data(n), typed=typed, fast=False)._run_model([]).steps
        print(f"{n},{plan.order[0]},{steps},{2 ** n},{time.perf_counter() - t0:.2f}", flush=True)


if __name__ == "__main__":
    main()
