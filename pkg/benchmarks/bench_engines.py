"""Rounds per second of the reference engine versus the compiled kernel.

    python3 benchmarks/bench_engines.py --n 4 8 16 --rounds 300
"""
import argparse
import time

from earlycount.adversary import Strategy, choose_faulty, inject_initial_states, max_faults
from earlycount.counting import build_combined
from earlycount.engine import ENGINES


def rate(engine_cls, tree, faulty, strategy, snap, rounds, repeat):
    best = float("inf")
    for _ in range(repeat):
        eng = engine_cls(tree, faulty, strategy, snap, 0)
        t0 = time.perf_counter()
        eng.run(rounds)
        best = min(best, time.perf_counter() - t0)
    return rounds / best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[4, 8, 16])
    ap.add_argument("--rounds", type=int, default=300)
    ap.add_argument("--compiled-rounds", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--stack", choices=("efficient", "naive"), default="efficient")
    ap.add_argument("--strategy", default="random")
    args = ap.parse_args(argv)

    names = [k for k in ("python", "compiled") if k in ENGINES]
    print(f"{'n':>4} " + " ".join(f"{k + ' r/s':>14}" for k in names) + f" {'speedup':>8}")
    for n in args.n:
        tree = build_combined(n, 1024, stack=args.stack)
        faulty = choose_faulty(n, max_faults(n))
        snap = inject_initial_states(tree, "random", 0)
        strat = Strategy(args.strategy, 0)
        rates = {}
        for k in names:
            rounds = args.rounds if k == "python" else args.compiled_rounds
            rates[k] = rate(ENGINES[k], tree, faulty, strat, snap, rounds, args.repeat)
        speed = rates["compiled"] / rates["python"] if len(rates) == 2 else float("nan")
        print(f"{n:>4} " + " ".join(f"{rates[k]:>14.1f}" for k in names) + f" {speed:>8.1f}x")


if __name__ == "__main__":
    main()
