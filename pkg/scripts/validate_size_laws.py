"""Count how often the cover-size laws hold on random region instances.

    python3 scripts/validate_size_laws.py --instances 2000 --seed 0
"""

import argparse
import random

from empc.splitcheck import check_loop, check_oeoe, loop_instance, oeoe_instance


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    for name, make, check in (("one-entry-one-exit", oeoe_instance, check_oeoe), ("loop", loop_instance, check_loop)):
        rng = random.Random(args.seed)
        failing = []
        for i in range(args.instances):
            inst = make(rng)
            c, _ = check(inst)
            if not c.holds:
                failing.append((i, c))
        print(f"{name}: {args.instances - len(failing)}/{args.instances} hold")
        for i, c in failing[:5]:
            print(f"  #{i}: whole={c.whole} remainder={c.remainder} sub={c.sub} k={c.k} combined={c.combined}")


if __name__ == "__main__":
    main()
