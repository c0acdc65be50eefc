"""Cross-check the valley-free checker against the completion oracle.

Enumerates every label word up to the given length and reports the
agreement rate, the number of violating words per length, and timing.

    python3 scripts/valley_exhaustive.py --max-len 8
"""

import argparse
import sys
import time
from collections import Counter

from tagwatch.valley import all_label_words, check_valley_free, completion_oracle


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-len", type=int, default=6)
    args = ap.parse_args(argv)

    t0 = time.perf_counter()
    total, violating, disagreements = Counter(), Counter(), []
    for word in all_label_words(args.max_len):
        v = check_valley_free(word)[0]
        total[len(word)] += 1
        violating[len(word)] += v
        if v != completion_oracle(word):
            disagreements.append(word)
    elapsed = time.perf_counter() - t0

    print(f"{'length':>6} {'words':>8} {'violating':>10} {'fraction':>9}")
    for n in sorted(total):
        print(f"{n:>6} {total[n]:>8} {violating[n]:>10} {violating[n] / total[n]:>9.4f}")
    print(f"disagreements: {len(disagreements)}  elapsed: {elapsed:.3f}s")
    for w in disagreements[:10]:
        print("  ", [r.value for r in w])
    return 1 if disagreements else 0


if __name__ == "__main__":
    sys.exit(main())
