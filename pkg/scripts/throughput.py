"""Engine throughput on toy_mpath (bubble form) in module-cycles per second."""
import argparse
import time

from flashsim.designs import ToyParams, gen_toy_mpath
from flashsim.elaborate import elaborate
from flashsim.engine import simulate
from flashsim.transform import TransformOptions, transform_design


def measure(trip: int, depth: int = 2, repeats: int = 1):
    d = transform_design(gen_toy_mpath(ToyParams(trip=trip, fifo_depth=depth)),
                         TransformOptions(bubbles=True))
    ed = elaborate(d)
    best = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        rep, _ = simulate(ed, max_cycles=100 * trip + 1000)
        dt = time.perf_counter() - t0
        mc = sum(b + s for _, b, s in rep.modules)
        rate = mc / dt
        best = rate if best is None else max(best, rate)
    return rep, best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trip", type=int, default=1_000_000)
    ap.add_argument("--repeats", type=int, default=1)
    a = ap.parse_args()
    rep, rate = measure(a.trip, repeats=a.repeats)
    print(f"status={rep.status} cycles={rep.total_cycles} "
          f"module-cycles/s={rate:,.0f}")


if __name__ == "__main__":
    main()
