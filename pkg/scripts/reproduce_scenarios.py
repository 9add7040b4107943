"""Run the four benchmark scenarios and print what each demonstrates.

    python scripts/reproduce_scenarios.py [--toy-trip N] [--stencil-height H]
"""
import argparse

from flashsim.designs import (
    MatmulParams, MdParams, StencilParams, ToyParams, gen_matmul, gen_md, gen_stencil,
    gen_toy_mpath, matmul_reference, matmul_result, static_estimate, stencil_reference,
)
from flashsim.elaborate import elaborate
from flashsim.engine import simulate
from flashsim.modes import run_sequential
from flashsim.oracle import run_oracle
from flashsim.transform import TransformOptions, transform_design


def toy(trip):
    print(f"== toy_mpath, trip={trip}, depth=2")
    d = gen_toy_mpath(ToyParams(trip=trip))
    rep, _ = simulate(elaborate(d))
    f = rep.registers["fifos"] if rep.registers else {}
    print(f"  untransformed: {rep.status} at cycle {rep.deadlock_cycle}; "
          f"f1 full={f.get('f1', {}).get('full')} f4 empty={f.get('f4', {}).get('empty')}")
    print(f"  naive sequential: {run_sequential(d).status}")
    ed = elaborate(transform_design(d, TransformOptions(bubbles=True)))
    rep, _ = simulate(ed)
    orep, _ = run_oracle(ed)
    print(f"  with bubbles: {rep.status} in {rep.total_cycles} cycles "
          f"(oracle {orep.total_cycles}, static estimate {static_estimate(d)})")
    for depth in (4, 8, 16, 32):
        r, _ = simulate(elaborate(transform_design(
            gen_toy_mpath(ToyParams(trip=trip, fifo_depth=depth)), TransformOptions(True))))
        print(f"    depth {depth:>2}: {r.total_cycles} cycles")


def md():
    for thr, label in ((60, "pruning"), (None, "no pruning")):
        p = MdParams(threshold=thr)
        d = gen_md(p)
        eng = simulate(elaborate(d))[0].sink_values()
        orc = run_oracle(elaborate(d))[0].sink_values()
        nav = run_sequential(d).sink_values()
        print(f"== md ({label}): {len(eng)} outputs; engine==oracle {eng == orc}; "
              f"engine==naive {eng == nav}")


def matmul():
    p = MatmulParams(N=4)
    d = gen_matmul(p)
    ref = matmul_reference(p)
    eng = matmul_result(simulate(elaborate(d))[0].sink_values(), 4)
    nrep = run_sequential(d)
    print(f"== matmul N=4: engine correct {eng == ref}; naive correct "
          f"{matmul_result(nrep.sink_values(), 4) == ref} "
          f"({nrep.meta['empty_reads']} empty reads)")
    for fb in (2, 3):
        rep, _ = simulate(elaborate(gen_matmul(MatmulParams(N=4, feedback_depth=fb))))
        print(f"  feedback depth {fb}: {rep.status}")


def stencil(height):
    for depth in (2, 1):
        p = StencilParams(height=height, fifo_depth=depth)
        d = gen_stencil(p)
        rep, _ = simulate(elaborate(d))
        est = static_estimate(d)
        print(f"== stencil depth={depth}: {rep.total_cycles} cycles vs estimate {est} "
              f"({(rep.total_cycles - est) / est:+.2%}); "
              f"output correct {rep.sink_values() == stencil_reference(p)}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--toy-trip", type=int, default=10_000)
    ap.add_argument("--stencil-height", type=int, default=2048)
    a = ap.parse_args()
    toy(a.toy_trip)
    md()
    matmul()
    stencil(a.stencil_height)


if __name__ == "__main__":
    main()
