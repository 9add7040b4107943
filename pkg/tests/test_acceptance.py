"""Acceptance criteria, one test each.

Every test attaches its criterion label through ``record_property``; the
terminal summary prints one PASS/FAIL line per criterion.
"""
import random
import time

import pytest

from flashsim.designs import (
    MatmulParams, MdParams, RandomParams, StencilParams, ToyParams, gen_matmul, gen_md,
    gen_random, gen_stencil, gen_toy_mpath, matmul_reference, matmul_result, static_estimate,
)
from flashsim.elaborate import elaborate
from flashsim.engine import simulate
from flashsim.fifo import (
    ContractViolation, check_invariants, fifo_commit, fifo_empty, fifo_full, fifo_new,
    fifo_read, fifo_write,
)
from flashsim.modes import run_sequential
from flashsim.oracle import run_oracle
from flashsim.trace import DEADLOCK, DONE, trace_csv_text

from helpers import ed_of, loop_duration, single_loop


@pytest.fixture
def crit(record_property):
    def tag(label, detail=""):
        record_property("criterion", label)
        record_property("detail", detail)
    return tag


def test_c01_artificial_deadlock(crit):
    t0 = time.perf_counter()
    rep, _ = simulate(ed_of(gen_toy_mpath(ToyParams())))
    dt = time.perf_counter() - t0
    crit("1 (toy deadlock)", f"deadlock@{rep.deadlock_cycle} in {dt:.3f}s")
    assert rep.status == DEADLOCK
    fifos = rep.registers["fifos"]
    assert fifos["f1"]["full"] and fifos["f4"]["empty"]
    assert run_sequential(gen_toy_mpath(ToyParams())).status == DONE
    assert dt < 1.0


def test_c02_bubbles_match_oracle(crit):
    ed = ed_of(gen_toy_mpath(ToyParams(trip=10_000)), bubbles=True)
    t0 = time.perf_counter()
    rep, _ = simulate(ed)
    dt = time.perf_counter() - t0
    orep, _ = run_oracle(ed)
    crit("2 (bubbles == oracle)", f"engine={rep.total_cycles} oracle={orep.total_cycles} "
         f"in {dt:.3f}s")
    assert rep.status == orep.status == DONE
    assert rep.total_cycles == orep.total_cycles
    assert dt < 1.0


def test_c03_static_estimate(crit):
    toy = gen_toy_mpath(ToyParams(trip=10_000))
    toy_rep, _ = simulate(ed_of(toy, bubbles=True))
    toy_est = static_estimate(toy)
    st = gen_stencil(StencilParams())
    st_rep, _ = simulate(elaborate(st))
    st_est = static_estimate(st)
    err = abs(st_rep.total_cycles - st_est) / st_est
    crit("3 (static estimate)", f"toy {toy_rep.total_cycles}>{toy_est}; "
         f"stencil {st_rep.total_cycles} vs {st_est} ({err:.4%})")
    assert toy_rep.total_cycles > toy_est
    assert st_rep.status == DONE and err <= 0.001


def test_c04_md_ordering(crit):
    pruned = gen_md(MdParams())
    ed = elaborate(pruned)
    rep, ev = simulate(ed, trace=True)
    orep, oev = run_oracle(ed)
    naive = run_sequential(pruned)
    full = gen_md(MdParams(threshold=None))
    frep, _ = simulate(elaborate(full))
    forep, _ = run_oracle(elaborate(full))
    fnaive = run_sequential(full)
    crit("4 (md ordering)", f"{len(rep.sink_values())} survivors")
    assert ev == oev and rep.sink_values() == orep.sink_values()
    assert naive.sink_values() != rep.sink_values()
    assert frep.sink_values() == forep.sink_values() == fnaive.sink_values()


def test_c05_matmul(crit):
    p = MatmulParams(N=4, seed=7)
    rep, _ = simulate(elaborate(gen_matmul(p)))
    naive = run_sequential(gen_matmul(p))
    ref = matmul_reference(p)
    crit("5 (matmul feedback)", f"naive empty reads={naive.meta['empty_reads']}")
    assert matmul_result(rep.sink_values(), 4) == ref
    assert matmul_result(naive.sink_values(), 4) != ref


def _fifo_fuzz(depth, rnd, n_seqs=10_000, length=40):
    violations = 0
    for _ in range(n_seqs):
        f = fifo_new(depth)
        model, pending = [], []
        for _ in range(length):
            r = rnd.random()
            if r < 0.4:
                v = rnd.randrange(-2**63, 2**63)
                was_empty = fifo_empty(f)
                if fifo_full(f):
                    try:
                        fifo_write(f, v)
                        violations += 1
                    except ContractViolation:
                        pass
                else:
                    fifo_write(f, v)
                    pending.append(v)
                    # delayed commit: never readable in the cycle it was written
                    violations += fifo_empty(f) != was_empty
            elif r < 0.75:
                if fifo_empty(f):
                    try:
                        fifo_read(f)
                        violations += 1
                    except ContractViolation:
                        pass
                else:
                    violations += fifo_read(f) != model.pop(0)
            else:
                fifo_commit(f)
                model.extend(pending)
                pending.clear()
                violations += bool(check_invariants(f, committed=True))
                violations += f.rnum != len(model)
            violations += bool(check_invariants(f))
    return violations


@pytest.mark.parametrize("depth", [1, 2, 4])
def test_c06_fifo_fuzz(crit, depth):
    bad = _fifo_fuzz(depth, random.Random(depth))
    crit(f"6.{depth} (fifo fuzz depth={depth})", f"{bad} violations")
    assert bad == 0


_BENCHES = {
    "toy": ed_of(gen_toy_mpath(ToyParams(trip=40))),
    "toy-bubbles": ed_of(gen_toy_mpath(ToyParams(trip=40)), bubbles=True),
    "md": ed_of(gen_md(MdParams(trip=24))),
    "matmul": ed_of(gen_matmul(MatmulParams(N=3))),
    "stencil": ed_of(gen_stencil(StencilParams(width=4, height=6, stages=3))),
}


@pytest.mark.parametrize("name", list(_BENCHES))
def test_c07_order_invariance(crit, name):
    ed = _BENCHES[name]
    base = trace_csv_text(simulate(ed, trace=True)[1])
    rnd = random.Random(name)
    order = list(range(len(ed.modules)))
    diffs = 0
    for _ in range(100):
        rnd.shuffle(order)
        diffs += trace_csv_text(simulate(ed, trace=True, order=order)[1]) != base
    crit(f"7.{list(_BENCHES).index(name)} (order invariance {name})", f"{diffs}/100 differ")
    assert diffs == 0


def test_c08_oracle_fuzz(crit):
    bad = []
    for seed in range(1000):
        ed = elaborate(gen_random(RandomParams(seed=seed)))
        rep, ev = simulate(ed, 5000, trace=True)
        fast, _ = simulate(ed, 5000)
        orep, oev = run_oracle(ed, 5000)
        if ev != oev or not (rep.comparable() == fast.comparable() == orep.comparable()):
            bad.append(seed)
    crit("8 (oracle fuzz, 1000 designs)", f"divergent seeds={bad[:10]}")
    assert not bad


def test_c09_throughput(crit):
    from importlib.util import module_from_spec, spec_from_file_location
    from pathlib import Path
    spec = spec_from_file_location(
        "throughput", Path(__file__).parent.parent / "scripts" / "throughput.py")
    mod = module_from_spec(spec)
    spec.loader.exec_module(mod)
    rep, rate = mod.measure(1_000_000)
    crit("9 (throughput, soft)", f"{rate:,.0f} module-cycles/s")
    assert rep.status == DONE
    assert rate >= 1_000_000


def test_c10_closed_form(crit):
    wrong = []
    for trip in range(1, 9):
        for ii in range(1, 4):
            for il in range(ii, 9):
                ed = elaborate(single_loop(trip, ii, il))
                _, ev = simulate(ed, trace=True)
                _, oev = run_oracle(ed)
                want = (trip - 1) * ii + il
                if not loop_duration(ev) == loop_duration(oev) == want:
                    wrong.append((trip, ii, il))
    crit("10 (fill/drain closed form)", f"{len(wrong)} mismatches")
    assert not wrong
