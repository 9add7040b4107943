import pytest
from hypothesis import given, strategies as st

from flashsim.designs import (
    MatmulParams, MdParams, RandomParams, StencilParams, ToyParams, gen_matmul, gen_md,
    gen_random, gen_stencil, gen_toy_mpath,
)
from flashsim.elaborate import elaborate
from flashsim.oracle import run_oracle
from flashsim.trace import DEADLOCK, DONE, trace_csv_text

from helpers import both, ed_of, loop_duration, single_loop


def test_closed_form_single_pipeline():
    rep, ev = run_oracle(elaborate(single_loop(10, 1, 5)))
    assert loop_duration(ev) == 14
    assert rep.status == DONE


def test_toy_deadlock_same_cycle():
    rep, ev, orep, oev = both(ed_of(gen_toy_mpath()))
    assert orep.status == DEADLOCK
    assert orep.deadlock_cycle == rep.deadlock_cycle == 9
    assert ev == oev


def test_toy_bubbles_cycles():
    rep, ev, orep, oev = both(ed_of(gen_toy_mpath(ToyParams(trip=2000)), bubbles=True))
    assert rep.status == orep.status == DONE
    assert rep.total_cycles == orep.total_cycles
    assert ev == oev


@pytest.mark.parametrize("d", [
    gen_md(MdParams(trip=40)), gen_md(MdParams(trip=40, threshold=None)),
    gen_matmul(MatmulParams(N=3)), gen_matmul(MatmulParams(N=4, feedback_depth=1)),
    gen_stencil(StencilParams(width=5, height=12, stages=3)),
    gen_stencil(StencilParams(width=5, height=12, stages=3, fifo_depth=1)),
], ids=["md", "md-noprune", "matmul3", "matmul-fb1", "stencil", "stencil-d1"])
def test_benchmarks_equivalent(d):
    rep, ev, orep, oev = both(ed_of(d))
    assert trace_csv_text(ev) == trace_csv_text(oev)
    assert rep.comparable() == orep.comparable()


@given(st.integers(0, 10**6))
def test_random_equivalence(seed):
    rep, ev, orep, oev = both(ed_of(gen_random(RandomParams(seed=seed))), 5000)
    assert ev == oev
    assert rep.comparable() == orep.comparable()


def test_cycle_cap_agrees():
    ed = elaborate(single_loop(50, 1, 3))
    rep, ev, orep, oev = both(ed, 17)
    assert rep.comparable() == orep.comparable() and ev == oev


def test_oracle_dump_on_deadlock():
    orep, _ = run_oracle(elaborate(gen_toy_mpath(ToyParams(trip=30))))
    f = orep.registers["fifos"]
    assert f["f1"]["full"] and f["f4"]["empty"]
