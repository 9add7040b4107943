import pytest

from flashsim.designs import (
    MatmulParams, MdParams, RandomParams, StencilParams, ToyParams, bench_design,
    gen_matmul, gen_md, gen_random, gen_stencil, gen_toy_mpath, matmul_reference,
    matmul_result, md_survivors, parse_bench_spec, static_estimate, stencil_reference,
)
from flashsim.elaborate import elaborate, validate_design
from flashsim.engine import simulate
from flashsim.trace import DEADLOCK, DONE

from helpers import ed_of


@pytest.mark.parametrize("gen,p", [
    (gen_toy_mpath, ToyParams(trip=30)), (gen_md, MdParams(trip=20)),
    (gen_matmul, MatmulParams(N=3)), (gen_stencil, StencilParams(width=3, height=3)),
    (gen_random, RandomParams(seed=5)),
])
def test_generators_pure_and_valid(gen, p):
    assert gen(p) == gen(p)
    assert validate_design(gen(p)).ok


def test_toy_structure():
    d = gen_toy_mpath()
    assert [f.depth for f in d.fifos] == [2] * 5
    m1 = d.module("M1").body[0]
    assert {op.fifo for op in m1.ops} == {"f1", "f2"}
    assert d.module("M2").body[0].il == 5 and d.module("M3").body[0].il == 15
    assert d.sink_fifos() == ["f5"]


def test_toy_deep_fifo_completes_without_transform():
    # sweep: the smallest depth that avoids deadlock (frozen from the oracle sweep)
    outcomes = {}
    for depth in range(2, 16):
        rep, _ = simulate(ed_of(gen_toy_mpath(ToyParams(trip=300, fifo_depth=depth))))
        outcomes[depth] = rep.status
    assert outcomes[2] == DEADLOCK
    first_ok = min(d for d, s in outcomes.items() if s == DONE)
    assert all(outcomes[d] == DONE for d in range(first_ok, 16))
    assert first_ok == 6


@pytest.mark.parametrize("depth", [1, 2, 3, 7])
def test_toy_transformed_any_depth(depth):
    rep, _ = simulate(ed_of(gen_toy_mpath(ToyParams(trip=200, fifo_depth=depth)), bubbles=True))
    assert rep.status == DONE
    assert len(rep.sink_values()) == 200


def test_md_structure():
    d = gen_md(MdParams(num_dist_pes=3, trip=10))
    force = d.module("Force").body[0]
    assert force.bubble and force.trip == md_survivors(MdParams(num_dist_pes=3, trip=10))
    assert all(op.guard is not None for m in d.modules if m.name.startswith("Dist")
               for op in m.body[0].ops if op.stage == 6)


def test_md_nothing_survives():
    d = gen_md(MdParams(trip=4, threshold=-1))
    rep, _ = simulate(elaborate(d))
    assert rep.status == DONE and rep.sink_values() == [0]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_matmul_correct(n):
    p = MatmulParams(N=n, seed=n)
    rep, _ = simulate(elaborate(gen_matmul(p)))
    assert rep.status == DONE
    assert matmul_result(rep.sink_values(), n) == matmul_reference(p)


def test_matmul_small_feedback_depth_deadlocks():
    rep, _ = simulate(elaborate(gen_matmul(MatmulParams(N=4, feedback_depth=1))))
    assert rep.status == DEADLOCK


def test_stencil_single_stage_passthrough():
    p = StencilParams(width=4, height=5, stages=1)
    rep, _ = simulate(elaborate(gen_stencil(p)))
    assert rep.sink_values() == stencil_reference(p)


def test_stencil_estimate():
    p = StencilParams(width=8, height=64)
    rep, _ = simulate(elaborate(gen_stencil(p)))
    assert rep.total_cycles == static_estimate(gen_stencil(p))
    slow, _ = simulate(elaborate(gen_stencil(StencilParams(width=8, height=64, fifo_depth=1))))
    assert slow.total_cycles > static_estimate(gen_stencil(p))


def test_static_estimate_single_loop():
    from helpers import single_loop
    d = single_loop(10, 2, 4)
    assert static_estimate(d) == 9 * 2 + 4 + 1


def test_bench_spec_parsing():
    assert parse_bench_spec("bench:toy_mpath") == ToyParams()
    assert parse_bench_spec("bench:toy_mpath:trip=5,fifo_depth=3") == ToyParams(5, 3)
    assert parse_bench_spec("bench:md:threshold=inf").threshold is None
    assert bench_design("bench:matmul:N=2") == gen_matmul(MatmulParams(N=2))
    for bad in ("bench:nope", "bench:toy_mpath:x=1", "bench:toy_mpath:trip=a", "toy"):
        with pytest.raises(ValueError):
            parse_bench_spec(bad)


def test_invalid_params():
    with pytest.raises(ValueError):
        gen_toy_mpath(ToyParams(trip=0))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_matmul_min_feedback_depth(n):
    # threshold N-1 frozen from the oracle
    ok = simulate(elaborate(gen_matmul(MatmulParams(N=n, feedback_depth=n - 1))))[0]
    bad = simulate(elaborate(gen_matmul(MatmulParams(N=n, feedback_depth=n - 2))))[0]
    assert ok.status == DONE and bad.status == DEADLOCK
