import pytest
from hypothesis import given, strategies as st

from flashsim.designs import RandomParams, ToyParams, gen_random, gen_toy_mpath
from flashsim.elaborate import elaborate, validate_design
from flashsim.ir import (
    CausalityViolation, Compute, ModuleDecl, PipelinedLoop, Read, Unsupported, Write,
    Binary, Const, Var, DesignError, op_uses,
)
from flashsim.parser import parse_design
from flashsim.transform import (
    TransformOptions, analyze_liveness, assign_asap_states, insert_bubbles, transform_design,
)

from helpers import both, ed_of


def rules(text):
    return validate_design(parse_design(text)).rules()


def test_multiple_producers():
    r = rules("""design d
fifo f depth=1
module a() { s: write f (1) }
module b() { s: write f (2) }
module c() { s: x = read f }
""")
    assert "multiple-producers" in r


def test_empty_body():
    assert "empty-body" in rules("design d\nmodule m() { }\n")


def test_other_diagnostics():
    assert "unknown-fifo" in rules("design d\nmodule m() { s: write g (1) }\n")
    assert "duplicate-name" in rules("design d\nfifo m depth=1\nmodule m() { s: write m (1) }\n")
    assert "use-before-def" in rules("design d\nmodule m() { s: x = y }\n")
    assert "bad-loop" in rules("design d\nmodule m() { loop (i=0..2) II=3 IL=2 { st1: x = 1 } }\n")
    assert "bad-stage" in rules("design d\nmodule m() { loop (i=0..2) II=1 IL=2 { st3: x = 1 } }\n")
    assert "causality" in rules("""design d
fifo f depth=1
fifo g depth=1
module p() { s: write f (1) }
module m() { loop (i=0..2) II=1 IL=3 { st2: t = read f; st1: write g (t) } }
""")


def test_toy_generator_valid():
    assert validate_design(gen_toy_mpath()).ok


def m2_like(ii, il, w):
    return parse_design(f"""design d
fifo a depth=2
fifo b depth=2
module src() {{ loop (i=0..4) II=1 IL=1 {{ st1: write a (i) }} }}
module M2() {{
  loop (i=0..4) II={ii} IL={il} {{
    st1: t = read a
    st{w}: write b (t * 711)
  }}
}}
""")


def test_m2_write_block_and_copies():
    ed = elaborate(m2_like(1, 5, 5))
    lp = ed.modules[1].states[0].plan
    assert lp.blocks[1] == 0              # (5-1) % 1 and 5 % 1 agree: block 0
    assert lp.liveness["t"] == (1, 5)
    assert lp.slots("t") == 4


def test_ii2_stage5_block():
    ed = elaborate(m2_like(2, 6, 5))
    lp = ed.modules[1].states[0].plan
    assert lp.blocks[1] == 5 % 2 == 1


def test_same_stage_zero_copies():
    ed = elaborate(m2_like(1, 5, 1))
    assert ed.modules[1].states[0].plan.slots("t") == 0


def test_state_numbering_textual():
    d = parse_design("""design d
fifo f depth=1
module m() {
  a: x = 1
  loop (i=0..2) II=1 IL=1 { st1: write f (i) }
  b: y = 2
}
""")
    ed = elaborate(d)
    assert [(s.number, s.label) for s in ed.modules[0].states] == [
        (0, "a"), (1, "loop@1"), (2, "b")]


def _loop_module(ops, il=5):
    return ModuleDecl("m", (), (PipelinedLoop((("i", 4),), 1, il, tuple(ops)),))


def test_asap_examples():
    m = assign_asap_states(_loop_module([
        Read("t", "f", stage=1),
        Compute("u", Binary("*", Var("t"), Const(2))),
        Write("g", Var("u"), stage=5),
    ]))
    assert m.body[0].ops[1].stage == 1
    m = assign_asap_states(_loop_module([Compute("c", Const(3))]))
    assert m.body[0].ops[0].stage == 1
    with pytest.raises(CausalityViolation):
        assign_asap_states(_loop_module([
            Read("t", "f", stage=2),
            Compute("u", Binary("*", Var("t"), Const(2))),
            Write("g", Var("u"), stage=1),
        ]))


def test_asap_takes_latest_operand():
    m = assign_asap_states(_loop_module([
        Read("a", "f", stage=2), Read("b", "h", stage=4),
        Compute("u", Binary("+", Var("a"), Var("b"))),
        Write("g", Var("u"), stage=5),
    ]))
    assert m.body[0].ops[2].stage == 4


def test_liveness_examples():
    m = _loop_module([Read("temp", "f", stage=2), Write("g", Binary("*", Var("temp"), Const(711)), stage=6)], il=6)
    live = analyze_liveness(m)[0]
    assert live["temp"] == (2, 6)
    m = _loop_module([Read("a", "f", stage=1), Write("g", Var("a"), stage=3),
                      Read("b", "h", stage=2), Write("k", Var("b"), stage=5)])
    live = analyze_liveness(m)[0]
    assert live["a"][1] - live["a"][0] == 2
    assert live["b"][1] - live["b"][0] == 3


def test_insert_bubbles_rejects_late_read():
    m = _loop_module([Read("t", "f", stage=2), Write("g", Var("t"), stage=3)])
    with pytest.raises(Unsupported):
        insert_bubbles(m)


def test_insert_bubbles_flags_issue_reads():
    m = _loop_module([Read("t", "f", stage=1), Write("g", Var("t"), stage=3)])
    assert insert_bubbles(m).body[0].bubble
    m = _loop_module([Compute("t", Const(1), stage=1), Write("g", Var("t"), stage=3)])
    assert not insert_bubbles(m).body[0].bubble


def test_gate_nb_read_conflict_rejected():
    d = parse_design("""design d
fifo f depth=2
module p() { s: write f (1) }
module m() { loop (i=0..1) II=1 IL=1 bubble { st1: x = read f; (y, ok) = nb_read f } }
""")
    with pytest.raises(Unsupported):
        elaborate(d)


def test_invalid_design_raises():
    with pytest.raises(DesignError):
        elaborate(parse_design("design d\nmodule m() { s: x = y }\n"))


def test_elaboration_deterministic():
    d = gen_toy_mpath(ToyParams(trip=20))
    assert elaborate(d) == elaborate(d)


@given(st.integers(0, 10**6))
def test_every_op_elaborated_once(seed):
    d = gen_random(RandomParams(seed=seed))
    ed = elaborate(d)
    for plan, m in zip(ed.modules, d.modules):
        assert len(plan.states) == len(m.body)
        for sp, step in zip(plan.states, m.body):
            if sp.is_loop:
                assert len(sp.plan.loop.ops) == len(step.ops)
                assert len(sp.plan.blocks) == len(step.ops)
                for op, orig in zip(sp.plan.loop.ops, step.ops):
                    if orig.stage is not None:
                        assert op.stage == orig.stage      # fifo/staged ops never move
                    assert op.stage is not None
            else:
                assert sp.step == step


@given(st.integers(0, 10**6))
def test_slots_match_liveness(seed):
    ed = elaborate(gen_random(RandomParams(seed=seed)))
    for plan in ed.modules:
        for sp in plan.states:
            if not sp.is_loop:
                continue
            lp = sp.plan
            for v, (d, u) in lp.liveness.items():
                assert lp.slots(v) == u - d >= 0
                uses = [op.stage for op in lp.loop.ops
                        if v in op_uses(op)]
                assert u == max(uses + [d])      # no slot beyond the last use


@given(st.integers(0, 10**6))
def test_liveness_opt_observationally_neutral(seed):
    d = gen_random(RandomParams(seed=seed))
    a = both(ed_of(d, liveness_opt=True), 5000)
    b = both(ed_of(d, liveness_opt=False), 5000)
    assert a[1] == b[1]
    assert a[0].comparable() == b[0].comparable()


def test_transform_design_noop_without_bubbles():
    d = gen_toy_mpath(ToyParams(trip=5))
    assert transform_design(d, TransformOptions()) is d
