from flashsim.elaborate import elaborate
from flashsim.engine import simulate
from flashsim.oracle import run_oracle
from flashsim.parser import parse_design
from flashsim.transform import TransformOptions, transform_design


def ed_of(text_or_design, bubbles=False, liveness_opt=True):
    d = parse_design(text_or_design) if isinstance(text_or_design, str) else text_or_design
    return elaborate(transform_design(d, TransformOptions(bubbles=bubbles)), liveness_opt)


def single_loop(trip, ii, il, extra=""):
    """One module, one loop, a write at the last stage into a sink."""
    return parse_design(f"""
design single
fifo out depth=4
module M() {{
  loop (i=0..{trip}) II={ii} IL={il} {{
    st1: t = i * 3 {extra}
    st{il}: write out (t)
  }}
}}
""")


def loop_duration(events, module="M"):
    """Cycles from the first cycle of the first loop to its FsmTransition, inclusive."""
    from flashsim.trace import FSM_TRANSITION
    for ev in events:
        if ev.kind == FSM_TRANSITION and ev.subject == module and ev.detail.startswith("loop@"):
            return ev.cycle + 1
    raise AssertionError("loop never finished")


def both(ed, max_cycles=100_000):
    rep, ev = simulate(ed, max_cycles, trace=True)
    orep, oev = run_oracle(ed, max_cycles)
    return rep, ev, orep, oev
