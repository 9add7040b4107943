"""Schedule completion and pre-simulation rewrites.

* ``assign_asap_states`` gives unscheduled computations the earliest stage
  that respects their operands (fewest pipeline copies).
* ``insert_bubbles`` rewrites issue-stage blocking reads into the
  non-blocking "read if available, otherwise issue a bubble" form.
* ``analyze_liveness`` computes def/last-use stages of pipelined variables,
  which size the shift registers.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .ir import (
    CausalityViolation, Design, ModuleDecl, PipelinedLoop, Read, ReadAny,
    Unsupported, UseBeforeDef, op_defs, op_uses,
)


@dataclass(frozen=True)
class TransformOptions:
    bubbles: bool = False
    liveness_opt: bool = True


def loop_local_names(loop: PipelinedLoop) -> set:
    names = set(loop.induction_vars)
    for op in loop.ops:
        names.update(op_defs(op))
    return names


def resolve_stages(loop: PipelinedLoop, strict: bool = True) -> list:
    """Stage of every op in ``loop.ops``, filling unscheduled ones ASAP.

    With ``strict`` a scheduled op reading a value produced at a later stage
    raises CausalityViolation; otherwise the conflict is ignored (used by the
    validator, which reports it as a diagnostic instead).
    """
    def_stage = {v: 1 for v in loop.induction_vars}
    stages = []
    for k, op in enumerate(loop.ops):
        need = 1
        for v in op_uses(op):
            s = def_stage.get(v)
            if s is not None and s > need:
                need = s
        if op.stage is None:
            s = need
        else:
            s = op.stage
            if strict and s < need:
                raise CausalityViolation(
                    f"op {k} at st{s} uses a value produced at st{need}")
        stages.append(s)
        for v in op_defs(op):
            def_stage[v] = s
    return stages


def assign_asap_states(m: ModuleDecl) -> ModuleDecl:
    body = []
    for step in m.body:
        if isinstance(step, PipelinedLoop) and any(op.stage is None for op in step.ops):
            stages = resolve_stages(step)
            ops = tuple(op if op.stage == s else replace(op, stage=s)
                        for op, s in zip(step.ops, stages))
            step = replace(step, ops=ops)
        elif isinstance(step, PipelinedLoop):
            resolve_stages(step)
        body.append(step)
    return replace(m, body=tuple(body))


def insert_bubbles(m: ModuleDecl) -> ModuleDecl:
    body = []
    for step in m.body:
        if isinstance(step, PipelinedLoop) and not step.bubble:
            late = [op for op in step.ops if isinstance(op, Read) and op.stage != 1]
            if late:
                raise Unsupported(
                    f"module {m.name}: blocking read of {late[0].fifo} at "
                    f"st{late[0].stage}; only issue-stage reads can be bubbled")
            issue_reads = [op for op in step.ops if isinstance(op, Read)]
            if issue_reads:
                if any(isinstance(op, ReadAny) and op.stage == 1 for op in step.ops):
                    raise Unsupported(
                        f"module {m.name}: issue stage mixes blocking reads with read_any")
                step = replace(step, bubble=True)
        body.append(step)
    return replace(m, body=tuple(body))


def analyze_liveness(m: ModuleDecl) -> dict:
    """``{step_index: {var: (def_stage, last_use_stage)}}`` for every loop of ``m``.

    Every op must already carry a stage.
    """
    out = {}
    for idx, loop in m.loops():
        local = loop_local_names(loop)
        span = {v: [1, 1] for v in loop.induction_vars}
        for k, op in enumerate(loop.ops):
            if op.stage is None:
                raise ValueError(f"module {m.name}: op {k} is unscheduled")
            for v in op_uses(op):
                if v not in local:
                    continue
                if v not in span:
                    raise UseBeforeDef(f"module {m.name}: {v} used before definition")
                if op.stage > span[v][1]:
                    span[v][1] = op.stage
            for v in op_defs(op):
                span[v] = [op.stage, op.stage]
        out[idx] = {v: tuple(s) for v, s in span.items()}
    return out


def transform_design(d: Design, opts: TransformOptions) -> Design:
    if not opts.bubbles:
        return d
    return replace(d, modules=tuple(insert_bubbles(m) for m in d.modules))
