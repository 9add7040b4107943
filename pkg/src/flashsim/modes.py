"""Naive sequential simulation, reproducing software C-simulation semantics.

This is a test fixture that is wrong on purpose and never the default.
Each module runs to completion in declaration order, loop iterations run
one after another with their ops in textual order, and there is no notion of
cycles.  A blocking read of an empty channel yields 0, the way a software
simulator reads an empty stream, so feedback data produced by a later module
is simply missing.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

from .ir import (
    Compute, Design, FlashError, NbRead, PipelinedLoop, Read, ReadAny, Write, eval_expr,
)
from .trace import DONE, FIFO_READ, FIFO_WRITE, SimReport, TraceEvent


class FifoPolicy(enum.Enum):
    UNBOUNDED = "unbounded"
    EXACT = "exact"


@dataclass(frozen=True)
class NaiveOptions:
    fifo_policy: FifoPolicy = FifoPolicy.UNBOUNDED
    op_cap: int = 50_000_000          # per module


class NonTerminating(FlashError):
    pass


class _Fifo:
    def __init__(self, name, depth):
        self.name = name
        self.depth = depth
        self.q = deque()
        self.reads = self.writes = 0
        self.dropped = 0
        self.empty_reads = 0


def run_sequential(d: Design, o: NaiveOptions = NaiveOptions(), events=None) -> SimReport:
    """Returns a Done report with zero cycles; ``events`` (a list) collects reads/writes."""
    bounded = o.fifo_policy is FifoPolicy.EXACT
    fifos = {f.name: _Fifo(f.name, f.depth) for f in d.fifos}
    sinks = set(d.sink_fifos())
    outputs = []
    args = dict(d.args)

    for m in d.modules:
        budget = [o.op_cap]
        env = {p: args[p] for p in m.params}

        def note(kind, f, v):
            if events is not None:
                events.append(TraceEvent(0, kind, f, v, m.name))

        def tick():
            budget[0] -= 1
            if budget[0] < 0:
                raise NonTerminating(f"module {m.name} exceeded {o.op_cap} operations")

        def pop(f):
            ch = fifos[f]
            ch.reads += 1
            if ch.q:
                v = ch.q.popleft()
            else:
                ch.empty_reads += 1
                v = 0
            note(FIFO_READ, f, v)
            return v

        def execute(op, env, in_loop):
            tick()
            if op.guard is not None and not eval_expr(op.guard, env):
                if in_loop:
                    for v in _defs(op):
                        env[v] = 0
                return
            if isinstance(op, Compute):
                env[op.target] = eval_expr(op.expr, env)
            elif isinstance(op, Read):
                env[op.target] = pop(op.fifo)
            elif isinstance(op, NbRead):
                if fifos[op.fifo].q:
                    env[op.target], env[op.ok] = pop(op.fifo), 1
                else:
                    env[op.target] = env[op.ok] = 0
            elif isinstance(op, ReadAny):
                for j, f in enumerate(op.fifos):
                    if fifos[f].q:
                        env[op.target], env[op.index], env[op.ok] = pop(f), j, 1
                        break
                else:
                    env[op.target] = env[op.index] = env[op.ok] = 0
            elif isinstance(op, Write):
                v = eval_expr(op.expr, env)
                ch = fifos[op.fifo]
                if bounded and len(ch.q) >= ch.depth:
                    ch.dropped += 1       # nobody else runs, so a full channel never drains
                    return
                ch.q.append(v)
                ch.writes += 1
                note(FIFO_WRITE, op.fifo, v)
                if op.fifo in sinks:
                    outputs.append((0, op.fifo, v))

        for step in m.body:
            if not isinstance(step, PipelinedLoop):
                execute(step.op, env, False)
                continue
            gates = [op for op in step.ops
                     if step.bubble and op.stage == 1 and isinstance(op, (Read, ReadAny))]
            bounds = step.bounds
            for n in range(step.trip):
                if gates and not _gate_ready(gates, fifos):
                    # with every other module idle the gate can never open again
                    raise NonTerminating(
                        f"module {m.name}: bubble loop starved after {n} iterations")
                it = dict(env)
                rem = n
                for v, trip in reversed(bounds):
                    it[v] = rem % trip
                    rem //= trip
                for op in step.ops:
                    execute(op, it, True)

    for name in sinks:
        fifos[name].reads = fifos[name].writes    # the built-in sink takes everything
    meta = {"design": d.name, "mode": "naive", "fifo_policy": o.fifo_policy.value,
            "empty_reads": sum(f.empty_reads for f in fifos.values()),
            "dropped_writes": sum(f.dropped for f in fifos.values())}
    return SimReport(
        status=DONE,
        total_cycles=0,
        modules=[(m.name, 0, 0) for m in d.modules],
        fifos=[(f.name, fifos[f.name].reads, fifos[f.name].writes) for f in d.fifos],
        outputs=outputs,
        meta=meta,
    )


def _gate_ready(gates, fifos) -> bool:
    left = {}
    for op in gates:
        cands = (op.fifo,) if isinstance(op, Read) else op.fifos
        for f in cands:
            have = len(fifos[f].q) - left.get(f, 0)
            if have > 0:
                left[f] = left.get(f, 0) + 1
                break
        else:
            return False
    return True


def _defs(op):
    if isinstance(op, (Compute, Read)):
        return (op.target,)
    if isinstance(op, NbRead):
        return (op.target, op.ok)
    if isinstance(op, ReadAny):
        return (op.target, op.index, op.ok)
    return ()
