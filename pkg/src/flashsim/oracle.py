"""Event-driven reference simulator, used only to cross-check the engine.

Deliberately shares no stepping code with :mod:`flashsim.engine`:

* channels are deques of committed values plus a list of this cycle's writes;
* every in-flight iteration is an object holding its own environment dict,
  evaluated with the tree-walking :func:`flashsim.ir.eval_expr`;
* modules are activated from a timeline (a heap keyed by cycle).  A module
  that stalls is parked on the channels its current state touches and is only
  re-activated by a transaction on one of them; the cycles it spent parked are
  accounted (stall count and one Stall event per cycle) when it wakes.
"""
from __future__ import annotations

import heapq
from collections import deque

from .elaborate import ElaboratedDesign
from .ir import (
    Compute, NbRead, PipelinedLoop, Read, ReadAny, ScalarStmt, Write, eval_expr,
    op_reads, op_writes,
)
from .trace import (
    BUBBLE_ISSUE, CYCLE_CAP, DEADLOCK, DEADLOCK_EVENT, DONE, FIFO_READ, FIFO_WRITE,
    FSM_TRANSITION, STALL, SimReport, TraceEvent,
)


class _Chan:
    def __init__(self, name, depth):
        self.name = name
        self.depth = depth
        self.vals = deque()     # committed values, oldest first
        self.level = 0          # committed count at the start of the cycle
        self.incoming = []
        self.nread = 0
        self.reads = 0
        self.writes = 0

    def settle(self) -> bool:
        """End-of-cycle commit; True if anything moved."""
        moved = bool(self.incoming or self.nread)
        self.vals.extend(self.incoming)
        self.writes += len(self.incoming)
        self.reads += self.nread
        self.incoming = []
        self.nread = 0
        self.level = len(self.vals)
        return moved


class _Stall(Exception):
    def __init__(self, why):
        self.why = why


class _Iter:
    __slots__ = ("born", "env")

    def __init__(self, born, env):
        self.born = born
        self.env = env


class _Trial:
    """Tentative channel traffic of one module-cycle."""

    def __init__(self, chans):
        self.chans = chans
        self.took = {}
        self.put = {}
        self.log = []           # ("r", fifo) / ("w", fifo, value) in execution order

    def avail(self, f):
        return self.chans[f].level - self.took.get(f, 0)

    def take(self, f):
        v = self.chans[f].vals[self.took.get(f, 0)]
        self.took[f] = self.took.get(f, 0) + 1
        self.log.append(("r", f, v))
        return v

    def room(self, f):
        c = self.chans[f]
        return c.depth - c.level - self.put.get(f, 0)

    def give(self, f, v):
        self.put[f] = self.put.get(f, 0) + 1
        self.log.append(("w", f, v))


def _run_op(op, env, trial, *, blocking=True, loop=True):
    """Execute ``op`` against ``env`` (mutated).  Raises _Stall."""
    if op.guard is not None and not eval_expr(op.guard, env):
        if loop:
            for v in _defs(op):
                env[v] = 0
        return
    if isinstance(op, Compute):
        env[op.target] = eval_expr(op.expr, env)
    elif isinstance(op, Read):
        if blocking and trial.avail(op.fifo) <= 0:
            raise _Stall(f"empty:{op.fifo}")
        env[op.target] = trial.take(op.fifo)
    elif isinstance(op, NbRead):
        if trial.avail(op.fifo) > 0:
            env[op.target] = trial.take(op.fifo)
            env[op.ok] = 1
        else:
            env[op.target] = env[op.ok] = 0
    elif isinstance(op, ReadAny):
        for j, f in enumerate(op.fifos):
            if trial.avail(f) > 0:
                env[op.target] = trial.take(f)
                env[op.index] = j
                env[op.ok] = 1
                break
        else:
            env[op.target] = env[op.index] = env[op.ok] = 0
    elif isinstance(op, Write):
        if trial.room(op.fifo) <= 0:
            raise _Stall(f"full:{op.fifo}")
        trial.give(op.fifo, eval_expr(op.expr, env))
    else:
        raise TypeError(op)


def _defs(op):
    if isinstance(op, (Compute, Read)):
        return (op.target,)
    if isinstance(op, NbRead):
        return (op.target, op.ok)
    if isinstance(op, ReadAny):
        return (op.target, op.index, op.ok)
    return ()


def _gate_open(loop, trial_or_levels):
    """Can every issue-stage Read/ReadAny get one element (claimed in textual order)?"""
    left = dict(trial_or_levels)
    for op in loop.ops:
        if op.stage != 1:
            continue
        if isinstance(op, Read):
            cands = (op.fifo,)
        elif isinstance(op, ReadAny):
            cands = op.fifos
        else:
            continue
        for f in cands:
            if left.get(f, 0) > 0:
                left[f] -= 1
                break
        else:
            return False
    return True


def _ivals(loop, n):
    """Induction variable values of valid iteration ``n`` (row-major flattening)."""
    out = {}
    for v, trip in reversed(loop.bounds):
        out[v] = n % trip
        n //= trip
    return out


class _Proc:
    def __init__(self, idx, mod, args):
        self.idx = idx
        self.name = mod.name
        self.body = mod.body
        self.env = {p: args[p] for p in mod.params}
        self.pc = 0
        self.done = False
        self.busy = 0
        self.stall = 0
        self.parked = None      # (first stalled cycle, reason)
        self._loop_reset()

    def _loop_reset(self):
        self.t = 0
        self.issued = 0
        self.flight = []

    def label(self):
        if self.done:
            return "done"
        s = self.body[self.pc]
        return s.label if isinstance(s, ScalarStmt) else f"loop@{self.pc}"

    def channels(self):
        s = self.body[self.pc]
        ops = [s.op] if isinstance(s, ScalarStmt) else s.ops
        out = set()
        for op in ops:
            out.update(op_reads(op))
            out.update(op_writes(op))
        return out

    def finish_step(self, cycle, emit):
        old = self.label()
        self.pc += 1
        if self.pc >= len(self.body):
            self.done = True
        self._loop_reset()
        emit(TraceEvent(cycle, FSM_TRANSITION, self.name, -1 if self.done else self.pc,
                        f"{old}->{self.label()}"))

    def activate(self, cycle, chans, emit):
        """Simulate one cycle.  Returns (stalled_reason or None, progressed)."""
        step = self.body[self.pc]
        trial = _Trial(chans)
        if isinstance(step, ScalarStmt):
            env = dict(self.env)
            try:
                _run_op(step.op, env, trial, loop=False)
            except _Stall as s:
                return s.why, False
            self._apply(trial, cycle, emit)
            self.env = env
            self.busy += 1
            self.finish_step(cycle, emit)
            return None, True
        return self._loop_cycle(step, cycle, trial, emit)

    def _apply(self, trial, cycle, emit):
        for entry in trial.log:
            c = trial.chans[entry[1]]
            if entry[0] == "r":
                c.vals.popleft()
                c.nread += 1
                emit(TraceEvent(cycle, FIFO_READ, entry[1], entry[2], self.name))
            else:
                c.incoming.append(entry[2])
                emit(TraceEvent(cycle, FIFO_WRITE, entry[1], entry[2], self.name))

    def _loop_cycle(self, loop: PipelinedLoop, cycle, trial, emit):
        il = loop.il
        gated = loop.bubble and any(
            op.stage == 1 and isinstance(op, (Read, ReadAny)) for op in loop.ops)
        staged = []
        for it in sorted(self.flight, key=lambda it: it.born):
            staged.append((self.t - it.born + 1, it))
        new_envs = {}
        bubble = False
        issued = None
        try:
            for st, it in staged:           # oldest first = highest stage first
                env = dict(it.env)
                for op in loop.ops:
                    if op.stage == st:
                        _run_op(op, env, trial)
                new_envs[id(it)] = env
            if self.t % loop.ii == 0 and self.issued < loop.trip:
                if gated and not _gate_open(
                        loop, {f: trial.avail(f) for f in trial.chans}):
                    bubble = True
                else:
                    env = dict(self.env)
                    env.update(_ivals(loop, self.issued))
                    for op in loop.ops:
                        if op.stage == 1:
                            blocking = not (gated and isinstance(op, Read))
                            _run_op(op, env, trial, blocking=blocking)
                    issued = env
        except _Stall as s:
            return s.why, False

        self._apply(trial, cycle, emit)
        if bubble:
            emit(TraceEvent(cycle, BUBBLE_ISSUE, self.name, None, ""))
        for _, it in staged:
            it.env = new_envs[id(it)]
        ran_later = bool(staged)
        if issued is not None:
            self.flight.append(_Iter(self.t, issued))
            self.issued += 1
        self.flight = [it for it in self.flight if self.t - it.born + 1 < il]
        self.t += 1
        self.busy += 1
        fin = self.issued == loop.trip and not self.flight
        if fin:
            self.finish_step(cycle, emit)
            return None, True
        if not gated:
            return None, True
        if issued is not None or ran_later:
            return None, True
        if bubble:
            return None, False
        # idle between issue slots: only counts if the next issue could go ahead
        return None, _gate_open(loop, {f: c.level for f, c in trial.chans.items()})

    def dump(self):
        out = {"state": self.label(), "done": self.done, "scalars": dict(self.env)}
        if not self.done and isinstance(self.body[self.pc], PipelinedLoop):
            out["loop"] = {"t": self.t, "issued": self.issued,
                           "in_flight": [{"stage": self.t - it.born + 1, "env": dict(it.env)}
                                         for it in self.flight]}
        return out


def run_oracle(ed: ElaboratedDesign, max_cycles: int = 10_000_000):
    """Returns ``(SimReport, events)``."""
    d = ed.design
    chans = {f.name: _Chan(f.name, f.depth) for f in d.fifos}
    args = dict(d.args)
    procs = [_Proc(i, m, args) for i, m in enumerate(d.modules)]
    sink_chans = [chans[f] for f in ed.sinks]
    nmod = len(procs)
    tagged = []                 # (cycle, subject order, seq, event)
    seq = [0]

    def emitter(order):
        def emit(ev):
            seq[0] += 1
            tagged.append((ev.cycle, order, seq[0], ev))
        return emit

    timeline = [(0, p.idx) for p in procs]
    heapq.heapify(timeline)
    waiting = {name: set() for name in chans}
    outputs = []

    def unpark(p, upto):
        first, why = p.parked
        emit = emitter(p.idx)
        for c in range(first, upto + 1):
            emit(TraceEvent(c, STALL, p.name, None, why))
        p.stall += upto - first + 1
        p.parked = None
        for f in waiting:
            waiting[f].discard(p.idx)

    def all_done():
        return all(p.done for p in procs) and all(
            c.level == 0 and not c.incoming for c in sink_chans)

    cycle = 0
    status = None
    dl = None
    while cycle < max_cycles:
        if all_done():
            status = DONE
            break
        progressed = False
        ready = []
        while timeline and timeline[0][0] == cycle:
            ready.append(heapq.heappop(timeline)[1])
        for i in sorted(set(ready)):
            p = procs[i]
            why, prog = p.activate(cycle, chans, emitter(i))
            if why is not None:
                p.parked = (cycle, why)
                for f in p.channels():
                    waiting[f].add(i)
                continue
            progressed = progressed or prog
            if not p.done:
                heapq.heappush(timeline, (cycle + 1, i))
        emit = emitter(nmod)
        for c in sink_chans:
            for _ in range(c.level):
                v = c.vals.popleft()
                c.nread += 1
                outputs.append((cycle, c.name, v))
                emit(TraceEvent(cycle, FIFO_READ, c.name, v, "sink"))
        woken = set()
        for name, c in chans.items():
            if c.settle():
                progressed = True
                woken |= waiting[name]
        for i in sorted(woken):
            p = procs[i]
            if p.parked is not None:
                unpark(p, cycle)
                heapq.heappush(timeline, (cycle + 1, i))
        if not progressed:
            status, dl = DEADLOCK, cycle
            cycle += 1
            break
        cycle += 1
    if status is None:
        status = DONE if all_done() else CYCLE_CAP
    for p in procs:
        if p.parked is not None:
            unpark(p, cycle - 1)
    if status == DEADLOCK:
        emitter(nmod + 1)(TraceEvent(dl, DEADLOCK_EVENT, d.name, None, ""))
    tagged.sort(key=lambda x: x[:3])
    events = [x[3] for x in tagged]
    regs = None
    if status == DEADLOCK:
        regs = {
            "cycle": cycle,
            "modules": {p.name: p.dump() for p in procs},
            "fifos": {n: {"depth": c.depth, "contents": list(c.vals),
                          "empty": not c.vals, "full": len(c.vals) == c.depth}
                      for n, c in chans.items()},
        }
    rep = SimReport(
        status=status,
        total_cycles=cycle,
        modules=[(p.name, p.busy, p.stall) for p in procs],
        fifos=[(f.name, chans[f.name].reads, chans[f.name].writes) for f in d.fifos],
        outputs=outputs,
        deadlock_cycle=dl,
        registers=regs,
        meta={"design": d.name, "mode": "oracle"},
    )
    return rep, events
