"""Cycle-accurate interpreter for elaborated designs.

Every FSM state of every module is compiled, once per simulation, into a
small Python function that simulates exactly one cycle of that state:

1. stages run in reversed order IL..1 on the iteration records sitting at
   each pipeline position (a record travels one position per cycle, which is
   the shift-register copy), with all effects kept in locals;
2. if any enabled write meets a full FIFO, or an enabled blocking read meets
   an empty one, the cycle is abandoned without touching any state (stall);
3. otherwise FIFO operations, record updates, the pipeline shift, the issue
   of a new iteration (or a bubble) and loop bookkeeping are committed.

FIFO readable/writable counts seen by other modules only change in the
per-cycle commit, so module stepping order cannot influence the outcome.

Untraced runs additionally use a fused fast path: while every active module
sits in a pipelined loop, one generated function simulates whole stretches
of cycles for that combination of states with all FIFO and pipeline state in
Python locals.  It is emitted from the same body generator as the per-module
step functions.
"""
from __future__ import annotations

from .elaborate import ElaboratedDesign, LoopPlan, StatePlan
from .fifo import FifoState, fifo_commit
from .ir import (
    Binary, Compute, Const, NbRead, Read, ReadAny, Select, Unary, Var, Write,
    op_defs, op_reads, op_uses, op_writes,
)
from .trace import (
    BUBBLE_ISSUE, CYCLE_CAP, DEADLOCK, DEADLOCK_EVENT, DONE, FIFO_READ, FIFO_WRITE,
    FSM_TRANSITION, STALL, SimReport, TraceEvent,
)

PROGRESS = "progress"
QUIESCENT = "quiescent"
ALL_DONE = "all-done"

_WRAP = "((({}) + 9223372036854775808) & 18446744073709551615) - 9223372036854775808"


def _div(a, b):
    if b == 0:
        return 0
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return ((q + 9223372036854775808) & 18446744073709551615) - 9223372036854775808


def _mod(a, b):
    if b == 0:
        return 0
    return (((a - b * _div(a, b)) + 9223372036854775808)
            & 18446744073709551615) - 9223372036854775808


def py_expr(e, res) -> str:
    """Python source for ``e``; ``res`` maps a variable name to source text."""
    if isinstance(e, Const):
        return f"({e.value})"
    if isinstance(e, Var):
        return res(e.name)
    if isinstance(e, Binary):
        a, b = py_expr(e.left, res), py_expr(e.right, res)
        op = e.op
        if op in ("+", "-", "*"):
            return "(" + _WRAP.format(f"{a} {op} {b}") + ")"
        if op == "/":
            return f"_div({a}, {b})"
        if op == "%":
            return f"_mod({a}, {b})"
        if op == "and":
            return f"(1 if ({a} and {b}) else 0)"
        if op == "or":
            return f"(1 if ({a} or {b}) else 0)"
        return f"(1 if {a} {op} {b} else 0)"
    if isinstance(e, Unary):
        a = py_expr(e.arg, res)
        if e.op == "not":
            return f"(0 if {a} else 1)"
        return "(" + _WRAP.format(f"-{a}") + ")"
    if isinstance(e, Select):
        return f"({py_expr(e.a, res)} if {py_expr(e.cond, res)} else {py_expr(e.b, res)})"
    raise TypeError(f"not an expression: {e!r}")


def compile_expr(e, names):
    """Compile ``e`` to a function of positional args ``names`` (used for testing)."""
    params = ", ".join("v_" + n for n in names)
    src = f"def _f({params}):\n    return {py_expr(e, lambda n: 'v_' + n)}\n"
    ns = {"_div": _div, "_mod": _mod}
    exec(compile(src, "<expr>", "exec"), ns)
    return ns["_f"]


class _Src:
    def __init__(self):
        self.lines = []
        self.depth = 0

    def __call__(self, line):
        self.lines.append("    " * self.depth + line)

    def push(self):
        self.depth += 1

    def pop(self):
        self.depth -= 1

    def text(self):
        return "\n".join(self.lines) + "\n"


class _Names:
    """Identifier scheme of generated code.

    Step functions (``fused=False``) address FIFOs through their objects and
    stall by returning; fused code keeps FIFO counters in locals, prefixes
    module state with ``P`` and stalls by breaking out of the module block.
    """

    def __init__(self, P: str = "", fused: bool = False, own=()):
        self.P = P
        self.fused = fused
        self.own = own          # cycle counters to clear when a fused module stalls
        for n in ("pipe", "tau", "iss", "live", "nr", "nr_ok", "bub", "g_ok", "old",
                  "inflight", "fin", "prog", "stall", "busy"):
            setattr(self, n, P + n)

    def v(self, x):
        return f"{self.P}v_{x}"

    def s(self, x):
        return f"{self.P}S_{x}"

    def r(self, p):
        return f"{self.P}r{p}"

    def w(self, k):
        return f"{self.P}w{k}"

    def d(self, k):
        return f"{self.P}d{k}"

    def c(self, j):
        return f"{self.P}c{j}"

    def a(self, f):
        return f"{self.P}a_{f}"

    # fused FIFO state: W_f / R_f are the committed write / read totals
    def rnum(self, f):
        return f"(W_{f} - R_{f})" if self.fused else f"F_{f}.rnum"

    def wnum(self, f):
        return f"(D_{f} - W_{f} + R_{f})" if self.fused else f"F_{f}.wnum"

    def rc(self, f):
        return f"rc_{f}"

    def wc(self, f):
        return f"wc_{f}"

    def peek(self, f):
        if self.fused:
            return f"arr_{f}[(R_{f} + rc_{f}) % C_{f}]"
        return f"F_{f}.arr[(F_{f}.rptr + rc_{f}) % C_{f}]"

    def slot(self, f):
        if self.fused:
            return f"arr_{f}[(W_{f} + wc_{f}) % C_{f}]"
        return f"F_{f}.arr[(F_{f}.wptr + wc_{f}) % C_{f}]"

    def emit_stall(self, src, why):
        if self.fused:
            if self.own:
                src("    " + " = ".join(self.own) + " = 0")
            src(f"    {self.stall} += 1")
            src("    break")
        else:
            src(f"    return _stall(cycle, {why!r})")


def _fifos_of(ops):
    rd, wr = [], []
    for op in ops:
        rd.extend(f for f in op_reads(op) if f not in rd)
        wr.extend(f for f in op_writes(op) if f not in wr)
    return rd, wr


def _emit_op(src, k, op, use, N, trace, scalar_step=False, gated=False):
    """Check-phase code for one op.  Defs land in locals ``N.v(name)``.

    ``gated`` reads were already reserved by the bubble gate and cannot stall.
    """
    defs = op_defs(op)
    guarded = op.guard is not None
    if guarded:
        g = py_expr(op.guard, use)
        if scalar_step:
            src(f"g{k} = {g}")
            src(f"if g{k}:")
        else:
            src(f"if {g}:")
        src.push()
    if isinstance(op, Compute):
        src(f"{N.v(op.target)} = {py_expr(op.expr, use)}")
    elif isinstance(op, Read):
        f, t = op.fifo, N.v(op.target)
        if not gated:
            src(f"if {N.rnum(f)} <= {N.rc(f)}:")
            N.emit_stall(src, f"empty:{f}")
        src(f"{t} = {N.peek(f)}")
        src(f"{N.rc(f)} += 1")
        if trace:
            src(f"ev.append(TE(cycle, FIFO_READ, {f!r}, {t}, NAME))")
    elif isinstance(op, NbRead):
        f, t, ok = op.fifo, N.v(op.target), N.v(op.ok)
        src(f"if {N.rnum(f)} > {N.rc(f)}:")
        src(f"    {t} = {N.peek(f)}")
        src(f"    {N.rc(f)} += 1")
        src(f"    {ok} = 1")
        if trace:
            src(f"    ev.append(TE(cycle, FIFO_READ, {f!r}, {t}, NAME))")
        src("else:")
        src(f"    {t} = {ok} = 0")
    elif isinstance(op, ReadAny):
        t, ix, ok = N.v(op.target), N.v(op.index), N.v(op.ok)
        for j, f in enumerate(op.fifos):
            src(f"{'if' if j == 0 else 'elif'} {N.rnum(f)} > {N.rc(f)}:")
            src(f"    {t} = {N.peek(f)}")
            src(f"    {N.rc(f)} += 1")
            src(f"    {ix} = {j}")
            src(f"    {ok} = 1")
            if trace:
                src(f"    ev.append(TE(cycle, FIFO_READ, {f!r}, {t}, NAME))")
        src("else:")
        src(f"    {t} = {ix} = {ok} = 0")
    elif isinstance(op, Write):
        # the target slot is free whatever happens later this cycle, so the
        # value can be stored before the cycle is known not to stall
        f = op.fifo
        src(f"if {N.wnum(f)} <= {N.wc(f)}:")
        N.emit_stall(src, f"full:{f}")
        e = py_expr(op.expr, use)
        if trace:
            src(f"{N.w(k)} = {e}")
            e = N.w(k)
        src(f"{N.slot(f)} = {e}")
        src(f"{N.wc(f)} += 1")
        if trace:
            src(f"ev.append(TE(cycle, FIFO_WRITE, {f!r}, {e}, NAME))")
    else:
        raise TypeError(op)
    if guarded:
        src.pop()
        if defs and not scalar_step:
            src("else:")
            src("    " + " = ".join(N.v(v) for v in defs) + " = 0")


def _emit_fifo_commit(src, rd, wr, N):
    if N.fused:
        return
    for f in wr:
        src(f"if wc_{f}:")
        src(f"    F_{f}.wptr = (F_{f}.wptr + wc_{f}) % C_{f}")
        src(f"    F_{f}.wnum -= wc_{f}")
        src(f"    F_{f}.pend_w += wc_{f}")
        src(f"    F_{f}.total_writes += wc_{f}")
    for f in rd:
        src(f"if rc_{f}:")
        src(f"    F_{f}.rptr = (F_{f}.rptr + rc_{f}) % C_{f}")
        src(f"    F_{f}.rnum -= rc_{f}")
        src(f"    F_{f}.pend_r += rc_{f}")
        src(f"    F_{f}.total_reads += rc_{f}")


def _factory_header(src, rd, wr, scalars):
    fifos = list(dict.fromkeys(rd + wr))
    params = ["ms"] + [f"F_{f}" for f in fifos] + [f"S_{s}" for s in scalars]
    src(f"def make({', '.join(params)}):")
    src.push()
    for f in fifos:
        src(f"C_{f} = F_{f}.cap")
    src("def _stall(cycle, why):")
    src("    ms.stall_cycles += 1")
    src("    if ms.events is not None:")
    src("        ms.events.append(TE(cycle, STALL, NAME, None, why))")
    src("    return False")
    return fifos


def _gen_scalar_step(sp: StatePlan, trace: bool):
    op = sp.step.op
    rd, wr = _fifos_of([op])
    N = _Names()
    src = _Src()
    fifos = _factory_header(src, rd, wr, [])
    src("def step(cycle):")
    src.push()
    src("SC = ms.scalars")
    if trace:
        src("ev = []")
    for f in rd:
        src(f"rc_{f} = 0")
    for f in wr:
        src(f"wc_{f} = 0")
    _emit_op(src, 0, op, lambda n: f"SC[{n!r}]", N, trace, scalar_step=True)
    _emit_fifo_commit(src, rd, wr, N)
    defs = op_defs(op)
    if defs:
        if op.guard is not None:
            src("if g0:")
            src.push()
        for v in defs:
            src(f"SC[{v!r}] = v_{v}")
        if op.guard is not None:
            src.pop()
    src("ms.busy_cycles += 1")
    if trace:
        src("ms.events.extend(ev)")
    src("ms.advance(cycle)")
    src("return True")
    src.pop()
    src("return step")
    return src.text(), fifos, []


def _piped(lp: LoopPlan) -> tuple:
    """Variables carried by the iteration record: live past their def stage."""
    return tuple(v for v in lp.locals if lp.liveness[v][1] > lp.liveness[v][0])


class _LoopInfo:
    def __init__(self, lp: LoopPlan):
        loop = lp.loop
        self.lp = lp
        self.loop = loop
        self.piped = _piped(lp)
        self.slot = {v: i for i, v in enumerate(self.piped)}
        self.def_stage = {v: 1 for v in loop.induction_vars}
        for op in loop.ops:
            for v in op_defs(op):
                self.def_stage[v] = op.stage
        self.scalars = []
        self.issue_uses = set()
        for op in loop.ops:
            for v in op_uses(op):
                if op.stage == 1:
                    self.issue_uses.add(v)
                if v not in self.def_stage and v not in self.scalars:
                    self.scalars.append(v)
        self.rd, self.wr = _fifos_of(loop.ops)
        self.by_stage = {}
        for k, op in enumerate(loop.ops):
            self.by_stage.setdefault(op.stage, []).append((k, op))
        self.bubble = loop.bubble and bool(lp.gates)
        self.single = len(loop.bounds) == 1
        self.gate_fifos = []
        for k in lp.gates:
            for f in op_reads(loop.ops[k]):
                if f not in self.gate_fifos:
                    self.gate_fifos.append(f)


def _emit_gate(src, info, N, reserved):
    """Set ``N.g_ok``: every gating op can take one element, reserving sequentially."""
    ops = info.loop.ops
    simple = [op_reads(ops[k]) for k in info.lp.gates]
    if all(len(fs) == 1 for fs in simple) and len({fs[0] for fs in simple}) == len(simple):
        terms = [f"{N.rnum(fs[0])} > {N.rc(fs[0])}" if reserved else f"{N.rnum(fs[0])} > 0"
                 for fs in simple]
        src(f"{N.g_ok} = {' and '.join(terms)}")
        return
    for f in info.gate_fifos:
        src(f"{N.a(f)} = {N.rnum(f)}" + (f" - {N.rc(f)}" if reserved else ""))
    src(f"{N.g_ok} = 1")
    for k in info.lp.gates:
        src(f"if {N.g_ok}:")
        src.push()
        for j, f in enumerate(op_reads(ops[k])):
            src(f"{'if' if j == 0 else 'elif'} {N.a(f)} > 0:")
            src(f"    {N.a(f)} -= 1")
        src("else:")
        src(f"    {N.g_ok} = 0")
        src.pop()


def _emit_loop_body(src, info: _LoopInfo, N: _Names, trace: bool):
    """One cycle of a loop state: check phase, then commit.  Sets N.fin and N.prog."""
    loop = info.loop
    IL, II = loop.il, loop.ii
    ops = loop.ops
    slot, def_stage = info.slot, info.def_stage
    ivars = loop.induction_vars

    def user(p, rec):
        def use(n):
            if n in def_stage:
                if def_stage[n] == p:
                    return N.v(n)
                return f"{rec}[{slot[n]}]"
            return N.s(n)
        return use

    # stages IL..2 on records already in flight
    for p in range(IL, 1, -1):
        if p not in info.by_stage:
            continue
        r = N.r(p)
        src(f"{r} = {N.pipe}[({N.tau} - {p - 1}) % {IL}]")
        src(f"if {r} is not None:")
        src.push()
        for k, op in info.by_stage[p]:
            _emit_op(src, k, op, user(p, r), N, trace)
        src.pop()

    # issue at stage 1
    src(f"{N.nr_ok} = 0")
    src(f"{N.bub} = 0")
    cond = f"{N.iss} < {loop.trip}"
    if II > 1:
        cond = f"{N.tau} % {II} == 0 and " + cond
    src(f"if {cond}:")
    src.push()
    if info.bubble:
        _emit_gate(src, info, N, reserved=True)
        src(f"if not {N.g_ok}:")
        src(f"    {N.bub} = 1")
        if trace:
            src("    ev.append(TE(cycle, BUBBLE_ISSUE, NAME, None, ''))")
        src("else:")
        src.push()
    src(f"{N.nr_ok} = 1")
    for j, v in enumerate(ivars):
        if v in info.issue_uses or v in slot:
            src(f"{N.v(v)} = {N.iss if info.single else N.c(j)}")
    gates = set(info.lp.gates) if info.bubble else set()
    for k, op in info.by_stage.get(1, []):
        _emit_op(src, k, op, user(1, N.nr), N, trace, gated=k in gates)
    if info.bubble:
        src.pop()
    src.pop()

    # ---- commit
    _emit_fifo_commit(src, info.rd, info.wr, N)
    for p in range(IL, 1, -1):
        defs = [v for _, op in info.by_stage.get(p, []) for v in op_defs(op) if v in slot]
        if defs:
            src(f"if {N.r(p)} is not None:")
            for v in defs:
                src(f"    {N.r(p)}[{slot[v]}] = {N.v(v)}")
    src(f"if {N.nr_ok}:")
    src.push()
    if info.piped:
        init = [N.v(v) if def_stage[v] == 1 else "0" for v in info.piped]
        src(f"{N.nr} = [{', '.join(init)}]")
    else:
        src(f"{N.nr} = ()")
    src(f"{N.iss} += 1")
    # flattened counters, innermost first (a single counter is the issue count)
    for j in ([] if info.single else range(len(ivars) - 1, -1, -1)):
        trip = loop.bounds[j][1]
        src(f"if {N.c(j)} + 1 < {trip}:")
        src(f"    {N.c(j)} += 1")
        src("else:")
        src(f"    {N.c(j)} = 0")
        src.push()
    for _ in range(0 if info.single else len(ivars)):
        src.pop()
    src.pop()
    src("else:")
    src(f"    {N.nr} = None")
    # the slot of the record that left the pipeline takes the new issue
    if IL > 1:
        src(f"h = {N.tau} % {IL}")
        src(f"{N.old} = {N.pipe}[h]")
        src(f"{N.pipe}[h] = {N.nr}")
    else:
        src(f"{N.old} = {N.pipe}[0]")
        src(f"{N.pipe}[0] = {N.nr}")
    src(f"{N.inflight} = {N.live} - ({N.old} is not None)")
    src(f"{N.live} = {N.inflight} + {N.nr_ok}")
    src(f"{N.tau} += 1")
    # drained: all valid iterations issued and none left at positions 1..IL-1
    last = f"{N.pipe}[{N.tau} % {IL}]" if IL > 1 else f"{N.pipe}[0]"
    src(f"{N.fin} = {N.iss} == {loop.trip} and {N.live} == ({last} is not None)")
    if info.bubble:
        # an idle bubble loop (empty pipeline, gate closed) makes no progress
        tgt = "prog" if N.fused else N.prog
        if not N.fused:
            src(f"{tgt} = 0")
        src(f"if {N.nr_ok} or {N.inflight} or {N.fin}:")
        src(f"    {tgt} = 1")
        src(f"elif not {N.bub}:")
        src.push()
        _emit_gate(src, info, N, reserved=False)
        src(f"if {N.g_ok}:")
        src(f"    {tgt} = 1")
        src.pop()
    elif N.fused:
        src("prog = 1")
    else:
        src(f"{N.prog} = 1")


def _gen_loop_step(sp: StatePlan, trace: bool):
    info = _LoopInfo(sp.plan)
    N = _Names()
    src = _Src()
    fifos = _factory_header(src, info.rd, info.wr, info.scalars)
    nb = len(info.loop.bounds)
    src("def step(cycle):")
    src.push()
    src("pipe = ms.pipe")
    src("tau = ms.tau")
    src("iss = ms.issued")
    src("live = ms.live")
    src("ctr = ms.ctr")
    if not info.single:
        for j in range(nb):
            src(f"c{j} = ctr[{j}]")
    if trace:
        src("ev = []")
    for f in info.rd:
        src(f"rc_{f} = 0")
    for f in info.wr:
        src(f"wc_{f} = 0")
    _emit_loop_body(src, info, N, trace)
    src("ms.tau = tau")
    src("ms.issued = iss")
    src("ms.live = live")
    if info.single:
        src(f"ctr[0] = iss % {info.loop.trip}")
    else:
        for j in range(nb):
            src(f"ctr[{j}] = c{j}")
    src("ms.busy_cycles += 1")
    if trace:
        src("ms.events.extend(ev)")
    src("if fin:")
    src("    ms.advance(cycle)")
    src("    return True")
    src("return prog")
    src.pop()
    src("return step")
    return src.text(), fifos, info.scalars


def _gen_fused(sinks, members):
    """Multi-cycle runner for ``members`` (ModuleStates, all in loop states).

    Returns ``(source, fifos, scalars)``; ``make(sim, *members, *fifo_objs,
    *scalar_values)`` yields ``run(cycle, max_cycles, outputs)`` which returns
    ``(status, cycle, fins)``: status 0 = cycle cap, 1 = some module drained its
    loop, 2 = quiescent cycle.
    """
    infos, names = [], []
    fifos, scalars = [], []
    for j, ms in enumerate(members):
        info = _LoopInfo(ms.plan.states[ms.fsm_state].plan)
        infos.append(info)
        names.append(_Names(f"m{j}_", fused=True,
                            own=[f"rc_{f}" for f in info.rd] + [f"wc_{f}" for f in info.wr]))
        fifos.extend(f for f in info.rd + info.wr if f not in fifos)
        scalars.append(info.scalars)
    fifos.extend(f for f in sinks if f not in fifos)

    src = _Src()
    params = ["sim"] + [f"ms{j}" for j in range(len(members))] + [f"F_{f}" for f in fifos]
    for N, info in zip(names, infos):
        params += [N.s(s) for s in info.scalars]
    src(f"def make({', '.join(params)}):")
    src.push()
    for f in fifos:
        src(f"C_{f} = F_{f}.cap; D_{f} = F_{f}.depth; arr_{f} = F_{f}.arr")
    src("def run(cycle, max_cycles, outputs):")
    src.push()
    for f in fifos:
        src(f"W_{f} = F_{f}.total_writes; R_{f} = F_{f}.total_reads; rc_{f} = wc_{f} = 0")
    for j, (info, N) in enumerate(zip(infos, names)):
        src(f"{N.pipe} = ms{j}.pipe; {N.tau} = ms{j}.tau; {N.iss} = ms{j}.issued; "
            f"{N.live} = ms{j}.live")
        src(f"{N.stall} = ms{j}.stall_cycles; {N.fin} = 0")
        if not info.single:
            for i in range(len(info.loop.bounds)):
                src(f"{N.c(i)} = ms{j}.ctr[{i}]")
    src("status = 0")
    src("cycle0 = cycle")
    src("while cycle < max_cycles:")
    src.push()
    src("prog = 0")
    for j, (info, N) in enumerate(zip(infos, names)):
        src(f"while True:  # {members[j].name}")
        src.push()
        _emit_loop_body(src, info, N, False)
        src("break")
        src.pop()
    for f in sinks:
        src(f"if W_{f} > R_{f}:")
        src("    prog = 1")
        src(f"    for i in range(R_{f}, W_{f}):")
        src(f"        outputs.append((cycle, {f!r}, arr_{f}[i % C_{f}]))")
        src(f"    rc_{f} = W_{f} - R_{f}")
    for f in fifos:
        src(f"if wc_{f}:")
        src(f"    W_{f} += wc_{f}; wc_{f} = 0")
        src(f"if rc_{f}:")
        src(f"    R_{f} += rc_{f}; rc_{f} = 0")
    src("cycle += 1")
    src("if " + " or ".join(N.fin for N in names) + ":")
    src("    status = 1")
    src("    break")
    src("if not prog:")
    src("    status = 2")
    src("    break")
    src.pop()
    for f in fifos:
        src(f"F_{f}.rnum = W_{f} - R_{f}; F_{f}.wnum = D_{f} - W_{f} + R_{f}; "
            f"F_{f}.rptr = R_{f} % C_{f}; F_{f}.wptr = W_{f} % C_{f}")
        src(f"F_{f}.total_reads = R_{f}; F_{f}.total_writes = W_{f}")
    for j, (info, N) in enumerate(zip(infos, names)):
        src(f"ms{j}.tau = {N.tau}; ms{j}.issued = {N.iss}; ms{j}.live = {N.live}")
        src(f"ms{j}.busy_cycles += cycle - cycle0 - ({N.stall} - ms{j}.stall_cycles)")
        src(f"ms{j}.stall_cycles = {N.stall}")
        if info.single:
            src(f"ms{j}.ctr[0] = {N.iss} % {info.loop.trip}")
        else:
            for i in range(len(info.loop.bounds)):
                src(f"ms{j}.ctr[{i}] = {N.c(i)}")
    src(f"return status, cycle, ({''.join(N.fin + ', ' for N in names)})")
    src.pop()
    src("return run")
    return src.text(), fifos, scalars


class ModuleState:
    __slots__ = ("plan", "name", "index", "fsm_state", "label", "scalars", "done",
                 "busy_cycles", "stall_cycles", "tau", "issued", "ctr", "pipe", "live",
                 "step", "events", "sim", "factories")

    def __init__(self, plan, sim, factories, args):
        self.plan = plan
        self.name = plan.name
        self.index = plan.index
        self.sim = sim
        self.factories = factories
        self.scalars = {s: 0 for s in plan.scalars}
        for p in plan.params:
            self.scalars[p] = args[p]
        self.done = False
        self.busy_cycles = 0
        self.stall_cycles = 0
        self.events = [] if sim.tracing else None
        self.fsm_state = -1
        self.label = "start"
        self.tau = self.issued = self.live = 0
        self.ctr = []
        self.pipe = []
        self.step = None
        self._enter(0)

    @property
    def in_loop(self) -> bool:
        return not self.done and self.plan.states[self.fsm_state].is_loop

    def _enter(self, n):
        states = self.plan.states
        if n >= len(states):
            self.done = True
            self.fsm_state = len(states)
            self.label = "done"
            self.step = None
            self.pipe = []
            return
        sp = states[n]
        self.fsm_state = n
        self.label = sp.label
        make, fifos, scalars = self.factories[n]
        fobjs = [self.sim.fifos[f] for f in fifos]
        svals = [self.scalars[s] for s in scalars]
        if sp.is_loop:
            loop = sp.plan.loop
            self.tau = self.issued = self.live = 0
            self.ctr = [0] * len(loop.bounds)
            self.pipe = [None] * loop.il
        else:
            self.pipe = []
        self.step = make(self, *fobjs, *svals)

    def advance(self, cycle):
        old = self.label
        self._enter(self.fsm_state + 1)
        if self.events is not None:
            value = -1 if self.done else self.fsm_state
            self.events.append(TraceEvent(cycle, FSM_TRANSITION, self.name, value,
                                          f"{old}->{self.label}"))
        if self.done:
            self.sim._retire(self)

    def positions(self) -> list:
        """Iteration records by the stage they executed last cycle (None = bubble/empty).

        ``pipe`` is a ring indexed by local issue time modulo IL.
        """
        il = len(self.pipe)
        return [self.pipe[(self.tau - k) % il] for k in range(1, il + 1)]

    def snapshot(self) -> dict:
        out = {"fsm_state": -1 if self.done else self.fsm_state, "state": self.label,
               "done": self.done, "scalars": dict(self.scalars), "loop": None}
        if self.in_loop:
            lp = self.plan.states[self.fsm_state].plan
            loop = lp.loop
            regs = {}
            pos = self.positions()
            for j, v in enumerate(_piped(lp)):
                d, u = lp.liveness[v]
                for k in range(d, u + 1):
                    rec = pos[k - 1]
                    if rec is not None:
                        regs[f"{v}_st{k}"] = rec[j]
            out["loop"] = {
                "tau": self.tau, "issued": self.issued, "trip": loop.trip,
                "counters": dict(zip(loop.induction_vars, self.ctr)),
                "enables": [rec is not None for rec in pos],
                "pipe_regs": regs,
            }
        return out


_NS = {
    "TE": TraceEvent, "STALL": STALL, "FIFO_READ": FIFO_READ, "FIFO_WRITE": FIFO_WRITE,
    "BUBBLE_ISSUE": BUBBLE_ISSUE, "_div": _div, "_mod": _mod,
}


def _exec(text, filename, **extra):
    ns = dict(_NS, **extra)
    exec(compile(text, filename, "exec"), ns)
    return ns["make"]


def _compile_factories(plan, trace):
    out = []
    for sp in plan.states:
        gen = _gen_loop_step if sp.is_loop else _gen_scalar_step
        text, fifos, scalars = gen(sp, trace)
        out.append((_exec(text, f"<flash:{plan.name}:{sp.label}>", NAME=plan.name),
                    fifos, scalars))
    return out


def generated_source(ed: ElaboratedDesign, module: str, trace: bool = False) -> str:
    """The step-function source generated for every state of ``module`` (debug aid)."""
    plan = ed.modules[ed.module_index(module)]
    parts = []
    for sp in plan.states:
        gen = _gen_loop_step if sp.is_loop else _gen_scalar_step
        parts.append(f"# state {sp.number}: {sp.label}\n" + gen(sp, trace)[0])
    return "\n".join(parts)


class SimState:
    """Mutable simulation state of one elaborated design.

    ``order`` permutes the module stepping order inside a cycle; ``fast``
    enables the fused runner for untraced runs.
    """

    def __init__(self, ed: ElaboratedDesign, trace: bool = False, order=None,
                 fast: bool = True):
        self.ed = ed
        self.tracing = trace
        self.fast = fast and not trace
        d = ed.design
        self.fifos = {f.name: FifoState(f.depth, f.name) for f in d.fifos}
        self.fifo_list = list(self.fifos.values())
        self.sinks = [self.fifos[n] for n in ed.sinks]
        self.cycle = 0
        self.events = [] if trace else None
        self.outputs = []
        self._active = []
        self._fused = {}
        args = dict(d.args)
        self.modules = [ModuleState(plan, self, _compile_factories(plan, trace), args)
                        for plan in ed.modules]
        n = len(self.modules)
        self.order = list(range(n)) if order is None else list(order)
        if sorted(self.order) != list(range(n)):
            raise ValueError("order must be a permutation of module indices")
        self._active = [self.modules[i] for i in self.order if not self.modules[i].done]

    def _retire(self, ms):
        self._active = [m for m in self._active if m is not ms]

    def module(self, name: str) -> ModuleState:
        return self.modules[self.ed.module_index(name)]

    def finished(self) -> bool:
        return not self._active and all(f.rnum == 0 and f.pend_w == 0 for f in self.sinks)

    # -- operations -----------------------------------------------------------
    def step_module(self, name: str) -> bool:
        """Simulate one cycle of one module; True if it made progress.

        Does not commit FIFOs or advance the global cycle (see ``step_cycle``).
        """
        ms = self.module(name)
        if ms.done:
            raise ValueError(f"module {name} is done")
        return bool(ms.step(self.cycle))

    def step_cycle(self) -> str:
        if self.finished():
            return ALL_DONE
        c = self.cycle
        progress = False
        for ms in self._active:
            if ms.step(c):
                progress = True
        sink_ev = []
        for f in self.sinks:
            n = f.rnum
            if n:
                progress = True
                for _ in range(n):
                    v = f.arr[f.rptr]
                    f.rptr = (f.rptr + 1) % f.cap
                    self.outputs.append((c, f.name, v))
                    sink_ev.append(TraceEvent(c, FIFO_READ, f.name, v, "sink"))
                f.rnum = 0
                f.pend_r += n
                f.total_reads += n
        if self.events is not None:
            # declaration order, independent of stepping order; sink reads last
            for ms in self.modules:
                if ms.events:
                    self.events.extend(ms.events)
                    ms.events.clear()
            self.events.extend(sink_ev)
        for f in self.fifo_list:
            if f.pend_w or f.pend_r:
                fifo_commit(f)
        self.cycle = c + 1
        if self.finished():
            return ALL_DONE
        return PROGRESS if progress else QUIESCENT

    def _run_fused(self, max_cycles) -> int:
        members = list(self._active)
        key = tuple((m.index, m.fsm_state) for m in members)
        entry = self._fused.get(key)
        if entry is None:
            text, fifos, scalars = _gen_fused([f.name for f in self.sinks], members)
            entry = self._fused[key] = (_exec(text, "<flash:fused>"), fifos, scalars)
        make, fifos, scalars = entry
        args = [self, *members, *(self.fifos[f] for f in fifos)]
        for ms, names in zip(members, scalars):
            args.extend(ms.scalars[s] for s in names)
        status, cycle, fins = make(*args)(self.cycle, max_cycles, self.outputs)
        self.cycle = cycle
        for ms, fin in zip(members, fins):
            if fin:
                ms.advance(cycle - 1)
        return status

    def run(self, max_cycles: int = 10_000_000) -> SimReport:
        status = None
        dl = None
        while self.cycle < max_cycles:
            if self.finished():
                status = DONE
                break
            if self.fast and self._active and all(m.in_loop for m in self._active):
                if self._run_fused(max_cycles) == 2:
                    status, dl = DEADLOCK, self.cycle - 1
                    break
                continue
            out = self.step_cycle()
            if out == ALL_DONE:
                status = DONE
                break
            if out == QUIESCENT:
                status, dl = DEADLOCK, self.cycle - 1
                break
        if status is None:
            status = DONE if self.finished() else CYCLE_CAP
        if status == DEADLOCK and self.events is not None:
            self.events.append(TraceEvent(dl, DEADLOCK_EVENT, self.ed.design.name, None, ""))
        return self.report(status, dl)

    def report(self, status, deadlock_cycle=None) -> SimReport:
        return SimReport(
            status=status,
            total_cycles=self.cycle,
            modules=[(m.name, m.busy_cycles, m.stall_cycles) for m in self.modules],
            fifos=[(f.name, f.total_reads, f.total_writes) for f in self.fifo_list],
            outputs=list(self.outputs),
            deadlock_cycle=deadlock_cycle,
            registers=self.snapshot_registers() if status == DEADLOCK else None,
            meta={"design": self.ed.design.name, "mode": "engine"},
        )

    def snapshot_registers(self) -> dict:
        return {
            "cycle": self.cycle,
            "modules": {m.name: m.snapshot() for m in self.modules},
            "fifos": {f.name: f.snapshot() for f in self.fifo_list},
        }


def start(ed: ElaboratedDesign, trace: bool = False, order=None) -> SimState:
    return SimState(ed, trace=trace, order=order)


def run(s: SimState, max_cycles: int = 10_000_000) -> SimReport:
    return s.run(max_cycles)


def step_cycle(s: SimState) -> str:
    return s.step_cycle()


def step_module(s: SimState, name: str) -> bool:
    return s.step_module(name)


def snapshot_registers(s: SimState) -> dict:
    return s.snapshot_registers()


def simulate(ed: ElaboratedDesign, max_cycles: int = 10_000_000, trace: bool = False,
             order=None, fast: bool = True):
    """Run to completion; returns ``(report, events)`` (events is None without trace)."""
    s = SimState(ed, trace=trace, order=order, fast=fast)
    rep = s.run(max_cycles)
    return rep, s.events
