"""Design validation and elaboration into FSM states + pipeline plans."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .ir import (
    CausalityViolation, Design, DesignError, NbRead, PipelinedLoop, Read, ReadAny,
    ScalarStmt, Unsupported, SourceSpan, is_fifo_op, op_defs, op_reads, op_uses, op_writes,
)
from .transform import analyze_liveness, assign_asap_states, resolve_stages


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    location: str
    message: str
    span: Optional[SourceSpan] = None

    def __str__(self):
        where = f"{self.location}" + (f" ({self.span})" if self.span else "")
        return f"[{self.rule}] {where}: {self.message}"


@dataclass
class ValidationReport:
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def rules(self) -> set:
        return {d.rule for d in self.diagnostics}

    def add(self, rule, location, message, span=None):
        self.diagnostics.append(Diagnostic(rule, location, message, span))


def step_label(step, index: int) -> str:
    return step.label if isinstance(step, ScalarStmt) else f"loop@{index}"


def validate_design(d: Design) -> ValidationReport:
    rep = ValidationReport()
    seen = {}
    for kind, items in (("arg", [(a, None) for a, _ in d.args]),
                        ("fifo", [(f.name, f.span) for f in d.fifos]),
                        ("module", [(m.name, m.span) for m in d.modules])):
        for name, span in items:
            if name in seen:
                rep.add("duplicate-name", f"{kind} {name}",
                        f"identifier already declared as {seen[name]}", span)
            else:
                seen[name] = kind

    fifo_names = {f.name for f in d.fifos}
    for f in d.fifos:
        if f.depth < 1:
            rep.add("depth", f"fifo {f.name}", "depth must be >= 1", f.span)

    arg_names = {a for a, _ in d.args}
    for m in d.modules:
        _validate_module(m, fifo_names, arg_names, rep)

    prods, cons = d.producers(), d.consumers()
    for f in d.fifos:
        if len(prods[f.name]) > 1:
            rep.add("multiple-producers", f"fifo {f.name}",
                    f"multiple producers: {', '.join(prods[f.name])}", f.span)
        if len(cons[f.name]) > 1:
            rep.add("multiple-consumers", f"fifo {f.name}",
                    f"multiple consumers: {', '.join(cons[f.name])}", f.span)
        if not prods[f.name]:
            rep.add("no-producer", f"fifo {f.name}", "no module writes this fifo", f.span)
    return rep


def _validate_module(m, fifo_names, arg_names, rep):
    loc = f"module {m.name}"
    if not m.body:
        rep.add("empty-body", loc, "empty body", m.span)
        return
    if len(set(m.params)) != len(m.params):
        rep.add("duplicate-param", loc, "parameter listed twice", m.span)
    for p in m.params:
        if p not in arg_names:
            rep.add("unbound-param", loc, f"parameter {p} has no top-level arg", m.span)

    labels = [s.label for s in m.body if isinstance(s, ScalarStmt)]
    for lab in set(labels):
        if labels.count(lab) > 1 or lab.startswith("loop@"):
            rep.add("duplicate-label", loc, f"state label {lab} is not unique", m.span)

    scalars = set()
    for step in m.body:
        if isinstance(step, ScalarStmt):
            scalars.update(op_defs(step.op))

    defined = set(m.params)
    for i, step in enumerate(m.body):
        sloc = f"{loc}/{step_label(step, i)}"
        if isinstance(step, ScalarStmt):
            _check_fifo_refs(step.op, fifo_names, sloc, rep)
            for v in op_uses(step.op):
                if v not in defined:
                    rep.add("use-before-def", sloc, f"{v} used before definition", step.span)
            defined.update(op_defs(step.op))
            continue

        loop = step
        if loop.trip < 1 or any(t < 1 for _, t in loop.bounds):
            rep.add("bad-loop", sloc, "trip counts must be >= 1", loop.span)
        if loop.ii < 1 or loop.il < 1:
            rep.add("bad-loop", sloc, "II and IL must be >= 1", loop.span)
        elif loop.ii > loop.il:
            rep.add("bad-loop", sloc, "II must not exceed IL", loop.span)
        if not loop.ops:
            rep.add("bad-loop", sloc, "loop body has no operations", loop.span)

        ivars = loop.induction_vars
        if len(set(ivars)) != len(ivars):
            rep.add("duplicate-def", sloc, "induction variable repeated", loop.span)
        for v in ivars:
            if v in scalars or v in m.params:
                rep.add("duplicate-def", sloc, f"induction variable {v} shadows a module scalar",
                        loop.span)

        local = set(ivars)
        for k, op in enumerate(loop.ops):
            oloc = f"{sloc}/op{k}"
            _check_fifo_refs(op, fifo_names, oloc, rep)
            if op.stage is None:
                if is_fifo_op(op):
                    rep.add("unscheduled-fifo-op", oloc, "fifo operations need an explicit stage",
                            op.span)
            elif not 1 <= op.stage <= loop.il:
                rep.add("bad-stage", oloc, f"stage st{op.stage} outside 1..{loop.il}", op.span)
            for v in op_uses(op):
                if v in local or v in defined:
                    continue
                rep.add("use-before-def", oloc, f"{v} used before definition", op.span)
            for v in op_defs(op):
                if v in local:
                    rep.add("duplicate-def", oloc, f"{v} defined twice in one iteration", op.span)
                elif v in scalars or v in m.params:
                    rep.add("duplicate-def", oloc, f"loop assigns module scalar {v}", op.span)
                local.add(v)

        stages = resolve_stages(loop, strict=False)
        def_stage = {v: 1 for v in ivars}
        for k, (op, s) in enumerate(zip(loop.ops, stages)):
            for v in op_uses(op):
                ds = def_stage.get(v)
                if ds is not None and ds > s:
                    rep.add("causality", f"{sloc}/op{k}",
                            f"st{s} uses {v} which is produced at st{ds}", op.span)
            for v in op_defs(op):
                def_stage[v] = s


def _check_fifo_refs(op, fifo_names, loc, rep):
    for f in op_reads(op) + op_writes(op):
        if f not in fifo_names:
            rep.add("unknown-fifo", loc, f"unknown fifo {f}", op.span)
    if isinstance(op, ReadAny):
        if not op.fifos:
            rep.add("read-any", loc, "read_any needs at least one fifo", op.span)
        elif len(set(op.fifos)) != len(op.fifos):
            rep.add("read-any", loc, "read_any lists a fifo twice", op.span)


# ---------------------------------------------------------------------------
# elaboration

@dataclass(frozen=True)
class LoopPlan:
    loop: PipelinedLoop          # fully staged
    blocks: tuple                # FSM conditional block of each op: stage % II
    liveness: dict               # var -> (def_stage, last_use_stage)
    locals: tuple                # induction vars first, then defs in textual order
    gates: tuple                 # op indices gating the issue (bubble loops)

    def slots(self, var: str) -> int:
        d, u = self.liveness[var]
        return u - d


@dataclass(frozen=True)
class StatePlan:
    number: int
    label: str
    step: object
    plan: Optional[LoopPlan] = None

    @property
    def is_loop(self) -> bool:
        return self.plan is not None


@dataclass(frozen=True)
class ModulePlan:
    name: str
    index: int
    params: tuple
    scalars: tuple               # every module-level register (params first)
    states: tuple
    reads: tuple                 # fifos consumed
    writes: tuple                # fifos produced


@dataclass(frozen=True)
class ElaboratedDesign:
    design: Design
    modules: tuple
    sinks: tuple
    liveness_opt: bool = True

    def module_index(self, name: str) -> int:
        for m in self.modules:
            if m.name == name:
                return m.index
        raise KeyError(name)


def elaborate(d: Design, liveness_opt: bool = True) -> ElaboratedDesign:
    rep = validate_design(d)
    causal = [x for x in rep.diagnostics if x.rule == "causality"]
    if causal:
        raise CausalityViolation(str(causal[0]))
    if not rep.ok:
        raise DesignError(rep)

    staged = tuple(assign_asap_states(m) for m in d.modules)
    d = Design(d.name, d.args, d.fifos, staged)
    plans = []
    for idx, m in enumerate(staged):
        live = analyze_liveness(m)
        scalars = list(m.params)
        for step in m.body:
            if isinstance(step, ScalarStmt):
                for v in op_defs(step.op):
                    if v not in scalars:
                        scalars.append(v)
        states = []
        for i, step in enumerate(m.body):
            if isinstance(step, ScalarStmt):
                states.append(StatePlan(i, step.label, step))
                continue
            spans = live[i]
            if not liveness_opt:
                spans = {v: (s, step.il) for v, (s, _) in spans.items()}
            local = list(step.induction_vars)
            for op in step.ops:
                local.extend(v for v in op_defs(op) if v not in local)
            gates = ()
            if step.bubble:
                gates = tuple(k for k, op in enumerate(step.ops)
                              if op.stage == 1 and _is_gate(op))
                gated = {f for k in gates for f in op_reads(step.ops[k])}
                for op in step.ops:
                    if isinstance(op, NbRead) and op.stage == 1 and op.fifo in gated:
                        # the poll could take the element the gate reserved
                        raise Unsupported(
                            f"module {m.name}: nb_read of gated fifo {op.fifo} at st1")
            plan = LoopPlan(step, tuple(op.stage % step.ii for op in step.ops),
                            spans, tuple(local), gates)
            states.append(StatePlan(i, step_label(step, i), step, plan))
        reads, writes = [], []
        for op in m.all_ops():
            reads.extend(f for f in op_reads(op) if f not in reads)
            writes.extend(f for f in op_writes(op) if f not in writes)
        plans.append(ModulePlan(m.name, idx, tuple(m.params), tuple(scalars),
                                tuple(states), tuple(reads), tuple(writes)))
    return ElaboratedDesign(d, tuple(plans), tuple(d.sink_fifos()), liveness_opt)


def _is_gate(op) -> bool:
    return isinstance(op, (Read, ReadAny))
