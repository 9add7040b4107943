"""Scheduled dataflow IR: designs, FIFOs, modules, steps and stage operations.

All payloads are 64-bit signed integers with two's-complement wrap-around.
IR values are frozen dataclasses so structural equality (``==``) is what the
parser round-trip and the transforms are checked against.  Source spans are
carried for diagnostics but excluded from comparisons.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1
_MASK = (1 << 64) - 1
_BIAS = 1 << 63


def wrap64(v: int) -> int:
    return ((v + _BIAS) & _MASK) - _BIAS


def cdiv(a: int, b: int) -> int:
    """C-style division truncating toward zero; x / 0 is defined as 0."""
    if b == 0:
        return 0
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return wrap64(q)


def cmod(a: int, b: int) -> int:
    """Remainder matching :func:`cdiv` (sign follows the dividend); x % 0 is 0."""
    if b == 0:
        return 0
    return wrap64(a - b * cdiv(a, b))


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    offset: int

    def __str__(self):
        return f"{self.line}:{self.column}"


# ---------------------------------------------------------------------------
# expressions

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "not"
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Select:
    cond: "Expr"
    a: "Expr"
    b: "Expr"


Expr = Union[Const, Var, Unary, Binary, Select]

ARITH_OPS = ("+", "-", "*", "/", "%")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
LOGIC_OPS = ("and", "or")
BINARY_OPS = ARITH_OPS + CMP_OPS + LOGIC_OPS


def expr_vars(e: Expr) -> Iterator[str]:
    """Yield every variable name referenced by ``e`` (with repeats)."""
    stack = [e]
    while stack:
        e = stack.pop()
        if isinstance(e, Var):
            yield e.name
        elif isinstance(e, Unary):
            stack.append(e.arg)
        elif isinstance(e, Binary):
            stack.append(e.right)
            stack.append(e.left)
        elif isinstance(e, Select):
            stack.extend((e.b, e.a, e.cond))


def eval_expr(e: Expr, env) -> int:
    """Reference tree-walking evaluator.  ``env`` maps names to ints."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Binary):
        op = e.op
        if op == "and":
            return 1 if (eval_expr(e.left, env) and eval_expr(e.right, env)) else 0
        if op == "or":
            return 1 if (eval_expr(e.left, env) or eval_expr(e.right, env)) else 0
        a = eval_expr(e.left, env)
        b = eval_expr(e.right, env)
        if op == "+":
            return wrap64(a + b)
        if op == "-":
            return wrap64(a - b)
        if op == "*":
            return wrap64(a * b)
        if op == "/":
            return cdiv(a, b)
        if op == "%":
            return cmod(a, b)
        if op == "==":
            return int(a == b)
        if op == "!=":
            return int(a != b)
        if op == "<":
            return int(a < b)
        if op == "<=":
            return int(a <= b)
        if op == ">":
            return int(a > b)
        if op == ">=":
            return int(a >= b)
        raise ValueError(f"unknown binary operator {op!r}")
    if isinstance(e, Unary):
        v = eval_expr(e.arg, env)
        if e.op == "-":
            return wrap64(-v)
        if e.op == "not":
            return 0 if v else 1
        raise ValueError(f"unknown unary operator {e.op!r}")
    if isinstance(e, Select):
        return eval_expr(e.a, env) if eval_expr(e.cond, env) else eval_expr(e.b, env)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# stage operations
#
# ``stage`` is the 1-based pipeline stage inside a PipelinedLoop, or None for
# a computation whose stage is left to ASAP scheduling.  Ops used as scalar
# steps keep stage=None.

_span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Compute:
    target: str
    expr: Expr
    guard: Optional[Expr] = None
    stage: Optional[int] = None
    span: Optional[SourceSpan] = _span


@dataclass(frozen=True)
class Read:
    """Blocking read: ``target = read fifo``."""
    target: str
    fifo: str
    guard: Optional[Expr] = None
    stage: Optional[int] = None
    span: Optional[SourceSpan] = _span


@dataclass(frozen=True)
class NbRead:
    """Non-blocking read: ``(target, ok) = nb_read fifo``."""
    target: str
    ok: str
    fifo: str
    guard: Optional[Expr] = None
    stage: Optional[int] = None
    span: Optional[SourceSpan] = _span


@dataclass(frozen=True)
class ReadAny:
    """Priority poll over ``fifos``: takes the first non-empty one in list order."""
    target: str
    index: str
    ok: str
    fifos: tuple
    guard: Optional[Expr] = None
    stage: Optional[int] = None
    span: Optional[SourceSpan] = _span


@dataclass(frozen=True)
class Write:
    fifo: str
    expr: Expr
    guard: Optional[Expr] = None
    stage: Optional[int] = None
    span: Optional[SourceSpan] = _span


StageOp = Union[Compute, Read, NbRead, ReadAny, Write]


def op_defs(op) -> tuple:
    if isinstance(op, (Compute, Read)):
        return (op.target,)
    if isinstance(op, NbRead):
        return (op.target, op.ok)
    if isinstance(op, ReadAny):
        return (op.target, op.index, op.ok)
    return ()


def op_uses(op) -> list:
    uses = []
    if op.guard is not None:
        uses.extend(expr_vars(op.guard))
    if isinstance(op, (Compute, Write)):
        uses.extend(expr_vars(op.expr))
    return uses


def op_reads(op) -> tuple:
    if isinstance(op, (Read, NbRead)):
        return (op.fifo,)
    if isinstance(op, ReadAny):
        return tuple(op.fifos)
    return ()


def op_writes(op) -> tuple:
    return (op.fifo,) if isinstance(op, Write) else ()


def is_fifo_op(op) -> bool:
    return not isinstance(op, Compute)


# ---------------------------------------------------------------------------
# steps, modules, design

@dataclass(frozen=True)
class ScalarStmt:
    label: str
    op: StageOp
    span: Optional[SourceSpan] = _span


@dataclass(frozen=True)
class PipelinedLoop:
    """A (pre-flattened) pipelined loop nest.

    ``bounds`` lists ``(induction_var, trip)`` outermost first.  ``ops`` keeps
    textual order, which is also the execution order inside one stage.
    ``bubble`` marks the deadlock-avoidance form: stage-1 blocking reads and
    read_any polls gate the issue instead of stalling the pipeline.
    """
    bounds: tuple
    ii: int
    il: int
    ops: tuple
    bubble: bool = False
    span: Optional[SourceSpan] = _span

    @property
    def trip(self) -> int:
        n = 1
        for _, t in self.bounds:
            n *= t
        return n

    @property
    def induction_vars(self) -> tuple:
        return tuple(v for v, _ in self.bounds)

    def stage_ops(self, stage: int) -> list:
        return [op for op in self.ops if op.stage == stage]


Step = Union[ScalarStmt, PipelinedLoop]


@dataclass(frozen=True)
class FifoDecl:
    name: str
    depth: int
    span: Optional[SourceSpan] = _span


@dataclass(frozen=True)
class ModuleDecl:
    name: str
    params: tuple
    body: tuple
    span: Optional[SourceSpan] = _span

    def loops(self) -> Iterator[tuple]:
        for i, step in enumerate(self.body):
            if isinstance(step, PipelinedLoop):
                yield i, step

    def all_ops(self) -> Iterator:
        for step in self.body:
            if isinstance(step, ScalarStmt):
                yield step.op
            else:
                yield from step.ops


@dataclass(frozen=True)
class Design:
    name: str
    args: tuple = ()      # ((name, value), ...)
    fifos: tuple = ()
    modules: tuple = ()

    def fifo(self, name: str) -> FifoDecl:
        for f in self.fifos:
            if f.name == name:
                return f
        raise KeyError(name)

    def module(self, name: str) -> ModuleDecl:
        for m in self.modules:
            if m.name == name:
                return m
        raise KeyError(name)

    def producers(self) -> dict:
        """fifo name -> list of module names writing it."""
        out = {f.name: [] for f in self.fifos}
        for m in self.modules:
            for op in m.all_ops():
                for f in op_writes(op):
                    if m.name not in out.setdefault(f, []):
                        out[f].append(m.name)
        return out

    def consumers(self) -> dict:
        out = {f.name: [] for f in self.fifos}
        for m in self.modules:
            for op in m.all_ops():
                for f in op_reads(op):
                    if m.name not in out.setdefault(f, []):
                        out[f].append(m.name)
        return out

    def sink_fifos(self) -> list:
        """FIFOs with a producer but no consumer module; drained by the built-in sink."""
        cons = self.consumers()
        prods = self.producers()
        return [f.name for f in self.fifos if not cons[f.name] and prods[f.name]]


# ---------------------------------------------------------------------------
# errors

class FlashError(Exception):
    pass


class CausalityViolation(FlashError):
    pass


class UseBeforeDef(FlashError):
    pass


class Unsupported(FlashError):
    pass


class DesignError(FlashError):
    """Raised when an invalid design is handed to an operation requiring a valid one."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(str(d) for d in report.diagnostics))
