"""Text format for scheduled designs (``.flash`` files).

::

    design toy
    arg n = 8
    fifo f1 depth=2
    module M2(n) {
      init: k = n * 2
      loop (i=0..100) x (j=0..4) II=1 IL=5 {
        st1: t = read f1
        st*: u = t * 711
        st5: when u > 0: write f3 (u)
      }
    }

Newlines and ``;`` both separate items; ``#`` starts a comment.  ``st*``
marks a computation left for ASAP scheduling, and a trailing ``bubble`` on a
loop header marks the deadlock-avoidance form produced by the bubble pass.
"""
from __future__ import annotations

import re

from .ir import (
    INT64_MAX, INT64_MIN, Binary, Compute, Const, Design, FifoDecl, FlashError,
    ModuleDecl, NbRead, PipelinedLoop, Read, ReadAny, ScalarStmt, Select,
    SourceSpan, Unary, Var, Write,
)


class ParseError(FlashError):
    def __init__(self, message: str, span: SourceSpan):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}")


RESERVED = {"design", "arg", "fifo", "module", "loop", "read", "nb_read", "read_any",
            "write", "when", "and", "or", "not", "select"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\.\.|==|!=|<=|>=|[-+*/%<>=(){}\[\],;:])
""", re.VERBOSE)


class Tok:
    __slots__ = ("kind", "text", "span")

    def __init__(self, kind, text, span):
        self.kind = kind
        self.text = text
        self.span = span

    def __repr__(self):
        return f"Tok({self.kind}, {self.text!r})"


def tokenize(text: str) -> list:
    toks = []
    pos, line, col = 0, 1, 1
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        span = SourceSpan(line, col, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            toks.append(Tok("nl", s, span))
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                toks.append(Tok(kind, s, span))
            col += len(s)
        pos = m.end()
    toks.append(Tok("eof", "", SourceSpan(line, col, pos)))
    return toks


_STAGE_LABEL = re.compile(r"st([1-9][0-9]*)$")


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers ------------------------------------------------------
    def peek(self, k=0) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, text, k=0) -> bool:
        t = self.peek(k)
        return t.kind in ("op", "id") and t.text == text

    def error(self, expected: str, tok: Tok = None):
        tok = tok or self.peek()
        got = "end of input" if tok.kind == "eof" else (
            "newline" if tok.kind == "nl" else repr(tok.text))
        raise ParseError(f"expected {expected}, got {got}", tok.span)

    def expect(self, text) -> Tok:
        if not self.at(text):
            self.error(repr(text))
        return self.next()

    def ident(self, what="identifier") -> str:
        t = self.peek()
        if t.kind != "id" or t.text in RESERVED:
            self.error(what)
        self.i += 1
        return t.text

    def integer(self, what="integer", signed=False) -> int:
        neg = False
        if signed and self.at("-"):
            self.i += 1
            neg = True
        t = self.peek()
        if t.kind != "int":
            self.error(what)
        self.i += 1
        v = -int(t.text) if neg else int(t.text)
        if not INT64_MIN <= v <= INT64_MAX:
            raise ParseError("integer literal out of 64-bit range", t.span)
        return v

    def skip_seps(self):
        while self.peek().kind == "nl" or self.at(";"):
            self.i += 1

    def skip_nl(self):
        while self.peek().kind == "nl":
            self.i += 1

    def end_item(self):
        """An item must be followed by a separator, a closing brace or EOF."""
        t = self.peek()
        if t.kind in ("nl", "eof") or self.at(";") or self.at("}"):
            return
        self.error("end of statement")

    # -- grammar ------------------------------------------------------------
    def design(self) -> Design:
        self.skip_seps()
        self.expect("design")
        name = self.ident("design name")
        self.end_item()
        args, fifos, modules = [], [], []
        while True:
            self.skip_seps()
            t = self.peek()
            if t.kind == "eof":
                break
            if self.at("arg"):
                self.next()
                a = self.ident("arg name")
                self.expect("=")
                args.append((a, self.integer(signed=True)))
            elif self.at("fifo"):
                self.next()
                f = self.ident("fifo name")
                self.expect("depth")
                self.expect("=")
                fifos.append(FifoDecl(f, self.integer("fifo depth"), span=t.span))
            elif self.at("module"):
                modules.append(self.module())
            else:
                self.error("'arg', 'fifo' or 'module'")
            self.end_item()
        return Design(name, tuple(args), tuple(fifos), tuple(modules))

    def module(self) -> ModuleDecl:
        start = self.expect("module")
        name = self.ident("module name")
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.ident("parameter"))
            while self.at(","):
                self.next()
                params.append(self.ident("parameter"))
        self.expect(")")
        self.skip_nl()
        self.expect("{")
        body = []
        while True:
            self.skip_seps()
            if self.at("}"):
                self.next()
                break
            if self.at("loop"):
                body.append(self.loop())
            else:
                t = self.peek()
                label = self.ident("state label, 'loop' or '}'")
                self.expect(":")
                body.append(ScalarStmt(label, self.stageop(None), span=t.span))
            self.end_item()
        return ModuleDecl(name, tuple(params), tuple(body), span=start.span)

    def bound(self):
        self.expect("(")
        v = self.ident("induction variable")
        self.expect("=")
        lo = self.peek()
        if self.integer("lower bound") != 0:
            raise ParseError("loop lower bound must be 0", lo.span)
        self.expect("..")
        trip = self.integer("trip count")
        self.expect(")")
        return (v, trip)

    def loop(self) -> PipelinedLoop:
        start = self.expect("loop")
        bounds = [self.bound()]
        while self.at("x") and self.at("(", 1):
            self.next()
            bounds.append(self.bound())
        self.expect("II")
        self.expect("=")
        ii = self.integer("II")
        self.expect("IL")
        self.expect("=")
        il = self.integer("IL")
        bubble = False
        if self.at("bubble"):
            self.next()
            bubble = True
        self.skip_nl()
        self.expect("{")
        ops = []
        self.skip_seps()
        while not self.at("}"):
            stage = self.stage_label()
            ops.append(self.stageop(stage))
            while True:
                if self.at(";"):
                    self.next()
                    self.skip_nl()
                    if self.at("}") or self._at_stage_label():
                        break
                    ops.append(self.stageop(stage))
                    continue
                if self.peek().kind == "nl":
                    self.skip_seps()
                    break
                if self.at("}"):
                    break
                self.error("';', newline or '}'")
        self.next()
        return PipelinedLoop(tuple(bounds), ii, il, tuple(ops), bubble, span=start.span)

    def _at_stage_label(self) -> bool:
        t = self.peek()
        if t.kind != "id":
            return False
        if t.text == "st" and self.at("*", 1) and self.at(":", 2):
            return True
        return bool(_STAGE_LABEL.match(t.text)) and self.at(":", 1)

    def stage_label(self):
        t = self.peek()
        if t.kind == "id" and t.text == "st" and self.at("*", 1):
            self.i += 2
            self.expect(":")
            return None
        if t.kind == "id":
            m = _STAGE_LABEL.match(t.text)
            if m:
                self.i += 1
                self.expect(":")
                return int(m.group(1))
        self.error("stage label 'st<k>:' or 'st*:'")

    def stageop(self, stage):
        t = self.peek()
        guard = None
        if self.at("when"):
            self.next()
            guard = self.expr()
            self.expect(":")
        if self.at("write"):
            self.next()
            f = self.ident("fifo name")
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return Write(f, e, guard, stage, span=t.span)
        if self.at("("):
            self.next()
            names = [self.ident()]
            while self.at(","):
                self.next()
                names.append(self.ident())
            self.expect(")")
            self.expect("=")
            if len(names) == 2:
                self.expect("nb_read")
                return NbRead(names[0], names[1], self.ident("fifo name"), guard, stage,
                              span=t.span)
            if len(names) == 3:
                self.expect("read_any")
                self.expect("[")
                fs = [self.ident("fifo name")]
                while self.at(","):
                    self.next()
                    fs.append(self.ident("fifo name"))
                self.expect("]")
                return ReadAny(names[0], names[1], names[2], tuple(fs), guard, stage,
                               span=t.span)
            raise ParseError("tuple assignment takes 2 (nb_read) or 3 (read_any) names", t.span)
        target = self.ident("'write', assignment target or '('")
        self.expect("=")
        if self.at("read"):
            self.next()
            return Read(target, self.ident("fifo name"), guard, stage, span=t.span)
        return Compute(target, self.expr(), guard, stage, span=t.span)

    # -- expressions: or < and < not < comparison < additive < multiplicative < unary
    def expr(self):
        e = self.and_expr()
        while self.at("or"):
            self.next()
            e = Binary("or", e, self.and_expr())
        return e

    def and_expr(self):
        e = self.not_expr()
        while self.at("and"):
            self.next()
            e = Binary("and", e, self.not_expr())
        return e

    def not_expr(self):
        if self.at("not"):
            self.next()
            return Unary("not", self.not_expr())
        return self.cmp_expr()

    def cmp_expr(self):
        e = self.add_expr()
        while self.peek().kind == "op" and self.peek().text in ("==", "!=", "<", "<=", ">", ">="):
            op = self.next().text
            e = Binary(op, e, self.add_expr())
        return e

    def add_expr(self):
        e = self.mul_expr()
        while self.at("+") or self.at("-"):
            op = self.next().text
            e = Binary(op, e, self.mul_expr())
        return e

    def mul_expr(self):
        e = self.unary()
        while self.at("*") or self.at("/") or self.at("%"):
            op = self.next().text
            e = Binary(op, e, self.unary())
        return e

    def unary(self):
        if self.at("-"):
            if self.peek(1).kind == "int":
                return Const(self.integer(signed=True))
            self.next()
            return Unary("-", self.unary())
        return self.primary()

    def primary(self):
        t = self.peek()
        if t.kind == "int":
            return Const(self.integer())
        if self.at("("):
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("select"):
            self.next()
            self.expect("(")
            c = self.expr()
            self.expect(",")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(")")
            return Select(c, a, b)
        return Var(self.ident("expression"))


def parse_design(text: str) -> Design:
    return _Parser(text).design()


def parse_expr(text: str):
    p = _Parser(text)
    e = p.expr()
    p.skip_nl()
    if p.peek().kind != "eof":
        p.error("end of expression")
    return e


# ---------------------------------------------------------------------------
# formatting

_PREC = {"or": 1, "and": 2, "not": 3,
         "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "%": 6, "neg": 7}


def format_expr(e, ctx: int = 0) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Select):
        return f"select({format_expr(e.cond)}, {format_expr(e.a)}, {format_expr(e.b)})"
    if isinstance(e, Unary):
        if e.op == "not":
            s, p = "not " + format_expr(e.arg, _PREC["not"]), _PREC["not"]
        else:
            # keep -(5) distinct from the literal -5
            inner = format_expr(e.arg, _PREC["neg"])
            if isinstance(e.arg, Const) or inner.startswith("-"):
                inner = f"({format_expr(e.arg)})"
            s, p = "-" + inner, _PREC["neg"]
    elif isinstance(e, Binary):
        p = _PREC[e.op]
        left = format_expr(e.left, p)
        right = format_expr(e.right, p + 1)
        s = f"{left} {e.op} {right}"
    else:
        raise TypeError(f"not an expression: {e!r}")
    return f"({s})" if p < ctx else s


def format_op(op) -> str:
    pre = f"when {format_expr(op.guard)}: " if op.guard is not None else ""
    if isinstance(op, Compute):
        body = f"{op.target} = {format_expr(op.expr)}"
    elif isinstance(op, Read):
        body = f"{op.target} = read {op.fifo}"
    elif isinstance(op, NbRead):
        body = f"({op.target}, {op.ok}) = nb_read {op.fifo}"
    elif isinstance(op, ReadAny):
        body = f"({op.target}, {op.index}, {op.ok}) = read_any [{', '.join(op.fifos)}]"
    elif isinstance(op, Write):
        body = f"write {op.fifo} ({format_expr(op.expr)})"
    else:
        raise TypeError(f"not a stage op: {op!r}")
    return pre + body


def format_design(d: Design) -> str:
    out = [f"design {d.name}"]
    out.extend(f"arg {a} = {v}" for a, v in d.args)
    out.extend(f"fifo {f.name} depth={f.depth}" for f in d.fifos)
    for m in d.modules:
        out.append(f"module {m.name}({', '.join(m.params)}) {{")
        for step in m.body:
            if isinstance(step, ScalarStmt):
                out.append(f"  {step.label}: {format_op(step.op)}")
                continue
            nest = " x ".join(f"({v}=0..{t})" for v, t in step.bounds)
            tail = " bubble" if step.bubble else ""
            out.append(f"  loop {nest} II={step.ii} IL={step.il}{tail} {{")
            # consecutive ops of one stage share a line
            run, label = [], None
            for op in step.ops:
                lab = "st*" if op.stage is None else f"st{op.stage}"
                if run and lab != label:
                    out.append(f"    {label}: " + "; ".join(run))
                    run = []
                label = lab
                run.append(format_op(op))
            if run:
                out.append(f"    {label}: " + "; ".join(run))
            out.append("  }")
        out.append("}")
    return "\n".join(out) + "\n"
