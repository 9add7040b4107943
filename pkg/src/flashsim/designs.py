"""Built-in benchmark generators, the random design fuzzer and the static estimate.

Every generator is a pure function of its parameters (plus a seed where
payloads are random) and returns a validated :class:`~flashsim.ir.Design`.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, fields
from typing import Optional, Union

from .elaborate import validate_design
from .ir import (
    Binary, Const, Design, DesignError, ModuleDecl, PipelinedLoop, ScalarStmt,
    Select, Unary, Var, cmod, eval_expr, op_reads, op_writes,
)
from .parser import parse_design


@dataclass(frozen=True)
class ToyParams:
    trip: int = 10_000
    fifo_depth: int = 2
    lat_m2: int = 5
    lat_m3: int = 15


@dataclass(frozen=True)
class MdParams:
    num_dist_pes: int = 4
    trip: int = 64
    threshold: Optional[int] = 60     # None disables pruning
    lat_dist: int = 6
    lat_force: int = 8
    fifo_depth: int = 2
    seed: int = 1


@dataclass(frozen=True)
class MatmulParams:
    N: int = 4
    feedback_depth: Optional[int] = None   # None means N (one column of C)
    fifo_depth: int = 2
    seed: int = 1


@dataclass(frozen=True)
class StencilParams:
    width: int = 64
    stages: int = 4
    height: int = 2048
    fifo_depth: int = 2
    seed: int = 1


@dataclass(frozen=True)
class RandomParams:
    seed: int = 0
    max_modules: int = 5
    max_fifos: int = 6
    max_depth: int = 4
    max_trip: int = 64
    balanced: Optional[bool] = None   # None: decided by the seed


BenchParams = Union[ToyParams, MdParams, MatmulParams, StencilParams, RandomParams]


def _check(d: Design) -> Design:
    rep = validate_design(d)
    if not rep.ok:
        raise DesignError(rep)
    return d


def _positive(p, *names):
    for n in names:
        v = getattr(p, n)
        if v is not None and v < 1:
            raise ValueError(f"{type(p).__name__}.{n} must be >= 1, got {v}")


# ---------------------------------------------------------------------------
# toy_mpath: two paths of different latency reconverging

def gen_toy_mpath(p: ToyParams = ToyParams()) -> Design:
    _positive(p, "trip", "fifo_depth", "lat_m2", "lat_m3")
    n = p.trip
    lines = ["design toy_mpath"]
    lines += [f"fifo f{k} depth={p.fifo_depth}" for k in range(1, 6)]

    def mid(name, src, dst, lat):
        body = [f"    st1: t = read {src}"]
        if lat == 1:
            body.append(f"    st1: write {dst} (t * 711)")
        else:
            body += ["    st*: u = t * 711", f"    st{lat}: write {dst} (u)"]
        return [f"module {name}() {{", f"  loop (i=0..{n}) II=1 IL={lat} {{", *body,
                "  }", "}"]

    lines += ["module M1() {", f"  loop (i=0..{n}) II=1 IL=1 {{",
              "    st1: write f1 (i); write f2 (i)", "  }", "}"]
    lines += mid("M2", "f1", "f3", p.lat_m2)
    lines += mid("M3", "f2", "f4", p.lat_m3)
    lines += ["module M4() {", f"  loop (i=0..{n}) II=1 IL=2 {{",
              "    st1: a = read f3; b = read f4", "    st2: write f5 (a + b)", "  }", "}"]
    return _check(parse_design("\n".join(lines) + "\n"))


# ---------------------------------------------------------------------------
# md: distance PEs with pruning feed a force PE polling them in priority order

def _md_coeffs(p: MdParams):
    rng = random.Random(p.seed)
    return [(rng.randrange(1, 97), rng.randrange(0, 97)) for _ in range(p.num_dist_pes)]


def md_distance(p: MdParams, k: int, i: int) -> int:
    a, b = _md_coeffs(p)[k]
    return cmod(i * a + b, 97)


def md_survivors(p: MdParams) -> int:
    if p.threshold is None:
        return p.num_dist_pes * p.trip
    return sum(1 for k in range(p.num_dist_pes) for i in range(p.trip)
               if md_distance(p, k, i) < p.threshold)


def gen_md(p: MdParams = MdParams()) -> Design:
    _positive(p, "num_dist_pes", "trip", "lat_dist", "lat_force", "fifo_depth")
    K = p.num_dist_pes
    lines = [f"design md_k{K}"]
    lines += [f"fifo d{k} depth={p.fifo_depth}" for k in range(K)]
    lines.append(f"fifo force depth={p.fifo_depth}")
    for k, (a, b) in enumerate(_md_coeffs(p)):
        guard = "" if p.threshold is None else f"when dist < {p.threshold}: "
        lines += [f"module Dist{k}() {{",
                  f"  loop (i=0..{p.trip}) II=1 IL={p.lat_dist} {{",
                  f"    st1: dist = (i * {a} + {b}) % 97",
                  f"    st{p.lat_dist}: {guard}write d{k} ({k} * 100000 + i * 100 + dist)",
                  "  }", "}"]
    n = md_survivors(p)
    if n:
        fifos = ", ".join(f"d{k}" for k in range(K))
        lines += ["module Force() {",
                  f"  loop (j=0..{n}) II=1 IL={p.lat_force} bubble {{",
                  f"    st1: (x, src, ok) = read_any [{fifos}]",
                  "    st*: f = (x % 100) * 3 + src",
                  f"    st{p.lat_force}: write force (x * 1000 + f)",
                  "  }", "}"]
    else:
        # nothing survives pruning; keep the output channel driven
        lines += ["module Force() {", "  z: write force (0)", "}"]
    return _check(parse_design("\n".join(lines) + "\n"))


# ---------------------------------------------------------------------------
# matmul: linear systolic array, C collected backwards through the PEs

def matmul_inputs(p: MatmulParams):
    rng = random.Random(p.seed)
    A = [[rng.randint(-9, 9) for _ in range(p.N)] for _ in range(p.N)]
    B = [[rng.randint(-9, 9) for _ in range(p.N)] for _ in range(p.N)]
    return A, B


def matmul_reference(p: MatmulParams):
    A, B = matmul_inputs(p)
    N = p.N
    return [[sum(A[i][k] * B[k][j] for k in range(N)) for j in range(N)] for i in range(N)]


def matmul_result(values, N: int):
    """Rebuild C from the sink stream (column-major); None if the count is wrong."""
    if len(values) != N * N:
        return None
    return [[values[j * N + i] for j in range(N)] for i in range(N)]


def gen_matmul(p: MatmulParams = MatmulParams()) -> Design:
    _positive(p, "N", "feedback_depth", "fifo_depth")
    N = p.N
    fb = p.feedback_depth if p.feedback_depth is not None else N
    A, B = matmul_inputs(p)
    lines = [f"design matmul_n{N}"]
    for j in range(1, N + 1):
        lines += [f"fifo a{j} depth={p.fifo_depth}", f"fifo b{j} depth={p.fifo_depth}",
                  f"fifo acc{j} depth=2", f"fifo c{j} depth={fb}"]
    lines.append("module FeedA() {")
    lines += [f"  a_{i}_{k}: write a1 ({A[i][k]})" for i in range(N) for k in range(N)]
    lines += ["}", "module FeedB() {"]
    lines += [f"  b_{k}_{j}: write b1 ({B[k][j]})" for j in range(N) for k in range(N)]
    lines.append("}")
    for j in range(1, N + 1):
        last = j == N
        lines.append(f"module PE{j}() {{")
        lines += [f"  keep{k}: bk{k} = read b{j}" for k in range(N)]
        if not last:
            lines += [f"  loop (t=0..{(N - j) * N}) II=1 IL=1 {{",
                      f"    st1: x = read b{j}; write b{j + 1} (x)", "  }"]
        bsel = f"bk{N - 1}"
        for k in range(N - 2, -1, -1):
            bsel = f"select(k == {k}, bk{k}, {bsel})"
        fwd = "" if last else f"; write a{j + 1} (a)"
        lines += [f"  loop (i=0..{N}) x (k=0..{N}) II=1 IL=2 {{",
                  f"    st1: a = read a{j}{fwd}",
                  f"    st1: when k > 0: p = read acc{j}",
                  f"    st1: s = p + a * {bsel}",
                  f"    st1: when k < {N - 1}: write acc{j} (s)",
                  f"    st2: when k == {N - 1}: write c{j} (s)",
                  "  }"]
        if not last:
            lines += [f"  loop (t=0..{(N - j) * N}) II=1 IL=1 {{",
                      f"    st1: y = read c{j + 1}; write c{j} (y)", "  }"]
        lines.append("}")
    return _check(parse_design("\n".join(lines) + "\n"))


# ---------------------------------------------------------------------------
# stencil: chain of PEs, each combining a sample with the one a row earlier

def stencil_latencies(p: StencilParams) -> list:
    rng = random.Random(p.seed)
    return [rng.randint(2, 9) for _ in range(p.stages)]


def gen_stencil(p: StencilParams = StencilParams()) -> Design:
    _positive(p, "width", "stages", "height", "fifo_depth")
    n = p.width * p.height
    W = p.width
    lines = [f"design stencil_s{p.stages}"]
    lines += [f"fifo s{k} depth={p.fifo_depth}" for k in range(p.stages + 1)]
    # the row delay line must hold a full row plus the slot freed next cycle
    lines += [f"fifo row{k} depth={W + 1}" for k in range(1, p.stages + 1)]
    lines += ["module Source() {", f"  loop (i=0..{n}) II=1 IL=1 {{",
              f"    st1: write s0 ((i * 37 + {p.seed}) % 101)", "  }", "}"]
    for k, lat in enumerate(stencil_latencies(p), start=1):
        out = f"st{lat}: write s{k} (y)"
        lines += [f"module PE{k}() {{", f"  loop (i=0..{n}) II=1 IL={lat} {{",
                  f"    st1: x = read s{k - 1}; write row{k} (x)",
                  f"    st1: when i >= {W}: up = read row{k}",
                  "    st*: y = (x * 2 + up) % 1000003",
                  f"    {out}", "  }", "}"]
    return _check(parse_design("\n".join(lines) + "\n"))


def stencil_reference(p: StencilParams) -> list:
    n = p.width * p.height
    xs = [(i * 37 + p.seed) % 101 for i in range(n)]
    for _ in range(p.stages):
        xs = [cmod(xs[i] * 2 + (xs[i - p.width] if i >= p.width else 0), 1000003)
              for i in range(n)]
    return xs


# ---------------------------------------------------------------------------
# static estimate

def _module_cost(m: ModuleDecl):
    lat = interval = 0
    for step in m.body:
        if isinstance(step, ScalarStmt):
            lat += 1
        else:
            lat += step.il
            interval += (step.trip - 1) * step.ii
    return lat, interval


def static_estimate(d: Design) -> int:
    """Stall-free cycle estimate along the critical path of the module graph.

    For a path P: ``max_{m in P} sum_loops (trip-1)*II + sum_{m in P} lat(m)``
    with ``lat(m)`` = IL of each loop plus one per scalar step, plus one cycle
    when the path ends in a sink drain.  Self-loops are ignored and feedback
    edges are dropped (DFS from modules in declaration order), so it is an
    estimate in the HLS-report sense: it cannot see back-pressure or bubbles.
    """
    names = [m.name for m in d.modules]
    cost = {m.name: _module_cost(m) for m in d.modules}
    prods, cons = d.producers(), d.consumers()
    succ = {n: [] for n in names}
    for f in d.fifos:
        for p in prods[f.name]:
            for c in cons[f.name]:
                if c != p and c not in succ[p]:
                    succ[p].append(c)
    sinks_of = {n: False for n in names}
    for f in d.sink_fifos():
        for p in prods[f]:
            sinks_of[p] = True

    # drop back edges
    color, dag = {}, {n: [] for n in names}

    def dfs(u):
        color[u] = 1
        for v in succ[u]:
            if color.get(v) == 1:
                continue
            dag[u].append(v)
            if v not in color:
                dfs(v)
        color[u] = 2

    for n in names:
        if n not in color:
            dfs(n)

    best = 0

    def walk(u, lat, interval):
        nonlocal best
        l, i = cost[u]
        lat, interval = lat + l, max(interval, i)
        best = max(best, lat + interval + (1 if sinks_of[u] else 0))
        for v in dag[u]:
            walk(v, lat, interval)

    for n in names:
        walk(n, 0, 0)
    return best


# ---------------------------------------------------------------------------
# random designs for fuzzing

_ARITH = ("+", "-", "*", "/", "%")
_CMP = ("==", "!=", "<", "<=", ">", ">=")


def _rand_expr(rng, names, depth=2):
    if depth == 0 or rng.random() < 0.3 or not names:
        if names and rng.random() < 0.7:
            return Var(rng.choice(names))
        return Const(rng.randint(-20, 40))
    r = rng.random()
    if r < 0.55:
        return Binary(rng.choice(_ARITH), _rand_expr(rng, names, depth - 1),
                      _rand_expr(rng, names, depth - 1))
    if r < 0.75:
        return Binary(rng.choice(_CMP), _rand_expr(rng, names, depth - 1),
                      _rand_expr(rng, names, depth - 1))
    if r < 0.85:
        return Binary(rng.choice(("and", "or")), _rand_expr(rng, names, depth - 1),
                      _rand_expr(rng, names, depth - 1))
    if r < 0.92:
        return Unary(rng.choice(("-", "not")), _rand_expr(rng, names, depth - 1))
    return Select(_rand_expr(rng, names, depth - 1), _rand_expr(rng, names, depth - 1),
                  _rand_expr(rng, names, depth - 1))


def _rand_guard(rng, names, p=0.25):
    if rng.random() >= p:
        return None
    return Binary(rng.choice(_CMP), _rand_expr(rng, names, 1), Const(rng.randint(-5, 20)))


def gen_random(p: RandomParams = RandomParams()) -> Design:
    """A random valid design within the given size limits."""
    from .ir import Compute, FifoDecl, NbRead, Read, ReadAny, Write
    rng = random.Random(p.seed)
    balanced = rng.random() < 0.5 if p.balanced is None else p.balanced
    if balanced:
        return _gen_balanced(rng, p)
    nm = rng.randint(1, p.max_modules)
    nf = rng.randint(0, p.max_fifos)
    mods = [f"m{i}" for i in range(nm)]
    fifos = [FifoDecl(f"f{k}", rng.randint(1, p.max_depth)) for k in range(nf)]
    reads = {m: [] for m in mods}
    writes = {m: [] for m in mods}
    for f in fifos:
        prod = rng.randrange(nm)
        r = rng.random()
        if r < 0.2:
            cons = None
        elif r < 0.27:
            cons = prod
        else:
            # mostly feed-forward so that many designs terminate
            later = [i for i in range(nm) if i > prod]
            cons = rng.choice(later) if later and rng.random() < 0.8 else rng.randrange(nm)
        writes[mods[prod]].append(f.name)
        if cons is not None:
            reads[mods[cons]].append(f.name)
    args = (("n", rng.randint(0, 9)),)

    modules = []
    for mi, m in enumerate(mods):
        params = ("n",) if rng.random() < 0.5 else ()
        ops = [("r", f) for f in reads[m]] + [("w", f) for f in writes[m]]
        if rng.random() < 0.3:
            ops += [("r", f) for f in reads[m] if rng.random() < 0.5]
            ops += [("w", f) for f in writes[m] if rng.random() < 0.5]
        rng.shuffle(ops)
        nloops = rng.randint(0 if len(ops) < 2 else 1, 2)
        groups = [[] for _ in range(nloops)]
        scalars = []
        for op in ops:
            if nloops and rng.random() < 0.8:
                rng.choice(groups).append(op)
            else:
                scalars.append(op)
        # interleave scalar steps and loops
        slots = [("s", op) for op in scalars] + [("l", g) for g in groups]
        rng.shuffle(slots)
        if not slots or rng.random() < 0.2:
            slots.insert(rng.randint(0, len(slots)), ("c", None))
        body = []
        known = list(params)
        for si, (kind, item) in enumerate(slots):
            lab = f"s{si}"
            if kind == "c":
                v = f"c{si}"
                body.append(ScalarStmt(lab, Compute(v, _rand_expr(rng, known))))
                known.append(v)
            elif kind == "s":
                body.append(ScalarStmt(lab, _scalar_op(rng, item, known, si)))
            else:
                body.append(_rand_loop(rng, item, known, si, p))
        modules.append(ModuleDecl(m, params, tuple(body)))
    d = Design(f"rnd{p.seed}", args, tuple(fifos), tuple(modules))
    return _check(d)


def _gen_balanced(rng, p):
    """Feed-forward design where every fifo sees one write and one read per iteration.

    All loops share one trip count, so designs mostly terminate and exercise
    long-running stall / bubble interplay rather than early deadlock.
    """
    from .ir import Compute, FifoDecl, Read, ReadAny, Write
    nm = rng.randint(1, p.max_modules)
    trip = rng.randint(1, p.max_trip)
    fifos, reads, writes = [], {i: [] for i in range(nm)}, {i: [] for i in range(nm)}
    for k in range(rng.randint(0, p.max_fifos)):
        prod = rng.randrange(nm)
        later = list(range(prod + 1, nm))
        cons = rng.choice(later) if later and rng.random() < 0.85 else None
        fifos.append(FifoDecl(f"f{k}", rng.randint(1, p.max_depth)))
        writes[prod].append(f"f{k}")
        if cons is not None:
            reads[cons].append(f"f{k}")
    modules = []
    for mi in range(nm):
        il = rng.randint(1, 8)
        ii = rng.randint(1, min(il, 2))
        bubble = bool(reads[mi]) and rng.random() < 0.5
        if trip > 1 and rng.random() < 0.3:
            divs = [d for d in range(2, trip + 1) if trip % d == 0]
            t1 = rng.choice(divs)
            bounds = (("i", t1), ("j", trip // t1))
        else:
            bounds = (("i", trip),)
        names = [v for v, _ in bounds]
        ops, stage_of = [], {v: 1 for v in names}
        for k, f in enumerate(reads[mi]):
            st = 1 if bubble else rng.randint(1, il)
            ops.append(Read(f"x{k}", f, None, st))
            stage_of[f"x{k}"] = st
        for k in range(rng.randint(0, 2)):
            st = rng.randint(1, il)
            vis = [v for v, s in stage_of.items() if s <= st]
            ops.append(Compute(f"t{k}", _rand_expr(rng, vis), _rand_guard(rng, vis, 0.2), st))
            stage_of[f"t{k}"] = st
        for f in writes[mi]:
            st = rng.randint(1, il)
            vis = [v for v, s in stage_of.items() if s <= st]
            ops.append(Write(f, _rand_expr(rng, vis), None, st))
        if not ops:
            ops.append(Compute("t", Const(0), None, 1))
        ops.sort(key=lambda op: op.stage)
        body = [PipelinedLoop(bounds, ii, il, tuple(_fix_order(ops)), bubble)]
        if rng.random() < 0.3:
            body.insert(0, ScalarStmt("init", Compute("c0", Const(rng.randint(0, 9)))))
        modules.append(ModuleDecl(f"m{mi}", (), tuple(body)))
    return _check(Design(f"bal{p.seed}", (), tuple(fifos), tuple(modules)))


def _scalar_op(rng, item, known, si):
    from .ir import Compute, NbRead, Read, Write
    kind, f = item
    guard = _rand_guard(rng, known, 0.15)
    if kind == "w":
        return Write(f, _rand_expr(rng, known), guard)
    v = f"v{si}"
    if rng.random() < 0.25:
        op = NbRead(v, f"ok{si}", f, guard)
        known += [v, f"ok{si}"] if guard is None else []
        return op
    op = Read(v, f, guard)
    if guard is None:
        known.append(v)
    return op


def _rand_loop(rng, group, known, si, p):
    from .ir import Compute, NbRead, Read, ReadAny, Write
    il = rng.randint(1, 6)
    ii = rng.randint(1, min(il, 3))
    if rng.random() < 0.3:
        t1 = rng.randint(1, 8)
        t2 = rng.randint(1, max(1, p.max_trip // t1))
        bounds = ((f"i{si}", t1), (f"j{si}", t2))
    else:
        bounds = ((f"i{si}", rng.randint(1, p.max_trip)),)
    rds = [f for k, f in group if k == "r"]
    wrs = [f for k, f in group if k == "w"]
    bubble = bool(rds) and rng.random() < 0.4
    items = []                    # (stage, order key, op-builder)
    cnt = [0]

    def name(prefix):
        cnt[0] += 1
        return f"{prefix}{si}_{cnt[0]}"

    # reads
    read_specs = []
    pending = list(rds)
    rng.shuffle(pending)
    while pending:
        f = pending.pop()
        stage = 1 if bubble else rng.randint(1, il)
        distinct = [g for g in pending if g != f]
        if len(distinct) >= 1 and rng.random() < 0.25:
            g = distinct[0]
            pending.remove(g)
            read_specs.append(("any", (f, g), stage))
        elif not bubble and rng.random() < 0.25:
            read_specs.append(("nb", f, stage))
        elif bubble and f in [x[1] for x in read_specs if x[0] == "nb"]:
            read_specs.append(("rd", f, stage))
        else:
            read_specs.append(("rd", f, stage))
    if bubble:
        gated = set()
        for k, f, _ in read_specs:
            gated.update((f,) if k == "rd" else f)
        # a stage-1 nb_read of a gated fifo is rejected; keep bubble loops to gates
        read_specs = [("rd", f, s) if k == "nb" else (k, f, s) for k, f, s in read_specs]

    ivars = [v for v, _ in bounds]
    avail = {1: list(ivars)}      # stage -> names defined at that stage (in order)
    ops = []

    def visible(stage):
        out = list(known)
        for s in range(1, stage + 1):
            out += avail.get(s, [])
        return out

    for k, f, stage in sorted(read_specs, key=lambda x: x[2]):
        guard = None if (bubble and stage == 1 and k != "nb") and rng.random() < 0.5 \
            else _rand_guard(rng, visible(stage), 0.2)
        if k == "rd":
            v = name("x")
            ops.append(Read(v, f, guard, stage))
            avail.setdefault(stage, []).append(v)
        elif k == "nb":
            v, ok = name("x"), name("ok")
            ops.append(NbRead(v, ok, f, guard, stage))
            avail.setdefault(stage, []).extend([v, ok])
        else:
            v, ix, ok = name("x"), name("ix"), name("ok")
            ops.append(ReadAny(v, ix, ok, tuple(f), guard, stage))
            avail.setdefault(stage, []).extend([v, ix, ok])
    # computations
    for _ in range(rng.randint(0, 3)):
        stage = rng.randint(1, il)
        v = name("t")
        e = _rand_expr(rng, visible(stage))
        unstaged = rng.random() < 0.4
        ops.append(Compute(v, e, _rand_guard(rng, visible(stage), 0.15),
                           None if unstaged else stage))
        if unstaged:
            # ASAP could place it earlier; only later stages may rely on it
            avail.setdefault(il + 1, []).append(v)
        else:
            avail.setdefault(stage, []).append(v)
    for f in wrs:
        stage = rng.randint(1, il)
        ops.append(Write(f, _rand_expr(rng, visible(stage)),
                         _rand_guard(rng, visible(stage), 0.3), stage))
    if not ops:
        ops.append(Compute(name("t"), Const(1), None, 1))
    # textual order: by stage (unstaged computes after the reads they follow)
    def key(op):
        return op.stage if op.stage is not None else 0
    ordered = [op for op in ops if not (isinstance(op, Compute) and op.stage is None)]
    ordered.sort(key=key)
    loose = [op for op in ops if isinstance(op, Compute) and op.stage is None]
    final = []
    for op in ordered:
        final.append(op)
    # unstaged computes only use names available at any stage; insert after reads
    insert_at = sum(1 for op in final if not isinstance(op, Write))
    for op in loose:
        final.insert(insert_at, op)
        insert_at += 1
    return PipelinedLoop(bounds, ii, il, tuple(_fix_order(final)), bubble)


def _fix_order(ops):
    """Stable reorder so every use follows its def textually (stage order first)."""
    from .ir import op_defs, op_uses
    out, defined = [], set()
    rest = list(ops)
    alldefs = {v for op in ops for v in op_defs(op)}
    while rest:
        for k, op in enumerate(rest):
            if all(v in defined or v not in alldefs for v in op_uses(op)):
                out.append(op)
                defined.update(op_defs(op))
                del rest[k]
                break
        else:
            out.extend(rest)
            break
    return out


# ---------------------------------------------------------------------------
# bench specs: "bench:name[:k=v,...]"

BENCHES = {
    "toy_mpath": (ToyParams, gen_toy_mpath),
    "md": (MdParams, gen_md),
    "matmul": (MatmulParams, gen_matmul),
    "stencil": (StencilParams, gen_stencil),
    "random": (RandomParams, gen_random),
}


def _coerce(text: str):
    t = text.strip().lower()
    if t in ("inf", "none", "off"):
        return None
    return int(text)


def parse_bench_spec(spec: str) -> BenchParams:
    """``bench:toy_mpath:trip=100,fifo_depth=3`` -> ToyParams(trip=100, fifo_depth=3)."""
    if not spec.startswith("bench:"):
        raise ValueError(f"not a bench spec: {spec!r}")
    rest = spec[len("bench:"):]
    name, _, kv = rest.partition(":")
    if name not in BENCHES:
        raise ValueError(f"unknown benchmark {name!r} (known: {', '.join(BENCHES)})")
    cls = BENCHES[name][0]
    allowed = {f.name for f in fields(cls)}
    kwargs = {}
    for item in filter(None, kv.split(",")):
        k, eq, v = item.partition("=")
        k = k.strip()
        if not eq or k not in allowed:
            raise ValueError(f"bad parameter {item!r} for {name} (allowed: {sorted(allowed)})")
        try:
            kwargs[k] = _coerce(v)
        except ValueError:
            raise ValueError(f"parameter {k} needs an integer, got {v!r}") from None
    return cls(**kwargs)


def bench_design(spec_or_params) -> Design:
    p = parse_bench_spec(spec_or_params) if isinstance(spec_or_params, str) else spec_or_params
    for cls, gen in BENCHES.values():
        if isinstance(p, cls):
            return gen(p)
    raise TypeError(p)
