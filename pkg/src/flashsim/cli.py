"""``flash`` command line: ``flash run`` and ``flash compare``.

Exit codes: 0 done / equivalent, 1 usage or design error, 2 deadlock,
3 cycle cap (or naive op cap), 4 engine/oracle divergence.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

from .designs import parse_bench_spec, bench_design
from .elaborate import elaborate
from .engine import simulate
from .ir import FlashError
from .modes import FifoPolicy, NaiveOptions, NonTerminating, run_sequential
from .oracle import run_oracle
from .parser import parse_design
from .trace import (
    CYCLE_CAP, DEADLOCK, DONE, trace_csv_text, write_report_json, write_trace_csv,
)
from .transform import TransformOptions, transform_design

EXIT_OK, EXIT_USAGE, EXIT_DEADLOCK, EXIT_CAP, EXIT_DIVERGED = 0, 1, 2, 3, 4
_STATUS_EXIT = {DONE: EXIT_OK, DEADLOCK: EXIT_DEADLOCK, CYCLE_CAP: EXIT_CAP}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Usage(Exception):
    pass


def _load(source: str, seed):
    """Design from a ``.flash`` path or a bench spec; returns (design, meta)."""
    meta = {"source": source}
    if source.startswith("bench:"):
        try:
            p = parse_bench_spec(source)
        except ValueError as e:
            raise _Usage(str(e)) from None
        if seed is not None:
            if not any(f.name == "seed" for f in dataclasses.fields(p)):
                raise _Usage(f"benchmark {source.split(':')[1]} takes no seed")
            p = dataclasses.replace(p, seed=seed)
        if any(f.name == "seed" for f in dataclasses.fields(p)):
            meta["seed"] = p.seed
        meta["params"] = dataclasses.asdict(p)
        return bench_design(p), meta
    try:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise _Usage(f"cannot read {source}: {e.strerror}") from None
    return parse_design(text), meta


def _prepare(args):
    d, meta = _load(args.design, getattr(args, "seed", None))
    bubbles = args.transform == "bubbles"
    d = transform_design(d, TransformOptions(bubbles=bubbles))
    meta["transform"] = args.transform or "none"
    return d, meta


def _print_summary(rep, out):
    print(f"status: {rep.status}", file=out)
    print(f"total_cycles: {rep.total_cycles}", file=out)
    for name, busy, stall in rep.modules:
        print(f"  module {name}: busy={busy} stall={stall}", file=out)
    for name, rd, wr in rep.fifos:
        print(f"  fifo {name}: reads={rd} writes={wr}", file=out)
    if rep.status == DEADLOCK and rep.registers:
        print(f"deadlock at cycle {rep.deadlock_cycle}", file=out)
        for name, f in rep.registers["fifos"].items():
            flags = [k for k in ("full", "empty") if f.get(k)]
            print(f"  fifo {name}: {' '.join(flags) or '-'} contents={f['contents']}", file=out)
        for name, m in rep.registers["modules"].items():
            print(f"  module {name}: state={m['state']}", file=out)


def cmd_run(args) -> int:
    d, meta = _prepare(args)
    events = [] if args.trace else None
    if args.mode == "naive":
        policy = FifoPolicy(args.naive_fifos)
        try:
            rep = run_sequential(d, NaiveOptions(policy), events=events)
        except NonTerminating as e:
            print(f"flash: {e}", file=sys.stderr)
            return EXIT_CAP
    else:
        ed = elaborate(d, liveness_opt=not args.no_liveness)
        if args.mode == "oracle":
            rep, ev = run_oracle(ed, args.max_cycles)
        else:
            rep, ev = simulate(ed, args.max_cycles, trace=bool(args.trace))
        if events is not None:
            events = ev
    rep.meta.update(meta)
    if args.trace:
        write_trace_csv(events, args.trace)
    if args.report:
        write_report_json(rep, args.report)
    _print_summary(rep, sys.stdout)
    return _STATUS_EXIT[rep.status]


def _first_divergence(a, b):
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i, x, y
    if len(a) != len(b):
        i = min(len(a), len(b))
        return i, a[i] if i < len(a) else None, b[i] if i < len(b) else None
    return None


def cmd_compare(args) -> int:
    d, _ = _prepare(args)
    ed = elaborate(d)
    rep, ev = simulate(ed, args.max_cycles, trace=True)
    orep, oev = run_oracle(ed, args.max_cycles)
    print(f"engine: {rep.status} after {rep.total_cycles} cycles, {len(ev)} events")
    print(f"oracle: {orep.status} after {orep.total_cycles} cycles, {len(oev)} events")
    code = EXIT_OK
    div = _first_divergence(trace_csv_text(ev).splitlines(), trace_csv_text(oev).splitlines())
    if div is not None:
        i, x, y = div
        print(f"trace divergence at line {i}:\n  engine: {x}\n  oracle: {y}")
        code = EXIT_DIVERGED
    elif rep.comparable() != orep.comparable():
        print("reports differ:")
        for field, x, y in zip(("status", "total_cycles", "modules", "fifos", "outputs",
                                "deadlock_cycle"), rep.comparable(), orep.comparable()):
            if x != y:
                print(f"  {field}: engine={x!r} oracle={y!r}")
        code = EXIT_DIVERGED
    else:
        print("engine == oracle: traces and reports identical")
    if args.naive:
        try:
            nrep = run_sequential(d)
        except NonTerminating as e:
            print(f"naive: did not terminate ({e})")
        else:
            eng = [(f, v) for _, f, v in rep.outputs]
            nav = [(f, v) for _, f, v in nrep.outputs]
            div = _first_divergence(eng, nav)
            if div is None:
                print(f"naive: sink sequence matches engine ({len(eng)} values)")
            else:
                i, x, y = div
                print(f"naive: sink sequence diverges at output {i}: engine={x} naive={y}")
            if nrep.meta["empty_reads"]:
                print(f"naive: {nrep.meta['empty_reads']} reads of empty channels returned 0")
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="flash", description="Cycle-accurate dataflow design simulator")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("design", help="a .flash file or bench:name[:k=v,...]")
        p.add_argument("--transform", choices=["bubbles"], default=None)
        p.add_argument("--max-cycles", type=int, default=10_000_000)
        p.add_argument("--seed", type=int, default=None,
                       help="payload seed for benchmarks that take one")

    r = sub.add_parser("run", help="simulate a design")
    common(r)
    r.add_argument("--mode", choices=["engine", "naive", "oracle"], default="engine")
    r.add_argument("--naive-fifos", choices=[p.value for p in FifoPolicy],
                   default=FifoPolicy.UNBOUNDED.value)
    r.add_argument("--no-liveness", action="store_true",
                   help="keep every pipelined value up to the last stage")
    r.add_argument("--trace", metavar="OUT.csv")
    r.add_argument("--report", metavar="OUT.json")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="engine vs oracle (and optionally naive)")
    common(c)
    c.add_argument("--naive", action="store_true")
    c.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.max_cycles < 1:
        ap.error("--max-cycles must be positive")
    try:
        return args.func(args)
    except _Usage as e:
        print(f"flash: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FlashError, ValueError) as e:
        print(f"flash: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
