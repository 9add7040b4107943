"""Trace events, simulation reports and their CSV / JSON serializations."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

DONE = "Done"
DEADLOCK = "Deadlock"
CYCLE_CAP = "CycleCapReached"

FSM_TRANSITION = "FsmTransition"
FIFO_READ = "FifoRead"
FIFO_WRITE = "FifoWrite"
STALL = "Stall"
BUBBLE_ISSUE = "BubbleIssue"
DEADLOCK_EVENT = "Deadlock"


class TraceEvent(NamedTuple):
    cycle: int
    kind: str
    subject: str
    value: Optional[int] = None
    detail: str = ""


@dataclass
class SimReport:
    status: str
    total_cycles: int
    modules: list                 # [(name, busy, stall)]
    fifos: list                   # [(name, reads, writes)]
    outputs: list                 # [(cycle, fifo, value)]
    deadlock_cycle: Optional[int] = None
    registers: Optional[dict] = None
    meta: dict = field(default_factory=dict)

    def comparable(self) -> tuple:
        """Everything two independent simulators must agree on (no register layout)."""
        return (self.status, self.total_cycles, tuple(map(tuple, self.modules)),
                tuple(map(tuple, self.fifos)), tuple(map(tuple, self.outputs)),
                self.deadlock_cycle)

    def sink_values(self, fifo: str = None) -> list:
        return [v for _, f, v in self.outputs if fifo is None or f == fifo]


CSV_HEADER = ("cycle", "kind", "subject", "value", "detail")


def write_trace_csv(events, sink) -> None:
    """Write ``events`` to a text stream or path; byte output depends only on the events."""
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            write_trace_csv(events, fh)
        return
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for ev in events:
        w.writerow((ev.cycle, ev.kind, ev.subject, "" if ev.value is None else ev.value,
                    ev.detail))


def trace_csv_text(events) -> str:
    buf = io.StringIO()
    write_trace_csv(events, buf)
    return buf.getvalue()


def report_dict(r: SimReport) -> dict:
    out = {
        "status": r.status,
        "total_cycles": r.total_cycles,
        "modules": [{"name": n, "busy": b, "stall": s} for n, b, s in r.modules],
        "fifos": [{"name": n, "reads": rd, "writes": wr} for n, rd, wr in r.fifos],
        "outputs": [{"cycle": c, "fifo": f, "value": v} for c, f, v in r.outputs],
    }
    if r.status == DEADLOCK:
        out["deadlock"] = {"cycle": r.deadlock_cycle, "registers": r.registers}
    if r.meta:
        out["meta"] = dict(r.meta)
    return out


def write_report_json(r: SimReport, sink) -> None:
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        with open(sink, "w", encoding="utf-8") as fh:
            write_report_json(r, fh)
        return
    json.dump(report_dict(r), sink, indent=2)
    sink.write("\n")


def report_json_text(r: SimReport) -> str:
    buf = io.StringIO()
    write_report_json(r, buf)
    return buf.getvalue()
