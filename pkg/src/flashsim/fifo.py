"""Bounded FIFO channel with delayed commit.

The ring holds ``depth + 1`` slots so one slot always stays empty.  Reads and
writes update the owning side's counter immediately (``rnum`` for the
consumer, ``wnum`` for the producer) and stage the other side's update in
``pend_w`` / ``pend_r`` until :func:`fifo_commit` runs at the end of the cycle.
A value written in cycle c is therefore first readable in cycle c+1, and the
outcome of a cycle does not depend on whether producer or consumer ran first.
"""
from __future__ import annotations

from .ir import FlashError


class InvalidDepth(FlashError, ValueError):
    pass


class ContractViolation(FlashError, RuntimeError):
    """The simulator issued a read/write the stall rules should have prevented."""


class FifoState:
    __slots__ = ("name", "depth", "cap", "arr", "rptr", "wptr", "rnum", "wnum",
                 "pend_w", "pend_r", "total_reads", "total_writes")

    def __init__(self, depth: int, name: str = ""):
        if not isinstance(depth, int) or depth < 1:
            raise InvalidDepth(f"fifo depth must be >= 1, got {depth!r}")
        self.name = name
        self.depth = depth
        self.cap = depth + 1
        self.arr = [0] * self.cap
        self.rptr = 0
        self.wptr = 0
        self.rnum = 0
        self.wnum = depth
        self.pend_w = 0
        self.pend_r = 0
        self.total_reads = 0
        self.total_writes = 0

    def contents(self) -> list:
        """Committed, readable values in FIFO order."""
        return [self.arr[(self.rptr + i) % self.cap] for i in range(self.rnum)]

    def occupancy(self) -> int:
        """Values physically held (committed or not) awaiting a read."""
        return self.rnum + self.pend_w

    def snapshot(self) -> dict:
        return {
            "depth": self.depth, "rptr": self.rptr, "wptr": self.wptr,
            "rnum": self.rnum, "wnum": self.wnum,
            "pend_w": self.pend_w, "pend_r": self.pend_r,
            "empty": self.rnum == 0, "full": self.wnum == 0,
            "contents": self.contents(),
            "reads": self.total_reads, "writes": self.total_writes,
        }

    def __repr__(self):
        return (f"FifoState({self.name!r}, depth={self.depth}, rnum={self.rnum}, "
                f"wnum={self.wnum}, pend_w={self.pend_w}, pend_r={self.pend_r})")


def fifo_new(depth: int, name: str = "") -> FifoState:
    return FifoState(depth, name)


def fifo_empty(f: FifoState) -> bool:
    return f.rnum == 0


def fifo_full(f: FifoState) -> bool:
    return f.wnum == 0


def fifo_write(f: FifoState, v: int) -> None:
    if f.wnum == 0:
        raise ContractViolation(f"write to full fifo {f.name!r}")
    f.arr[f.wptr] = v
    f.wptr = (f.wptr + 1) % f.cap
    f.wnum -= 1
    f.pend_w += 1
    f.total_writes += 1


def fifo_read(f: FifoState) -> int:
    if f.rnum == 0:
        raise ContractViolation(f"read from empty fifo {f.name!r}")
    v = f.arr[f.rptr]
    f.rptr = (f.rptr + 1) % f.cap
    f.rnum -= 1
    f.pend_r += 1
    f.total_reads += 1
    return v


def fifo_commit(f: FifoState) -> None:
    f.rnum += f.pend_w
    f.wnum += f.pend_r
    f.pend_w = 0
    f.pend_r = 0


def check_invariants(f: FifoState, committed: bool = False) -> list:
    """Return a list of violated invariant descriptions (empty when healthy)."""
    bad = []
    if f.rnum + f.wnum + f.pend_w + f.pend_r != f.depth:
        bad.append("rnum + wnum + pend_w + pend_r != depth")
    if committed and f.rnum + f.wnum != f.depth:
        bad.append("rnum + wnum != depth after commit")
    if not (0 <= f.rnum <= f.depth and 0 <= f.wnum <= f.depth):
        bad.append("counter out of range")
    if not (0 <= f.rptr <= f.depth and 0 <= f.wptr <= f.depth):
        bad.append("pointer out of range")
    if f.total_writes - f.total_reads != f.rnum + f.pend_w:
        bad.append("conservation: writes - reads != rnum + pend_w")
    if (f.wptr - f.rptr) % f.cap != f.rnum + f.pend_w:
        bad.append("ring distance disagrees with occupancy")
    return bad
