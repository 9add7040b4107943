from collections import deque

import pytest
from hypothesis import given, strategies as st

from flashsim.fifo import (
    ContractViolation, InvalidDepth, check_invariants, fifo_commit, fifo_empty, fifo_full,
    fifo_new, fifo_read, fifo_write,
)


def test_new():
    f = fifo_new(2)
    assert f.cap == 3 and len(f.arr) == 3
    assert (f.rnum, f.wnum, f.rptr, f.wptr) == (0, 2, 0, 0)
    assert fifo_new(1).wnum == 1
    with pytest.raises(InvalidDepth):
        fifo_new(0)


def test_write_is_delayed():
    f = fifo_new(2)
    fifo_write(f, 7)
    assert (f.wnum, f.pend_w, f.rnum) == (1, 1, 0)
    assert fifo_empty(f)
    fifo_commit(f)
    assert not fifo_empty(f)
    assert fifo_read(f) == 7


def test_write_overflow_in_window():
    f = fifo_new(2)
    fifo_write(f, 1)
    fifo_write(f, 2)
    with pytest.raises(ContractViolation):
        fifo_write(f, 3)


def test_read_empty():
    with pytest.raises(ContractViolation):
        fifo_read(fifo_new(3))


def test_fifo_order():
    f = fifo_new(2)
    fifo_write(f, 1)
    fifo_write(f, 2)
    fifo_commit(f)
    assert [fifo_read(f), fifo_read(f)] == [1, 2]


def test_full_and_empty_mid_cycle():
    f = fifo_new(2)
    assert fifo_empty(f) and not fifo_full(f)
    fifo_write(f, 1)
    fifo_write(f, 2)
    assert fifo_full(f) and fifo_empty(f)
    fifo_commit(f)
    assert not fifo_empty(f)


def test_commit_noop():
    f = fifo_new(3)
    before = f.snapshot()
    fifo_commit(f)
    assert f.snapshot() == before


def test_commit_moves_pending():
    f = fifo_new(1)
    fifo_write(f, 4)
    fifo_commit(f)
    assert (f.rnum, f.wnum) == (1, 0)


def _legal_cycles(depth):
    """All (reads, writes) a single cycle can carry from every reachable state."""
    frontier = [(0,)]
    states = {0}
    out = set()
    while frontier:
        (occ,) = frontier.pop()
        for r in range(0, occ + 1):
            for w in range(0, depth - occ + 1):
                out.add((occ, r, w))
                nxt = occ - r + w
                if nxt not in states:
                    states.add(nxt)
                    frontier.append((nxt,))
    return out


def test_depth1_cannot_read_and_write_in_one_cycle():
    # committed counts: a read needs occupancy 1, a write needs occupancy 0
    assert not any(r and w for _, r, w in _legal_cycles(1))
    assert any(r and w for _, r, w in _legal_cycles(2))


ops = st.lists(st.tuples(st.sampled_from(["r", "w", "c"]), st.integers(-2**63, 2**63 - 1)),
               max_size=200)


@given(st.sampled_from([1, 2, 4]), ops)
def test_invariants_under_legal_schedules(depth, seq):
    f = fifo_new(depth)
    model = deque()          # committed values
    staged = []
    for kind, v in seq:
        if kind == "w" and f.wnum > 0:
            was_empty = fifo_empty(f)
            fifo_write(f, v)
            staged.append(v)
            # one-cycle latency: a write never becomes visible in its own cycle
            assert fifo_empty(f) == was_empty
        elif kind == "r" and f.rnum > 0:
            assert fifo_read(f) == model.popleft()
        elif kind == "c":
            fifo_commit(f)
            model.extend(staged)
            staged = []
            assert check_invariants(f, committed=True) == []
            assert f.rnum == len(model)
        assert check_invariants(f) == []
        assert f.total_writes - f.total_reads == f.rnum + f.pend_w
