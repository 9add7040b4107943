"""Cycle-accurate simulation of scheduled HLS dataflow designs."""
from .designs import (
    MatmulParams, MdParams, RandomParams, StencilParams, ToyParams, bench_design,
    gen_matmul, gen_md, gen_random, gen_stencil, gen_toy_mpath, parse_bench_spec,
    static_estimate,
)
from .elaborate import ElaboratedDesign, elaborate, validate_design
from .engine import SimState, simulate, snapshot_registers, start, step_cycle, step_module
from .fifo import FifoState, fifo_commit, fifo_new
from .ir import Design
from .modes import FifoPolicy, NaiveOptions, NonTerminating, run_sequential
from .oracle import run_oracle
from .parser import ParseError, format_design, parse_design
from .trace import SimReport, TraceEvent, write_report_json, write_trace_csv
from .transform import TransformOptions, insert_bubbles, transform_design

__version__ = "0.1.0"
