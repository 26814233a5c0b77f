"""Instruction-counting RAM / Word RAM machine."""

from .analysis import live_registers, reachable, validate_program
from .assembly import emit_program, load_program, parse_program
from .enumerate import DEFAULT_LIMITS, ExactJointDist, Limits, enumerate_exact
from .isa import (BUILTIN_REGISTERS, RAM, Instruction, Lit, Mem, Model, Op, Program, Reg,
                  WordRAM)
from .machine import (UNINIT, Environment, ExecResult, compile_program, run_sampled,
                      sample_runs)

__all__ = [
    "BUILTIN_REGISTERS", "DEFAULT_LIMITS", "Environment", "ExactJointDist", "ExecResult",
    "Instruction", "Limits", "Lit", "Mem", "Model", "Op", "Program", "RAM", "Reg", "UNINIT",
    "WordRAM", "compile_program", "emit_program", "enumerate_exact", "live_registers",
    "load_program", "parse_program", "reachable", "run_sampled", "sample_runs",
    "validate_program",
]
