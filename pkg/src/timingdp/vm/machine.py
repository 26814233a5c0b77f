"""Environments, the instruction-counting interpreter and seeded sampling."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from ..errors import (AddressOutOfRange, IncompatibleEnvironment, StepLimitExceeded,
                      UninitializedRead, VMError, WordOverflow)
from .isa import Lit, Mem, Op, Program, Reg

DEFAULT_MAX_STEPS = 1_000_000


class _Uninitialized:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNINIT"


UNINIT = _Uninitialized()


@dataclass(frozen=True)
class Environment:
    """Machine state outside the program: memory plus the four pointer registers.

    ``memory`` is a sparse map; absent cells and cells holding ``UNINIT`` are
    uninitialized. Any other value at a non-input address models leftover
    contents the program is not supposed to depend on.
    """

    memory: Mapping[int, object] = field(default_factory=dict)
    input_ptr: int = 0
    input_len: int = 0
    output_ptr: int = 0
    output_len: int = 0

    def __post_init__(self):
        mem = {int(a): v for a, v in dict(self.memory).items() if v is not UNINIT}
        object.__setattr__(self, "memory", mem)
        for name in ("input_ptr", "input_len", "output_ptr", "output_len"):
            if getattr(self, name) < 0:
                raise VMError(f"{name} must be nonnegative")

    @classmethod
    def for_input(cls, values: Sequence[int], input_ptr: int = 0, extra: Optional[Mapping] = None):
        mem = dict(extra or {})
        for i, v in enumerate(values):
            mem[input_ptr + i] = int(v)
        return cls(mem, input_ptr=input_ptr, input_len=len(values))

    def read_input(self):
        return tuple(self.memory.get(self.input_ptr + i, UNINIT) for i in range(self.input_len))

    def compatible_with(self, values: Sequence[int]):
        return self.input_len == len(values) and self.read_input() == tuple(values)

    def frozen(self):
        return (tuple(sorted(self.memory.items())), self.input_ptr, self.input_len,
                self.output_ptr, self.output_len)

    def check_word(self, word_max):
        if word_max is None:
            return
        for a, v in self.memory.items():
            if a > word_max or v > word_max:
                raise AddressOutOfRange(f"cell M[{a}]={v} exceeds the word size")
        for name in ("input_ptr", "input_len", "output_ptr", "output_len"):
            if getattr(self, name) > word_max:
                raise AddressOutOfRange(f"{name} exceeds the word size")


@dataclass(frozen=True)
class ExecResult:
    output: tuple
    runtime: int
    out_env: Environment
    steps: int = 0


# --- compiled form ---------------------------------------------------------
#
# Operands become small tuples so the inner loop avoids isinstance checks:
#   (0, name)            register
#   (1, value)           literal
#   (2, base, offset)    memory cell, base itself a compiled register/literal

_OPS = {Op.ASSIGN: 0, Op.LOAD: 1, Op.STORE: 2, Op.ADD: 3, Op.SUB: 4, Op.RAND: 5,
        Op.NOP: 6, Op.IF: 7, Op.GOTO: 8, Op.HALT: 9}
RAND_CODE = 5
HALT_CODE = 9

_CMP = {"<": 0, "<=": 1, "==": 2, "!=": 3, ">": 4, ">=": 5}


def _compile_operand(o):
    if isinstance(o, Reg):
        return (0, o.name)
    if isinstance(o, Lit):
        return (1, o.value)
    if isinstance(o, Mem):
        return (2, _compile_operand(o.base), o.offset)
    if o is None:
        return None
    raise VMError(f"bad operand {o!r}")


@dataclass(frozen=True)
class Compiled:
    code: tuple
    word_max: Optional[int]
    saturate: bool


_compile_cache: dict = {}


def compile_program(program: Program) -> Compiled:
    hit = _compile_cache.get(program)
    if hit is not None:
        return hit
    code = []
    for ins in program.instructions:
        code.append((_OPS[ins.op], _compile_operand(ins.dst),
                     tuple(_compile_operand(a) for a in ins.args),
                     _CMP.get(ins.cond), ins.target))
    out = Compiled(tuple(code), program.model.word_max, program.model.saturate)
    if len(_compile_cache) > 512:
        _compile_cache.clear()
    _compile_cache[program] = out
    return out


def _read(o, regs, mem, word_max):
    kind = o[0]
    if kind == 1:
        return o[1]
    if kind == 0:
        v = regs.get(o[1])
        if v is None:
            raise UninitializedRead(f"register {o[1]} read before it was set")
        return v
    addr = _read(o[1], regs, mem, word_max) + o[2]
    if word_max is not None and addr > word_max:
        raise AddressOutOfRange(f"address {addr} exceeds the word size")
    v = mem.get(addr)
    if v is None:
        raise UninitializedRead(f"memory cell {addr} read before it was written")
    return v


def _write(o, value, regs, mem, word_max):
    if o[0] == 0:
        regs[o[1]] = value
        return
    addr = _read(o[1], regs, mem, word_max) + o[2]
    if word_max is not None and addr > word_max:
        raise AddressOutOfRange(f"address {addr} exceeds the word size")
    mem[addr] = value


def _clamp(v, word_max, saturate):
    if v < 0:
        if word_max is not None and not saturate:
            raise WordOverflow(f"subtraction underflow ({v})")
        return 0
    if word_max is not None and v > word_max:
        if not saturate:
            raise WordOverflow(f"value {v} exceeds 2^w - 1")
        return word_max
    return v


# Segment outcomes.
HALTED = 0
AT_RAND = 1


def run_segment(compiled: Compiled, regs, mem, pc, max_steps, rng=None):
    """Execute from ``pc`` until halt, or until a rand when ``rng`` is None.

    Mutates ``regs`` and ``mem``. Returns (status, pc, cost, steps).
    """
    code = compiled.code
    word_max = compiled.word_max
    saturate = compiled.saturate
    n_code = len(code)
    cost = 0
    steps = 0
    while True:
        if pc < 0 or pc >= n_code:
            raise VMError(f"control fell off the program at line {pc}")
        opc, dst, args, cmp_, target = code[pc]
        if opc == RAND_CODE and rng is None:
            return AT_RAND, pc, cost, steps
        steps += 1
        if steps > max_steps:
            raise StepLimitExceeded(f"more than {max_steps} instructions executed")
        if opc == 7:
            a = _read(args[0], regs, mem, word_max)
            b = _read(args[1], regs, mem, word_max)
            cost += 1
            if cmp_ == 0:
                taken = a < b
            elif cmp_ == 1:
                taken = a <= b
            elif cmp_ == 2:
                taken = a == b
            elif cmp_ == 3:
                taken = a != b
            elif cmp_ == 4:
                taken = a > b
            else:
                taken = a >= b
            pc = target if taken else pc + 1
        elif opc == 3 or opc == 4:
            a = _read(args[0], regs, mem, word_max)
            b = _read(args[1], regs, mem, word_max)
            v = a + b if opc == 3 else a - b
            _write(dst, _clamp(v, word_max, saturate), regs, mem, word_max)
            cost += 1
            pc += 1
        elif opc <= 2:
            _write(dst, _read(args[0], regs, mem, word_max), regs, mem, word_max)
            cost += 1
            pc += 1
        elif opc == 8:
            cost += 1
            pc = target
        elif opc == 6:
            cost += _read(args[0], regs, mem, word_max)
            pc += 1
        elif opc == RAND_CODE:
            n = _read(args[0], regs, mem, word_max)
            regs[dst[1]] = rng.randrange(n + 1)
            cost += 1
            pc += 1
        else:
            return HALTED, pc, cost + 1, steps


def read_output(regs, mem, word_max=None):
    ptr = regs.get("output_ptr")
    length = regs.get("output_len")
    if ptr is None or length is None:
        raise UninitializedRead("output registers were never set")
    out = []
    for i in range(length):
        addr = ptr + i
        if word_max is not None and addr > word_max:
            raise AddressOutOfRange(f"output address {addr} exceeds the word size")
        v = mem.get(addr)
        if v is None:
            raise UninitializedRead(f"output cell {addr} is uninitialized")
        out.append(v)
    return tuple(out)


def initial_state(program: Program, values: Sequence[int], env: Optional[Environment]):
    values = tuple(int(v) for v in values)
    if env is None:
        env = Environment.for_input(values)
    if not env.compatible_with(values):
        raise IncompatibleEnvironment(
            "environment does not hold the declared input at input_ptr; support is empty")
    env.check_word(program.model.word_max)
    word_max = program.model.word_max
    if word_max is not None and any(v > word_max for v in values):
        raise AddressOutOfRange("input value exceeds the word size")
    regs = {"input_ptr": env.input_ptr, "input_len": env.input_len,
            "output_ptr": env.output_ptr, "output_len": env.output_len}
    return regs, dict(env.memory)


def _result(regs, mem, runtime, steps, word_max):
    output = read_output(regs, mem, word_max)
    out_env = Environment(mem, regs["input_ptr"], regs["input_len"],
                          regs["output_ptr"], regs["output_len"])
    return ExecResult(output, runtime, out_env, steps)


def run_with_rng(program: Program, values, env, rng, max_steps=DEFAULT_MAX_STEPS):
    compiled = compile_program(program)
    regs, mem = initial_state(program, values, env)
    _, _, cost, steps = run_segment(compiled, regs, mem, 0, max_steps, rng)
    return _result(regs, mem, cost, steps, compiled.word_max)


def run_sampled(program: Program, values: Sequence[int], env: Optional[Environment] = None,
                seed: int = 0, max_steps: int = DEFAULT_MAX_STEPS) -> ExecResult:
    """One execution with coins drawn from a generator seeded by ``seed``."""
    return run_with_rng(program, values, env, random.Random(seed), max_steps)


def sample_runs(program: Program, values, n, seed=0, env=None, max_steps=DEFAULT_MAX_STEPS):
    """``n`` executions sharing one seeded stream; yields (output, runtime)."""
    rng = random.Random(seed)
    compiled = compile_program(program)
    regs0, mem0 = initial_state(program, values, env)
    for _ in range(n):
        regs, mem = dict(regs0), dict(mem0)
        _, _, cost, _ = run_segment(compiled, regs, mem, 0, max_steps, rng)
        yield read_output(regs, mem, compiled.word_max), cost
