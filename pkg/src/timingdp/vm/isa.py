"""Instruction set, operands and the immutable Program container.

One instruction corresponds to one pseudocode statement: a plain move, a
two-operand add/sub (operands may be registers, literals or memory cells),
a uniform draw, a padding ``nop``, a conditional or unconditional jump, or
``halt``. Every instruction costs 1 except ``nop(k)``, which costs k.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from ..errors import InvalidProgram

BUILTIN_REGISTERS = ("input_ptr", "input_len", "output_ptr", "output_len")

COMPARISONS = ("<", "<=", "==", "!=", ">", ">=")


@dataclass(frozen=True)
class Reg:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Lit:
    value: int
    # Named constant this literal came from, kept for listings only.
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.value < 0:
            raise InvalidProgram(f"negative literal {self.value}")

    def __str__(self):
        return self.name if self.name else str(self.value)


@dataclass(frozen=True)
class Mem:
    """Memory cell ``M[base + offset]``."""

    base: Union[Reg, Lit]
    offset: int = 0

    def __post_init__(self):
        if not isinstance(self.base, (Reg, Lit)):
            raise InvalidProgram("memory base must be a register or literal")
        if self.offset < 0:
            raise InvalidProgram("memory offsets are nonnegative")

    def __str__(self):
        if self.offset:
            return f"M[{self.base} + {self.offset}]"
        return f"M[{self.base}]"


Operand = Union[Reg, Lit, Mem]


class Op(enum.Enum):
    ASSIGN = "assign"
    LOAD = "load"
    STORE = "store"
    ADD = "add"
    SUB = "sub"
    RAND = "rand"
    NOP = "nop"
    IF = "if"
    GOTO = "goto"
    HALT = "halt"


@dataclass(frozen=True)
class Instruction:
    op: Op
    dst: Optional[Union[Reg, Mem]] = None
    args: tuple = ()
    cond: Optional[str] = None
    target: Optional[int] = None
    note: str = field(default="", compare=False)

    def __post_init__(self):
        _check_shape(self)

    def registers_read(self):
        regs = set()
        for a in self.args:
            regs |= _operand_regs(a)
        if isinstance(self.dst, Mem):
            regs |= _operand_regs(self.dst)
        if self.op is Op.HALT:
            regs |= {"output_ptr", "output_len"}
        return regs

    def register_written(self):
        if isinstance(self.dst, Reg):
            return self.dst.name
        return None

    def literals(self):
        out = []
        for o in (*self.args, self.dst):
            if isinstance(o, Lit):
                out.append(o)
            elif isinstance(o, Mem) and isinstance(o.base, Lit):
                out.append(o.base)
        return out

    def successors(self, pc):
        if self.op is Op.HALT:
            return ()
        if self.op is Op.GOTO:
            return (self.target,)
        if self.op is Op.IF:
            return (pc + 1, self.target)
        return (pc + 1,)

    def with_target(self, target):
        return Instruction(self.op, self.dst, self.args, self.cond, target, self.note)

    def with_note(self, note):
        return Instruction(self.op, self.dst, self.args, self.cond, self.target, note)


def _operand_regs(o):
    if isinstance(o, Reg):
        return {o.name}
    if isinstance(o, Mem) and isinstance(o.base, Reg):
        return {o.base.name}
    return set()


def _check_shape(ins):
    op, dst, args = ins.op, ins.dst, ins.args
    plain = (Reg, Lit)
    anyop = (Reg, Lit, Mem)

    def bad(why):
        raise InvalidProgram(f"{op.value}: {why}")

    if op is Op.ASSIGN:
        if not isinstance(dst, Reg) or len(args) != 1 or not isinstance(args[0], plain):
            bad("expects reg = reg|literal")
    elif op is Op.LOAD:
        if not isinstance(dst, Reg) or len(args) != 1 or not isinstance(args[0], Mem):
            bad("expects reg = M[...]")
    elif op is Op.STORE:
        if not isinstance(dst, Mem) or len(args) != 1 or not isinstance(args[0], plain):
            bad("expects M[...] = reg|literal")
    elif op in (Op.ADD, Op.SUB):
        if not isinstance(dst, (Reg, Mem)) or len(args) != 2:
            bad("expects dst = a op b")
        if not all(isinstance(a, anyop) for a in args):
            bad("bad operand")
    elif op is Op.RAND:
        if not isinstance(dst, Reg) or len(args) != 1 or not isinstance(args[0], plain):
            bad("expects reg = rand(reg|literal)")
    elif op is Op.NOP:
        if dst is not None or len(args) != 1 or not isinstance(args[0], plain):
            bad("expects nop(reg|literal)")
    elif op is Op.IF:
        if len(args) != 2 or ins.cond not in COMPARISONS or ins.target is None:
            bad("expects if a cmp b goto target")
        if not all(isinstance(a, anyop) for a in args):
            bad("bad operand")
    elif op is Op.GOTO:
        if ins.target is None or args or dst is not None:
            bad("expects goto target")
    elif op is Op.HALT:
        if args or dst is not None:
            bad("takes no operands")


@dataclass(frozen=True)
class Model:
    """``word_bits=None`` is the unbounded RAM; otherwise a Word RAM."""

    word_bits: Optional[int] = None
    saturate: bool = True

    def __post_init__(self):
        if self.word_bits is not None and self.word_bits < 1:
            raise InvalidProgram("word size must be positive")

    @property
    def word_max(self):
        return None if self.word_bits is None else (1 << self.word_bits) - 1

    def __str__(self):
        if self.word_bits is None:
            return "ram"
        return f"wordram {self.word_bits}" + ("" if self.saturate else " nosat")


RAM = Model()


def WordRAM(bits, saturate=True):
    return Model(bits, saturate)


@dataclass(frozen=True)
class Program:
    instructions: tuple
    model: Model = RAM
    constants: tuple = ()
    name: str = ""
    # Builder metadata as sorted (key, value) pairs, e.g. ("append_input", True).
    meta: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        consts = self.constants
        if isinstance(consts, dict):
            consts = tuple(consts.items())
        object.__setattr__(self, "constants", tuple(consts))
        meta = self.meta
        if isinstance(meta, dict):
            meta = tuple(sorted(meta.items()))
        object.__setattr__(self, "meta", tuple(meta))

    def __len__(self):
        return len(self.instructions)

    def __getitem__(self, i):
        return self.instructions[i]

    @property
    def constant_map(self):
        return dict(self.constants)

    @property
    def meta_map(self):
        return dict(self.meta)

    def registers(self):
        names = set()
        for ins in self.instructions:
            names |= ins.registers_read()
            w = ins.register_written()
            if w:
                names.add(w)
        return names
