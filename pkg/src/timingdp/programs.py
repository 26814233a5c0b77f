"""Calibrated instruction listings and the chaining / composition splices.

Each builder renders an assembly template and parses it, so the shipped
listing and its text form can never drift apart. Line notes name the
pseudocode statement an instruction implements ("line 6"), which is how the
listings are cross-referenced in the emitted text.

Runtime constants of the listings (checked by the golden tests):

=====================  ====================================================
randomized response    6 (coin 0) or 7 (coin 1)
sum                    8 + 3n; the append variant costs the same
discrete Laplace       15 + 5N for noise magnitude N; append variant 17 + 5N
delay                  16 + 7*bound + sleep, sleep the censored draw
dataset count          4
chain / compose        T1 + T2 + 2
=====================  ====================================================

Branch arms are padded with ``nop`` so that both sides of every
data-independent branch cost the same.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .errors import CompositionConventionViolated, InvalidParameters, ModelMismatch
from .vm.assembly import parse_program
from .vm.isa import BUILTIN_REGISTERS, Instruction, Lit, Mem, Model, Op, Program, Reg

# The splice replaces one halt (cost 1) by two register copies and a jump.
CHAIN_OVERHEAD = 2
COMPOSE_OVERHEAD = 2


class Kind(enum.Enum):
    RANDOMIZED_RESPONSE = "randomized_response"
    SUM = "sum"
    DISCRETE_LAPLACE = "discrete_laplace"
    TIMING_PRIVATE_DELAY = "delay"
    DATASET_COUNT = "dataset_count"
    IDENTITY = "identity"
    LEAKY_IDENTITY = "leaky_identity"
    TRUNCATE = "truncate"


@dataclass(frozen=True)
class ProgramSpec:
    kind: Kind
    a: int = 1
    b: int = 2
    shift: int = 0
    bound: int = 0
    delta: Optional[int] = None
    word_bits: Optional[int] = None
    saturate: bool = True
    append_input: bool = False

    @property
    def model(self) -> Model:
        return Model(self.word_bits, self.saturate)


def _check(spec: ProgramSpec):
    wm = spec.model.word_max
    k = spec.kind
    if k in (Kind.DISCRETE_LAPLACE, Kind.TIMING_PRIVATE_DELAY):
        if not spec.b > spec.a >= 1:
            raise InvalidParameters(f"need b > a >= 1, got a={spec.a}, b={spec.b}")
        # a + b < 2^w already forces s = 1/ln(b/a) < 2^w, since ln(1 + 1/a) > 1/(a + 1).
        if wm is not None and spec.a + spec.b > wm:
            raise InvalidParameters("a + b must be below 2^w")
    if k is Kind.TIMING_PRIVATE_DELAY:
        if not spec.bound >= spec.shift >= 1:
            raise InvalidParameters(f"need bound >= shift >= 1, got shift={spec.shift}, "
                                    f"bound={spec.bound}")
        if wm is not None and spec.shift + spec.bound > wm:
            raise InvalidParameters("shift + bound must be below 2^w")
    if spec.delta is not None and wm is not None and spec.delta > wm:
        raise InvalidParameters("row bound must be below 2^w")
    if spec.append_input and k not in (Kind.SUM, Kind.DISCRETE_LAPLACE):
        raise InvalidParameters(f"{k.value} has no append-input variant")


def _header(spec: ProgramSpec, name, consts=(), meta=()):
    lines = [f".name {name}", f".model {spec.model}"]
    lines += [f".meta {k} = {str(v).lower() if isinstance(v, bool) else v}" for k, v in meta]
    lines += [f".const {k} = {v}" for k, v in consts]
    return "\n".join(lines) + "\n"


_RR = """\
        x = M[input_ptr]            ; line 1
        output_len = 1              ; line 2
        output_ptr = input_ptr      ; line 3
        b = rand(1)                 ; line 4, flip coin
        if b == 0 goto done         ; line 5
        M[output_ptr] = 1 - x       ; line 6, flip bit
done:   halt                        ; line 7
"""

_SUM = """\
        output_len = {out_len}      ; line 1
        idx = input_ptr             ; line 2
        end = input_ptr + input_len ; line 3
        sum = 0                     ; line 4
        if idx >= end goto done     ; line 5, first loop test
loop:   sum = M[idx] + sum          ; line 6
        idx = idx + 1               ; line 7
        if idx < end goto loop      ; line 5, loop test
done:   output_ptr = {out_ptr}      ; line 8
        M[end] = sum                ; line 9
        halt                        ; line 10
"""

_DL_HEAD_PLAIN = """\
        output_len = 1              ; line 1
        output_ptr = 0              ; line 2
        y = M[input_ptr]            ; line 3
"""

_DL_HEAD_APPEND = """\
        pos = input_ptr + input_len ; locate the last input cell
        pos = pos - 1
        output_len = input_len      ; line 1, keep the prefix
        output_ptr = input_ptr      ; line 2
        y = M[pos]                  ; line 3
"""

_DL_SIGN = """\
        if sign == 0 goto neg{tag}  ; line 19
        noisy = y + noise           ; line 22
        M[{cell}] = noisy           ; line 23
        halt                        ; line 24
neg{tag}: noisy = y - noise         ; line 20
        M[{cell}] = noisy           ; line 23
        halt                        ; line 24
"""

_DL_BODY = """\
        noise = 0                   ; line 4
        set = 0                     ; line 5
        sign = rand(1)              ; line 6, noise direction
        zprobA = b - a              ; line 7
        zprobB = b + am1            ; line 8 (holds b + a - 1)
        idx = rand(zprobB)          ; line 9
        if idx >= zprobA goto geo   ; line 10
        set = 1                     ; line 11, zero noise
{sign_a}\
geo:    set = 0                     ; line 13
body:   noise = noise + 1           ; line 15
        idx = rand(bm1)             ; line 16
        if idx >= bma goto fail     ; line 17
        set = 1                     ; line 18
test:   if set == 0 goto body       ; line 14, loop test
{sign_b}\
fail:   nop(1)                      ; pads the failed trial to the cost of line 18
        goto body                   ; line 14
"""

_DELAY = """\
        output_ptr = input_ptr      ; line 1
        output_len = input_len      ; line 2, identity output
        count = 0                   ; line 3
        set = 0                     ; line 4
        sample = 0                  ; line 5
        sign = rand(1)              ; line 6
        zA = b - a                  ; line 7
        zB = b + am1                ; line 8 (holds b + a - 1)
        idx = rand(zB)              ; line 9
        if idx >= zA goto else0     ; line 10
        sample = 0                  ; line 11
        set = 1                     ; line 12
loop:   count = count + 1           ; line 16
        if set != 0 goto skip       ; line 17
        idx = rand(bm1)             ; line 18
        if idx >= bma goto else2    ; line 19
        sample = count              ; line 20
        set = 1                     ; line 21
test:   if count < bound goto loop  ; line 15, loop test
        if set == 0 goto cens       ; line 26
        if sign == 0 goto neg       ; line 30
        sleep = shift + sample      ; line 33
        nop(sleep)                  ; line 34
        halt                        ; line 35
neg:    sleep = shift - sample      ; line 31
        nop(sleep)                  ; line 34
        halt                        ; line 35
cens:   if sign == 0 goto cneg      ; lines 27 and 30
        sleep = shift + bound       ; line 33 with sample = bound
        nop(sleep)                  ; line 34
        halt                        ; line 35
cneg:   sleep = shift - bound       ; line 31 with sample = bound
        nop(sleep)                  ; line 34
        halt                        ; line 35
else0:  nop(1)                      ; line 14
        goto loop
else2:  nop(1)                      ; line 23
        goto test
skip:   nop(3)                      ; line 25
        goto test
"""

_COUNT = """\
        output_ptr = input_len - 1        ; line 1, the y cell
        output_len = 2                    ; line 2
        M[output_ptr + 1] = input_len - 1 ; line 3
        halt                              ; line 4
"""

_IDENTITY = """\
        output_ptr = input_ptr
        output_len = input_len
        halt
"""

_LEAKY = """\
        x = M[input_ptr]
        nop(x)                      ; runtime reveals the first input cell
        output_ptr = input_ptr
        output_len = input_len
        halt
"""

_TRUNCATE = """\
        output_len = 0
        halt
"""


def _dl_consts(spec):
    return [("a", spec.a), ("b", spec.b), ("am1", spec.a - 1), ("bm1", spec.b - 1),
            ("bma", spec.b - spec.a)]


def build(spec: ProgramSpec) -> Program:
    _check(spec)
    k = spec.kind
    if k is Kind.RANDOMIZED_RESPONSE:
        return parse_program(_header(spec, "randomized_response") + _RR)
    if k is Kind.SUM:
        if spec.append_input:
            body = _SUM.format(out_len="input_len + 1", out_ptr="input_ptr")
            return parse_program(_header(spec, "sum_append", meta=[("append_input", True)]) + body)
        return parse_program(_header(spec, "sum") + _SUM.format(out_len=1, out_ptr="end"))
    if k is Kind.DISCRETE_LAPLACE:
        cell = "pos" if spec.append_input else "output_ptr"
        body = _DL_BODY.format(sign_a=_DL_SIGN.format(tag="_a", cell=cell),
                               sign_b=_DL_SIGN.format(tag="_b", cell=cell))
        head = _DL_HEAD_APPEND if spec.append_input else _DL_HEAD_PLAIN
        name = "discrete_laplace_append" if spec.append_input else "discrete_laplace"
        meta = [("keeps_prefix", True)] if spec.append_input else []
        return parse_program(_header(spec, name, _dl_consts(spec), meta) + head + body)
    if k is Kind.TIMING_PRIVATE_DELAY:
        consts = _dl_consts(spec) + [("shift", spec.shift), ("bound", spec.bound)]
        return parse_program(_header(spec, "delay", consts, [("keeps_prefix", True)]) + _DELAY)
    if k is Kind.DATASET_COUNT:
        return parse_program(_header(spec, "dataset_count") + _COUNT)
    if k is Kind.IDENTITY:
        return parse_program(_header(spec, "identity", meta=[("keeps_prefix", True)]) + _IDENTITY)
    if k is Kind.LEAKY_IDENTITY:
        return parse_program(_header(spec, "leaky_identity") + _LEAKY)
    if k is Kind.TRUNCATE:
        return parse_program(_header(spec, "truncate") + _TRUNCATE)
    raise InvalidParameters(f"unknown program kind {k!r}")


# --- convenience builders ---------------------------------------------------

def randomized_response(word_bits=None) -> Program:
    return build(ProgramSpec(Kind.RANDOMIZED_RESPONSE, word_bits=word_bits))


def sum_program(word_bits=None, append_input=False) -> Program:
    return build(ProgramSpec(Kind.SUM, word_bits=word_bits, append_input=append_input))


def discrete_laplace(a=1, b=2, word_bits=None, append_input=False) -> Program:
    return build(ProgramSpec(Kind.DISCRETE_LAPLACE, a=a, b=b, word_bits=word_bits,
                             append_input=append_input))


def timing_private_delay(a=1, b=2, shift=4, bound=8, word_bits=None) -> Program:
    return build(ProgramSpec(Kind.TIMING_PRIVATE_DELAY, a=a, b=b, shift=shift, bound=bound,
                             word_bits=word_bits))


def dataset_count(word_bits=None) -> Program:
    return build(ProgramSpec(Kind.DATASET_COUNT, word_bits=word_bits))


def identity_program(word_bits=None) -> Program:
    return build(ProgramSpec(Kind.IDENTITY, word_bits=word_bits))


def leaky_identity(word_bits=None) -> Program:
    return build(ProgramSpec(Kind.LEAKY_IDENTITY, word_bits=word_bits))


def truncate_program(word_bits=None) -> Program:
    return build(ProgramSpec(Kind.TRUNCATE, word_bits=word_bits))


# --- splicing ---------------------------------------------------------------

def _fresh(name, taken):
    k = 2
    while f"{name}_{k}" in taken:
        k += 1
    return f"{name}_{k}"


def _rename_operand(o, regs, consts):
    if isinstance(o, Reg):
        return Reg(regs.get(o.name, o.name))
    if isinstance(o, Lit):
        if o.name is None:
            return o
        return Lit(o.value, consts.get(o.name, o.name))
    if isinstance(o, Mem):
        return Mem(_rename_operand(o.base, regs, consts), o.offset)
    return o


def _splice(p1: Program, p2: Program, name: str, meta) -> Program:
    if p1.model != p2.model:
        raise ModelMismatch(f"cannot splice a {p1.model} program with a {p2.model} program")
    names1 = p1.registers() | set(p1.constant_map)
    names2 = p2.registers() | set(p2.constant_map)
    taken = names1 | names2
    regs, consts = {}, {}
    for r in sorted(p2.registers() - set(BUILTIN_REGISTERS)):
        if r in names1:
            regs[r] = _fresh(r, taken)
            taken.add(regs[r])
    c1 = p1.constant_map
    for c, v in p2.constants:
        if c in names1 and c1.get(c) != v or c in p1.registers():
            consts[c] = _fresh(c, taken)
            taken.add(consts[c])

    # New position of every p1 line once each halt grows into three lines.
    where, pos = [], 0
    for ins in p1.instructions:
        where.append(pos)
        pos += 3 if ins.op is Op.HALT else 1
    start2 = pos
    code = []
    for ins in p1.instructions:
        if ins.op is Op.HALT:
            code.append(Instruction(Op.ASSIGN, Reg("input_ptr"), (Reg("output_ptr"),),
                                    note="splice: input_ptr = output_ptr"))
            code.append(Instruction(Op.ASSIGN, Reg("input_len"), (Reg("output_len"),),
                                    note="splice: input_len = output_len"))
            code.append(Instruction(Op.GOTO, target=start2, note="splice: enter second program"))
        elif ins.target is not None:
            code.append(ins.with_target(where[ins.target]))
        else:
            code.append(ins)
    for ins in p2.instructions:
        dst = _rename_operand(ins.dst, regs, consts) if ins.dst is not None else None
        args = tuple(_rename_operand(a, regs, consts) for a in ins.args)
        target = None if ins.target is None else ins.target + start2
        code.append(Instruction(ins.op, dst, args, ins.cond, target, ins.note))
    constants = list(p1.constants)
    for c, v in p2.constants:
        c = consts.get(c, c)
        if c not in c1:
            constants.append((c, v))
    return Program(tuple(code), p1.model, tuple(constants), name, meta)


def chain(p1: Program, p2: Program) -> Program:
    """Program computing p2 on the output of p1; runtime T1 + T2 + CHAIN_OVERHEAD."""
    m1, m2 = p1.meta_map, p2.meta_map
    meta = {}
    if m1.get("append_input") and (m2.get("keeps_prefix") or m2.get("append_input")):
        meta["append_input"] = True
    if m1.get("keeps_prefix") and m2.get("keeps_prefix"):
        meta["keeps_prefix"] = True
    return _splice(p1, p2, f"({p2.name} . {p1.name})", meta)


def compose(p1: Program, p2: Program) -> Program:
    """Run p2 on the (x, y) that an append-input p1 leaves behind; outputs (y, z)."""
    if not p1.meta_map.get("append_input"):
        raise CompositionConventionViolated(
            f"{p1.name or 'first program'} does not emit its input followed by its output")
    return _splice(p1, p2, f"({p2.name} x {p1.name})", {})


def mean_pipeline(a=1, b=2, word_bits=None) -> Program:
    """Noisy sum and noisy count, the two halves of a private mean."""
    noisy_sum = chain(sum_program(word_bits, append_input=True),
                      discrete_laplace(a, b, word_bits, append_input=True))
    noisy_count = chain(dataset_count(word_bits),
                        discrete_laplace(a, b, word_bits, append_input=True))
    return compose(noisy_sum, noisy_count)


__all__ = ["CHAIN_OVERHEAD", "COMPOSE_OVERHEAD", "Kind", "ProgramSpec", "build", "chain",
           "compose", "dataset_count", "discrete_laplace", "identity_program", "leaky_identity",
           "mean_pipeline", "randomized_response", "sum_program", "timing_private_delay",
           "truncate_program"]
