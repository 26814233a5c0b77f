"""Static checks and register liveness over instruction listings."""

from __future__ import annotations

from .isa import BUILTIN_REGISTERS, Lit, Mem, Op, Program


def validate_program(program: Program) -> list:
    """Diagnostics for bad jump targets, word overflows and missing halts."""
    diags = []
    n = len(program.instructions)
    word_max = program.model.word_max
    for pc, ins in enumerate(program.instructions):
        if ins.op in (Op.IF, Op.GOTO) and not 0 <= ins.target < n:
            diags.append(f"line {pc}: jump target {ins.target} outside 0..{n - 1}")
        if word_max is not None:
            for lit in ins.literals():
                if lit.value > word_max:
                    diags.append(f"line {pc}: literal {lit.value} does not fit in "
                                 f"{program.model.word_bits} bits")
            for o in (*ins.args, ins.dst):
                if isinstance(o, Mem) and o.offset > word_max:
                    diags.append(f"line {pc}: memory offset {o.offset} does not fit in "
                                 f"{program.model.word_bits} bits")
    if word_max is not None:
        for name, value in program.constants:
            if value > word_max:
                diags.append(f"constant {name}={value} does not fit in "
                             f"{program.model.word_bits} bits")
    if n == 0:
        diags.append("empty program has no halt")
        return diags
    reach = reachable(program)
    if not any(program.instructions[pc].op is Op.HALT for pc in reach):
        diags.append("no reachable halt")
    for pc in sorted(reach):
        ins = program.instructions[pc]
        for s in ins.successors(pc):
            if s == n:
                diags.append(f"line {pc}: control falls off the end of the program")
    return diags


def reachable(program: Program) -> set:
    n = len(program.instructions)
    seen = set()
    todo = [0]
    while todo:
        pc = todo.pop()
        if pc in seen or not 0 <= pc < n:
            continue
        seen.add(pc)
        todo.extend(program.instructions[pc].successors(pc))
    return seen


def live_registers(program: Program) -> list:
    """Registers live on entry to each line (classic backward dataflow)."""
    ins_list = program.instructions
    n = len(ins_list)
    use = [ins.registers_read() for ins in ins_list]
    defs = [ins.register_written() for ins in ins_list]
    # A register written through memory-destination arithmetic is not a def.
    live_in = [set() for _ in range(n)]
    changed = True
    while changed:
        changed = False
        for pc in range(n - 1, -1, -1):
            out = set()
            for s in ins_list[pc].successors(pc):
                if 0 <= s < n:
                    out |= live_in[s]
            new = use[pc] | (out - {defs[pc]} if defs[pc] else out)
            if new != live_in[pc]:
                live_in[pc] = new
                changed = True
    return [tuple(sorted(s)) for s in live_in]


def is_straight_line_constant(program: Program) -> bool:
    """True when no rand, no input-dependent branch and no register nop exists."""
    for ins in program.instructions:
        if ins.op in (Op.RAND, Op.IF):
            return False
        if ins.op is Op.NOP and not isinstance(ins.args[0], Lit):
            return False
    return True


__all__ = ["validate_program", "reachable", "live_registers", "BUILTIN_REGISTERS"]
