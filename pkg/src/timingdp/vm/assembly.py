"""Text assembly format.

Example::

    ; randomized response
    .model ram
    .const one = 1
            x = M[input_ptr]          ; [0] line 1
            output_len = 1
            b = rand(1)
            if b == 0 goto done
            M[output_ptr] = one - x
    done:   halt

One instruction per line, ``;`` starts a comment, ``name:`` defines a label.
Header directives: ``.model ram``, ``.model wordram <bits> [nosat]``,
``.name <text>``, ``.meta <key> = <int|true|false>`` and
``.const <name> = <value>``. A declared constant name used as an operand is
a literal; any other identifier is a register. Jump targets are labels or
``@<index>``. Text after ``;`` is kept as the instruction note (a leading
``[n]`` index marker written by ``emit_program`` is dropped on reading).
"""

from __future__ import annotations

import re

from ..errors import AssemblyError, InvalidProgram
from .isa import COMPARISONS, RAM, Instruction, Lit, Mem, Model, Op, Program, Reg

_IDENT = r"[A-Za-z_][A-Za-z0-9_.']*"
_RE_LABEL = re.compile(rf"^\s*({_IDENT})\s*:(.*)$")
_RE_MEM = re.compile(rf"^M\[\s*({_IDENT}|\d+)\s*(?:\+\s*(\d+)\s*)?\]$")
_RE_IDENT = re.compile(rf"^{_IDENT}$")
_RE_IF = re.compile(r"^if\s+(.+?)\s*(<=|>=|==|!=|<|>)\s*(.+?)\s+goto\s+(\S+)$")
_RE_GOTO = re.compile(r"^goto\s+(\S+)$")
_RE_NOP = re.compile(r"^nop\s*\(\s*(.+?)\s*\)$")
_RE_RAND = re.compile(r"^rand\s*\(\s*(.+?)\s*\)$")
_RE_ASSIGN = re.compile(r"^(M\[[^\]]*\]|[^=\s]+)\s*=\s*(.+)$")
_RE_BINOP = re.compile(r"^(M\[[^\]]*\]|[^\s+\-]+)\s*([+\-])\s*(M\[[^\]]*\]|[^\s+\-]+)$")
_RE_INDEX = re.compile(r"^\[\d+\]\s*")

_KEYWORDS = {"if", "goto", "halt", "nop", "rand", "M"}


class _Parser:
    def __init__(self, text):
        self.text = text
        self.consts = {}
        self.model = RAM
        self.name = ""
        self.meta = {}
        self.labels = {}
        self.pending = []  # (lineno, statement, note)

    def operand(self, tok, lineno, allow_mem=True):
        tok = tok.strip()
        m = _RE_MEM.match(tok)
        if m:
            if not allow_mem:
                raise AssemblyError(f"memory operand not allowed here: {tok}", lineno)
            base = self.operand(m.group(1), lineno, allow_mem=False)
            if isinstance(base, Mem):
                raise AssemblyError("nested memory reference", lineno)
            return Mem(base, int(m.group(2) or 0))
        if tok.isdigit():
            return Lit(int(tok))
        if _RE_IDENT.match(tok):
            if tok in _KEYWORDS:
                raise AssemblyError(f"keyword {tok!r} used as operand", lineno)
            if tok in self.consts:
                return Lit(self.consts[tok], tok)
            return Reg(tok)
        raise AssemblyError(f"cannot parse operand {tok!r}", lineno)

    def directive(self, line, lineno):
        parts = line.split(None, 1)
        word = parts[0]
        rest = parts[1].strip() if len(parts) > 1 else ""
        if word == ".model":
            bits = rest.split()
            if bits == ["ram"]:
                self.model = RAM
            elif len(bits) in (2, 3) and bits[0] == "wordram" and bits[1].isdigit():
                saturate = not (len(bits) == 3 and bits[2] == "nosat")
                if len(bits) == 3 and bits[2] != "nosat":
                    raise AssemblyError(f"unknown model flag {bits[2]!r}", lineno)
                self.model = Model(int(bits[1]), saturate)
            else:
                raise AssemblyError(f"bad model {rest!r}", lineno)
        elif word == ".name":
            self.name = rest
        elif word in (".const", ".meta"):
            key, eq, value = rest.partition("=")
            key, value = key.strip(), value.strip()
            if not eq or not _RE_IDENT.match(key):
                raise AssemblyError(f"expected '{word} name = value'", lineno)
            if word == ".const":
                if not value.isdigit():
                    raise AssemblyError("constants are nonnegative integers", lineno)
                if key in self.consts:
                    raise AssemblyError(f"constant {key} declared twice", lineno)
                self.consts[key] = int(value)
            else:
                if value in ("true", "false"):
                    self.meta[key] = value == "true"
                elif value.isdigit():
                    self.meta[key] = int(value)
                else:
                    self.meta[key] = value
        else:
            raise AssemblyError(f"unknown directive {word}", lineno)

    def parse(self):
        for lineno, raw in enumerate(self.text.splitlines(), start=1):
            code, sep, comment = raw.partition(";")
            note = _RE_INDEX.sub("", comment.strip()) if sep else ""
            code = code.strip()
            if not code:
                continue
            if code.startswith("."):
                if self.pending or self.labels:
                    raise AssemblyError("directives must precede instructions", lineno)
                self.directive(code, lineno)
                continue
            while True:
                m = _RE_LABEL.match(code)
                if not m or m.group(1) in _KEYWORDS:
                    break
                label = m.group(1)
                if label in self.labels:
                    raise AssemblyError(f"label {label} defined twice", lineno)
                self.labels[label] = len(self.pending)
                code = m.group(2).strip()
            if code:
                self.pending.append((lineno, code, note))
        n = len(self.pending)
        ins = [self.statement(stmt, note, lineno, n) for lineno, stmt, note in self.pending]
        return Program(tuple(ins), self.model, tuple(self.consts.items()), self.name,
                       tuple(sorted(self.meta.items())))

    def target(self, tok, lineno, n):
        if tok.startswith("@") and tok[1:].isdigit():
            return int(tok[1:])
        if tok not in self.labels:
            raise AssemblyError(f"unknown label {tok!r}", lineno)
        return self.labels[tok]

    def statement(self, stmt, note, lineno, n):
        try:
            return self._statement(stmt, note, lineno, n)
        except InvalidProgram as e:
            if isinstance(e, AssemblyError):
                raise
            raise AssemblyError(str(e), lineno) from None

    def _statement(self, stmt, note, lineno, n):
        if stmt == "halt":
            return Instruction(Op.HALT, note=note)
        m = _RE_GOTO.match(stmt)
        if m:
            return Instruction(Op.GOTO, target=self.target(m.group(1), lineno, n), note=note)
        m = _RE_IF.match(stmt)
        if m:
            a = self.operand(m.group(1), lineno)
            b = self.operand(m.group(3), lineno)
            return Instruction(Op.IF, args=(a, b), cond=m.group(2),
                               target=self.target(m.group(4), lineno, n), note=note)
        m = _RE_NOP.match(stmt)
        if m:
            return Instruction(Op.NOP, args=(self.operand(m.group(1), lineno, False),), note=note)
        m = _RE_ASSIGN.match(stmt)
        if not m:
            raise AssemblyError(f"cannot parse {stmt!r}", lineno)
        dst = self.operand(m.group(1), lineno)
        if isinstance(dst, Lit):
            raise AssemblyError("cannot assign to a literal", lineno)
        rhs = m.group(2).strip()
        r = _RE_RAND.match(rhs)
        if r:
            return Instruction(Op.RAND, dst, (self.operand(r.group(1), lineno, False),), note=note)
        b = _RE_BINOP.match(rhs)
        if b:
            op = Op.ADD if b.group(2) == "+" else Op.SUB
            return Instruction(op, dst, (self.operand(b.group(1), lineno),
                                         self.operand(b.group(3), lineno)), note=note)
        src = self.operand(rhs, lineno)
        if isinstance(dst, Mem):
            if isinstance(src, Mem):
                raise AssemblyError("memory-to-memory move needs a register", lineno)
            return Instruction(Op.STORE, dst, (src,), note=note)
        if isinstance(src, Mem):
            return Instruction(Op.LOAD, dst, (src,), note=note)
        return Instruction(Op.ASSIGN, dst, (src,), note=note)


def parse_program(text: str) -> Program:
    return _Parser(text).parse()


def load_program(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


def _stmt(ins: Instruction, labels) -> str:
    op = ins.op
    if op is Op.HALT:
        return "halt"
    if op is Op.GOTO:
        return f"goto {labels[ins.target]}"
    if op is Op.IF:
        a, b = ins.args
        return f"if {a} {ins.cond} {b} goto {labels[ins.target]}"
    if op is Op.NOP:
        return f"nop({ins.args[0]})"
    if op is Op.RAND:
        return f"{ins.dst} = rand({ins.args[0]})"
    if op in (Op.ADD, Op.SUB):
        sign = "+" if op is Op.ADD else "-"
        return f"{ins.dst} = {ins.args[0]} {sign} {ins.args[1]}"
    return f"{ins.dst} = {ins.args[0]}"


def emit_program(program: Program) -> str:
    """Render a program so that ``parse_program`` gives it back unchanged."""
    consts = program.constant_map
    for ins in program.instructions:
        for lit in ins.literals():
            if lit.name is not None and consts.get(lit.name) != lit.value:
                raise InvalidProgram(f"literal named {lit.name} is not a declared constant")
    targets = sorted({i.target for i in program.instructions if i.target is not None})
    labels = {t: f"L{t}" for t in targets}
    lines = []
    if program.name:
        lines.append(f".name {program.name}")
    lines.append(f".model {program.model}")
    for key, value in program.meta:
        v = str(value).lower() if isinstance(value, bool) else value
        lines.append(f".meta {key} = {v}")
    for name, value in program.constants:
        lines.append(f".const {name} = {value}")
    width = max([len(_stmt(i, labels)) for i in program.instructions] + [20])
    for pc, ins in enumerate(program.instructions):
        label = f"{labels[pc]}:" if pc in labels else ""
        body = _stmt(ins, labels)
        comment = f"[{pc}]" + (f" {ins.note}" if ins.note else "")
        lines.append(f"{label:<8}{body:<{width}}  ; {comment}")
    return "\n".join(lines) + "\n"


__all__ = ["parse_program", "load_program", "emit_program", "COMPARISONS"]
