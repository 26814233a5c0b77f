"""Seeded generator of small loop-free programs over a one-bit input.

Each program reads x = M[input_ptr], runs a short body with at most three
rand instructions and only forward jumps, then writes one output cell.
Three flavours keep the relationship checks non-vacuous: ``free`` mixes
everything, ``det`` keeps the output a function of x, ``const`` has no
branches and no data-dependent sleeps.
"""

import random

from timingdp.vm import parse_program

FLAVOURS = ("free", "det", "const")


def _body(rng, flavour, n_rand, size):
    regs = []
    out = []
    rands_left = n_rand
    for i in range(size):
        kinds = ["arith", "arith", "nop"]
        if rands_left:
            kinds += ["rand", "rand"]
        if flavour != "const":
            kinds += ["if", "if", "vnop"]
        kind = rng.choice(kinds)
        if kind == "rand":
            r = f"r{len(regs) + 1}"
            regs.append(r)
            rands_left -= 1
            out.append(("stmt", f"{r} = rand({rng.choice((1, 1, 2))})"))
        elif kind == "arith":
            srcs = ["x"] + (regs if flavour != "det" else [])
            src = rng.choice(srcs)
            form = rng.choice(("acc = acc + {s}", "acc = {s}", "acc = acc - {s}", "acc = {s} + 1"))
            out.append(("stmt", form.format(s=src)))
        elif kind == "nop":
            out.append(("stmt", f"nop({rng.randint(1, 3)})"))
        elif kind == "vnop":
            out.append(("stmt", f"nop({rng.choice(['x', 'acc'] + regs)})"))
        else:
            lhs = rng.choice(["x", "acc"] + regs)
            cmp = rng.choice(("==", "!=", "<", ">="))
            out.append(("if", f"if {lhs} {cmp} {rng.randint(0, 2)} goto", rng.randint(i + 1, size)))
    if flavour == "const":
        while rands_left:
            r = f"r{len(regs) + 1}"
            regs.append(r)
            rands_left -= 1
            out.append(("stmt", f"{r} = rand(1)"))
    return out


def make_program(seed):
    rng = random.Random(seed)
    flavour = FLAVOURS[seed % len(FLAVOURS)]
    body = _body(rng, flavour, rng.randint(0 if flavour == "det" else 1, 3), rng.randint(3, 8))
    lines = [f".name corpus_{seed}_{flavour}", ".model ram",
             "x = M[input_ptr]", "acc = 0", "r1 = 0", "r2 = 0", "r3 = 0"]
    for i, item in enumerate(body):
        text = item[1] if item[0] == "stmt" else f"{item[1]} L{item[2]}"
        lines.append(f"L{i}: {text}")
    lines += [f"L{len(body)}: output_ptr = input_ptr", "output_len = 1",
              "M[output_ptr] = acc", "halt"]
    return parse_program("\n".join(lines) + "\n")


def corpus(n=210, seed=2024):
    return [make_program(seed * 1000 + i) for i in range(n)]
