"""Test oracles and generators, written independently of the package internals."""
from __future__ import annotations

import random
from collections import Counter

# rule-based class oracle: no lookup into the package's tables
_FLOW = {"jmp", "beq", "bne", "blt", "call", "ret", "halt"}
_HEAVY = {"mul", "div", "rem", "fmul", "fdiv", "vmul"}
_INT_SCALAR = {"not"}


def oracle_column(mnemonic: str) -> str:
    if mnemonic in _FLOW:
        return "control_flow"
    dtype = "int"
    if mnemonic.startswith("f") and mnemonic not in _INT_SCALAR:
        dtype = "float"
    elif mnemonic.startswith("v"):
        dtype = "vec"
    base = mnemonic[1:] if dtype != "int" else mnemonic
    if base == "ld":
        return f"load_{dtype}"
    if base == "st":
        return f"store_{dtype}"
    weight = "heavy" if mnemonic in _HEAVY else "light"
    return f"alu_{weight}_{dtype}"


ALL_COLUMNS = [
    "load_int", "load_float", "load_vec", "store_int", "store_float", "store_vec",
    "alu_light_int", "alu_light_float", "alu_light_vec",
    "alu_heavy_int", "alu_heavy_float", "alu_heavy_vec", "control_flow",
]

# the instruction set as listed in the ISA documentation
ISA_MNEMONICS = (
    "li mov add sub and or xor not shl shr slt mul div rem "
    "fli fmov fadd fsub fneg fmul fdiv "
    "vli vmov vadd vsub vand vor vxor vmul "
    "ld st fld fst vld vst "
    "jmp beq bne blt call ret halt"
).split()


def naive_tally(mnemonics) -> dict[str, int]:
    counts = Counter(oracle_column(m) for m in mnemonics)
    return {c: counts.get(c, 0) for c in ALL_COLUMNS}


# ---- random terminating programs ---------------------------------------------------------------
SECRET_ADDR = 0x1000
SECRET_LEN = 8
SCRATCH = 0x4000

_INT3 = ["add", "sub", "and", "or", "xor", "shl", "shr", "slt", "mul", "div", "rem"]
_FLT3 = ["fadd", "fsub", "fmul", "fdiv"]
_VEC3 = ["vadd", "vsub", "vand", "vor", "vxor", "vmul"]


def _ireg(rng):  # r1..r15 are scratch; r30 = secret base, r31 = scratch base
    return f"r{rng.randrange(1, 16)}"


def _straight(rng: random.Random, allow_fault: bool) -> str:
    k = rng.randrange(16)
    if k == 0:
        return f"li {_ireg(rng)}, {rng.randrange(-2**63, 2**64)}"
    if k in (1, 2, 3):
        src = _ireg(rng) if rng.random() < 0.6 else str(rng.randrange(-64, 1 << 16))
        op = rng.choice(_INT3)
        if op in ("div", "rem") and not allow_fault and not src.startswith("r"):
            src = str(rng.randrange(1, 1000))
        elif op in ("div", "rem") and not allow_fault:
            return f"or {src}, {src}, 1\n        {op} {_ireg(rng)}, {_ireg(rng)}, {src}"
        return f"{op} {_ireg(rng)}, {_ireg(rng)}, {src}"
    if k == 4:
        return f"{rng.choice(['mov', 'not'])} {_ireg(rng)}, {_ireg(rng)}"
    if k == 5:
        return f"ld {_ireg(rng)}, [r30+{rng.randrange(SECRET_LEN)}]"
    if k == 6:
        return f"{rng.choice(['ld', 'st'])} {_ireg(rng)}, [r31+{rng.randrange(0, 256)}]"
    if k == 7:
        val = rng.choice(["0.0", "1.5", "-2.25", "1e300", "-0.0", str(rng.uniform(-1e3, 1e3))])
        return f"fli f{rng.randrange(16)}, {val}"
    if k in (8, 9):
        return f"{rng.choice(_FLT3)} f{rng.randrange(16)}, f{rng.randrange(16)}, f{rng.randrange(16)}"
    if k == 10:
        return f"{rng.choice(['fmov', 'fneg'])} f{rng.randrange(16)}, f{rng.randrange(16)}"
    if k == 11:
        return f"{rng.choice(['fld', 'fst'])} f{rng.randrange(16)}, [r31+{8 * rng.randrange(32)}]"
    if k == 12:
        return f"vli v{rng.randrange(8)}, {rng.randrange(1 << 64)}"
    if k == 13:
        return f"{rng.choice(_VEC3)} v{rng.randrange(8)}, v{rng.randrange(8)}, v{rng.randrange(8)}"
    if k == 14:
        return f"vmov v{rng.randrange(8)}, v{rng.randrange(8)}"
    return f"{rng.choice(['vld', 'vst'])} v{rng.randrange(8)}, [r31+{rng.randrange(0, 256)}]"


def _block(rng: random.Random, prefix: str, n: int, allow_fault: bool,
           callee: str | None = None) -> list[str]:
    """Straight-line code with forward-only branches, so it always terminates."""
    body: list[list[str]] = [[] for _ in range(n + 1)]
    for i in range(n):
        if rng.random() < 0.15 and i < n - 1:
            j = rng.randrange(i + 1, n + 1)
            op = rng.choice(["beq", "bne", "blt"])
            body[i].append(f"{op} {_ireg(rng)}, {_ireg(rng)}, {prefix}{j}")
        elif rng.random() < 0.05:
            body[i].append(f"jmp {prefix}{rng.randrange(i + 1, n + 1)}")
        elif callee and rng.random() < 0.08:
            body[i].append(f"call {callee}")
        else:
            body[i].append(_straight(rng, allow_fault))
    out = []
    for i, stmts in enumerate(body):
        out.append(f"{prefix}{i}:")
        out.extend("        " + s for s in stmts)
    return out


def random_program(seed: int, allow_fault: bool = False) -> str:
    rng = random.Random(seed)
    lines = ["main:", f"        li r30, {SECRET_ADDR}", f"        li r31, {SCRATCH}"]
    lines += _block(rng, "m", rng.randrange(0, 6), allow_fault)
    lines.append("        call target")
    lines += _block(rng, "p", rng.randrange(0, 6), allow_fault)
    lines.append("        halt")
    lines.append("target:")
    lines += _block(rng, "t", rng.randrange(1, 40), allow_fault, callee="helper")
    lines.append("        ret")
    lines.append("helper:")
    lines += _block(rng, "h", rng.randrange(0, 12), allow_fault)
    lines.append("        ret")
    return "\n".join(lines) + "\n"
