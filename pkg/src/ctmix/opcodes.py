"""Mnemonic signatures and the integer opcodes the execution kernels dispatch on.

The numeric values are mirrored by hand in ``_kernel.pyx``; the backend
parity tests catch any drift.
"""

# operand kinds
R = "r"      # integer register
F = "f"      # float register
V = "v"      # vector register
IMM = "i"    # integer immediate (or data label address)
FIMM = "d"   # float immediate
MEM = "m"    # [rN+off]
LABEL = "l"  # code label
R_OR_IMM = "ri"

SIGNATURES: dict[str, tuple[str, ...]] = {
    "li": (R, IMM),
    "mov": (R, R),
    "add": (R, R, R_OR_IMM),
    "sub": (R, R, R_OR_IMM),
    "and": (R, R, R_OR_IMM),
    "or": (R, R, R_OR_IMM),
    "xor": (R, R, R_OR_IMM),
    "not": (R, R),
    "shl": (R, R, R_OR_IMM),
    "shr": (R, R, R_OR_IMM),
    "slt": (R, R, R_OR_IMM),
    "mul": (R, R, R_OR_IMM),
    "div": (R, R, R_OR_IMM),
    "rem": (R, R, R_OR_IMM),
    "fli": (F, FIMM),
    "fmov": (F, F),
    "fadd": (F, F, F),
    "fsub": (F, F, F),
    "fneg": (F, F),
    "fmul": (F, F, F),
    "fdiv": (F, F, F),
    "vli": (V, IMM),
    "vmov": (V, V),
    "vadd": (V, V, V),
    "vsub": (V, V, V),
    "vand": (V, V, V),
    "vor": (V, V, V),
    "vxor": (V, V, V),
    "vmul": (V, V, V),
    "ld": (R, MEM),
    "st": (R, MEM),
    "fld": (F, MEM),
    "fst": (F, MEM),
    "vld": (V, MEM),
    "vst": (V, MEM),
    "jmp": (LABEL,),
    "beq": (R, R, LABEL),
    "bne": (R, R, LABEL),
    "blt": (R, R, LABEL),
    "call": (LABEL,),
    "ret": (),
    "halt": (),
}

MNEMONICS = tuple(SIGNATURES)

# instructions after which control never falls through
TERMINATORS = frozenset({"jmp", "ret", "halt"})

HALT, RET, JMP, BEQ, BNE, BLT, CALL = 0, 1, 2, 3, 4, 5, 6

LI, MOV, ADD, SUB, AND, OR, XOR, NOT, SHL, SHR, SLT, MUL, DIV, REM = range(10, 24)
# register/immediate forms of the three-operand integer ops
IMM_FORM = 100

FLI, FMOV, FADD, FSUB, FNEG, FMUL, FDIV = range(30, 37)
VLI, VMOV, VADD, VSUB, VAND, VOR, VXOR, VMUL = range(40, 48)
LD, ST, FLD, FST, VLD, VST = range(50, 56)

OPCODES: dict[str, int] = {
    "halt": HALT, "ret": RET, "jmp": JMP, "beq": BEQ, "bne": BNE, "blt": BLT, "call": CALL,
    "li": LI, "mov": MOV, "add": ADD, "sub": SUB, "and": AND, "or": OR, "xor": XOR,
    "not": NOT, "shl": SHL, "shr": SHR, "slt": SLT, "mul": MUL, "div": DIV, "rem": REM,
    "fli": FLI, "fmov": FMOV, "fadd": FADD, "fsub": FSUB, "fneg": FNEG, "fmul": FMUL, "fdiv": FDIV,
    "vli": VLI, "vmov": VMOV, "vadd": VADD, "vsub": VSUB, "vand": VAND, "vor": VOR,
    "vxor": VXOR, "vmul": VMUL,
    "ld": LD, "st": ST, "fld": FLD, "fst": FST, "vld": VLD, "vst": VST,
}

# kernel exit statuses (>= 0 normal, < 0 fault)
ST_HALTED = 0
ST_RETURNED = 1
ST_BUDGET = -1
ST_MEMFAULT = -2
ST_STACK_OVERFLOW = -3
ST_DIV_ZERO = -4
ST_PC_FAULT = -5

NUM_INT_REGS = 32
NUM_FLOAT_REGS = 16
NUM_VEC_REGS = 8
VEC_LANES = 4
MAX_CALL_DEPTH = 1024
DEFAULT_MEMORY_SIZE = 65536
DEFAULT_BUDGET = 10_000_000
