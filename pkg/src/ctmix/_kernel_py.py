"""Reference interpreter loop in plain Python.

``run`` has the same signature and results as the compiled ``_kernel.run``;
it is selected when the extension is not built or ``CTMIX_PURE_PYTHON`` is set.
"""
from __future__ import annotations

import math
import struct

from .opcodes import (
    ADD, AND, BEQ, BLT, BNE, CALL, DIV, FADD, FDIV, FLD, FLI, FMOV, FMUL, FNEG, FST, FSUB,
    HALT, IMM_FORM, JMP, LD, LI, MAX_CALL_DEPTH, MOV, MUL, NOT, OR, REM, RET, SHL, SHR, SLT,
    ST, ST_BUDGET, ST_DIV_ZERO, ST_HALTED, ST_MEMFAULT, ST_PC_FAULT, ST_RETURNED,
    ST_STACK_OVERFLOW, SUB, VADD, VAND, VLD, VLI, VMOV, VMUL, VOR, VST, VSUB, VXOR, XOR,
)

NAME = "python"

M64 = (1 << 64) - 1
SIGN = 1 << 63
_D = struct.Struct("<d")
_Q = struct.Struct("<Q")
_Q4 = struct.Struct("<4Q")


def _fdiv(a: float, b: float) -> float:
    if b != 0.0:
        return a / b
    if a != a or a == 0.0:
        return math.nan
    return math.copysign(math.inf, a) * math.copysign(1.0, b)


def run(code, iregs, fregs, vregs, mem, pc, call_stack, target, trace_callees, budget):
    """Execute from ``pc`` until halt, top-level return, fault or budget.

    Register files (``iregs`` array('Q'), ``fregs`` array('d'), ``vregs``
    array('Q') of 4 lanes per register), ``mem`` (bytearray) and
    ``call_stack`` (list) are updated in place.

    Returns ``(status, pc, steps, trace, fault_addr)`` where ``trace`` lists
    the instruction indices executed inside the target's dynamic extent.
    """
    R = list(iregs)
    Fr = list(fregs)
    Vr = list(vregs)
    stack = call_stack
    memsize = len(mem)
    n = len(code) // 4
    trace = []
    record = trace.append
    steps = 0
    depth = len(stack) if pc == target else -1
    status = ST_HALTED
    fault = 0

    while True:
        if steps >= budget:
            status = ST_BUDGET
            break
        if not 0 <= pc < n:
            status = ST_PC_FAULT
            break
        steps += 1
        if depth >= 0 and (trace_callees or len(stack) == depth):
            record(pc)
        k = pc * 4
        o = code[k]
        a = code[k + 1]
        b = code[k + 2]
        c = code[k + 3]
        pc += 1

        if o < 10:
            if o == BNE:
                if R[a] != R[b]:
                    pc = c
            elif o == BEQ:
                if R[a] == R[b]:
                    pc = c
            elif o == BLT:
                x = R[a]
                y = R[b]
                if (x ^ SIGN) < (y ^ SIGN):
                    pc = c
            elif o == JMP:
                pc = a
            elif o == CALL:
                if len(stack) >= MAX_CALL_DEPTH:
                    status = ST_STACK_OVERFLOW
                    pc -= 1
                    break
                stack.append(pc)
                pc = a
                # depth is the stack height inside the target's own frame
                if depth < 0 and a == target:
                    depth = len(stack)
            elif o == RET:
                if not stack:
                    status = ST_RETURNED
                    pc -= 1
                    break
                pc = stack.pop()
                if len(stack) < depth:
                    depth = -1
            else:  # HALT
                status = ST_HALTED
                pc -= 1
                break
        elif o < 30 or o >= IMM_FORM:
            if o >= IMM_FORM:
                o -= IMM_FORM
                y = c & M64
            else:
                y = R[c]
            if o == ADD:
                R[a] = (R[b] + y) & M64
            elif o == AND:
                R[a] = R[b] & y
            elif o == XOR:
                R[a] = R[b] ^ y
            elif o == OR:
                R[a] = R[b] | y
            elif o == SUB:
                R[a] = (R[b] - y) & M64
            elif o == LI:
                R[a] = b & M64
            elif o == MOV:
                R[a] = R[b]
            elif o == SHR:
                R[a] = R[b] >> (y & 63)
            elif o == SHL:
                R[a] = (R[b] << (y & 63)) & M64
            elif o == SLT:
                R[a] = 1 if (R[b] ^ SIGN) < (y ^ SIGN) else 0
            elif o == NOT:
                R[a] = R[b] ^ M64
            elif o == MUL:
                R[a] = (R[b] * y) & M64
            elif o == DIV or o == REM:
                if y == 0:
                    status = ST_DIV_ZERO
                    pc -= 1
                    break
                R[a] = R[b] // y if o == DIV else R[b] % y
        elif o < 40:
            if o == FADD:
                Fr[a] = Fr[b] + Fr[c]
            elif o == FSUB:
                Fr[a] = Fr[b] - Fr[c]
            elif o == FMUL:
                Fr[a] = Fr[b] * Fr[c]
            elif o == FDIV:
                Fr[a] = _fdiv(Fr[b], Fr[c])
            elif o == FMOV:
                Fr[a] = Fr[b]
            elif o == FNEG:
                Fr[a] = -Fr[b]
            elif o == FLI:
                Fr[a] = _D.unpack(_Q.pack(b & M64))[0]
        elif o < 50:
            da = a * 4
            if o == VLI:
                v = b & M64
                Vr[da:da + 4] = (v, v, v, v)
            elif o == VMOV:
                db = b * 4
                Vr[da:da + 4] = Vr[db:db + 4]
            else:
                db = b * 4
                dc = c * 4
                x = Vr[db:db + 4]
                y4 = Vr[dc:dc + 4]
                if o == VADD:
                    r = [(p + q) & M64 for p, q in zip(x, y4)]
                elif o == VSUB:
                    r = [(p - q) & M64 for p, q in zip(x, y4)]
                elif o == VAND:
                    r = [p & q for p, q in zip(x, y4)]
                elif o == VOR:
                    r = [p | q for p, q in zip(x, y4)]
                elif o == VXOR:
                    r = [p ^ q for p, q in zip(x, y4)]
                else:  # VMUL
                    r = [(p * q) & M64 for p, q in zip(x, y4)]
                Vr[da:da + 4] = r
        else:
            addr = (R[b] + c) & M64
            width = 32 if o >= VLD else 8
            if addr + width > memsize:
                status = ST_MEMFAULT
                fault = addr
                pc -= 1
                break
            if o == LD:
                R[a] = int.from_bytes(mem[addr:addr + 8], "little")
            elif o == ST:
                mem[addr:addr + 8] = R[a].to_bytes(8, "little")
            elif o == FLD:
                Fr[a] = _D.unpack_from(mem, addr)[0]
            elif o == FST:
                _D.pack_into(mem, addr, Fr[a])
            elif o == VLD:
                Vr[a * 4:a * 4 + 4] = _Q4.unpack_from(mem, addr)
            else:  # VST
                _Q4.pack_into(mem, addr, *Vr[a * 4:a * 4 + 4])

    iregs[:] = type(iregs)(iregs.typecode, R)
    fregs[:] = type(fregs)(fregs.typecode, Fr)
    vregs[:] = type(vregs)(vregs.typecode, Vr)
    return status, pc, steps, trace, fault
