# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled interpreter loop; behaviour matches ``_kernel_py.run`` exactly."""

from array import array

from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memcpy
from libc.math cimport INFINITY, copysign

NAME = "cython"

cdef enum:
    HALT = 0
    RET = 1
    JMP = 2
    BEQ = 3
    BNE = 4
    BLT = 5
    CALL = 6
    LI = 10
    MOV = 11
    ADD = 12
    SUB = 13
    AND = 14
    OR = 15
    XOR = 16
    NOT = 17
    SHL = 18
    SHR = 19
    SLT = 20
    MUL = 21
    DIV = 22
    REM = 23
    FLI = 30
    FMOV = 31
    FADD = 32
    FSUB = 33
    FNEG = 34
    FMUL = 35
    FDIV = 36
    VLI = 40
    VMOV = 41
    VADD = 42
    VSUB = 43
    VAND = 44
    VOR = 45
    VXOR = 46
    VMUL = 47
    LD = 50
    ST = 51
    FLD = 52
    FST = 53
    VLD = 54
    VST = 55
    IMM_FORM = 100
    MAX_CALL_DEPTH = 1024

cdef enum:
    ST_HALTED = 0
    ST_RETURNED = 1
    ST_BUDGET = -1
    ST_MEMFAULT = -2
    ST_STACK_OVERFLOW = -3
    ST_DIV_ZERO = -4
    ST_PC_FAULT = -5


cdef inline uint64_t load64(unsigned char* p) noexcept nogil:
    cdef uint64_t v = 0
    cdef int k
    for k in range(7, -1, -1):
        v = (v << 8) | p[k]
    return v


cdef inline void store64(unsigned char* p, uint64_t v) noexcept nogil:
    cdef int k
    for k in range(8):
        p[k] = <unsigned char>(v & 0xFF)
        v >>= 8


cdef inline double bits_to_double(uint64_t v) noexcept nogil:
    cdef double d
    memcpy(&d, &v, 8)
    return d


cdef inline uint64_t double_to_bits(double d) noexcept nogil:
    cdef uint64_t v
    memcpy(&v, &d, 8)
    return v


cdef inline double fdiv(double a, double b) noexcept nogil:
    if b != 0.0:
        return a / b
    if a != a or a == 0.0:
        return bits_to_double(0x7FF8000000000000ULL)
    return copysign(INFINITY, a) * copysign(1.0, b)


def run(const int64_t[:] code, uint64_t[:] iregs, double[:] fregs, uint64_t[:] vregs,
        unsigned char[:] mem, int64_t pc, list call_stack, int64_t target,
        bint trace_callees, int64_t budget):
    cdef Py_ssize_t n = code.shape[0] // 4
    cdef Py_ssize_t memsize = mem.shape[0]
    cdef uint64_t R[32]
    cdef double Fr[16]
    cdef uint64_t Vr[32]
    cdef int64_t stack[MAX_CALL_DEPTH]
    cdef Py_ssize_t sp = len(call_stack)
    cdef Py_ssize_t depth = -1
    cdef int64_t steps = 0
    cdef int status = ST_HALTED
    cdef uint64_t fault = 0
    cdef int64_t o, a, b, c, k
    cdef uint64_t x, y, addr
    cdef int lane, width
    cdef unsigned char* mp = &mem[0] if memsize > 0 else NULL
    cdef Py_ssize_t tcap = 1024
    cdef Py_ssize_t tlen = 0
    cdef int64_t* tbuf = <int64_t*>malloc(tcap * sizeof(int64_t))
    cdef int64_t* grown
    cdef Py_ssize_t i
    cdef int64_t[:] tview

    if tbuf == NULL:
        raise MemoryError()
    for i in range(32):
        R[i] = iregs[i]
        Vr[i] = vregs[i]
    for i in range(16):
        Fr[i] = fregs[i]
    for i in range(sp):
        stack[i] = call_stack[i]
    if pc == target:
        depth = sp

    try:
        while True:
            if steps >= budget:
                status = ST_BUDGET
                break
            if pc < 0 or pc >= n:
                status = ST_PC_FAULT
                break
            steps += 1
            if depth >= 0 and (trace_callees or sp == depth):
                if tlen == tcap:
                    tcap *= 2
                    grown = <int64_t*>realloc(tbuf, tcap * sizeof(int64_t))
                    if grown == NULL:
                        raise MemoryError()
                    tbuf = grown
                tbuf[tlen] = pc
                tlen += 1
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
                    if <int64_t>R[a] < <int64_t>R[b]:
                        pc = c
                elif o == JMP:
                    pc = a
                elif o == CALL:
                    if sp >= MAX_CALL_DEPTH:
                        status = ST_STACK_OVERFLOW
                        pc -= 1
                        break
                    stack[sp] = pc
                    sp += 1
                    pc = a
                    if depth < 0 and a == target:
                        depth = sp
                elif o == RET:
                    if sp == 0:
                        status = ST_RETURNED
                        pc -= 1
                        break
                    sp -= 1
                    pc = stack[sp]
                    if sp < depth:
                        depth = -1
                else:
                    status = ST_HALTED
                    pc -= 1
                    break
            elif o < 30 or o >= IMM_FORM:
                if o >= IMM_FORM:
                    o -= IMM_FORM
                    y = <uint64_t>c
                else:
                    y = R[c]
                if o == ADD:
                    R[a] = R[b] + y
                elif o == AND:
                    R[a] = R[b] & y
                elif o == XOR:
                    R[a] = R[b] ^ y
                elif o == OR:
                    R[a] = R[b] | y
                elif o == SUB:
                    R[a] = R[b] - y
                elif o == LI:
                    R[a] = <uint64_t>b
                elif o == MOV:
                    R[a] = R[b]
                elif o == SHR:
                    R[a] = R[b] >> (y & 63)
                elif o == SHL:
                    R[a] = R[b] << (y & 63)
                elif o == SLT:
                    R[a] = 1 if <int64_t>R[b] < <int64_t>y else 0
                elif o == NOT:
                    R[a] = ~R[b]
                elif o == MUL:
                    R[a] = R[b] * y
                elif o == DIV or o == REM:
                    if y == 0:
                        status = ST_DIV_ZERO
                        pc -= 1
                        break
                    if o == DIV:
                        R[a] = R[b] // y
                    else:
                        R[a] = R[b] % y
            elif o < 40:
                if o == FADD:
                    Fr[a] = Fr[b] + Fr[c]
                elif o == FSUB:
                    Fr[a] = Fr[b] - Fr[c]
                elif o == FMUL:
                    Fr[a] = Fr[b] * Fr[c]
                elif o == FDIV:
                    Fr[a] = fdiv(Fr[b], Fr[c])
                elif o == FMOV:
                    Fr[a] = Fr[b]
                elif o == FNEG:
                    Fr[a] = -Fr[b]
                elif o == FLI:
                    Fr[a] = bits_to_double(<uint64_t>b)
            elif o < 50:
                if o == VLI:
                    for lane in range(4):
                        Vr[a * 4 + lane] = <uint64_t>b
                elif o == VMOV:
                    for lane in range(4):
                        Vr[a * 4 + lane] = Vr[b * 4 + lane]
                else:
                    for lane in range(4):
                        x = Vr[b * 4 + lane]
                        y = Vr[c * 4 + lane]
                        if o == VADD:
                            x = x + y
                        elif o == VSUB:
                            x = x - y
                        elif o == VAND:
                            x = x & y
                        elif o == VOR:
                            x = x | y
                        elif o == VXOR:
                            x = x ^ y
                        else:
                            x = x * y
                        Vr[a * 4 + lane] = x
            else:
                addr = R[b] + <uint64_t>c
                width = 32 if o >= VLD else 8
                if addr > <uint64_t>memsize or <uint64_t>memsize - addr < <uint64_t>width:
                    status = ST_MEMFAULT
                    fault = addr
                    pc -= 1
                    break
                if o == LD:
                    R[a] = load64(mp + addr)
                elif o == ST:
                    store64(mp + addr, R[a])
                elif o == FLD:
                    Fr[a] = bits_to_double(load64(mp + addr))
                elif o == FST:
                    store64(mp + addr, double_to_bits(Fr[a]))
                elif o == VLD:
                    for lane in range(4):
                        Vr[a * 4 + lane] = load64(mp + addr + 8 * lane)
                else:
                    for lane in range(4):
                        store64(mp + addr + 8 * lane, Vr[a * 4 + lane])

        for i in range(32):
            iregs[i] = R[i]
            vregs[i] = Vr[i]
        for i in range(16):
            fregs[i] = Fr[i]
        del call_stack[:]
        for i in range(sp):
            call_stack.append(stack[i])
        trace = array("q", bytes(tlen * 8))
        if tlen:
            tview = trace
            memcpy(&tview[0], tbuf, tlen * sizeof(int64_t))
    finally:
        free(tbuf)
    return status, pc, steps, trace, fault
