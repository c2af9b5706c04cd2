"""Text assembler for the mini-ISA.

Grammar, one statement per line::

    [label:] mnemonic [op1[, op2[, op3]]]   ; comment

Operands are registers (``r0``-``r31``, ``f0``-``f15``, ``v0``-``v7``),
integer or float immediates, code labels, or memory references
``[rN]``, ``[rN+imm]``, ``[rN-imm]``. An integer immediate may also name a
data label, which resolves to its byte address.

Data lives after ``.data [addr]`` (``.text`` switches back) and is placed with
``.byte``, ``.word`` (8-byte little-endian) and ``.ascii "..."``.
"""
from __future__ import annotations

import ast
import re
import struct
from array import array
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Mapping, NamedTuple, Union

from . import opcodes as op
from .classify import InstructionClass, UnknownMnemonicError, builtin_map


class AssemblyError(Exception):
    """Base for assembler diagnostics; carries a 1-based line and column."""

    kind = "error"

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.line:
            return f"{self.line}:{self.column}: {self.kind}: {self.message}"
        return f"{self.kind}: {self.message}"


class AsmSyntaxError(AssemblyError):
    kind = "syntax error"


class AsmUnknownMnemonic(AssemblyError):
    kind = "unknown mnemonic"


class AsmUnresolvedLabel(AssemblyError):
    kind = "unresolved label"


class AsmOperandError(AssemblyError):
    kind = "operand mismatch"


class AsmDuplicateLabel(AssemblyError):
    kind = "duplicate label"


# ==================================================================================================
# Operands and instructions
# ==================================================================================================
class Reg(NamedTuple):
    bank: str  # "r", "f" or "v"
    index: int

    def __str__(self) -> str:
        return f"{self.bank}{self.index}"


class Imm(NamedTuple):
    value: Union[int, float]

    def __str__(self) -> str:
        return str(self.value)


class Label(NamedTuple):
    name: str

    def __str__(self) -> str:
        return self.name


class Mem(NamedTuple):
    base: int  # integer register index
    offset: int

    def __str__(self) -> str:
        if self.offset < 0:
            return f"[r{self.base}-{-self.offset}]"
        return f"[r{self.base}+{self.offset}]"


Operand = Union[Reg, Imm, Label, Mem]


class Instruction(NamedTuple):
    mnemonic: str
    operands: tuple = ()
    line: int = 0

    def __str__(self) -> str:
        if not self.operands:
            return self.mnemonic
        return f"{self.mnemonic} " + ", ".join(str(o) for o in self.operands)


@dataclass(frozen=True)
class Program:
    instructions: tuple[Instruction, ...]
    labels: Mapping[str, int]
    entry: int = 0
    data_segment: bytes = b""
    data_labels: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "instructions", tuple(self.instructions))
        object.__setattr__(self, "labels", MappingProxyType(dict(self.labels)))
        object.__setattr__(self, "data_labels", MappingProxyType(dict(self.data_labels)))
        object.__setattr__(self, "data_segment", bytes(self.data_segment))
        if not self.instructions:
            raise AssemblyError("program has no instructions")
        n = len(self.instructions)
        if not 0 <= self.entry < n:
            raise AssemblyError(f"entry {self.entry} outside program")
        for name, index in self.labels.items():
            if not 0 <= index < n:
                raise AsmUnresolvedLabel(f"label {name!r} does not precede an instruction")
        last = self.instructions[-1]
        if last.mnemonic not in op.TERMINATORS:
            raise AsmSyntaxError(
                f"program may run off its end: last instruction {last.mnemonic!r} "
                "is not jmp, ret or halt", last.line, 1)

    def __len__(self) -> int:
        return len(self.instructions)

    def resolve(self, label: str) -> int:
        try:
            return self.labels[label]
        except KeyError:
            raise AsmUnresolvedLabel(f"no code label {label!r}") from None

    @cached_property
    def code(self) -> array:
        """Flat ``array('q')`` of (opcode, a, b, c) quadruples for the kernels."""
        return encode(self)

    @cached_property
    def class_table(self) -> tuple[InstructionClass, ...]:
        m = builtin_map()
        return tuple(m.classify(i.mnemonic) for i in self.instructions)

    @cached_property
    def mnemonic_table(self) -> tuple[str, ...]:
        return tuple(i.mnemonic for i in self.instructions)

    def listing(self) -> str:
        by_index: dict[int, list[str]] = {}
        for name, index in self.labels.items():
            by_index.setdefault(index, []).append(name)
        out = []
        for k, instr in enumerate(self.instructions):
            for name in by_index.get(k, ()):
                out.append(f"{name}:")
            out.append(f"  {k:5d}  {instr}")
        return "\n".join(out)


# ==================================================================================================
# Parsing
# ==================================================================================================
_LABEL_RE = re.compile(r"^\s*([A-Za-z_.$][\w.$]*)\s*:")
_IDENT_RE = re.compile(r"^[A-Za-z_.$][\w.$]*$")
_REG_RE = re.compile(r"^([rfv])(\d+)$")
_MEM_RE = re.compile(r"^\[\s*([A-Za-z]\w*)\s*(?:([+-])\s*([^\]\s]+)\s*)?\]$")
_BANK_SIZE = {"r": op.NUM_INT_REGS, "f": op.NUM_FLOAT_REGS, "v": op.NUM_VEC_REGS}

U64 = (1 << 64) - 1


def _strip_comment(line: str) -> str:
    # ';' inside a quoted .ascii string is data, not a comment
    in_str = False
    escaped = False
    for k, ch in enumerate(line):
        if in_str:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch == ";":
            return line[:k]
    return line


def _parse_int(tok: str) -> int | None:
    try:
        return int(tok, 0)
    except ValueError:
        return None


def _split_operands(text: str, lineno: int, col0: int) -> list[tuple[str, int]]:
    """Split on commas outside brackets; return (token, column) pairs."""
    out: list[tuple[str, int]] = []
    depth = 0
    start = 0
    opened = 0
    for k, ch in enumerate(text + ","):
        if ch == "[":
            if depth == 0:
                opened = k
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == "," and depth == 0:
            piece = text[start:k]
            tok = piece.strip()
            col = col0 + start + (len(piece) - len(piece.lstrip())) + 1
            if not tok:
                raise AsmSyntaxError("empty operand", lineno, col)
            out.append((tok, col))
            start = k + 1
    if depth != 0:
        raise AsmSyntaxError("unbalanced brackets", lineno, col0 + opened + 1)
    return out


class _Assembler:
    def __init__(self, source: str):
        self.source = source
        self.instructions: list[Instruction] = []
        self.labels: dict[str, int] = {}
        self.label_lines: dict[str, tuple[int, int]] = {}
        self.data = bytearray()
        self.data_labels: dict[str, int] = {}
        self.cursor = 0
        self.in_data = False
        # (instruction index, operand position, label name, line, column)
        self.pending_code: list[tuple[int, int, str, int, int]] = []
        self.pending_data: list[tuple[int, int, str, int, int]] = []

    def run(self) -> Program:
        for lineno, raw in enumerate(self.source.splitlines(), 1):
            self._line(raw, lineno)
        if not self.instructions:
            raise AsmSyntaxError("program has no instructions")
        self._resolve()
        entry = self.labels.get("main", 0)
        return Program(tuple(self.instructions), self.labels, entry, bytes(self.data), self.data_labels)

    # ---- statements ----------------------------------------------------------------------------
    def _line(self, raw: str, lineno: int) -> None:
        line = _strip_comment(raw).rstrip()
        pos = 0
        while True:
            m = _LABEL_RE.match(line, pos) if pos == 0 else _LABEL_RE.match(line[pos:])
            if not m:
                break
            name = m.group(1)
            col = pos + m.start(1) + 1
            self._define_label(name, lineno, col)
            pos += m.end()
        rest = line[pos:]
        if not rest.strip():
            return
        col0 = pos + (len(rest) - len(rest.lstrip()))
        body = rest.strip()
        head, _, tail = body.partition(" ")
        head_tab, _, tail_tab = body.partition("\t")
        if len(head_tab) < len(head):
            head, tail = head_tab, tail_tab
        tail_col = col0 + len(head) + 2 + (len(tail) - len(tail.lstrip()))  # 1-based
        tail = tail.strip()
        if head.startswith("."):
            self._directive(head, tail, lineno, col0 + 1, tail_col)
        else:
            if self.in_data:
                raise AsmSyntaxError("instruction inside .data section", lineno, col0 + 1)
            self._instruction(head, tail, lineno, col0 + 1, tail_col)

    def _define_label(self, name: str, lineno: int, col: int) -> None:
        if name in self.labels or name in self.data_labels:
            first = self.label_lines[name]
            raise AsmDuplicateLabel(
                f"label {name!r} already defined at line {first[0]}", lineno, col)
        self.label_lines[name] = (lineno, col)
        if self.in_data:
            self.data_labels[name] = self.cursor
        else:
            self.labels[name] = len(self.instructions)

    def _directive(self, name: str, args: str, lineno: int, col: int, args_col: int) -> None:
        if name == ".text":
            self.in_data = False
            return
        if name == ".data":
            self.in_data = True
            if args:
                addr = _parse_int(args)
                if addr is None or addr < 0:
                    raise AsmSyntaxError(f"bad .data address {args!r}", lineno, args_col)
                self.cursor = addr
            return
        if not self.in_data:
            raise AsmSyntaxError(f"{name} outside .data section", lineno, col)
        if name == ".ascii":
            if not (len(args) >= 2 and args[0] == '"' and args[-1] == '"'):
                raise AsmSyntaxError(".ascii expects a double-quoted string", lineno, args_col)
            try:
                payload = ast.literal_eval("b" + args)
            except (SyntaxError, ValueError):
                raise AsmSyntaxError(f"bad string literal {args}", lineno, args_col) from None
            self._emit(payload)
            return
        if name in (".byte", ".word"):
            if not args:
                raise AsmSyntaxError(f"{name} needs at least one value", lineno, args_col)
            width = 1 if name == ".byte" else 8
            for tok, tcol in _split_operands(args, lineno, args_col - 1):
                value = _parse_int(tok)
                if value is None:
                    if width == 8 and _IDENT_RE.match(tok):
                        self.pending_data.append((self.cursor, width, tok, lineno, tcol))
                        value = 0
                    else:
                        raise AsmSyntaxError(f"bad {name} value {tok!r}", lineno, tcol)
                lo, hi = (-128, 255) if width == 1 else (-(1 << 63), U64)
                if not lo <= value <= hi:
                    raise AsmSyntaxError(f"{name} value {tok} out of range", lineno, tcol)
                self._emit((value & ((1 << (8 * width)) - 1)).to_bytes(width, "little"))
            return
        raise AsmSyntaxError(f"unknown directive {name}", lineno, col)

    def _emit(self, payload: bytes) -> None:
        end = self.cursor + len(payload)
        if end > op.DEFAULT_MEMORY_SIZE:
            raise AsmSyntaxError(f"data segment exceeds {op.DEFAULT_MEMORY_SIZE} bytes")
        if end > len(self.data):
            self.data.extend(bytes(end - len(self.data)))
        self.data[self.cursor:end] = payload
        self.cursor = end

    def _instruction(self, mnemonic: str, args: str, lineno: int, col: int, args_col: int) -> None:
        if mnemonic not in op.SIGNATURES:
            raise AsmUnknownMnemonic(f"{mnemonic!r}", lineno, col)
        sig = op.SIGNATURES[mnemonic]
        tokens = _split_operands(args, lineno, args_col - 1) if args else []
        if len(tokens) != len(sig):
            raise AsmOperandError(
                f"{mnemonic} takes {len(sig)} operand(s), got {len(tokens)}", lineno, col)
        index = len(self.instructions)
        operands = []
        for pos, ((tok, tcol), kind) in enumerate(zip(tokens, sig)):
            operands.append(self._operand(mnemonic, pos, tok, kind, index, lineno, tcol))
        self.instructions.append(Instruction(mnemonic, tuple(operands), lineno))

    def _operand(self, mnemonic, pos, tok, kind, index, lineno, col) -> Operand:
        def mismatch(expected: str) -> AsmOperandError:
            return AsmOperandError(
                f"operand {pos + 1} of {mnemonic} must be {expected}, got {tok!r}", lineno, col)

        reg = _REG_RE.match(tok)
        if kind in (op.R, op.F, op.V):
            if not reg or reg.group(1) != kind:
                raise mismatch({"r": "an integer register", "f": "a float register",
                                "v": "a vector register"}[kind])
            return self._reg(reg, tok, lineno, col)
        if kind == op.R_OR_IMM:
            if reg:
                if reg.group(1) != "r":
                    raise mismatch("an integer register or immediate")
                return self._reg(reg, tok, lineno, col)
            return self._int_imm(tok, index, pos, lineno, col, mismatch)
        if kind == op.IMM:
            if reg:
                raise mismatch("an immediate")
            return self._int_imm(tok, index, pos, lineno, col, mismatch)
        if kind == op.FIMM:
            if reg:
                raise mismatch("a float immediate")
            try:
                return Imm(float(tok))
            except ValueError:
                value = _parse_int(tok)
                if value is None:
                    raise mismatch("a float immediate") from None
                return Imm(float(value))
        if kind == op.MEM:
            m = _MEM_RE.match(tok)
            if not m:
                if tok.startswith("["):
                    raise AsmSyntaxError(f"malformed memory operand {tok!r}", lineno, col)
                raise mismatch("a memory reference [rN+imm]")
            base = _REG_RE.match(m.group(1))
            if not base or base.group(1) != "r":
                raise mismatch("a memory reference based on an integer register")
            self._reg(base, m.group(1), lineno, col)
            offset = 0
            if m.group(2):
                value = _parse_int(m.group(3))
                if value is None:
                    raise AsmSyntaxError(f"bad memory offset {m.group(3)!r}", lineno, col)
                offset = value if m.group(2) == "+" else -value
            return Mem(int(base.group(2)), offset)
        if kind == op.LABEL:
            if reg or not _IDENT_RE.match(tok):
                raise mismatch("a label")
            self.pending_code.append((index, pos, tok, lineno, col))
            return Label(tok)
        raise AssertionError(kind)

    def _reg(self, m: re.Match, tok: str, lineno: int, col: int) -> Reg:
        bank, num = m.group(1), int(m.group(2))
        if num >= _BANK_SIZE[bank]:
            raise AsmOperandError(f"no such register {tok!r}", lineno, col)
        return Reg(bank, num)

    def _int_imm(self, tok, index, pos, lineno, col, mismatch) -> Imm:
        value = _parse_int(tok)
        if value is None:
            if _IDENT_RE.match(tok):
                # data label, patched in _resolve
                self.pending_data.append((-1 - index, pos, tok, lineno, col))
                return Imm(0)
            raise mismatch("an immediate")
        if not -(1 << 63) <= value <= U64:
            raise AsmOperandError(f"immediate {tok} does not fit in 64 bits", lineno, col)
        return Imm(value)

    def _resolve(self) -> None:
        for index, pos, name, lineno, col in self.pending_code:
            if name not in self.labels:
                raise AsmUnresolvedLabel(f"{name!r}", lineno, col)
            if self.labels[name] >= len(self.instructions):
                raise AsmUnresolvedLabel(f"{name!r} does not precede an instruction", lineno, col)
        for slot, width_or_pos, name, lineno, col in self.pending_data:
            if name not in self.data_labels:
                raise AsmUnresolvedLabel(f"{name!r} is not a data label", lineno, col)
            addr = self.data_labels[name]
            if slot < 0:
                index = -1 - slot
                instr = self.instructions[index]
                ops = list(instr.operands)
                ops[width_or_pos] = Imm(addr)
                self.instructions[index] = instr._replace(operands=tuple(ops))
            else:
                self.data[slot:slot + 8] = addr.to_bytes(8, "little")
        for name, index in self.labels.items():
            if index >= len(self.instructions):
                line, col = self.label_lines[name]
                raise AsmUnresolvedLabel(f"{name!r} does not precede an instruction", line, col)


def assemble(source: str) -> Program:
    """Assemble source text into a :class:`Program` with all labels resolved."""
    return _Assembler(source).run()


# ==================================================================================================
# Kernel encoding
# ==================================================================================================
def _signed64(value: int) -> int:
    value &= U64
    return value - (1 << 64) if value >> 63 else value


def _float_bits(value: float) -> int:
    return struct.unpack("<q", struct.pack("<d", value))[0]


def encode(program: Program) -> array:
    code = array("q")
    labels = program.labels
    for instr in program.instructions:
        opcode = op.OPCODES[instr.mnemonic]
        fields = [0, 0, 0]
        for k, operand in enumerate(instr.operands):
            if isinstance(operand, Reg):
                fields[k] = operand.index
            elif isinstance(operand, Imm):
                if instr.mnemonic == "fli":
                    fields[k] = _float_bits(operand.value)
                else:
                    fields[k] = _signed64(operand.value)
                    if k == 2:
                        opcode += op.IMM_FORM
            elif isinstance(operand, Label):
                fields[k] = labels[operand.name]
            elif isinstance(operand, Mem):
                fields[k] = operand.base
                fields[k + 1] = operand.offset
        code.extend((opcode, *fields))
    return code
