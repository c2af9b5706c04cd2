"""Instruction classes and the mnemonic -> class mapping.

Every executed instruction falls into exactly one of thirteen classes: load
and store for each of the integer, float and vector data types, light and
heavy ALU for each data type, and a single control-flow class. Light ALU ops
are the low-latency ones (moves, add/sub, bitwise, shifts); heavy ALU ops are
multiply, divide and remainder.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping


class InstructionClass(enum.IntEnum):
    LoadInt = 0
    LoadFloat = 1
    LoadVector = 2
    StoreInt = 3
    StoreFloat = 4
    StoreVector = 5
    LightAluInt = 6
    LightAluFloat = 7
    LightAluVector = 8
    HeavyAluInt = 9
    HeavyAluFloat = 10
    HeavyAluVector = 11
    ControlFlow = 12

    @property
    def column(self) -> str:
        return COLUMNS[self]

    @property
    def title(self) -> str:
        return TITLES[self]


NUM_CLASSES = len(InstructionClass)

# CSV column names, in class order
COLUMNS = (
    "load_int", "load_float", "load_vec",
    "store_int", "store_float", "store_vec",
    "alu_light_int", "alu_light_float", "alu_light_vec",
    "alu_heavy_int", "alu_heavy_float", "alu_heavy_vec",
    "control_flow",
)

# human-readable "type / data type" names used in reports
TITLES = (
    "Load / Integer", "Load / Floating-point", "Load / Vector",
    "Store / Integer", "Store / Floating-point", "Store / Vector",
    "Light ALU / Integer", "Light ALU / Floating-point", "Light ALU / Vector",
    "Heavy ALU / Integer", "Heavy ALU / Floating-point", "Heavy ALU / Vector",
    "Control-Flow",
)

C = InstructionClass

_BUILTIN_GROUPS: dict[InstructionClass, tuple[str, ...]] = {
    C.LightAluInt: ("li", "mov", "add", "sub", "and", "or", "xor", "not", "shl", "shr", "slt"),
    C.HeavyAluInt: ("mul", "div", "rem"),
    C.LightAluFloat: ("fli", "fmov", "fadd", "fsub", "fneg"),
    C.HeavyAluFloat: ("fmul", "fdiv"),
    C.LightAluVector: ("vli", "vmov", "vadd", "vsub", "vand", "vor", "vxor"),
    C.HeavyAluVector: ("vmul",),
    C.LoadInt: ("ld",),
    C.StoreInt: ("st",),
    C.LoadFloat: ("fld",),
    C.StoreFloat: ("fst",),
    C.LoadVector: ("vld",),
    C.StoreVector: ("vst",),
    C.ControlFlow: ("jmp", "beq", "bne", "blt", "call", "ret", "halt"),
}

BUILTIN_ARCH = "ctmix-isa/1"


class UnknownMnemonicError(KeyError):
    """A mnemonic has no class in the active map."""

    def __init__(self, mnemonic: str, arch: str = ""):
        self.mnemonic = mnemonic
        self.arch = arch
        super().__init__(mnemonic)

    def __str__(self) -> str:
        where = f" for architecture {self.arch!r}" if self.arch else ""
        return f"unknown mnemonic {self.mnemonic!r}{where}"


class MnemonicMapError(ValueError):
    pass


@dataclass(frozen=True)
class MnemonicMap:
    table: Mapping[str, InstructionClass]
    arch: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "table", MappingProxyType(dict(self.table)))

    def classify(self, mnemonic: str) -> InstructionClass:
        try:
            return self.table[mnemonic]
        except KeyError:
            raise UnknownMnemonicError(mnemonic, self.arch) from None

    def __contains__(self, mnemonic: object) -> bool:
        return mnemonic in self.table

    def __len__(self) -> int:
        return len(self.table)

    def members(self, cls: InstructionClass) -> list[str]:
        return sorted(m for m, c in self.table.items() if c is cls)


def _build_builtin() -> MnemonicMap:
    table: dict[str, InstructionClass] = {}
    for cls, names in _BUILTIN_GROUPS.items():
        for name in names:
            assert name not in table, name
            table[name] = cls
    return MnemonicMap(table, BUILTIN_ARCH)


_BUILTIN = _build_builtin()


def builtin_map() -> MnemonicMap:
    """The total map over the VM's mnemonics."""
    return _BUILTIN


def classify(instr, mapping: MnemonicMap | None = None) -> InstructionClass:
    """Class of an instruction (or bare mnemonic).

    Only the mnemonic is consulted; operand values and widths never matter.
    """
    mnemonic = instr if isinstance(instr, str) else instr.mnemonic
    return (mapping or _BUILTIN).classify(mnemonic)


def class_from_name(name: str) -> InstructionClass:
    key = name.strip().lower()
    for cls in InstructionClass:
        if cls.name.lower() == key:
            return cls
    raise MnemonicMapError(f"unknown instruction class {name!r}")


def parse_mnemonic_map(lines: Iterable[str] | str, arch: str = "") -> MnemonicMap:
    """Parse ``mnemonic<TAB>class_name`` lines; ``#`` starts a comment.

    A comment of the form ``# arch: <tag>`` sets the architecture tag.
    """
    if isinstance(lines, str):
        lines = lines.splitlines()
    table: dict[str, InstructionClass] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        stripped = line.strip()
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if body.lower().startswith("arch:"):
                arch = body[5:].strip()
            continue
        if "#" in line:
            line = line[: line.index("#")]
        if not line.strip():
            continue
        parts = line.strip().split("\t")
        parts = [p.strip() for p in parts if p.strip()]
        if len(parts) != 2:
            raise MnemonicMapError(f"line {lineno}: expected 'mnemonic<TAB>class', got {raw.strip()!r}")
        mnemonic, cls_name = parts
        try:
            cls = class_from_name(cls_name)
        except MnemonicMapError as exc:
            raise MnemonicMapError(f"line {lineno}: {exc}") from None
        if mnemonic in table and table[mnemonic] is not cls:
            raise MnemonicMapError(
                f"line {lineno}: mnemonic {mnemonic!r} mapped to both "
                f"{table[mnemonic].name} and {cls.name}"
            )
        table[mnemonic] = cls
    return MnemonicMap(table, arch)


def load_mnemonic_map(path: str | Path) -> MnemonicMap:
    with open(path, encoding="utf-8") as fh:
        return parse_mnemonic_map(fh.read())


def format_mnemonic_map(mapping: MnemonicMap) -> str:
    out = []
    if mapping.arch:
        out.append(f"# arch: {mapping.arch}")
    for mnemonic, cls in mapping.table.items():
        out.append(f"{mnemonic}\t{cls.name}")
    return "\n".join(out) + "\n"
