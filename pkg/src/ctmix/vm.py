"""Machine state, input binding and traced execution of a target function."""
from __future__ import annotations

import enum
from array import array
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from . import _backend
from . import opcodes as op
from .asm import Program
from .classify import InstructionClass, MnemonicMap, builtin_map

DEFAULT_BUDGET = op.DEFAULT_BUDGET
DEFAULT_MEMORY_SIZE = op.DEFAULT_MEMORY_SIZE
M64 = (1 << 64) - 1


class BindingError(ValueError):
    """Inconsistent secret manifest or public input binding."""


# ==================================================================================================
# Inputs
# ==================================================================================================
@dataclass(frozen=True)
class SecretManifest:
    """Where the secret lives: a memory region or a list of integer registers.

    For registers, each register receives ``width`` bytes of the secret,
    little-endian, zero-extended to 64 bits.
    """

    address: int | None = None
    length: int = 0
    registers: tuple[int, ...] = ()
    width: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "registers", tuple(self.registers))
        if (self.address is None) == (not self.registers):
            raise BindingError("secret manifest needs exactly one of a memory region or registers")
        if self.width <= 0:
            raise BindingError("secret element width must be positive")
        if self.registers:
            if self.width > 8:
                raise BindingError("register secrets are at most 8 bytes per register")
            if len(set(self.registers)) != len(self.registers):
                raise BindingError("duplicate secret register")
            for r in self.registers:
                if not 0 <= r < op.NUM_INT_REGS:
                    raise BindingError(f"no integer register r{r}")
            object.__setattr__(self, "length", len(self.registers) * self.width)
        else:
            if self.length <= 0:
                raise BindingError("secret length must be positive")
            if self.address < 0:
                raise BindingError("secret address must be non-negative")
            if self.length % self.width:
                raise BindingError("secret length must be a multiple of the element width")

    @classmethod
    def memory(cls, address: int, length: int, width: int = 1) -> SecretManifest:
        return cls(address=address, length=length, width=width)

    @classmethod
    def in_registers(cls, registers: Iterable[int], width: int = 8) -> SecretManifest:
        return cls(registers=tuple(registers), width=width)

    @property
    def in_memory(self) -> bool:
        return self.address is not None

    def check_bounds(self, memory_size: int) -> None:
        if self.in_memory and self.address + self.length > memory_size:
            raise BindingError(
                f"secret region [{self.address}, {self.address + self.length}) "
                f"outside memory of {memory_size} bytes")

    def describe(self) -> str:
        if self.in_memory:
            return f"mem[{self.address:#x}:+{self.length}]"
        return ",".join(f"r{r}" for r in self.registers) + f" ({self.width} bytes each)"


@dataclass(frozen=True)
class InputBinding:
    secret_manifest: SecretManifest
    memory_writes: tuple[tuple[int, bytes], ...] = ()
    register_writes: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "memory_writes",
                           tuple((int(a), bytes(b)) for a, b in self.memory_writes))
        object.__setattr__(self, "register_writes",
                           tuple((int(r), int(v)) for r, v in self.register_writes))

    def validate(self, memory_size: int = DEFAULT_MEMORY_SIZE) -> None:
        sm = self.secret_manifest
        sm.check_bounds(memory_size)
        for addr, payload in self.memory_writes:
            if addr < 0 or addr + len(payload) > memory_size:
                raise BindingError(f"public write at {addr:#x} outside memory")
            if sm.in_memory and addr < sm.address + sm.length and sm.address < addr + len(payload):
                raise BindingError(
                    f"public write [{addr:#x}, {addr + len(payload):#x}) overlaps the secret region")
        for reg, _ in self.register_writes:
            if not 0 <= reg < op.NUM_INT_REGS:
                raise BindingError(f"no integer register r{reg}")
            if reg in sm.registers:
                raise BindingError(f"public write to r{reg} overlaps the secret registers")


@dataclass(frozen=True)
class TargetSpec:
    function_label: str
    trace_callees: bool = True


# ==================================================================================================
# State
# ==================================================================================================
@dataclass
class MachineState:
    int_regs: array = field(default_factory=lambda: array("Q", bytes(8 * op.NUM_INT_REGS)))
    float_regs: array = field(default_factory=lambda: array("d", bytes(8 * op.NUM_FLOAT_REGS)))
    vec_regs: array = field(
        default_factory=lambda: array("Q", bytes(8 * op.NUM_VEC_REGS * op.VEC_LANES)))
    memory: bytearray = field(default_factory=lambda: bytearray(DEFAULT_MEMORY_SIZE))
    pc: int = 0
    call_stack: list = field(default_factory=list)

    @classmethod
    def initial(cls, program: Program, binding: InputBinding | None = None,
                memory_size: int = DEFAULT_MEMORY_SIZE) -> MachineState:
        if len(program.data_segment) > memory_size:
            raise BindingError("data segment does not fit in memory")
        state = cls(memory=bytearray(memory_size), pc=program.entry)
        state.memory[:len(program.data_segment)] = program.data_segment
        if binding is not None:
            binding.validate(memory_size)
            for addr, payload in binding.memory_writes:
                state.memory[addr:addr + len(payload)] = payload
            for reg, value in binding.register_writes:
                state.int_regs[reg] = value & M64
        return state

    def copy(self) -> MachineState:
        return MachineState(array("Q", self.int_regs), array("d", self.float_regs),
                            array("Q", self.vec_regs), bytearray(self.memory), self.pc,
                            list(self.call_stack))

    def vec(self, index: int) -> tuple[int, ...]:
        return tuple(self.vec_regs[index * op.VEC_LANES:(index + 1) * op.VEC_LANES])

    def signed(self, index: int) -> int:
        v = self.int_regs[index]
        return v - (1 << 64) if v >> 63 else v

    def snapshot(self) -> bytes:
        """Byte image of the whole state, for exact comparisons."""
        stack = array("q", self.call_stack).tobytes()
        return b"".join((self.int_regs.tobytes(), self.float_regs.tobytes(),
                         self.vec_regs.tobytes(), bytes(self.memory),
                         self.pc.to_bytes(8, "little", signed=True), stack))


def inject_secret(state: MachineState, manifest: SecretManifest, secret: bytes) -> MachineState:
    """Return a copy of ``state`` with exactly the manifest region overwritten."""
    secret = bytes(secret)
    if len(secret) != manifest.length:
        raise BindingError(
            f"secret is {len(secret)} bytes, manifest expects {manifest.length}")
    out = state.copy()
    if manifest.in_memory:
        manifest.check_bounds(len(out.memory))
        out.memory[manifest.address:manifest.address + manifest.length] = secret
    else:
        w = manifest.width
        for k, reg in enumerate(manifest.registers):
            out.int_regs[reg] = int.from_bytes(secret[k * w:(k + 1) * w], "little")
    return out


# ==================================================================================================
# Traces
# ==================================================================================================
class TraceEvent(NamedTuple):
    index: int
    mnemonic: str
    cls: InstructionClass


class Trace(Sequence):
    """Ordered events of one traced execution.

    Stored compactly as positions into per-instruction tables, so a VM trace
    costs one integer per event until events are materialised.
    """

    __slots__ = ("_positions", "_indices", "_mnemonics", "_classes")

    def __init__(self, positions: Sequence[int], indices: Sequence[int],
                 mnemonics: Sequence[str], classes: Sequence[InstructionClass]):
        self._positions = positions
        self._indices = indices
        self._mnemonics = mnemonics
        self._classes = classes

    @classmethod
    def from_program(cls, program: Program, executed: Sequence[int]) -> Trace:
        return cls(executed, range(len(program)), program.mnemonic_table, program.class_table)

    @classmethod
    def from_events(cls, events: Iterable[TraceEvent]) -> Trace:
        events = list(events)
        return cls(range(len(events)), [e.index for e in events],
                   [e.mnemonic for e in events], [InstructionClass(e.cls) for e in events])

    def __len__(self) -> int:
        return len(self._positions)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return Trace.from_events(self[j] for j in range(*k.indices(len(self))))
        p = self._positions[k]
        return TraceEvent(self._indices[p], self._mnemonics[p], self._classes[p])

    def __iter__(self) -> Iterator[TraceEvent]:
        idx, mn, cl = self._indices, self._mnemonics, self._classes
        for p in self._positions:
            yield TraceEvent(idx[p], mn[p], cl[p])

    def classes(self) -> Iterator[InstructionClass]:
        cl = self._classes
        return (cl[p] for p in self._positions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return len(self) == len(other) and all(a == b for a, b in zip(self, other))

    def __add__(self, other: Trace) -> Trace:
        return Trace.from_events([*self, *other])

    def __repr__(self) -> str:
        return f"<Trace of {len(self)} events>"


# ==================================================================================================
# Execution
# ==================================================================================================
class ExitStatus(str, enum.Enum):
    HALTED = "halted"
    RETURNED = "returned"


class ExecutionError(RuntimeError):
    reason = "execution error"

    def __init__(self, message: str, pc: int, steps: int, trace: Trace | None = None):
        self.pc = pc
        self.steps = steps
        self.trace = trace
        super().__init__(f"{self.reason}: {message} (pc={pc}, after {steps} instructions)")


class BudgetExhausted(ExecutionError):
    reason = "budget exhausted"


class MemoryFault(ExecutionError):
    reason = "memory fault"


class CallStackOverflow(ExecutionError):
    reason = "call stack overflow"


class DivisionByZero(ExecutionError):
    reason = "division by zero"


class PcFault(ExecutionError):
    reason = "pc out of range"


class Execution(NamedTuple):
    trace: Trace
    status: ExitStatus
    state: MachineState
    steps: int


def run_state(program: Program, state: MachineState, target: TargetSpec,
              budget: int = DEFAULT_BUDGET, kernel=None) -> Execution:
    """Run ``program`` from ``state`` (mutated in place), tracing ``target``."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    target_index = program.resolve(target.function_label)
    kernel = kernel or _backend.kernel
    status, pc, steps, executed, fault = kernel.run(
        program.code, state.int_regs, state.float_regs, state.vec_regs, state.memory,
        state.pc, state.call_stack, target_index, target.trace_callees, budget)
    state.pc = pc
    trace = Trace.from_program(program, executed)
    if status == op.ST_HALTED:
        return Execution(trace, ExitStatus.HALTED, state, steps)
    if status == op.ST_RETURNED:
        return Execution(trace, ExitStatus.RETURNED, state, steps)
    if status == op.ST_BUDGET:
        raise BudgetExhausted(f"no halt within {budget} instructions", pc, steps, trace)
    if status == op.ST_MEMFAULT:
        raise MemoryFault(f"access at {fault:#x} outside {len(state.memory)} bytes",
                          pc, steps, trace)
    if status == op.ST_STACK_OVERFLOW:
        raise CallStackOverflow(f"depth exceeds {op.MAX_CALL_DEPTH}", pc, steps, trace)
    if status == op.ST_DIV_ZERO:
        raise DivisionByZero(str(program.instructions[pc]), pc, steps, trace)
    raise PcFault(f"pc {pc} outside {len(program)} instructions", pc, steps, trace)


def execute(program: Program, binding: InputBinding, target: TargetSpec,
            budget: int = DEFAULT_BUDGET, *, secret: bytes | None = None,
            memory_size: int = DEFAULT_MEMORY_SIZE, kernel=None) -> Execution:
    """Execute from the entry point with public inputs and an optional secret applied."""
    state = MachineState.initial(program, binding, memory_size)
    if secret is not None:
        state = inject_secret(state, binding.secret_manifest, secret)
    return run_state(program, state, target, budget, kernel)


def trace_with_map(trace: Trace, mapping: MnemonicMap) -> Trace:
    """Reclassify a trace's events under another mnemonic map."""
    return Trace.from_events(TraceEvent(e.index, e.mnemonic, mapping.classify(e.mnemonic))
                             for e in trace)


__all__ = [
    "BindingError", "BudgetExhausted", "CallStackOverflow", "DEFAULT_BUDGET",
    "DEFAULT_MEMORY_SIZE", "DivisionByZero", "Execution", "ExecutionError", "ExitStatus",
    "InputBinding", "MachineState", "MemoryFault", "PcFault", "SecretManifest", "TargetSpec",
    "Trace", "TraceEvent", "builtin_map", "execute", "inject_secret", "run_state",
    "trace_with_map",
]
