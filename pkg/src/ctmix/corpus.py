"""Bundled benchmark programs with their secret manifests and expected verdicts."""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

from .asm import Program, assemble
from .fuzz import FuzzConfig
from .harness import VerifyJob
from .mix import Verdict
from .vm import DEFAULT_BUDGET, InputBinding, SecretManifest, TargetSpec

DEFAULT_SEED = 0xDA1C

_REG_WRITE = re.compile(r"^reg:r(\d+)=(\S+)$")


class CorpusError(ValueError):
    pass


def parse_secret_spec(text: str) -> SecretManifest:
    """``mem:ADDR:LEN[:WIDTH]`` or ``reg:rA,rB[:WIDTH]``."""
    parts = text.strip().split(":")
    try:
        if parts[0] == "mem" and len(parts) in (3, 4):
            width = int(parts[3], 0) if len(parts) == 4 else 1
            return SecretManifest.memory(int(parts[1], 0), int(parts[2], 0), width)
        if parts[0] == "reg" and len(parts) in (2, 3):
            regs = [int(r.strip().lstrip("r")) for r in parts[1].split(",")]
            width = int(parts[2], 0) if len(parts) == 3 else 8
            return SecretManifest.in_registers(regs, width)
    except ValueError as exc:
        raise CorpusError(f"bad secret spec {text!r}: {exc}") from None
    raise CorpusError(f"bad secret spec {text!r}; expected mem:ADDR:LEN[:WIDTH] or reg:rA,rB[:WIDTH]")


def parse_public_spec(items) -> tuple[list[tuple[int, bytes]], list[tuple[int, int]]]:
    """Split ``mem:ADDR:HEX`` / ``reg:rN=VALUE`` items into memory and register writes."""
    if isinstance(items, str):
        items = items.split()
    mem, regs = [], []
    for item in items:
        m = _REG_WRITE.match(item)
        try:
            if m:
                regs.append((int(m.group(1)), int(m.group(2), 0)))
                continue
            kind, addr, payload = item.split(":")
            if kind != "mem":
                raise ValueError(kind)
            mem.append((int(addr, 0), bytes.fromhex(payload)))
        except ValueError:
            raise CorpusError(
                f"bad public input {item!r}; expected mem:ADDR:HEX or reg:rN=VALUE") from None
    return mem, regs


@dataclass(frozen=True)
class Benchmark:
    name: str
    source_path: Path
    target: str
    manifest: SecretManifest
    base_secret: bytes
    expected: Verdict
    provenance: str = ""
    public_memory: tuple[tuple[int, bytes], ...] = ()
    public_registers: tuple[tuple[int, int], ...] = ()

    @property
    def source(self) -> str:
        return self.source_path.read_text(encoding="utf-8")

    @cached_property
    def program(self) -> Program:
        return assemble(self.source)

    @property
    def binding(self) -> InputBinding:
        return InputBinding(self.manifest, self.public_memory, self.public_registers)

    @property
    def target_spec(self) -> TargetSpec:
        return TargetSpec(self.target)

    @property
    def constant_time(self) -> bool:
        return self.expected is Verdict.CONSTANT_TIME_OBSERVED

    def job(self, rounds: int = 5, seed: int = DEFAULT_SEED,
            budget: int = DEFAULT_BUDGET, mutations: tuple[int, int] = (1, 16)) -> VerifyJob:
        fuzz = FuzzConfig(seed, rounds, self.base_secret, mutations)
        return VerifyJob(self.program, self.target_spec, self.binding, fuzz, budget)


def corpus_dir() -> Path:
    return Path(str(resources.files("ctmix") / "programs"))


def load_corpus(directory: str | Path | None = None) -> list[Benchmark]:
    """Read ``manifest.ini`` from the corpus directory; every program is assembled eagerly."""
    directory = Path(directory) if directory is not None else corpus_dir()
    manifest_path = directory / "manifest.ini"
    if not manifest_path.is_file():
        raise CorpusError(f"missing corpus manifest {manifest_path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.read(manifest_path, encoding="utf-8")
    out = []
    for name in parser.sections():
        sec = parser[name]
        try:
            source = directory / sec["source"]
            target = sec["target"].strip()
            manifest = parse_secret_spec(sec["secret"])
            base = bytes.fromhex(sec["base_secret"])
            expected = Verdict(sec["expected"].strip())
        except (KeyError, ValueError) as exc:
            raise CorpusError(f"[{name}]: {exc}") from None
        if expected is Verdict.INCONCLUSIVE:
            raise CorpusError(f"[{name}]: expected verdict cannot be INCONCLUSIVE")
        if len(base) != manifest.length:
            raise CorpusError(f"[{name}]: base secret is {len(base)} bytes, manifest says {manifest.length}")
        if not source.is_file():
            raise CorpusError(f"[{name}]: missing source {source}")
        mem, regs = parse_public_spec(sec.get("public", ""))
        bench = Benchmark(name, source, target, manifest, base, expected,
                          sec.get("provenance", "").strip(), tuple(mem), tuple(regs))
        # assemble now so ill-formed files fail at load time
        if target not in bench.program.labels:
            raise CorpusError(f"[{name}]: target label {target!r} not in {source.name}")
        out.append(bench)
    return out


def get_benchmark(name: str, directory: str | Path | None = None) -> Benchmark:
    for bench in load_corpus(directory):
        if bench.name == name:
            return bench
    raise CorpusError(f"no benchmark named {name!r}")
