"""End-to-end verification: sample secrets, run the target, compare mixes."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .asm import Program
from .classify import BUILTIN_ARCH, COLUMNS, TITLES
from .fuzz import FuzzConfig, next_secret
from .mix import MixDiff, MixVector, Verdict, build_mix, pairwise_check
from .vm import (
    DEFAULT_BUDGET, ExecutionError, InputBinding, MachineState, TargetSpec, inject_secret,
    run_state,
)

QUICK_ROUNDS = 5
CONFIDENCE_ROUNDS = 100


@dataclass(frozen=True)
class VerifyJob:
    program: Program
    target: TargetSpec
    binding: InputBinding
    fuzz: FuzzConfig | None = None
    budget: int = DEFAULT_BUDGET

    def check(self) -> None:
        self.program.resolve(self.target.function_label)
        self.binding.validate()
        if self.fuzz is not None and self.fuzz.secret_length != self.binding.secret_manifest.length:
            raise ValueError(
                f"fuzz secret length {self.fuzz.secret_length} != manifest length "
                f"{self.binding.secret_manifest.length}")
        if self.budget <= 0:
            raise ValueError("budget must be positive")


@dataclass(frozen=True)
class RoundResult:
    index: int
    secret: bytes
    mix: MixVector | None = None
    error: str | None = None

    @property
    def executed(self) -> int:
        return self.mix.total if self.mix is not None else 0

    def to_dict(self) -> dict:
        out = {"round": self.index, "secret": self.secret.hex()}
        if self.mix is not None:
            out["executed"] = self.executed
            out["mix"] = self.mix.as_dict()
        else:
            out["error"] = self.error
        return out


@dataclass(frozen=True)
class Violation:
    pair: tuple[int, int]
    diff: MixDiff

    def to_dict(self) -> dict:
        return {"rounds": list(self.pair), "l1": self.diff.l1, "per_class": self.diff.as_dict()}


@dataclass(frozen=True)
class VerificationReport:
    verdict: Verdict
    rounds: tuple[RoundResult, ...]
    violation: Violation | None
    target: str
    requested_rounds: int
    seed: int | None = None
    isa: str = BUILTIN_ARCH
    trace_callees: bool = True
    exhaustive: bool = False

    def vectors(self) -> list[tuple[int, MixVector]]:
        return [(r.index, r.mix) for r in self.rounds if r.mix is not None]

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "config": {
                "target": self.target,
                "trace_callees": self.trace_callees,
                "seed": self.seed,
                "rounds": self.requested_rounds,
                "completed_rounds": len(self.rounds),
                "exhaustive": self.exhaustive,
                "isa": self.isa,
            },
            "violation": self.violation.to_dict() if self.violation else None,
            "rounds": [r.to_dict() for r in self.rounds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        return render_text(self)


def _run_round(job: VerifyJob, base: MachineState, index: int, secret: bytes) -> RoundResult:
    state = inject_secret(base, job.binding.secret_manifest, secret)
    try:
        result = run_state(job.program, state, job.target, job.budget)
    except ExecutionError as exc:
        return RoundResult(index, secret, error=str(exc))
    return RoundResult(index, secret, build_mix(result.trace))


def _verify(job: VerifyJob, secrets: Sequence[bytes], seed: int | None,
            exhaustive: bool) -> VerificationReport:
    job.check()
    manifest = job.binding.secret_manifest
    for s in secrets:
        if len(s) != manifest.length:
            raise ValueError(f"secret {bytes(s).hex()} is {len(s)} bytes, "
                             f"manifest expects {manifest.length}")
    base = MachineState.initial(job.program, job.binding)
    results: list[RoundResult] = []
    reference: RoundResult | None = None
    for index, secret in enumerate(secrets):
        rr = _run_round(job, base, index, bytes(secret))
        results.append(rr)
        if rr.mix is None:
            continue
        if reference is None:
            reference = rr
        elif rr.mix != reference.mix and not exhaustive:
            break

    clean = [(r.index, r.mix) for r in results if r.mix is not None]
    violation = None
    if clean:
        check = pairwise_check(clean)
        if check.verdict is Verdict.NON_CONSTANT_TIME:
            violation = Violation(check.pair, check.diff)
    if violation is not None:
        verdict = Verdict.NON_CONSTANT_TIME
    elif len(clean) < len(results):
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.CONSTANT_TIME_OBSERVED
    return VerificationReport(verdict, tuple(results), violation, job.target.function_label,
                              len(secrets), seed, trace_callees=job.target.trace_callees,
                              exhaustive=exhaustive)


def verify(job: VerifyJob, exhaustive: bool = False) -> VerificationReport:
    """Fuzz the secret for ``job.fuzz.rounds`` rounds and check the mixes agree.

    Stops at the first round whose mix differs from the first clean round
    unless ``exhaustive``.
    """
    if job.fuzz is None:
        raise ValueError("verify needs a FuzzConfig; use verify_directed for explicit secrets")
    cfg = job.fuzz
    return _verify(job, [next_secret(cfg, r) for r in range(cfg.rounds)], cfg.seed, exhaustive)


def verify_directed(job: VerifyJob, secrets: Sequence[bytes],
                    exhaustive: bool = False) -> VerificationReport:
    """Like :func:`verify` but over an explicit list of secrets."""
    if not secrets:
        raise ValueError("need at least one secret")
    return _verify(job, list(secrets), None, exhaustive)


# ==================================================================================================
# Text rendering
# ==================================================================================================
def render_text(report: VerificationReport) -> str:
    lines = [
        f"verdict: {report.verdict.value}",
        f"target: {report.target}",
        f"trace_callees: {str(report.trace_callees).lower()}",
        f"seed: {'directed' if report.seed is None else hex(report.seed)}",
        f"rounds: {report.requested_rounds}",
        f"completed_rounds: {len(report.rounds)}",
        f"isa: {report.isa}",
    ]
    if report.violation:
        i, j = report.violation.pair
        lines.append(f"violation: rounds {i} and {j}, L1 distance {report.violation.diff.l1}")
    else:
        lines.append("violation: none")
    lines.append("")
    head = ["round", "secret", "total", *COLUMNS]
    rows = []
    for r in report.rounds:
        if r.mix is None:
            rows.append([str(r.index), r.secret.hex(), "-", f"error: {r.error}"])
        else:
            rows.append([str(r.index), r.secret.hex(), str(r.mix.total),
                         *(str(c) for c in r.mix.counts)])
    full = [row for row in rows if len(row) == len(head)]
    widths = [max([len(h), *(len(row[k]) for row in full)]) for k, h in enumerate(head)]
    lines.append("  ".join(h.rjust(w) for h, w in zip(head, widths)))
    for row in rows:
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    if report.violation:
        i, j = report.violation.pair
        lines.append("")
        lines.append(f"per-class difference (round {i} minus round {j}):")
        for k, d in enumerate(report.violation.diff.per_class):
            if d:
                lines.append(f"  {TITLES[k]:<28} {d:+d}")
    return "\n".join(lines) + "\n"


def parse_text_report(text: str) -> dict:
    """Recover verdict, vectors and violating pair from :func:`render_text` output."""
    lines = text.splitlines()
    out: dict = {"rounds": {}}
    in_table = False
    for line in lines:
        if not in_table:
            if line.startswith("verdict: "):
                out["verdict"] = line.split(": ", 1)[1]
            elif line.startswith("violation: "):
                rest = line.split(": ", 1)[1]
                if rest == "none":
                    out["violation"] = None
                else:
                    words = rest.replace(",", "").split()
                    out["violation"] = [int(words[1]), int(words[3])]
            elif line.lstrip().startswith("round "):
                in_table = True
            continue
        if not line.strip():
            break
        cells = line.split()
        if cells[2] == "-":
            out["rounds"][int(cells[0])] = None
        else:
            out["rounds"][int(cells[0])] = [int(c) for c in cells[3:]]
    return out
