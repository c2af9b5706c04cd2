"""Command-line front end.

Exit codes: 0 constant-time observed (or plain success), 1 non-constant-time,
2 inconclusive, 64 usage error, 65 bad input data, 66 unreadable input file.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from ._backend import BACKEND
from .asm import AssemblyError, assemble
from .classify import COLUMNS, MnemonicMapError, TITLES, builtin_map, load_mnemonic_map
from .corpus import DEFAULT_SEED, CorpusError, load_corpus, parse_public_spec, parse_secret_spec
from .fuzz import FuzzConfig
from .harness import CONFIDENCE_ROUNDS, VerificationReport, VerifyJob, verify, verify_directed
from .ingest import IngestError, format_trace, parse_mix_csv_rounds, parse_trace
from .mix import Verdict, build_mix, pairwise_check
from .vm import (
    DEFAULT_BUDGET, BindingError, ExecutionError, InputBinding, MachineState, SecretManifest,
    TargetSpec, inject_secret, run_state,
)

EXIT_OK = 0
EXIT_NON_CONSTANT_TIME = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
EXIT_DATAERR = 65
EXIT_NOINPUT = 66

VERDICT_EXIT = {
    Verdict.CONSTANT_TIME_OBSERVED: EXIT_OK,
    Verdict.NON_CONSTANT_TIME: EXIT_NON_CONSTANT_TIME,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class NoInput(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags, which would read as INCONCLUSIVE
    def error(self, message):
        raise UsageError(message)


def _int(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None


def _hex(text: str) -> bytes:
    try:
        return bytes.fromhex(text.removeprefix("0x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid hex string {text!r}") from None


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise NoInput(f"cannot read {path}: {exc.strerror if isinstance(exc, OSError) else exc}")


# ==================================================================================================
# Argument parsing
# ==================================================================================================
def _add_program_args(p: argparse.ArgumentParser, benchmark: bool = False) -> None:
    if benchmark:
        p.add_argument("--benchmark", metavar="NAME",
                       help="take program, target, secret layout, public inputs and base "
                            "secret from a bundled benchmark; explicit flags override")
    p.add_argument("--program", required=not benchmark, help="assembly source file")
    p.add_argument("--target", required=not benchmark, help="label of the function to trace")
    p.add_argument("--no-callees", action="store_true",
                   help="trace only the target's own frame, not functions it calls")
    p.add_argument("--budget", type=_int, default=DEFAULT_BUDGET,
                   help="maximum executed instructions per run (default %(default)s)")
    p.add_argument("--public", action="append", default=[], metavar="SPEC",
                   help="public input: mem:ADDR:HEX or reg:rN=VALUE (repeatable)")


def _add_secret_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--secret-addr", type=_int, help="address of the secret region")
    p.add_argument("--secret-len", type=_int, help="length of the secret region in bytes")
    p.add_argument("--secret-width", type=_int,
                   help="bytes per secret element (default 1 in memory, 8 per register)")
    p.add_argument("--secret-regs", help="secret held in registers instead, e.g. r1,r2")
    p.set_defaults(secret_required=required)


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctmix", description="Check that a function's instruction mix "
                     "does not depend on its secret input.")
    parser.add_argument("--version", action="version",
                        version=f"ctmix {__version__} ({BACKEND} kernel)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="fuzz the secret and compare instruction mixes")
    _add_program_args(p, benchmark=True)
    _add_secret_args(p)
    p.add_argument("--seed", type=_int, default=DEFAULT_SEED)
    p.add_argument("--rounds", type=_int, default=CONFIDENCE_ROUNDS)
    p.add_argument("--base-secret", type=_hex,
                   help="round-0 secret as hex (default: the region's initial contents)")
    p.add_argument("--exhaustive", action="store_true",
                   help="run every round instead of stopping at the first violation")
    _add_format(p)

    p = sub.add_parser("verify-directed", help="compare instruction mixes over given secrets")
    _add_program_args(p, benchmark=True)
    _add_secret_args(p)
    p.add_argument("--secrets", required=True, help="comma-separated hex secrets")
    p.add_argument("--exhaustive", action="store_true")
    _add_format(p)

    p = sub.add_parser("run", help="execute once and print the target's instruction mix")
    _add_program_args(p)
    _add_secret_args(p, required=False)
    p.add_argument("--secret", type=_hex, help="secret bytes as hex")
    p.add_argument("--dump-trace", metavar="FILE", help="write the trace in text trace format")
    _add_format(p)

    p = sub.add_parser("assemble", help="assemble a program and print its listing")
    p.add_argument("--program", required=True)

    p = sub.add_parser("ingest-trace", help="classify a foreign trace and print its mix")
    p.add_argument("--trace", required=True)
    p.add_argument("--map", help="mnemonic map file (default: the built-in map)")
    _add_format(p)

    p = sub.add_parser("ingest-mix", help="pairwise-check mix vectors from a CSV file")
    p.add_argument("--csv", required=True)
    _add_format(p)

    p = sub.add_parser("corpus", help="verify every bundled benchmark")
    p.add_argument("--seed", type=_int, default=DEFAULT_SEED)
    p.add_argument("--rounds", type=_int, default=CONFIDENCE_ROUNDS)
    _add_format(p)
    return parser


# ==================================================================================================
# Helpers
# ==================================================================================================
def _manifest(args) -> SecretManifest | None:
    if args.secret_regs:
        if args.secret_addr is not None or args.secret_len is not None:
            raise UsageError("give either --secret-regs or --secret-addr/--secret-len, not both")
        return parse_secret_spec(f"reg:{args.secret_regs}:{args.secret_width or 8}")
    if args.secret_addr is None and args.secret_len is None:
        if args.secret_required:
            raise UsageError("--secret-addr and --secret-len (or --secret-regs) are required")
        return None
    if args.secret_addr is None or args.secret_len is None:
        raise UsageError("--secret-addr and --secret-len must be given together")
    return SecretManifest.memory(args.secret_addr, args.secret_len, args.secret_width or 1)


def _apply_benchmark(args) -> None:
    """Fill unset flags from ``--benchmark``."""
    name = getattr(args, "benchmark", None)
    if name is None:
        if args.program is None or args.target is None:
            raise UsageError("--program and --target are required unless --benchmark is given")
        return
    bench = next((b for b in load_corpus() if b.name == name), None)
    if bench is None:
        raise UsageError(f"no benchmark named {name!r}")
    args.program = args.program or str(bench.source_path)
    args.target = args.target or bench.target
    explicit = args.secret_regs or args.secret_addr is not None or args.secret_len is not None
    if not explicit:
        m = bench.manifest
        if m.in_memory:
            args.secret_addr, args.secret_len, args.secret_width = m.address, m.length, m.width
        else:
            args.secret_regs = ",".join(f"r{r}" for r in m.registers)
            args.secret_width = m.width
        if getattr(args, "base_secret", None) is None:
            args.base_secret = bench.base_secret
    if not args.public:
        args.public = [f"mem:{a:#x}:{b.hex()}" for a, b in bench.public_memory]
        args.public += [f"reg:r{r}={v:#x}" for r, v in bench.public_registers]


def _load(args):
    if hasattr(args, "benchmark"):
        _apply_benchmark(args)
    program = assemble(_read(args.program))
    target = TargetSpec(args.target, not args.no_callees)
    program.resolve(target.function_label)
    mem, regs = parse_public_spec(args.public)
    return program, target, mem, regs


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _report(report: VerificationReport, fmt: str) -> int:
    _emit(report.to_json() if fmt == "json" else report.to_text())
    return VERDICT_EXIT[report.verdict]


def _mix_text(mix) -> str:
    lines = [f"  {TITLES[k]:<28} {c}" for k, c in enumerate(mix.counts)]
    lines.append(f"  {'total':<28} {mix.total}")
    return "\n".join(lines)


# ==================================================================================================
# Subcommands
# ==================================================================================================
def cmd_verify(args) -> int:
    program, target, mem, regs = _load(args)
    manifest = _manifest(args)
    binding = InputBinding(manifest, mem, regs)
    base = args.base_secret
    if base is None:
        state = MachineState.initial(program, binding)
        if manifest.in_memory:
            base = bytes(state.memory[manifest.address:manifest.address + manifest.length])
        else:
            base = b"".join(state.int_regs[r].to_bytes(8, "little")[:manifest.width]
                            for r in manifest.registers)
    try:
        fuzz = FuzzConfig(args.seed, args.rounds, base)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    job = VerifyJob(program, target, binding, fuzz, args.budget)
    return _report(verify(job, exhaustive=args.exhaustive), args.format)


def cmd_verify_directed(args) -> int:
    program, target, mem, regs = _load(args)
    binding = InputBinding(_manifest(args), mem, regs)
    try:
        secrets = [_hex(s.strip()) for s in args.secrets.split(",") if s.strip()]
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc)) from None
    if not secrets:
        raise UsageError("--secrets is empty")
    job = VerifyJob(program, target, binding, None, args.budget)
    return _report(verify_directed(job, secrets, exhaustive=args.exhaustive), args.format)


def cmd_run(args) -> int:
    program, target, mem, regs = _load(args)
    manifest = _manifest(args)
    if args.secret is not None and manifest is None:
        raise UsageError("--secret needs --secret-addr/--secret-len or --secret-regs")
    if manifest is None:
        state = MachineState.initial(program, None)
        for addr, payload in mem:
            if addr < 0 or addr + len(payload) > len(state.memory):
                raise BindingError(f"public write at {addr:#x} outside memory")
            state.memory[addr:addr + len(payload)] = payload
        for reg, value in regs:
            if not 0 <= reg < len(state.int_regs):
                raise BindingError(f"no integer register r{reg}")
            state.int_regs[reg] = value & ((1 << 64) - 1)
    else:
        state = MachineState.initial(program, InputBinding(manifest, mem, regs))
        if args.secret is not None:
            state = inject_secret(state, manifest, args.secret)
    result = run_state(program, state, target, args.budget)
    mix = build_mix(result.trace)
    if args.dump_trace:
        try:
            Path(args.dump_trace).write_text(format_trace(result.trace, builtin_map().arch))
        except OSError as exc:
            raise NoInput(f"cannot write {args.dump_trace}: {exc.strerror}")
    if args.format == "json":
        _emit(json.dumps({"status": result.status.value, "steps": result.steps,
                          "traced": len(result.trace), "mix": mix.as_dict()}, indent=2))
    else:
        _emit(f"status: {result.status.value}\nsteps: {result.steps}\n"
              f"traced: {len(result.trace)}\nmix:\n{_mix_text(mix)}")
    return EXIT_OK


def cmd_assemble(args) -> int:
    program = assemble(_read(args.program))
    _emit(f"; {len(program)} instructions, entry {program.entry}, "
          f"{len(program.data_segment)} data bytes\n{program.listing()}")
    return EXIT_OK


def cmd_ingest_trace(args) -> int:
    mapping = builtin_map()
    if args.map:
        _read(args.map)
        mapping = load_mnemonic_map(args.map)
    trace = parse_trace(_read(args.trace), mapping)
    mix = build_mix(trace)
    if args.format == "json":
        _emit(json.dumps({"events": len(trace), "mix": mix.as_dict()}, indent=2))
    else:
        _emit(f"events: {len(trace)}\nmix:\n{_mix_text(mix)}")
    return EXIT_OK


def cmd_ingest_mix(args) -> int:
    rows = parse_mix_csv_rounds(_read(args.csv))
    if not rows:
        raise DataError(f"{args.csv}: no data rows")
    check = pairwise_check(rows)
    if args.format == "json":
        out = {"verdict": check.verdict.value,
               "violation": None if check.pair is None else {
                   "rounds": list(check.pair), "l1": check.diff.l1,
                   "per_class": check.diff.as_dict()},
               "rounds": [{"round": r, "mix": v.as_dict()} for r, v in rows]}
        _emit(json.dumps(out, indent=2))
    else:
        lines = [f"verdict: {check.verdict.value}", f"rows: {len(rows)}"]
        if check.pair is not None:
            i, j = check.pair
            lines.append(f"violation: rounds {i} and {j}, L1 distance {check.diff.l1}")
            lines.append(f"per-class difference (round {i} minus round {j}):")
            lines += [f"  {TITLES[k]:<28} {d:+d}" for k, d in enumerate(check.diff.per_class) if d]
        else:
            lines.append("violation: none")
        _emit("\n".join(lines))
    return VERDICT_EXIT[check.verdict]


def cmd_corpus(args) -> int:
    rows = []
    all_match = True
    for bench in load_corpus():
        report = verify(bench.job(args.rounds, args.seed))
        match = report.verdict is bench.expected
        all_match &= match
        rows.append({
            "name": bench.name,
            "expected": bench.expected.value,
            "verdict": report.verdict.value,
            "rounds_run": len(report.rounds),
            "violation": list(report.violation.pair) if report.violation else None,
            "match": match,
        })
    if args.format == "json":
        _emit(json.dumps({"seed": args.seed, "rounds": args.rounds, "benchmarks": rows,
                          "all_match": all_match}, indent=2))
    else:
        w = max(len(r["name"]) for r in rows)
        lines = [f"{'benchmark':<{w}}  {'expected':<22}  {'verdict':<22}  rounds  pair    ok"]
        for r in rows:
            pair = "-" if r["violation"] is None else "{},{}".format(*r["violation"])
            lines.append(f"{r['name']:<{w}}  {r['expected']:<22}  {r['verdict']:<22}  "
                         f"{r['rounds_run']:>6}  {pair:<6}  {'yes' if r['match'] else 'NO'}")
        lines.append(f"{sum(r['match'] for r in rows)}/{len(rows)} verdicts as expected")
        _emit("\n".join(lines))
    return EXIT_OK if all_match else EXIT_NON_CONSTANT_TIME


COMMANDS = {
    "verify": cmd_verify,
    "verify-directed": cmd_verify_directed,
    "run": cmd_run,
    "assemble": cmd_assemble,
    "ingest-trace": cmd_ingest_trace,
    "ingest-mix": cmd_ingest_mix,
    "corpus": cmd_corpus,
}


def _fail(code: int, message: str) -> int:
    print(f"ctmix: error: {message}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except NoInput as exc:
        return _fail(EXIT_NOINPUT, str(exc))
    except (AssemblyError, IngestError, MnemonicMapError, CorpusError, BindingError,
            DataError) as exc:
        return _fail(EXIT_DATAERR, str(exc))
    except ExecutionError as exc:
        return _fail(EXIT_DATAERR, str(exc))
    except ValueError as exc:
        return _fail(EXIT_DATAERR, str(exc))


if __name__ == "__main__":
    sys.exit(main())
