"""Time the compiled and pure-Python interpreter kernels on the bundled corpus.

    python3 benchmarks/bench_kernel.py [--repeat N] [--rounds N]

Each benchmark is executed ``--rounds`` times with fuzzed secrets per kernel;
the best of ``--repeat`` passes is reported. Traces from both kernels are
compared on every execution, so the script doubles as a parity check.
"""
from __future__ import annotations

import argparse
import sys
import time

from ctmix import _backend
from ctmix.corpus import load_corpus
from ctmix.fuzz import secrets
from ctmix.vm import MachineState, inject_secret, run_state


def _run_all(bench, kernel, secret_list):
    base = MachineState.initial(bench.program, bench.binding)
    out = []
    for s in secret_list:
        state = inject_secret(base, bench.manifest, s)
        res = run_state(bench.program, state, bench.target_spec, kernel=kernel)
        out.append(res)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--rounds", type=int, default=20)
    args = ap.parse_args(argv)

    kernels = _backend.available()
    if "cython" not in kernels:
        print("compiled kernel not built; only the python kernel is available", file=sys.stderr)
    corpus = load_corpus()
    print(f"{'benchmark':<30} {'steps':>8} " + " ".join(f"{k + ' ms':>12}" for k in kernels)
          + (f" {'speedup':>8}" if len(kernels) > 1 else ""))
    totals = dict.fromkeys(kernels, 0.0)
    for bench in corpus:
        secret_list = secrets(bench.job(args.rounds).fuzz)
        times, results = {}, {}
        for name, kernel in kernels.items():
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                results[name] = _run_all(bench, kernel, secret_list)
                best = min(best, time.perf_counter() - t0)
            times[name] = best
            totals[name] += best
        first, *rest = ([(r.status, r.steps, list(r.trace)) for r in v] for v in results.values())
        if any(r != first for r in rest):
            print(f"kernel mismatch on {bench.name}", file=sys.stderr)
            return 1
        steps = sum(r[1] for r in first)
        line = f"{bench.name:<30} {steps:>8} " + " ".join(
            f"{times[k] * 1e3:>12.2f}" for k in kernels)
        if len(kernels) > 1:
            line += f" {times['python'] / times['cython']:>7.1f}x"
        print(line)
    line = f"{'total':<30} {'':>8} " + " ".join(f"{totals[k] * 1e3:>12.2f}" for k in kernels)
    if len(kernels) > 1:
        line += f" {totals['python'] / totals['cython']:>7.1f}x"
    print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
