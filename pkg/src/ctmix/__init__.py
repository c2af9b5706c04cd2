"""Constant-time checking by comparing instruction-mix vectors of traced executions."""
from ._backend import BACKEND
from .asm import Program, assemble
from .classify import InstructionClass, MnemonicMap, builtin_map, classify
from .fuzz import FuzzConfig, next_secret
from .harness import VerificationReport, VerifyJob, verify, verify_directed
from .mix import MixDiff, MixVector, Verdict, build_mix, diff, pairwise_check
from .vm import InputBinding, SecretManifest, TargetSpec, execute, inject_secret

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "FuzzConfig", "InputBinding", "InstructionClass", "MixDiff", "MixVector",
    "MnemonicMap", "Program", "SecretManifest", "TargetSpec", "Verdict", "VerificationReport",
    "VerifyJob", "assemble", "build_mix", "builtin_map", "classify", "diff", "execute",
    "inject_secret", "next_secret", "pairwise_check", "verify", "verify_directed",
]
