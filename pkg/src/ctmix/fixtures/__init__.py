"""Recorded mix-vector CSVs for the password and modexp examples.

One file per (example, variant, compiler, optimisation level); row 1 is the
first input, row 2 the second. Float and vector columns are zero.
"""
from importlib import resources
from pathlib import Path


def fixture_dir() -> Path:
    return Path(str(resources.files(__name__)))


def fixture_names() -> list[str]:
    return sorted(p.name for p in fixture_dir().glob("*.csv"))


def fixture_path(name: str) -> Path:
    path = fixture_dir() / name
    if not path.is_file():
        raise FileNotFoundError(f"no fixture named {name!r}")
    return path
