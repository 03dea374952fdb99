"""Locating and loading the shipped data files.

``SECFORGE_DATA`` points at an alternative data directory with the same
layout (``syscalls/``, ``flags/``, ``macros.json``, ``cve_map.json``).
"""

import json
import os
from functools import lru_cache
from pathlib import Path

_PACKAGE_DATA = Path(__file__).resolve().parent / "data"


def data_dir() -> Path:
    override = os.environ.get("SECFORGE_DATA")
    return Path(override) if override else _PACKAGE_DATA


def data_path(*parts) -> Path:
    return data_dir().joinpath(*parts)


def load_json(*parts):
    with open(data_path(*parts), encoding="utf-8") as fh:
        return json.load(fh)


def default_macros() -> frozenset:
    return frozenset(load_json("macros.json")["macros"])


@lru_cache(maxsize=None)
def _pointer_args(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return {k: frozenset(v) for k, v in doc.items() if not k.startswith("_")}


def pointer_args() -> dict:
    """syscall name -> indices of pointer-carrying arguments."""
    return _pointer_args(str(data_path("syscalls", "pointer_args.json")))


def load_flags(arch: str, flags_dir=None) -> dict:
    base = Path(flags_dir) if flags_dir else data_path("flags")
    with open(base / f"{arch}.json", encoding="utf-8") as fh:
        return json.load(fh)
