"""Shared description of the binary fixtures and helpers to run the oracles."""

import logging
from functools import lru_cache
from pathlib import Path

from secforge.analysis import analyze_library, scan_binary
from secforge.binscan import parse_disassembly
from secforge.data import default_macros, load_flags, pointer_args
from secforge.interp import BinaryEmulator, LibraryInterpreter, ground_truth_trace
from secforge.ir import parse_ir
from secforge.profile import generate_profile, load_syscall_table

FIXTURES = Path(__file__).resolve().parent / "fixtures"
LIBC = FIXTURES / "mini-libc.gcfg"

# name -> arch
BINARIES = {
    "netprog": "a64",
    "netprog_open": "a64",
    "netprog_sso": "a64",
    "fileprog": "a64",
    "fileprog_modes": "a64",
    "rawsvc": "a64",
    "a32prog": "a32",
    "dynprog": "a64",
}


@lru_cache(maxsize=None)
def libc_text() -> str:
    return LIBC.read_text()


def libc():
    return parse_ir(libc_text())


def dis_path(name: str) -> Path:
    return FIXTURES / "bin" / f"{name}.dis"


def trace_path(name: str) -> Path:
    return FIXTURES / "traces" / f"{name}.trace.jsonl"


def image(name: str):
    return parse_disassembly(dis_path(name).read_text(), BINARIES[name])


def library_interpreter(prog, arch: str) -> LibraryInterpreter:
    table = load_syscall_table(arch)
    return LibraryInterpreter(prog, table.by_name, default_macros(), pointer_args(),
                              load_flags(arch)["domains"]["str"])


def oracle_trace(name: str):
    arch = BINARIES[name]
    prog = libc()
    emu = BinaryEmulator(image(name), library_interpreter(prog, arch), load_syscall_table(arch).by_name,
                         pointer_args(), max_paths=4096)
    return ground_truth_trace(emu.run())


def build_profile(name: str, prog=None, default_action="errno"):
    arch = BINARIES[name]
    prog = prog or libc()
    logging.disable(logging.WARNING)
    try:
        la = analyze_library(prog, arch)
        callsites, direct = scan_binary(image(name), la.api_map)
    finally:
        logging.disable(logging.NOTSET)
    return generate_profile(la.api_map, callsites, direct, load_syscall_table(arch), default_action)
