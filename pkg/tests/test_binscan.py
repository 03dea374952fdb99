import json
import logging

import pytest
from hypothesis import given, settings

from fixture_set import image, libc, library_interpreter
from strategies import a64_snippets
from secforge.analysis import analyze_library, dumps_scan_report, load_scan_report, scan_binary
from secforge.binscan import (
    Instruction, Slicer, decode, extract_call_args, find_api_callsites, find_direct_syscalls, parse_disassembly,
)
from secforge.data import pointer_args
from secforge.errors import DisassemblySyntaxError, UnknownArch
from secforge.interp import BinaryEmulator
from secforge.profile import load_syscall_table
from secforge.valueset import ValueSet


@pytest.fixture(autouse=True)
def _quiet():
    logging.disable(logging.WARNING)
    yield
    logging.disable(logging.NOTSET)


@pytest.fixture(scope="module")
def api_map():
    logging.disable(logging.WARNING)
    return analyze_library(libc()).api_map


def _scan(name, api_map):
    return scan_binary(image(name), api_map)


def test_socket_prologue_arguments(api_map):
    callsites, direct = _scan("netprog", api_map)
    assert [c.api for c in callsites] == ["socket"]
    assert callsites[0].function == "make_sock"
    assert callsites[0].arg_sets == (ValueSet.distinct(2), ValueSet.distinct(1), ValueSet.distinct(6))
    assert direct == []


def test_plt_stubs_and_functions():
    img = image("netprog")
    assert img.plt_stubs == {0x400400: "socket"}
    assert [f.name for f in img.functions] == ["socket@plt", "make_sock", "main"]
    bl = img.function_named("main").instructions[1]
    assert bl.mnemonic == "bl" and bl.target == 0x400500 and bl.target_name == "make_sock"


def test_environment_value_is_unknown(api_map):
    callsites, _ = _scan("netprog_open", api_map)
    sock, sso = callsites
    assert not sock.arg_sets[0].known
    assert sock.arg_sets[1] == ValueSet.distinct(1)
    assert sso.api == "setsockopt"
    assert sso.arg_sets[:3] == (ValueSet.distinct(3), ValueSet.distinct(1), ValueSet.distinct(2))
    # the option buffer is a pointer parameter
    assert not sso.arg_sets[3].known and sso.arg_sets[4] == ValueSet.distinct(4)


def test_string_arguments_through_literal_pool(api_map):
    callsites, _ = _scan("fileprog", api_map)
    fopen = next(c for c in callsites if c.api == "fopen")
    assert fopen.arg_sets == (ValueSet.distinct("/etc/app.conf"), ValueSet.distinct("r"))
    callsites, _ = _scan("fileprog_modes", api_map)
    fopen = next(c for c in callsites if c.api == "fopen")
    assert fopen.arg_sets[1] == ValueSet.distinct("w+", "a")


def test_a64_direct_svc():
    direct = find_direct_syscalls(image("rawsvc"))
    assert [d.nr_set for d in direct] == [ValueSet.distinct(63), ValueSet.distinct(93)]
    assert direct[0].arg_sets[0] == ValueSet.distinct(0) and direct[0].arg_sets[2] == ValueSet.distinct(32)


def test_a32_old_and_new_abi():
    direct = find_direct_syscalls(image("a32prog"))
    assert [d.nr_set for d in direct] == [ValueSet.distinct(4), ValueSet.distinct(20)]
    assert direct[0].arg_sets[0] == ValueSet.distinct(1)
    assert not direct[0].arg_sets[1].known  # sp-relative buffer


def test_a32_plt_call(api_map):
    callsites, _ = _scan("a32prog", api_map)
    assert callsites[0].arg_sets == (ValueSet.distinct(2), ValueSet.distinct(2), ValueSet.distinct(17))


def test_opaque_instruction_gives_unknown():
    img = image("netprog")
    addr = 0x40050c  # mov w1, #1
    broken = img.replace_instruction(addr, Instruction(addr, "mrs", ("x1", "tpidr_el0")))
    cs, = find_api_callsites(broken, ["socket"])
    sets = extract_call_args(broken, cs, arity=3).arg_sets
    # x0 is written before the opaque instruction, x2 after it
    assert not sets[0].known and not sets[1].known
    assert sets[2] == ValueSet.distinct(6)
    assert decode(broken.function_named("make_sock").instructions[3], "a64") is None


def test_indirect_call_is_reported():
    text = ("0000000000400400 <socket@plt>:\n  400400:\tbr\tx17\n"
            "0000000000400500 <main>:\n  400500:\tblr\tx3\n  400504:\tret\n")
    img = parse_disassembly(text, "a64")
    assert find_api_callsites(img, ["socket"]) == []
    assert len(img.diagnostics) == 1 and "indirect call" in img.diagnostics[0]


def test_caller_hop_recovers_argument():
    text = """
0000000000400400 <socket@plt>:
  400400:\tbr\tx17
0000000000400500 <helper>:
  400500:\tmov\tw1, #0x1
  400504:\tmov\tw2, #0x0
  400508:\tbl\t400400 <socket@plt>
  40050c:\tret
0000000000400600 <main>:
  400600:\tmov\tw0, #0xa
  400604:\tbl\t400500 <helper>
  400608:\tret
"""
    img = parse_disassembly(text, "a64")
    cs, = find_api_callsites(img, ["socket"])
    assert extract_call_args(img, cs, arity=3).arg_sets[0] == ValueSet.distinct(10)


@pytest.mark.parametrize("text", [
    "  400500:\tmov\tw0, #1\n",  # no enclosing function
    "0000000000400500 <f>:\n  zz00:\tmov\tw0, #1\n",
    "0000000000400500 <f>:\n  400504:\tmov\tw0, #1\n  400500:\tret\n",
    "0000000000400500 <f>:\n  400500:\t.quad\tnope\n",
    "0000000000400500 <f>:\n  400500:\t.asciz\tnoquote\n",
])
def test_syntax_errors(text):
    with pytest.raises(DisassemblySyntaxError):
        parse_disassembly(text, "a64")


def test_unknown_arch():
    with pytest.raises(UnknownArch):
        parse_disassembly("", "mips")


def test_scan_report_round_trip(api_map):
    callsites, direct = _scan("rawsvc", api_map)
    text = dumps_scan_report("a64", callsites, direct)
    arch, cs2, d2 = load_scan_report(json.loads(text))
    assert arch == "a64" and cs2 == callsites and d2 == direct


_EMU_LIB = None


def _emulator_lib():
    global _EMU_LIB
    if _EMU_LIB is None:
        _EMU_LIB = library_interpreter(libc(), "a64")
    return _EMU_LIB


@settings(max_examples=120, deadline=None)
@given(a64_snippets())
def test_slice_contains_every_emulated_value(text):
    img = parse_disassembly(text, "a64")
    cs, = find_api_callsites(img, ["socket"])
    sets = extract_call_args(img, cs, arity=3, slicer=Slicer(img)).arg_sets
    emu = BinaryEmulator(img, _emulator_lib(), load_syscall_table("a64").by_name, pointer_args(), havoc=(7,))
    seen = [args for p in emu.run() for api, args in p.api_calls if api == "socket"]
    assert seen
    for args in seen:
        for k in range(3):
            if sets[k].known:
                assert sets[k].contains(args[k])
