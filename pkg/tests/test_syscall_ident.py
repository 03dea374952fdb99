import logging

import pytest
from hypothesis import given, settings

from fixture_set import libc
from oracles import bfs_api_syscalls
from strategies import library_texts
from secforge.callgraph import build_callgraph
from secforge.data import default_macros
from secforge.errors import UnknownApi
from secforge.interp import LibraryInterpreter
from secforge.ir import parse_ir
from secforge.profile import load_syscall_table
from secforge.syscall_ident import (
    DYNAMIC, ENTRY_SITE, ApiSyscallMap, build_api_syscall_map, identify_syscall_functions,
)

MACROS = default_macros()


@pytest.fixture(autouse=True)
def _quiet():
    logging.disable(logging.WARNING)
    yield
    logging.disable(logging.NOTSET)


def _map(prog):
    g = build_callgraph(prog, MACROS)
    sites = identify_syscall_functions(prog, MACROS)
    return build_api_syscall_map(g, sites, prog.apis, prog)


def test_three_idioms_found():
    sites = identify_syscall_functions(libc(), MACROS)
    by = {(s.function, s.syscall): s.idiom for s in sites}
    assert by[("read", "read")] == "wrapper"
    assert by[("__libc_openat", "openat")] == "macro"
    assert by[("__libc_close", "close")] == "macro"
    assert by[("socket", "socket")] == "asm"
    assert by[("syscall", DYNAMIC)] == "asm"
    wrapper = next(s for s in sites if s.idiom == "wrapper")
    assert wrapper.site_id == ENTRY_SITE


def test_dynamic_site_diagnostic():
    diags = []
    identify_syscall_functions(libc(), MACROS, diagnostics=diags)
    assert [d.site for d in diags] == [("syscall", 0)]


def test_numeric_number_resolves_through_table():
    prog = parse_ir("func f(a:int)\nbb e:\n  r = syscall(63, a)\n  return r\nendfunc\n")
    sites = identify_syscall_functions(prog, MACROS, load_syscall_table("a64").by_name)
    assert [s.syscall for s in sites] == ["read"]


def test_fixture_map_values():
    m = _map(libc())
    assert m.syscalls("fopen") == {"openat", "close"}
    assert m.syscalls("fclose") == {"close"}
    assert m.syscalls("open64") == {"openat", "close"}
    assert m.syscalls("net_send") == {"sendto"}
    assert m.syscalls("proto_init") == set()
    assert m.entries["syscall"].full_allowlist
    assert not m.entries["fopen"].full_allowlist
    assert m.entries["fopen"].params == ("str", "str")


def test_fixture_map_equals_bfs_oracle():
    m = _map(libc())
    oracle = bfs_api_syscalls(libc(), MACROS)
    assert {api: m.syscalls(api) for api in m.entries} == oracle


def test_unknown_api():
    prog = libc()
    g = build_callgraph(prog, MACROS)
    with pytest.raises(UnknownApi):
        build_api_syscall_map(g, identify_syscall_functions(prog, MACROS), ["nope"], prog)


def test_map_json_round_trip():
    m = _map(libc())
    again = ApiSyscallMap.from_json(m.to_json())
    assert again.dumps() == m.dumps()


@settings(max_examples=80, deadline=None)
@given(library_texts())
def test_random_map_equals_bfs_oracle(text):
    prog = parse_ir(text)
    m = _map(prog)
    assert {api: m.syscalls(api) for api in m.entries} == bfs_api_syscalls(prog, MACROS)


@settings(max_examples=40, deadline=None)
@given(library_texts())
def test_observed_syscalls_are_mapped(text):
    prog = parse_ir(text)
    m = _map(prog)
    interp = LibraryInterpreter(prog, macros=MACROS, havoc=(0,), max_depth=8, fuel=4000)
    for api in prog.apis:
        arity = len(prog.functions[api].params)
        for st, _ in interp.call_api(api, [None] + [0] * (arity - 1)):
            assert {e.name for e in st.events} <= m.syscalls(api)
