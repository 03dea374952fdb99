import logging

import pytest

from fixture_set import BINARIES, image, libc, library_interpreter, oracle_trace, trace_path
from secforge.interp import BinaryEmulator, Event, LibraryInterpreter, LibState, dumps_trace, ground_truth_trace
from secforge.ir import parse_ir
from secforge.policy import parse_trace
from secforge.profile import load_syscall_table


@pytest.fixture(autouse=True)
def _quiet():
    logging.disable(logging.WARNING)
    yield
    logging.disable(logging.NOTSET)


@pytest.fixture(scope="module")
def interp():
    return library_interpreter(libc(), "a64")


def _events(runs):
    return {tuple((e.name, e.args) for e in st.events) for st, _ in runs}


def test_fopen_read_mode(interp):
    runs = interp.call_api("fopen", ["/p", "r"])
    assert _events(runs) == {(("openat", (-100, None, 0, 438)),)}


def test_invalid_mode_never_reaches_kernel(interp):
    runs = interp.call_api("fopen", ["/p", "x"])
    assert _events(runs) == {()}
    assert {ret for _, ret in runs} == {0}


def test_unbound_string_forks_over_mode_domain(interp):
    flags = {e[0][1][2] for e in _events(interp.call_api("fopen", ["/p", None])) if e}
    assert flags == {0, 577, 1089, 2, 578, 1090}


def test_indirect_call_needs_registered_handler(interp):
    # without proto_init the slot holds no function address
    assert interp.call_api("net_send", [None, 4, 128]) == []
    (st, _), = interp.call_api("proto_init", [None, None])
    runs = interp.call_api("net_send", [None, 4, 128], st)
    assert _events(runs) == {(("sendto", (4, None, 128, 0, None, 0)),)}
    assert ("net_send", "tcp_send") in runs[0][0].edges


def test_c_division_truncates_toward_zero():
    text = """
func f(a:int)
bb e:
  x = a / 2
  y = a % 2
  r = syscall(__NR_write, x, y)
  return r
endfunc
"""
    interp = LibraryInterpreter(parse_ir(text), havoc=(0,))
    (st, _), = interp.call_api("f", [-7])
    assert st.events[0].args[:2] == (-3, -1)


def test_heap_state_is_threaded():
    st = LibState()
    st2 = st.heap_set(("T", "f"), 5)
    # (value, present?)
    assert st.heap_get(("T", "f")) == (None, False)
    assert st2.heap_get(("T", "f")) == (5, True)


def test_ground_truth_trace_order():
    a, b, c = Event("read", (1,)), Event("close", (2,)), Event("write", (3,))

    class P:
        def __init__(self, events):
            self.events = events

    assert ground_truth_trace([P([a, b]), P([b, c, a]), P([c])]) == [a, b, c]
    assert ground_truth_trace([]) == []


def test_emulator_exits_stop_paths():
    emu = BinaryEmulator(image("rawsvc"), library_interpreter(libc(), "a64"), load_syscall_table("a64").by_name)
    names = {tuple(e.name for e in p.events) for p in emu.run()}
    assert all(seq[-1] == "exit" for seq in names)


@pytest.mark.parametrize("name", sorted(BINARIES))
def test_frozen_traces_match_oracle(name):
    text = trace_path(name).read_text()
    assert dumps_trace(oracle_trace(name)) == text
    assert parse_trace(text)
