import json
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixture_set import BINARIES, build_profile, trace_path
from secforge.data import load_flags, load_json
from secforge.errors import TraceParseError
from secforge.policy import evaluate, histogram, optimize_order, parse_trace, score_cve, simulate_trace
from secforge.profile import ArgFilter, Rule, SeccompProfile, load_syscall_table

A64 = load_syscall_table("a64")
FLAGS = load_flags("a64")
CVE_MAP = load_json("cve_map.json")


@pytest.fixture(autouse=True)
def _quiet():
    logging.disable(logging.WARNING)
    yield
    logging.disable(logging.NOTSET)


def _sample_profile():
    return SeccompProfile("a64", "errno", [
        Rule(198, "socket", (ArgFilter(0, "inSet", (2, 10)), ArgFilter(1, "inSet", (1,)))),
        Rule(63, "read", (ArgFilter(2, "inRange", (0, 4096)),)),
        Rule(56, "openat", (ArgFilter(2, "maskedEq", (0,), ~0x641 & ((1 << 64) - 1)),)),
        Rule(57, "close"),
    ])


@pytest.mark.parametrize("event, allowed", [
    ({"name": "socket", "args": [2, 1, 6]}, True),
    ({"name": "socket", "args": [17, 3, 0]}, False),
    ({"name": "socket", "args": [10, 2, 0]}, False),
    ({"name": "read", "args": [0, None, 4096]}, True),
    ({"name": "read", "args": [0, None, 4097]}, False),
    ({"name": "openat", "args": [-100, None, 0x41]}, True),
    ({"name": "openat", "args": [-100, None, 0x2]}, False),
    ({"name": "close", "args": [99]}, True),
    ({"name": "close"}, True),
    ({"nr": 57, "args": [1]}, True),
    ({"name": "ptrace", "args": [0]}, False),
    ({"name": "no_such_call"}, False),
])
def test_evaluate(event, allowed):
    assert evaluate(_sample_profile(), event, A64).allowed is allowed


def test_unknown_argument_value_fails_filter():
    d = evaluate(_sample_profile(), {"name": "socket", "args": [None, 1, 0]}, A64)
    assert not d.allowed and "arg0" in d.reason


def test_simulate_empty_trace():
    r = simulate_trace(_sample_profile(), "", A64)
    assert r == {"allowed": 0, "denied": 0, "firstDenied": None, "decisions": []}


def test_simulate_fixture_traces_have_no_denials():
    for name, arch in BINARIES.items():
        r = simulate_trace(build_profile(name), trace_path(name).read_text(), load_syscall_table(arch))
        assert r["denied"] == 0, (name, r["firstDenied"])
    r = simulate_trace(build_profile("netprog"), trace_path("netprog").read_text(), A64)
    assert r["allowed"] == 5


def test_first_denied_reports_packet_socket():
    trace = trace_path("netprog").read_text() + json.dumps({"name": "socket", "args": [17, 3, 768]}) + "\n"
    r = simulate_trace(build_profile("netprog"), trace, A64)
    assert r["denied"] == 1
    assert r["firstDenied"]["index"] == 5
    assert r["firstDenied"]["event"]["args"][0] == 17


def test_parallel_simulation_matches_serial():
    events = [{"name": n, "args": [a, 1, 4000]} for n in ("socket", "read", "close", "ptrace") for a in range(25)]
    prof = _sample_profile()
    assert simulate_trace(prof, events, A64, jobs=4) == simulate_trace(prof, events, A64)


@pytest.mark.parametrize("text, line", [
    ('{"name": "read"}\nnot json\n', 2),
    ('[1, 2]\n', 1),
    ('{"args": [1]}\n', 1),
    ('{"name": "read", "args": [1, 2, 3, 4, 5, 6, 7]}\n', 1),
    ('{"name": "read", "args": ["x"]}\n', 1),
])
def test_trace_parse_errors(text, line):
    with pytest.raises(TraceParseError) as info:
        parse_trace(text)
    assert info.value.line == line


def test_cve_packet_socket_case():
    sso = build_profile("netprog_sso")
    r = score_cve(sso, CVE_MAP, A64, FLAGS)
    assert "CVE-2017-7308" in r["mitigated"]
    assert r["byArgBlock"] == 1

    plain = score_cve(build_profile("netprog"), CVE_MAP, A64, FLAGS)
    assert "CVE-2017-7308" in plain["mitigated"]
    assert plain["byArgBlock"] == 0

    open_ = score_cve(build_profile("netprog_open"), CVE_MAP, A64, FLAGS)
    assert "CVE-2017-7308" not in open_["mitigated"]


def test_cve_counters_are_disjoint():
    for name in ("netprog", "netprog_sso", "netprog_open", "fileprog"):
        r = score_cve(build_profile(name), CVE_MAP, A64, FLAGS)
        assert r["bySyscallBlock"] + r["byArgBlock"] == len(r["mitigated"])
        assert len(set(r["mitigated"])) == len(r["mitigated"])


def test_cve_unknown_syscall_is_skipped():
    cve_map = [{"id": "CVE-X", "syscalls": [{"name": "not_a_syscall"}]},
               {"id": "CVE-Y", "syscalls": [{"name": "ptrace"}]}]
    r = score_cve(_sample_profile(), cve_map, A64, FLAGS)
    assert r["mitigated"] == ["CVE-Y"]
    assert any("not_a_syscall" in d for d in r["diagnostics"])


def test_empty_profile_blocks_every_cve():
    empty = SeccompProfile("a64")
    r = score_cve(empty, CVE_MAP, A64, FLAGS)
    assert r["bySyscallBlock"] == len(CVE_MAP)


def test_optimize_order_by_frequency():
    prof = _sample_profile()
    freq = histogram(parse_trace('{"name": "read"}\n{"name": "read"}\n{"name": "close"}\n'), A64)
    assert freq == {63: 2, 57: 1}
    out = optimize_order(prof, freq)
    # ties (no observations) fall back to ascending number
    assert [r.syscall for r in out.rules] == [63, 57, 56, 198]
    assert sorted(out.rules, key=lambda r: r.syscall) == sorted(prof.rules, key=lambda r: r.syscall)


_events = st.fixed_dictionaries({
    "name": st.sampled_from(["socket", "read", "openat", "close", "ptrace", "write"]),
    "args": st.lists(st.one_of(st.none(), st.integers(-5, 5000)), max_size=6),
})


@settings(max_examples=150)
@given(st.permutations(range(4)), st.lists(_events, max_size=30))
def test_rule_order_does_not_change_decisions(order, events):
    prof = _sample_profile()
    shuffled = SeccompProfile(prof.arch, prof.default_action, [prof.rules[i] for i in order])
    assert simulate_trace(shuffled, events, A64)["decisions"] == simulate_trace(prof, events, A64)["decisions"]
