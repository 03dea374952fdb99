"""Evaluating syscall events against profiles, CVE scoring and rule ordering."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .errors import TraceParseError, UnknownSyscallInCveMap
from .profile import SeccompProfile, SyscallTable

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Decision:
    allowed: bool
    reason: str = ""

    def __str__(self):
        return "allow" if self.allowed else f"deny({self.reason})"


def event_number(event: dict, table: SyscallTable):
    if "nr" in event:
        return event["nr"]
    return table.resolve(event.get("name"))


def evaluate(profile: SeccompProfile, event: dict, table: SyscallTable) -> Decision:
    nr = event_number(event, table)
    if nr is None:
        return Decision(False, f"unknown syscall {event.get('name')!r}")
    rule = profile.rule_for(nr)
    if rule is None:
        return Decision(False, profile.default_action)
    args = event.get("args") or []
    for f in rule.args:
        value = args[f.index] if f.index < len(args) else None
        if not f.matches(value):
            return Decision(False, f"arg{f.index} {value!r} fails {f.op}")
    return Decision(True)


def parse_trace(text: str) -> list[dict]:
    events = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceParseError(n, str(exc)) from None
        if not isinstance(doc, dict):
            raise TraceParseError(n, "event must be an object")
        name, nr = doc.get("name"), doc.get("nr")
        if not isinstance(name, str) and not (isinstance(nr, int) and not isinstance(nr, bool)):
            raise TraceParseError(n, "event needs a syscall name or number")
        args = doc.get("args", [])
        if not isinstance(args, list) or len(args) > 6:
            raise TraceParseError(n, "args must be a list of at most 6 values")
        for a in args:
            if a is not None and (not isinstance(a, int) or isinstance(a, bool)):
                raise TraceParseError(n, f"bad argument {a!r}")
        events.append(doc)
    return events


def simulate_trace(profile: SeccompProfile, trace, table: SyscallTable, jobs: int = 1) -> dict:
    """Decide every event; ``trace`` is JSONL text or a list of events."""
    events = parse_trace(trace) if isinstance(trace, str) else list(trace)
    if jobs > 1 and len(events) > 1:
        size = -(-len(events) // jobs)
        chunks = [events[i:i + size] for i in range(0, len(events), size)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(lambda c: [evaluate(profile, e, table) for e in c], chunks)
        decisions = [d for part in parts for d in part]
    else:
        decisions = [evaluate(profile, e, table) for e in events]
    first = None
    for i, d in enumerate(decisions):
        if not d.allowed:
            first = {"index": i, "event": events[i], "reason": d.reason}
            break
    allowed = sum(d.allowed for d in decisions)
    return {
        "allowed": allowed,
        "denied": len(decisions) - allowed,
        "firstDenied": first,
        "decisions": [str(d) for d in decisions],
    }


def _condition_value(cond: dict, flags: dict):
    if "value" in cond:
        return cond["value"]
    return flags.get("flags", {}).get(cond.get("flag"))


def score_cve(profile: SeccompProfile, cve_map: list, table: SyscallTable, flags: dict | None = None) -> dict:
    flags = flags or {}
    mitigated, by_syscall, by_arg = [], 0, 0
    diagnostics = []
    for entry in cve_map:
        try:
            required = []
            for sc in entry["syscalls"]:
                nr = table.number(sc["name"])
                if nr is None:
                    raise UnknownSyscallInCveMap(entry["id"], sc["name"])
                required.append((nr, sc.get("arg")))
        except UnknownSyscallInCveMap as exc:
            log.warning("%s; entry skipped", exc)
            diagnostics.append(str(exc))
            continue
        allowed = profile.allowed
        if any(nr not in allowed for nr, _ in required):
            mitigated.append(entry["id"])
            by_syscall += 1
            continue
        blocked = False
        for nr, cond in required:
            if not cond:
                continue
            value = _condition_value(cond, flags)
            if value is None:
                diagnostics.append(f"{entry['id']}: unknown flag {cond.get('flag')!r}")
                continue
            rule = profile.rule_for(nr)
            for f in rule.args:
                if f.index == cond["index"] and not f.matches(value):
                    blocked = True
        if blocked:
            mitigated.append(entry["id"])
            by_arg += 1
    return {"mitigated": mitigated, "bySyscallBlock": by_syscall, "byArgBlock": by_arg,
            "diagnostics": diagnostics}


def histogram(events, table: SyscallTable) -> dict:
    counts = {}
    for e in events:
        nr = event_number(e, table)
        if nr is not None:
            counts[nr] = counts.get(nr, 0) + 1
    return counts


def optimize_order(profile: SeccompProfile, freq: dict) -> SeccompProfile:
    """Hottest syscalls first; ties by ascending number."""
    rules = sorted(profile.rules, key=lambda r: (-freq.get(r.syscall, 0), r.syscall))
    return replace(profile, rules=rules)
