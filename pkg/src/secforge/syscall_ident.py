"""Locate syscall-invoking statements in the library and map each API to the
syscalls it can reach.

Three idioms are recognised: functions on the wrapper list (the whole body is
the syscall), calls to syscall macros whose first argument names the syscall,
and explicit ``syscall(...)`` assembly statements.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field

from .callgraph import CallGraph
from .data import default_macros
from .errors import UnknownApi
from .ir import AsmSyscall, Assign, Call, Const, IrFunction, IrProgram, Var

log = logging.getLogger(__name__)

DYNAMIC = "dynamic"
ENTRY_SITE = -1  # synthetic statement id for wrapper functions


@dataclass(frozen=True)
class SyscallSite:
    function: str
    site_id: int
    syscall: str
    nr_expr: object
    args: tuple
    idiom: str = "asm"  # wrapper | macro | asm

    @property
    def key(self):
        return (self.function, self.site_id)

    @property
    def is_dynamic(self) -> bool:
        return self.syscall == DYNAMIC

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "site": self.site_id,
            "syscall": self.syscall,
            "idiom": self.idiom,
            "nr": str(self.nr_expr),
            "args": [str(a) for a in self.args],
        }


@dataclass
class Diagnostic:
    site: tuple
    reason: str


def _resolve_number(fn: IrFunction, expr, table: dict | None, depth=0) -> str | None:
    if isinstance(expr, Var):
        name = expr.name
        if name.startswith("__NR_"):
            return name[5:]
        if fn.declared_type(name) is None and not fn.defs(name):
            return name
        defs = fn.defs(name)
        if fn.param_index(name) is None and len(defs) == 1 and depth < 8:
            stmt = defs[0][1]
            if isinstance(stmt, Assign):
                return _resolve_number(fn, stmt.rhs, table, depth + 1)
        return None
    if isinstance(expr, Const) and isinstance(expr.value, int):
        if table:
            for name, nr in table.items():
                if nr == expr.value:
                    return name
        return None
    return None


def identify_syscall_functions(prog: IrProgram, macros=None, table: dict | None = None,
                               diagnostics: list | None = None) -> list[SyscallSite]:
    """All syscall sites of the library, in (function, statement) order.

    ``table`` (name -> number) lets numeric constants resolve to names.
    Unresolvable number expressions yield ``dynamic`` sites; a diagnostic is
    appended to ``diagnostics`` when given.
    """
    macros = default_macros() if macros is None else frozenset(macros)
    sites = []
    for fn in prog.functions.values():
        if fn.name in prog.wrappers:
            params = tuple(Var(p.name) for p in fn.params)
            sites.append(SyscallSite(fn.name, ENTRY_SITE, prog.wrappers[fn.name],
                                     Var("__NR_" + prog.wrappers[fn.name]), params, "wrapper"))
        for sid, stmt in fn.statements():
            if isinstance(stmt, Call) and stmt.callee in macros:
                if not stmt.args:
                    nr_expr, args = Const(-1), ()
                else:
                    nr_expr, args = stmt.args[0], stmt.args[1:]
                idiom = "macro"
            elif isinstance(stmt, AsmSyscall):
                nr_expr, args, idiom = stmt.nr, stmt.args, "asm"
            else:
                continue
            name = _resolve_number(fn, nr_expr, table)
            if name is None:
                name = DYNAMIC
                reason = f"cannot resolve syscall number {nr_expr} in {fn.name}@{sid}"
                log.warning(reason)
                if diagnostics is not None:
                    diagnostics.append(Diagnostic((fn.name, sid), reason))
            sites.append(SyscallSite(fn.name, sid, name, nr_expr, tuple(args), idiom))
    return sites


@dataclass
class ApiEntry:
    syscalls: tuple = ()
    sites: tuple = ()  # SyscallSite keys (function, site)
    full_allowlist: bool = False
    params: tuple = ()  # parameter type tags of the API
    arg_mappings: list = field(default_factory=list)
    nr_mappings: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "syscalls": list(self.syscalls),
            "sites": [list(s) for s in self.sites],
            "fullAllowlist": self.full_allowlist,
            "params": list(self.params),
            "argMappings": list(self.arg_mappings),
            "nrMappings": list(self.nr_mappings),
        }


@dataclass
class ApiSyscallMap:
    entries: dict  # api -> ApiEntry
    sites: dict  # (function, site) -> SyscallSite

    def syscalls(self, api: str) -> set[str]:
        return set(self.entries[api].syscalls)

    def to_json(self) -> dict:
        return {
            "apis": {api: e.to_json() for api, e in sorted(self.entries.items())},
            "sites": [s.to_json() for _, s in sorted(self.sites.items())],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, doc: dict) -> "ApiSyscallMap":
        from .ir import parse_expr

        sites = {}
        for s in doc.get("sites", []):
            site = SyscallSite(s["function"], s["site"], s["syscall"], parse_expr(s["nr"], 0),
                               tuple(parse_expr(a, 0) for a in s["args"]), s.get("idiom", "asm"))
            sites[site.key] = site
        entries = {}
        for api, e in doc["apis"].items():
            entries[api] = ApiEntry(
                tuple(e["syscalls"]),
                tuple(tuple(x) for x in e["sites"]),
                e["fullAllowlist"],
                tuple(e.get("params", ())),
                list(e.get("argMappings", [])),
                list(e.get("nrMappings", [])),
            )
        return cls(entries, sites)


def build_api_syscall_map(graph: CallGraph, sites, api_list, prog: IrProgram | None = None) -> ApiSyscallMap:
    """Breadth-first reachability from each API over the merged graph.

    API names go through the alias map when ``prog`` is given.
    """
    node_set = set(graph.nodes)
    by_function: dict[str, list[SyscallSite]] = {}
    for site in sites:
        by_function.setdefault(site.function, []).append(site)
    adjacency: dict[str, list[str]] = {}
    for caller, callee, *_ in graph.edges():
        adjacency.setdefault(caller, []).append(callee)

    entries = {}
    for api in api_list:
        root = prog.canonical(api) if prog else api
        if root not in node_set:
            raise UnknownApi(api)
        seen = {root}
        queue = deque([root])
        while queue:
            cur = queue.popleft()
            for nxt in adjacency.get(cur, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        reached = sorted((s for f in seen for s in by_function.get(f, ())), key=lambda s: s.key)
        names = sorted({s.syscall for s in reached})
        params = ()
        if prog is not None and root in prog.functions:
            params = prog.functions[root].param_types
        entries[api] = ApiEntry(
            syscalls=tuple(names),
            sites=tuple(s.key for s in reached),
            full_allowlist=any(s.is_dynamic for s in reached),
            params=params,
        )
    return ApiSyscallMap(entries, {s.key: s for s in sites})
