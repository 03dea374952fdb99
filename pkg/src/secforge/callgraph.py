"""Direct call graph plus two-layer indirect-call resolution.

Indirect callsites are resolved against the pool of address-taken functions.
Layer one keeps candidates whose parameter tags match the callsite arguments.
Layer two, applied when the call target was loaded from a field of a known
object type, keeps only functions whose address was stored into that type.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .data import default_macros
from .errors import UnknownCallee
from .ir import Assign, Call, Field, FuncRef, ICall, IrFunction, IrProgram, Var

LEVELS = ("address-taken", "type-matched", "object-refined")


@dataclass(frozen=True, order=True)
class AddressTakenRecord:
    function: str
    stored_in_type: str | None = None


@dataclass(frozen=True, order=True)
class DirectEdge:
    caller: str
    callee: str
    site: int


@dataclass(frozen=True, order=True)
class IndirectEdge:
    caller: str
    callee: str
    site: int
    level: str


@dataclass
class CallGraph:
    nodes: tuple = ()
    direct_edges: frozenset = frozenset()
    indirect_edges: frozenset = frozenset()
    # (caller, site) -> level actually achieved for that callsite
    indirect_sites: dict = field(default_factory=dict)

    def edges(self):
        """All edges in canonical order, as ``(caller, callee, site, kind, level)``."""
        out = [(e.caller, e.callee, e.site, "direct", None) for e in self.direct_edges]
        out += [(e.caller, e.callee, e.site, "indirect", e.level) for e in self.indirect_edges]
        return sorted(out, key=lambda t: (t[0], t[2], t[1], t[3], t[4] or ""))

    def successors(self, name: str) -> list[str]:
        return sorted({e[1] for e in self.edges() if e[0] == name})

    def callers(self, name: str) -> list[tuple[str, int, str]]:
        """``(caller, site, kind)`` for every edge into ``name``."""
        return [(e[0], e[2], e[3]) for e in self.edges() if e[1] == name]

    def reachable(self, root: str) -> list[str]:
        seen = {root}
        order = [root]
        queue = deque([root])
        adjacency = self._adjacency()
        while queue:
            cur = queue.popleft()
            for nxt in adjacency.get(cur, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    order.append(nxt)
                    queue.append(nxt)
        return order

    def _adjacency(self):
        adj: dict[str, list[str]] = {}
        for caller, callee, *_ in self.edges():
            adj.setdefault(caller, [])
            if callee not in adj[caller]:
                adj[caller].append(callee)
        return adj

    def to_json(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [
                {"from": a, "to": b, "site": s, "kind": k, "level": lvl}
                for a, b, s, k, lvl in self.edges()
            ],
            "indirectSites": [
                {"function": fn, "site": sid, "level": lvl}
                for (fn, sid), lvl in sorted(self.indirect_sites.items())
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, doc: dict) -> "CallGraph":
        direct, indirect = set(), set()
        for e in doc["edges"]:
            if e["kind"] == "direct":
                direct.add(DirectEdge(e["from"], e["to"], e["site"]))
            else:
                indirect.add(IndirectEdge(e["from"], e["to"], e["site"], e["level"]))
        sites = {(s["function"], s["site"]): s["level"] for s in doc.get("indirectSites", [])}
        return cls(tuple(doc["nodes"]), frozenset(direct), frozenset(indirect), sites)


def _function_name_of(expr, fn: IrFunction, prog: IrProgram) -> str | None:
    """Canonical function name if ``expr`` denotes a function address."""
    if isinstance(expr, FuncRef):
        return prog.canonical(expr.name) if prog.knows(expr.name) else None
    if isinstance(expr, Var):
        name = expr.name
        if fn.declared_type(name) is not None or fn.defs(name):
            return None
        canon = prog.canonical(name)
        if canon in prog.functions:
            return canon
    return None


def _resolve_funcrefs(expr, fn, prog, seen=None) -> set[str] | None:
    """Function names an expression may carry, chasing local definitions.

    Returns None when some definition is not a plain function reference.
    """
    direct = _function_name_of(expr, fn, prog)
    if direct is not None:
        return {direct}
    if not isinstance(expr, Var):
        return None
    if fn.declared_type(expr.name) is not None and fn.param_index(expr.name) is not None:
        return None
    seen = seen or set()
    if expr.name in seen:
        return set()
    seen.add(expr.name)
    defs = fn.defs(expr.name)
    if not defs:
        return None
    out: set[str] = set()
    for _, stmt in defs:
        if not isinstance(stmt, Assign):
            return None
        sub = _resolve_funcrefs(stmt.rhs, fn, prog, seen)
        if sub is None:
            return None
        out |= sub
    return out


def build_direct_callgraph(prog: IrProgram) -> CallGraph:
    edges = set()
    for fn in prog.functions.values():
        for sid, stmt in fn.statements():
            if not isinstance(stmt, Call):
                continue
            if not prog.knows(stmt.callee):
                raise UnknownCallee(stmt.callee, fn.name)
            callee = prog.canonical(stmt.callee)
            if callee in prog.functions:
                edges.add(DirectEdge(fn.name, callee, sid))
    return CallGraph(tuple(prog.functions), frozenset(edges), frozenset(), {})


@dataclass
class AddressTakenInfo:
    records: frozenset
    # object types whose fields receive values we could not trace back to
    # function names; layer-two refinement is not applied to them
    open_types: frozenset
    all_open: bool = False

    def functions(self) -> set[str]:
        return {r.function for r in self.records}

    def stored_in(self, obj_type: str) -> set[str]:
        return {r.function for r in self.records if r.stored_in_type == obj_type}

    def is_open(self, obj_type: str) -> bool:
        return self.all_open or obj_type in self.open_types


def analyze_address_taken(prog: IrProgram, macros=None) -> AddressTakenInfo:
    """Address-taken records plus the object types left open.

    The first argument of a syscall macro names a syscall, not a function,
    so it never counts as an address-taking use.
    """
    macros = default_macros() if macros is None else frozenset(macros)
    records = set()
    open_types = set()
    all_open = False
    for fn in prog.functions.values():
        for _, stmt in fn.statements():
            if isinstance(stmt, Assign):
                if isinstance(stmt.lhs, Field):
                    obj_type = fn.var_type(stmt.lhs.obj)
                    names = _resolve_funcrefs(stmt.rhs, fn, prog)
                    fn_typed = fn.expr_type(stmt.rhs) in ("fnptr", "?")
                    if names is None:
                        if fn_typed:
                            if obj_type in ("?", "ptr"):
                                all_open = True
                            else:
                                open_types.add(obj_type)
                        continue
                    for name in names:
                        if obj_type in ("?", "ptr"):
                            all_open = True
                            records.add(AddressTakenRecord(name, None))
                        else:
                            records.add(AddressTakenRecord(name, obj_type))
                else:
                    name = _function_name_of(stmt.rhs, fn, prog)
                    if name is not None:
                        records.add(AddressTakenRecord(name, None))
            elif isinstance(stmt, (Call, ICall)):
                args = stmt.args
                if isinstance(stmt, Call) and stmt.callee in macros:
                    args = args[1:]
                for arg in args:
                    name = _function_name_of(arg, fn, prog)
                    if name is not None:
                        records.add(AddressTakenRecord(name, None))
    return AddressTakenInfo(frozenset(records), frozenset(open_types), all_open)


def collect_address_taken(prog: IrProgram, macros=None) -> set[AddressTakenRecord]:
    return set(analyze_address_taken(prog, macros).records)


def _signature_matches(site_fn: IrFunction, site: ICall, cand: IrFunction) -> bool:
    if len(cand.params) != len(site.args):
        return False
    for arg, param in zip(site.args, cand.params):
        tag = site_fn.expr_type(arg)
        if tag != "?" and param.type != "?" and tag != param.type:
            return False
    if site.lhs is not None and not cand.returns_value():
        return False
    return True


def candidate_sets(prog: IrProgram, info: AddressTakenInfo, fn: IrFunction, site: ICall) -> dict:
    """Candidate callees for one indirect callsite at every refinement level."""
    taken = sorted(n for n in info.functions() if n in prog.functions)
    typed = [n for n in taken if _signature_matches(fn, site, prog.functions[n])]
    out = {"address-taken": taken, "type-matched": typed, "object-refined": None}
    if site.obj_type and not info.is_open(site.obj_type):
        stored = info.stored_in(site.obj_type)
        out["object-refined"] = [n for n in typed if n in stored]
    return out


def resolve_indirect_calls(prog: IrProgram, at_set=None, macros=None) -> CallGraph:
    if at_set is None:
        info = analyze_address_taken(prog, macros)
    elif isinstance(at_set, AddressTakenInfo):
        info = at_set
    else:
        info = AddressTakenInfo(frozenset(at_set), frozenset())
    edges = set()
    sites = {}
    for fn in prog.functions.values():
        for sid, stmt in fn.statements():
            if not isinstance(stmt, ICall):
                continue
            cands = candidate_sets(prog, info, fn, stmt)
            if cands["object-refined"] is not None:
                level, chosen = "object-refined", cands["object-refined"]
            else:
                level, chosen = "type-matched", cands["type-matched"]
            sites[(fn.name, sid)] = level
            for callee in chosen:
                edges.add(IndirectEdge(fn.name, callee, sid, level))
    return CallGraph(tuple(prog.functions), frozenset(), frozenset(edges), sites)


def merge_graphs(direct: CallGraph, indirect: CallGraph) -> CallGraph:
    nodes = list(direct.nodes)
    for n in indirect.nodes:
        if n not in nodes:
            nodes.append(n)
    for e in list(direct.direct_edges) + list(indirect.indirect_edges):
        for n in (e.caller, e.callee):
            if n not in nodes:
                nodes.append(n)
    sites = {**direct.indirect_sites, **indirect.indirect_sites}
    return CallGraph(
        tuple(nodes),
        direct.direct_edges | indirect.direct_edges,
        direct.indirect_edges | indirect.indirect_edges,
        sites,
    )


def build_callgraph(prog: IrProgram, macros=None) -> CallGraph:
    """Convenience: direct graph merged with resolved indirect edges."""
    return merge_graphs(build_direct_callgraph(prog), resolve_indirect_calls(prog, macros=macros))
