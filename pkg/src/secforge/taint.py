"""Backward taint from syscall arguments to their data sources.

Each function is summarised once per taint label: the label names the
expression where taint enters the function (a syscall argument, a call
argument, or the return value).  A summary is flow-insensitive: a local is
tainted through every definition it has.  Summaries are then stitched across
the call graph; taint that reaches a parameter climbs to the callers, and
taint that reaches a call result descends into the callee's returns with the
call site remembered so that it climbs back to the same site.
"""

from __future__ import annotations

import json
import threading
from collections import deque
from dataclasses import dataclass, field

from .data import default_macros, pointer_args
from .errors import PointerArgument
from .ir import (
    AsmSyscall, Assign, BinOp, Call, CharAt, Cond, Const, Field, FuncRef, ICall, IrFunction,
    IrProgram, Return, Switch, Var, build_function_cfg, expr_vars,
)
from .ir import POINTER_TYPES

MAX_CALLER_DEPTH = 32


def node_key(node) -> str:
    return json.dumps(node)


@dataclass
class FunctionSummary:
    """Intra-function piece of a dependency graph for one taint label."""

    root: tuple
    nodes: frozenset
    edges: frozenset  # (src, dst, label)
    params: frozenset  # parameter indices reached
    calls: frozenset  # (site, callee-or-None) whose results are tainted
    conds: frozenset  # recorded cond/switch statement ids


@dataclass
class DataDependencyGraph:
    api: str
    function: str
    site: int
    syscall: str
    arg_index: int
    nodes: set = field(default_factory=set)
    edges: set = field(default_factory=set)
    recorded_conds: set = field(default_factory=set)
    crossings: set = field(default_factory=set)  # (direction, caller, site, callee, index)
    unknown_source: bool = False
    notes: list = field(default_factory=list)

    @property
    def root(self):
        return ("syscall-arg", self.function, self.site, self.arg_index)

    def leaves(self) -> list:
        has_in = {dst for _, dst, _ in self.edges}
        return sorted((n for n in self.nodes if n not in has_in), key=node_key)

    def preds(self, node) -> list:
        return sorted(((src, label) for src, dst, label in self.edges if dst == node), key=lambda t: (node_key(t[0]), t[1]))

    def to_json(self) -> dict:
        return {
            "api": self.api,
            "site": [self.function, self.site],
            "syscall": self.syscall,
            "argIndex": self.arg_index,
            "nodes": sorted((list(n) for n in self.nodes), key=json.dumps),
            "edges": sorted(([list(a), list(b), lbl] for a, b, lbl in self.edges), key=json.dumps),
            "recordedConds": sorted(list(c) for c in self.recorded_conds),
            "crossings": sorted(list(c) for c in self.crossings),
            "unknownSource": self.unknown_source,
        }

    def canonical(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass
class SourceClassification:
    kind: str  # all-determined | has-object-field | unknown
    sources: list


def classify_sources(ddg: DataDependencyGraph) -> SourceClassification:
    leaves = ddg.leaves()
    kinds = {n[0] for n in leaves}
    if ddg.unknown_source or not kinds <= {"constant", "api-arg", "object-field"}:
        return SourceClassification("unknown", leaves)
    if "object-field" in kinds:
        return SourceClassification("has-object-field", leaves)
    return SourceClassification("all-determined", leaves)


class TaintCache:
    """Grow-only memo of function summaries keyed by (function, label)."""

    def __init__(self):
        self._data: dict = {}
        self._lock = threading.Lock()
        self.computations = 0

    def get(self, key):
        with self._lock:
            return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            self.computations += 1
            # keep the first complete entry; identical by construction
            return self._data.setdefault(key, value)

    def merge(self, other: "TaintCache"):
        with other._lock:
            items = list(other._data.items())
        with self._lock:
            for k, v in items:
                self._data.setdefault(k, v)

    def __len__(self):
        with self._lock:
            return len(self._data)


def _label_expr(fn: IrFunction, label, macros):
    """Expression(s) where a taint label enters ``fn``."""
    kind = label[0]
    if kind == "ret":
        return [(sid, s.value) for sid, s in fn.statements() if isinstance(s, Return) and s.value is not None]
    sid, k = label[1], label[2]
    stmt = fn.statement(sid)
    if kind == "sysarg":
        if isinstance(stmt, AsmSyscall):
            return [(sid, stmt.args[k])]
        if isinstance(stmt, Call) and stmt.callee in macros:
            return [(sid, stmt.args[k + 1])]
    if kind == "callarg":
        return [(sid, stmt.args[k])]
    raise KeyError(label)


def _label_root(fn_name, label):
    if label[0] == "sysarg":
        return ("syscall-arg", fn_name, label[1], label[2])
    if label[0] == "callarg":
        return ("call-arg", fn_name, label[1], label[2])
    return ("ret", fn_name)


def summarize(fn: IrFunction, label, prog: IrProgram, macros) -> FunctionSummary:
    root = _label_root(fn.name, label)
    nodes = {root}
    edges = set()
    params = set()
    calls = set()
    tainted_vars = set()
    work = deque()

    def connect(expr, sid, dst, lbl="data"):
        if isinstance(expr, Const):
            src = ("constant", expr.value)
        elif isinstance(expr, FuncRef):
            src = ("constant", "&" + expr.name)
        elif isinstance(expr, Var):
            src = ("local-var", fn.name, expr.name)
            if expr.name not in tainted_vars:
                tainted_vars.add(expr.name)
                work.append(expr.name)
        elif isinstance(expr, Field):
            src = ("object-field", fn.var_type(expr.obj), expr.field)
        elif isinstance(expr, CharAt):
            src = ("calc", fn.name, sid, f"[{expr.index}]")
            nodes.add(src)
            connect(Var(expr.var), sid, src, "base")
        elif isinstance(expr, BinOp):
            src = ("calc", fn.name, sid, expr.op)
            nodes.add(src)
            connect(expr.left, sid, src, "lhs")
            connect(expr.right, sid, src, "rhs")
        else:
            src = ("opaque", fn.name, sid, "expr")
        nodes.add(src)
        edges.add((src, dst, lbl))

    for sid, expr in _label_expr(fn, label, macros):
        connect(expr, sid, root)

    while work:
        var = work.popleft()
        vnode = ("local-var", fn.name, var)
        idx = fn.param_index(var)
        if idx is not None:
            pnode = ("fn-arg", fn.name, idx)
            nodes.add(pnode)
            edges.add((pnode, vnode, "data"))
            params.add(idx)
        defs = fn.defs(var)
        if idx is None and not defs:
            src = ("opaque", fn.name, -1, "undefined " + var)
            nodes.add(src)
            edges.add((src, vnode, "data"))
        for sid, stmt in defs:
            if isinstance(stmt, Assign):
                connect(stmt.rhs, sid, vnode)
            elif isinstance(stmt, Call) and stmt.callee not in macros and prog.canonical(stmt.callee) in prog.functions:
                callee = prog.canonical(stmt.callee)
                cnode = ("call-ret", fn.name, sid, callee)
                nodes.add(cnode)
                edges.add((cnode, vnode, "data"))
                calls.add((sid, callee))
            elif isinstance(stmt, ICall):
                cnode = ("call-ret", fn.name, sid, "*")
                nodes.add(cnode)
                edges.add((cnode, vnode, "data"))
                calls.add((sid, None))
            else:
                what = "syscall" if isinstance(stmt, AsmSyscall) or (isinstance(stmt, Call) and stmt.callee in macros) else "extern"
                src = ("opaque", fn.name, sid, what)
                nodes.add(src)
                edges.add((src, vnode, "data"))

    # conditional statements: tainted scrutinee, or a tainted definition
    # reachable from the branch
    cfg = build_function_cfg(fn)
    def_sites = {sid for v in tainted_vars for sid, _ in fn.defs(v)}
    def_sites |= {sid for sid, _ in _label_expr(fn, label, macros)}
    conds = set()
    for sid, stmt in fn.statements():
        if isinstance(stmt, Cond):
            scrut = expr_vars(stmt.left) | expr_vars(stmt.right)
        elif isinstance(stmt, Switch):
            scrut = expr_vars(stmt.scrutinee)
        else:
            continue
        if scrut & tainted_vars or _reaches(cfg, sid, def_sites):
            conds.add(sid)
    return FunctionSummary(root, frozenset(nodes), frozenset(edges), frozenset(params), frozenset(calls), frozenset(conds))


def _reaches(cfg, start, targets) -> bool:
    seen = set()
    stack = list(cfg.successors(start))
    while stack:
        n = stack.pop()
        if n in targets:
            return True
        if n in seen:
            continue
        seen.add(n)
        stack.extend(cfg.successors(n))
    return False


def _expr_is_pointer(fn: IrFunction, expr) -> bool:
    return fn.expr_type(expr) in POINTER_TYPES


def backward_taint(api: str, site, arg_index: int, prog: IrProgram, graph, cache: TaintCache | None = None,
                   macros=None, max_depth: int = MAX_CALLER_DEPTH) -> DataDependencyGraph:
    """Dependency graph of syscall argument ``arg_index`` at ``site`` seen from ``api``."""
    macros = default_macros() if macros is None else frozenset(macros)
    cache = cache if cache is not None else TaintCache()
    if arg_index in pointer_args().get(site.syscall, ()):
        raise PointerArgument(site.key, arg_index)
    fn0 = prog.functions[site.function]
    if arg_index >= len(site.args):
        raise IndexError(f"{site.syscall} site has {len(site.args)} arguments")
    if _expr_is_pointer(fn0, site.args[arg_index]):
        raise PointerArgument(site.key, arg_index)

    root_fn = prog.canonical(api)
    reach = set(graph.reachable(root_fn))
    ddg = DataDependencyGraph(api, site.function, site.site_id, site.syscall, arg_index)
    root = ddg.root
    ddg.nodes.add(root)

    if site.site_id < 0:
        # wrapper: the argument is the parameter itself
        start = [(site.function, ("param", arg_index), root, (), 0)]
    else:
        start = [(site.function, ("sysarg", site.site_id, arg_index), root, (), 0)]

    callers_of: dict[str, list] = {}
    for caller, callee, sid, kind, level in graph.edges():
        callers_of.setdefault(callee, []).append((caller, sid))
    indirect_at: dict[tuple, list] = {}
    for caller, callee, sid, kind, level in graph.edges():
        if kind == "indirect":
            indirect_at.setdefault((caller, sid), []).append(callee)

    visited = set()
    work = deque(start)
    while work:
        fn_name, label, attach, context, climbed = work.popleft()
        state = (fn_name, label, attach, context)
        if state in visited:
            continue
        visited.add(state)
        if len(context) > max_depth:
            ddg.unknown_source = True
            ddg.notes.append(f"call depth bound exceeded in {fn_name}")
            continue
        fn = prog.functions[fn_name]

        if label[0] == "param":
            reached_params = [label[1]]
        else:
            key = (fn_name, label)
            summ = cache.get(key)
            if summ is None:
                summ = cache.put(key, summarize(fn, label, prog, macros))
            ddg.nodes |= summ.nodes
            ddg.edges |= summ.edges
            if summ.root != attach:
                ddg.edges.add((summ.root, attach, "data"))
            ddg.recorded_conds |= {(fn_name, c) for c in summ.conds}
            reached_params = sorted(summ.params)
            for sid, callee in sorted(summ.calls, key=lambda t: (t[0], t[1] or "")):
                cnode = ("call-ret", fn_name, sid, callee or "*")
                targets = [callee] if callee else sorted(indirect_at.get((fn_name, sid), []))
                if not targets:
                    src = ("opaque", fn_name, sid, "unresolved indirect call")
                    ddg.nodes.add(src)
                    ddg.edges.add((src, cnode, "data"))
                for tgt in targets:
                    tfn = prog.functions[tgt]
                    if not tfn.has_body:
                        src = ("opaque", tgt, -1, "no body")
                        ddg.nodes.add(src)
                        ddg.edges.add((src, cnode, "data"))
                        continue
                    ddg.crossings.add(("down", fn_name, sid, tgt, -1))
                    work.append((tgt, ("ret",), cnode, context + ((fn_name, sid),), climbed))

        for idx in reached_params:
            pnode = ("fn-arg", fn_name, idx)
            ddg.nodes.add(pnode)
            if label[0] == "param":
                ddg.edges.add((pnode, attach, "data"))
            if context:
                caller, sid = context[-1]
                cfn = prog.functions[caller]
                stmt = cfn.statement(sid)
                if idx >= len(stmt.args):
                    _opaque_param(ddg, pnode, "missing actual argument")
                    continue
                ddg.crossings.add(("up", caller, sid, fn_name, idx))
                work.append((caller, ("callarg", sid, idx), pnode, context[:-1], climbed))
                continue
            if fn_name == root_fn:
                anode = ("api-arg", api, idx)
                ddg.nodes.add(anode)
                ddg.edges.add((anode, pnode, "data"))
                continue
            callers = [(c, s) for c, s in callers_of.get(fn_name, []) if c in reach]
            if not callers:
                _opaque_param(ddg, pnode, "no caller reachable from the API")
                continue
            if climbed >= max_depth:
                ddg.unknown_source = True
                ddg.notes.append(f"caller depth bound exceeded above {fn_name}")
                continue
            for caller, sid in sorted(callers):
                stmt = prog.functions[caller].statement(sid)
                if idx >= len(stmt.args):
                    _opaque_param(ddg, pnode, "missing actual argument")
                    continue
                ddg.crossings.add(("up", caller, sid, fn_name, idx))
                work.append((caller, ("callarg", sid, idx), pnode, (), climbed + 1))

    return ddg


def _opaque_param(ddg, pnode, why):
    src = ("opaque", pnode[1], -1, why)
    ddg.nodes.add(src)
    ddg.edges.add((src, pnode, "data"))


def taint_site_args(api: str, site, prog, graph, cache=None, macros=None) -> dict:
    """arg index -> DDG for every non-pointer argument of ``site``."""
    out = {}
    for k in range(len(site.args)):
        try:
            out[k] = backward_taint(api, site, k, prog, graph, cache, macros)
        except PointerArgument:
            continue
    return out
