"""Intra-procedural symbolic execution.

Every parameter starts as a symbol.  All paths through the statement CFG are
explored, forking on conditions and switches; a path carries the list of
guards taken so far.  The value reaching each tracked slot (call arguments,
syscall arguments and numbers, the return value) is recorded per path, which
gives a guarded-value relation from parameters to slot values.  Relations of
already summarised callees are substituted at call statements.

Constraint checks are concrete: a guard is only decided when it mentions no
symbol.  Precise per-input answers come from evaluating the relation on every
value of the input domain.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass

from .data import default_macros
from .ir import (
    AsmSyscall, Assign, BinOp, Call, CharAt, Cond, Const, Field, FuncRef, Goto, ICall,
    IrFunction, IrProgram, Return, Switch, Var, build_function_cfg,
)

MAX_DEPTH = 64
PATH_BUDGET = 4096
LOOP_BOUND = 16
MASK64 = (1 << 64) - 1


class Unknown(Exception):
    """Raised when a concrete evaluation meets an undefined value."""


# ---------------------------------------------------------------------------
# symbolic values


@dataclass(frozen=True)
class Sym:
    index: int


@dataclass(frozen=True)
class SConst:
    value: int | str


@dataclass(frozen=True)
class SCharAt:
    base: object
    index: int


@dataclass(frozen=True)
class SBin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Undef:
    why: str = ""


def depth(v) -> int:
    if isinstance(v, SBin):
        return 1 + max(depth(v.left), depth(v.right))
    if isinstance(v, SCharAt):
        return 1 + depth(v.base)
    return 0


def syms_of(v) -> set[int]:
    if isinstance(v, Sym):
        return {v.index}
    if isinstance(v, SBin):
        return syms_of(v.left) | syms_of(v.right)
    if isinstance(v, SCharAt):
        return syms_of(v.base)
    return set()


def has_undef(v) -> bool:
    if isinstance(v, Undef):
        return True
    if isinstance(v, SBin):
        return has_undef(v.left) or has_undef(v.right)
    if isinstance(v, SCharAt):
        return has_undef(v.base)
    return False


def _cdiv(a, b):
    if b == 0:
        raise Unknown("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _cmod(a, b):
    return a - b * _cdiv(a, b)


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _cdiv,
    "%": _cmod,
    "&": lambda a, b: a & b,
    "|": lambda a, b: a | b,
    "^": lambda a, b: a ^ b,
    "<<": lambda a, b: a << b if 0 <= b < 64 else 0,
    ">>": lambda a, b: a >> b if 0 <= b < 64 else 0,
}

_CMP = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}

NEGATE = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


def char_at(s, index: int) -> int:
    if not isinstance(s, str):
        raise Unknown("character index of a non-string")
    return ord(s[index]) if 0 <= index < len(s) else 0


def apply_binop(op: str, a, b):
    if not isinstance(a, int) or not isinstance(b, int):
        raise Unknown(f"arithmetic {op} on non-integers")
    return _ARITH[op](a, b)


def compare(op: str, a, b) -> bool:
    if isinstance(a, str) or isinstance(b, str):
        if op in ("==", "!="):
            return _CMP[op](a, b)
        raise Unknown("ordering comparison on strings")
    return _CMP[op](a, b)


def mk_bin(op, left, right):
    """Smart constructor: folds constants, caps tree depth."""
    if isinstance(left, Undef) or isinstance(right, Undef):
        return Undef("operand")
    if isinstance(left, SConst) and isinstance(right, SConst):
        try:
            return SConst(apply_binop(op, left.value, right.value))
        except Unknown:
            return Undef(op)
    node = SBin(op, left, right)
    if depth(node) > MAX_DEPTH:
        return Undef("depth")
    return node


def mk_char_at(base, index):
    if isinstance(base, Undef):
        return base
    if isinstance(base, SConst):
        try:
            return SConst(char_at(base.value, index))
        except Unknown:
            return Undef("charAt")
    return SCharAt(base, index)


def evaluate(v, inputs):
    """Concrete value of ``v`` with ``inputs[i]`` bound to ``Sym(i)``."""
    if isinstance(v, SConst):
        return v.value
    if isinstance(v, Sym):
        if v.index >= len(inputs) or inputs[v.index] is None:
            raise Unknown(f"unbound symbol {v.index}")
        return inputs[v.index]
    if isinstance(v, SCharAt):
        return char_at(evaluate(v.base, inputs), v.index)
    if isinstance(v, SBin):
        return apply_binop(v.op, evaluate(v.left, inputs), evaluate(v.right, inputs))
    raise Unknown(getattr(v, "why", "undefined"))


def substitute(v, binding):
    """Replace ``Sym(i)`` with ``binding[i]``."""
    if isinstance(v, Sym):
        return binding.get(v.index, Undef("unbound"))
    if isinstance(v, SCharAt):
        return mk_char_at(substitute(v.base, binding), v.index)
    if isinstance(v, SBin):
        return mk_bin(v.op, substitute(v.left, binding), substitute(v.right, binding))
    return v


# ---------------------------------------------------------------------------
# guards and relations


@dataclass(frozen=True)
class Guard:
    op: str
    left: object
    right: object

    def decide(self, inputs=()):
        """True/False, or None when the guard cannot be decided."""
        try:
            return compare(self.op, evaluate(self.left, inputs), evaluate(self.right, inputs))
        except Unknown:
            return None

    def negated(self) -> "Guard":
        return Guard(NEGATE[self.op], self.left, self.right)

    def substitute(self, binding) -> "Guard":
        return Guard(self.op, substitute(self.left, binding), substitute(self.right, binding))

    def syms(self):
        return syms_of(self.left) | syms_of(self.right)


@dataclass(frozen=True)
class GuardedValue:
    guards: tuple
    value: object


@dataclass(frozen=True)
class Relation:
    entries: tuple  # of GuardedValue

    def syms(self) -> set[int]:
        out = set()
        for gv in self.entries:
            out |= syms_of(gv.value)
            for g in gv.guards:
                out |= g.syms()
        return out

    def value_syms(self) -> set[int]:
        out = set()
        for gv in self.entries:
            out |= syms_of(gv.value)
        return out

    def has_undef(self) -> bool:
        for gv in self.entries:
            if has_undef(gv.value) or any(has_undef(g.left) or has_undef(g.right) for g in gv.guards):
                return True
        return False

    def undef_value(self) -> bool:
        return any(has_undef(gv.value) for gv in self.entries)

    def outputs(self, inputs) -> set | None:
        """Possible outputs for one concrete input vector; None when unknown.

        Guards that cannot be decided are assumed satisfiable.
        """
        out = set()
        for gv in self.entries:
            if any(g.decide(inputs) is False for g in gv.guards):
                continue
            try:
                out.add(evaluate(gv.value, inputs))
            except Unknown:
                return None
        return out

    def substitute(self, binding_rel: dict) -> "Relation":
        """Compose: each ``Sym(i)`` is replaced by relation ``binding_rel[i]``."""
        used = sorted(self.syms())
        choices = [binding_rel[i].entries for i in used]
        out = []
        for combo in itertools.product(*choices):
            binding = {i: gv.value for i, gv in zip(used, combo)}
            guards = []
            for gv in combo:
                guards.extend(gv.guards)
            for gv in self.entries:
                new_guards = tuple(guards) + tuple(g.substitute(binding) for g in gv.guards)
                if any(g.decide() is False for g in new_guards):
                    continue
                out.append(GuardedValue(new_guards, substitute(gv.value, binding)))
        return Relation(tuple(dict.fromkeys(out)))

    def is_identity(self):
        """Index ``j`` when the relation is exactly ``Sym(j)`` unguarded."""
        if len(self.entries) == 1 and not self.entries[0].guards and isinstance(self.entries[0].value, Sym):
            return self.entries[0].value.index
        return None

    def to_json(self):
        return [
            {"guards": [[g.op, sym_to_json(g.left), sym_to_json(g.right)] for g in gv.guards],
             "value": sym_to_json(gv.value)}
            for gv in self.entries
        ]

    @classmethod
    def from_json(cls, doc) -> "Relation":
        return cls(tuple(
            GuardedValue(tuple(Guard(op, sym_from_json(a), sym_from_json(b)) for op, a, b in e["guards"]),
                         sym_from_json(e["value"]))
            for e in doc
        ))


def sym_to_json(v):
    if isinstance(v, Sym):
        return ["sym", v.index]
    if isinstance(v, SConst):
        return ["const", v.value]
    if isinstance(v, SCharAt):
        return ["charAt", sym_to_json(v.base), v.index]
    if isinstance(v, SBin):
        return ["bin", v.op, sym_to_json(v.left), sym_to_json(v.right)]
    return ["undef", v.why]


def sym_from_json(doc):
    tag = doc[0]
    if tag == "sym":
        return Sym(doc[1])
    if tag == "const":
        return SConst(doc[1])
    if tag == "charAt":
        return SCharAt(sym_from_json(doc[1]), doc[2])
    if tag == "bin":
        return SBin(doc[1], sym_from_json(doc[2]), sym_from_json(doc[3]))
    return Undef(doc[1])


# ---------------------------------------------------------------------------
# summaries


@dataclass(frozen=True)
class SlotSummary:
    kind: str  # determined-by | constant | undetermined
    arg: int | None = None
    table: tuple = ()  # ((input, (outputs...)), ...) in domain order
    values: tuple = ()

    def table_dict(self) -> dict:
        return {k: (v[0] if len(v) == 1 else set(v)) for k, v in self.table}


@dataclass(frozen=True)
class ArgRelationSummary:
    function: str
    relations: tuple  # ((slot, Relation), ...) in slot order
    complete: bool = True
    reason: str = ""

    def relation(self, slot) -> Relation | None:
        for s, r in self.relations:
            if s == slot:
                return r
        return None

    def slots(self):
        return [s for s, _ in self.relations]


def int_domain(rel: Relation, j: int) -> list[int]:
    """Comparison constants around symbol ``j`` plus their neighbours."""
    consts = {0}
    for gv in rel.entries:
        for g in gv.guards:
            if j in g.syms():
                for side in (g.left, g.right):
                    if isinstance(side, SConst) and isinstance(side.value, int):
                        consts |= {side.value - 1, side.value, side.value + 1}
    return sorted(consts)


def classify_slot(rel: Relation, param_types, domains: dict) -> SlotSummary:
    if rel.undef_value():
        return SlotSummary("undetermined")
    syms = rel.syms()
    if not syms:
        outs = rel.outputs(())
        if outs is None:
            return SlotSummary("undetermined")
        return SlotSummary("constant", values=tuple(sorted(outs, key=repr)))
    if len(syms) > 1:
        return SlotSummary("undetermined")
    j = next(iter(syms))
    ptype = param_types[j] if j < len(param_types) else "?"
    domain = domains.get(ptype) if ptype in ("str",) else None
    if domain is None:
        domain = int_domain(rel, j)
    inputs = [None] * (j + 1)
    table = []
    for value in domain:
        inputs[j] = value
        outs = rel.outputs(inputs)
        if outs is None:
            return SlotSummary("undetermined")
        if outs:
            table.append((value, tuple(sorted(outs, key=repr))))
    return SlotSummary("determined-by", arg=j, table=tuple(table))


class _Truncated(Exception):
    pass


def symexec_function(fn: IrFunction, cfg=None, domains: dict | None = None, *, prog: IrProgram | None = None,
                     callee_summary=None, macros=None, path_budget: int = PATH_BUDGET,
                     loop_bound: int = LOOP_BOUND) -> ArgRelationSummary:
    """Summarise ``fn`` as guarded relations per output slot.

    ``callee_summary(name)`` returns an :class:`ArgRelationSummary` for a
    callee or None when it is unavailable (the call result is then undefined).
    """
    cfg = cfg or build_function_cfg(fn)
    macros = default_macros() if macros is None else frozenset(macros)
    stmts = dict(fn.statements())
    slots: dict[tuple, list] = {}
    paths = [0]
    param_names = {p.name: i for i, p in enumerate(fn.params)}

    def value_of(expr, env):
        if isinstance(expr, Const):
            return SConst(expr.value)
        if isinstance(expr, Var):
            if expr.name in env:
                return env[expr.name]
            if expr.name in param_names:
                return Sym(param_names[expr.name])
            return Undef("var " + expr.name)
        if isinstance(expr, CharAt):
            return mk_char_at(value_of(Var(expr.var), env), expr.index)
        if isinstance(expr, BinOp):
            return mk_bin(expr.op, value_of(expr.left, env), value_of(expr.right, env))
        if isinstance(expr, Field):
            return Undef(f"field {expr.obj}.{expr.field}")
        if isinstance(expr, FuncRef):
            return SConst("&" + expr.name)
        return Undef("expr")

    def record(slot, guards, value):
        slots.setdefault(slot, []).append(GuardedValue(tuple(guards), value))

    def branch(guards, guard, env, visits, target):
        decided = guard.decide()
        if decided is False:
            return
        new_guards = guards if decided is True else guards + [guard]
        run(target, dict(env), new_guards, dict(visits))

    def run(node, env, guards, visits):
        while True:
            if node is None:
                record(("ret",), guards, Undef("fell off"))
                paths[0] += 1
                break
            visits[node] = visits.get(node, 0) + 1
            if visits[node] > loop_bound:
                raise _Truncated("loop bound")
            stmt = stmts[node]
            succ = cfg.successors(node)
            if isinstance(stmt, Assign):
                if isinstance(stmt.lhs, str):
                    env[stmt.lhs] = value_of(stmt.rhs, env)
            elif isinstance(stmt, Call):
                args = [value_of(a, env) for a in stmt.args]
                if stmt.callee in macros:
                    if args:
                        record(("nr", node), guards, args[0])
                    for k, a in enumerate(args[1:]):
                        record(("sysarg", node, k), guards, a)
                    if stmt.lhs:
                        env[stmt.lhs] = Undef("syscall result")
                else:
                    for k, a in enumerate(args):
                        record(("arg", node, k), guards, a)
                    if stmt.lhs:
                        summ = callee_summary(stmt.callee) if callee_summary else None
                        ret = summ.relation(("ret",)) if summ is not None and summ.complete else None
                        if ret is None:
                            env[stmt.lhs] = Undef("call " + stmt.callee)
                        else:
                            binding = {i: a for i, a in enumerate(args)}
                            rest = succ[0] if succ else None
                            for gv in ret.entries:
                                new_guards = [g.substitute(binding) for g in gv.guards]
                                if any(g.decide() is False for g in new_guards):
                                    continue
                                kept = [g for g in new_guards if g.decide() is not True]
                                env2 = dict(env)
                                env2[stmt.lhs] = substitute(gv.value, binding)
                                run(rest, env2, guards + kept, dict(visits))
                            return
            elif isinstance(stmt, ICall):
                for k, a in enumerate(stmt.args):
                    record(("arg", node, k), guards, value_of(a, env))
                if stmt.lhs:
                    env[stmt.lhs] = Undef("indirect call")
            elif isinstance(stmt, AsmSyscall):
                record(("nr", node), guards, value_of(stmt.nr, env))
                for k, a in enumerate(stmt.args):
                    record(("sysarg", node, k), guards, value_of(a, env))
                if stmt.lhs:
                    env[stmt.lhs] = Undef("syscall result")
            elif isinstance(stmt, Cond):
                guard = Guard(stmt.op, value_of(stmt.left, env), value_of(stmt.right, env))
                then_node, else_node = succ
                branch(guards, guard, env, visits, then_node)
                branch(guards, guard.negated(), env, visits, else_node)
                return
            elif isinstance(stmt, Switch):
                scrut = value_of(stmt.scrutinee, env)
                for (const, _), target in zip(stmt.cases, succ):
                    branch(guards, Guard("==", scrut, SConst(const.value)), env, visits, target)
                default_guards = list(guards)
                for const, _ in stmt.cases:
                    g = Guard("!=", scrut, SConst(const.value))
                    decided = g.decide()
                    if decided is False:
                        default_guards = None
                        break
                    if decided is None:
                        default_guards.append(g)
                if default_guards is not None:
                    run(succ[-1], dict(env), default_guards, dict(visits))
                return
            elif isinstance(stmt, Return):
                value = value_of(stmt.value, env) if stmt.value is not None else Undef("void")
                record(("ret",), guards, value)
                paths[0] += 1
                if paths[0] > path_budget:
                    raise _Truncated("path budget")
                return
            elif isinstance(stmt, Goto):
                pass
            node = succ[0] if succ else None

    if not fn.has_body:
        return ArgRelationSummary(fn.name, (), complete=True)
    try:
        run(cfg.entry, {}, [], {})
    except _Truncated as exc:
        return ArgRelationSummary(fn.name, (), complete=False, reason=str(exc))
    except RecursionError:
        return ArgRelationSummary(fn.name, (), complete=False, reason="recursion")
    relations = tuple(
        (slot, Relation(tuple(dict.fromkeys(entries))))
        for slot, entries in sorted(slots.items(), key=lambda kv: _slot_key(kv[0]))
    )
    return ArgRelationSummary(fn.name, relations)


def _slot_key(slot):
    kind = slot[0]
    return (kind,) + tuple(slot[1:])


def summarize_slots(summary: ArgRelationSummary, fn: IrFunction, domains: dict) -> dict:
    """slot -> SlotSummary, the tabulated view of a relation summary."""
    if not summary.complete:
        return {}
    return {slot: classify_slot(rel, fn.param_types, domains) for slot, rel in summary.relations}


class SymexecEngine:
    """Caches per-function summaries; callees are summarised first.

    Recursive call chains leave the recursive call result undefined.
    """

    def __init__(self, prog: IrProgram, domains: dict | None = None, macros=None,
                 path_budget: int = PATH_BUDGET, loop_bound: int = LOOP_BOUND):
        self.prog = prog
        self.domains = domains or {}
        self.macros = default_macros() if macros is None else frozenset(macros)
        self.path_budget = path_budget
        self.loop_bound = loop_bound
        self._cache: dict[str, ArgRelationSummary] = {}
        self._lock = threading.Lock()
        self._active = threading.local()
        self.computations = 0

    def summary(self, name: str) -> ArgRelationSummary | None:
        canon = self.prog.canonical(name)
        with self._lock:
            hit = self._cache.get(canon)
        if hit is not None:
            return hit
        fn = self.prog.functions.get(canon)
        if fn is None:
            return None
        active = getattr(self._active, "stack", None)
        if active is None:
            active = self._active.stack = []
        if canon in active:
            return None
        active.append(canon)
        try:
            result = symexec_function(
                fn, build_function_cfg(fn), self.domains, prog=self.prog,
                callee_summary=self.summary, macros=self.macros,
                path_budget=self.path_budget, loop_bound=self.loop_bound,
            )
        finally:
            active.pop()
        # the first finished result wins; later duplicates are dropped
        with self._lock:
            self.computations += 1
            self._cache.setdefault(canon, result)
            return self._cache[canon]

    def cached(self) -> dict:
        with self._lock:
            return dict(self._cache)

    def clear(self):
        with self._lock:
            self._cache.clear()


# ---------------------------------------------------------------------------
# argument mappings


@dataclass(frozen=True)
class ArgumentMapping:
    api: str
    api_arg: int | None
    syscall: str
    syscall_arg: int
    site: tuple
    kind: str  # identity | table | constant-set
    relation: Relation

    def image(self, value_set):
        """Push a binary-side ValueSet through the mapping."""
        from .valueset import ValueSet

        if self.kind == "constant-set":
            outs = self.relation.outputs(())
            return ValueSet.unknown() if not outs else ValueSet("distinct", frozenset(outs))
        if self.kind == "identity":
            return value_set
        members = value_set.enumerate()
        if members is None:
            if self.relation.value_syms():
                return ValueSet.unknown()
            # constant on every path: the input only selects among them
            outs = self.relation.outputs(())
            return ValueSet("distinct", frozenset(outs)) if outs else ValueSet.unknown()
        out = set()
        inputs = [None] * (self.api_arg + 1)
        for m in members:
            inputs[self.api_arg] = m
            outs = self.relation.outputs(inputs)
            if outs is None:
                return ValueSet.unknown()
            out |= outs
        if not out:
            return ValueSet.unknown()
        return ValueSet("distinct", frozenset(out))

    def table(self, domain) -> dict:
        """Input value -> sorted output list, for inputs that reach the site."""
        out = {}
        for value in domain:
            inputs = [None] * ((self.api_arg or 0) + 1)
            if self.api_arg is not None:
                inputs[self.api_arg] = value
            outs = self.relation.outputs(inputs)
            if outs:
                out[value] = sorted(outs, key=repr)
        return out

    def to_json(self) -> dict:
        return {
            "api": self.api,
            "apiArg": self.api_arg,
            "syscall": self.syscall,
            "syscallArg": self.syscall_arg,
            "site": list(self.site),
            "kind": self.kind,
            "relation": self.relation.to_json(),
        }

    @classmethod
    def from_json(cls, doc) -> "ArgumentMapping":
        return cls(doc["api"], doc["apiArg"], doc["syscall"], doc["syscallArg"], tuple(doc["site"]),
                   doc["kind"], Relation.from_json(doc["relation"]))


def site_relation(engine: SymexecEngine, site, slot) -> Relation | None:
    """Relation of a syscall site's slot over its function's parameters."""
    if site.site_id < 0:
        # wrapper: the syscall argument is the parameter itself
        if slot[0] == "sysarg":
            return Relation((GuardedValue((), Sym(slot[2])),))
        return Relation((GuardedValue((), SConst(site.syscall)),))
    summary = engine.summary(site.function)
    if summary is None or not summary.complete:
        return None
    return summary.relation(slot)


def lift_to_api(engine: SymexecEngine, graph, api_root: str, function: str, rel: Relation,
                max_depth: int = 32) -> Relation | None:
    """Compose ``rel`` (over ``function``'s params) up the call chains to the API."""
    reach = set(graph.reachable(api_root))

    def up(fn_name, relation, depth, stack):
        if not relation.syms():
            return relation
        if fn_name == api_root:
            return relation
        if depth > max_depth:
            return None
        parts = []
        callers = [(c, s) for c, s, _ in graph.callers(fn_name) if c in reach]
        if not callers:
            return None
        for caller, sid in callers:
            if caller in stack:
                return None
            summ = engine.summary(caller)
            if summ is None or not summ.complete:
                return None
            binding = {}
            for i in relation.syms():
                arg_rel = summ.relation(("arg", sid, i))
                if arg_rel is None:
                    return None
                binding[i] = arg_rel
            lifted = up(caller, relation.substitute(binding), depth + 1, stack | {caller})
            if lifted is None:
                return None
            parts.extend(lifted.entries)
        return Relation(tuple(dict.fromkeys(parts)))

    return up(function, rel, 0, frozenset({function}))


def resolve_arg_mapping(ddg, engine: SymexecEngine, graph, site, api: str, api_root: str | None = None):
    """ArgumentMapping for one DDG root, or None when the argument stays free.

    None is returned when the DDG is not all-determined, when a needed
    summary is incomplete, when the lifted relation depends on more than one
    API argument, or when some path yields an undefined value.
    """
    from .taint import classify_sources

    if classify_sources(ddg).kind != "all-determined":
        return None
    k = ddg.arg_index
    rel = site_relation(engine, site, ("sysarg", site.site_id, k))
    if rel is None:
        return None
    root = api_root or engine.prog.canonical(api)
    lifted = lift_to_api(engine, graph, root, site.function, rel)
    if lifted is None or lifted.undef_value():
        return None
    syms = lifted.syms()
    if len(syms) > 1:
        return None
    if not syms:
        outs = lifted.outputs(())
        if not outs:
            return None
        return ArgumentMapping(api, None, site.syscall, k, site.key, "constant-set", lifted)
    j = next(iter(syms))
    kind = "identity" if lifted.is_identity() == j else "table"
    return ArgumentMapping(api, j, site.syscall, k, site.key, kind, lifted)


def resolve_nr_mapping(engine: SymexecEngine, graph, site, api: str, api_root: str | None = None):
    """For a dynamic site: the API argument carrying the syscall number, if any."""
    if site.site_id < 0:
        return None
    rel = site_relation(engine, site, ("nr", site.site_id))
    if rel is None:
        return None
    root = api_root or engine.prog.canonical(api)
    lifted = lift_to_api(engine, graph, root, site.function, rel)
    if lifted is None or lifted.undef_value():
        return None
    j = lifted.is_identity()
    if j is None:
        return None
    return {"site": list(site.key), "apiArg": j}
