"""Exhaustive concrete interpreters used as ground truth.

``LibraryInterpreter`` runs IR functions on concrete values.  Anything the
program does not pin down (results of syscalls and external calls, unset
object fields, strings behind unknown pointers) is forked over a small havoc
domain, so every reachable behaviour is enumerated.

``BinaryEmulator`` executes a disassembly image from its entry function.
Calls into PLT stubs are handed to the library interpreter; unsupported
instructions fork their destination register over a havoc domain.

Both are deliberately written from scratch instead of reusing the analysis
code, so that they can serve as independent oracles.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field

from .ir import (
    AsmSyscall, Assign, BinOp, Call, CharAt, Cond, Const, Field, FuncRef, Goto, ICall, IrProgram,
    Return, Switch, Var,
)

LIB_HAVOC = (0, 1, -1)
BIN_HAVOC = (0, 1, 2, 17)


class _Abort(Exception):
    """The current path cannot continue (crash or budget)."""


@dataclass(frozen=True)
class Event:
    name: str
    args: tuple

    def to_json(self) -> dict:
        return {"name": self.name, "args": list(self.args)}


@dataclass
class LibState:
    events: tuple = ()
    heap: tuple = ()  # sorted ((type, field), value) pairs
    edges: frozenset = frozenset()

    def heap_get(self, key):
        for k, v in self.heap:
            if k == key:
                return v, True
        return None, False

    def heap_set(self, key, value) -> "LibState":
        items = dict(self.heap)
        items[key] = value
        return LibState(self.events, tuple(sorted(items.items(), key=repr)), self.edges)

    def emit(self, event) -> "LibState":
        return LibState(self.events + (event,), self.heap, self.edges)

    def edge(self, caller, callee) -> "LibState":
        return LibState(self.events, self.heap, self.edges | {(caller, callee)})


def _c_div(a, b):
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _c_div,
    "%": lambda a, b: a - b * _c_div(a, b),
    "&": lambda a, b: a & b,
    "|": lambda a, b: a | b,
    "^": lambda a, b: a ^ b,
    "<<": lambda a, b: a << b if 0 <= b < 64 else 0,
    ">>": lambda a, b: a >> b if 0 <= b < 64 else 0,
}

_CMPS = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


class LibraryInterpreter:
    def __init__(self, prog: IrProgram, table: dict | None = None, macros=(), pointer_args=None,
                 string_domain=(), havoc=LIB_HAVOC, max_steps: int = 20000, max_depth: int = 64,
                 max_outcomes: int = 20000, fuel: int = 200000):
        self.prog = prog
        self.by_number = {v: k for k, v in (table or {}).items()}
        self.macros = frozenset(macros)
        self.pointer_args = pointer_args or {}
        self.string_domain = tuple(string_domain)
        self.havoc = tuple(havoc)
        self.max_steps = max_steps
        self.max_depth = max_depth
        self.max_outcomes = max_outcomes
        self.fuel = fuel
        self._fuel = fuel

    # -- public -------------------------------------------------------------

    def call_api(self, api: str, args, state: LibState | None = None) -> list:
        """All ``(state, return value)`` outcomes of calling ``api``.

        ``None`` arguments in string positions are forked over the string
        domain; other ``None`` arguments stay opaque handles.
        """
        state = state or LibState()
        self._fuel = self.fuel
        fn = self.prog.function(api)
        if fn is None:
            return [(state, self.havoc[0])]
        choices = []
        for i, p in enumerate(fn.params):
            value = args[i] if i < len(args) else None
            if p.type == "str" and value is None and self.string_domain:
                choices.append(self.string_domain)
            else:
                choices.append((value,))
        out = []
        for combo in itertools.product(*choices):
            out.extend(self._call(fn.name, list(combo), state, 0))
        return out

    def enumerate_api(self, api: str, domains: list) -> list:
        """Outcomes for every input vector in the product of ``domains``."""
        out = []
        for combo in itertools.product(*domains):
            for st, ret in self.call_api(api, list(combo)):
                out.append((combo, st, ret))
        return out

    # -- internals ----------------------------------------------------------

    def _event_arg(self, syscall, k, value):
        if k in self.pointer_args.get(syscall, ()):
            return None
        return value if isinstance(value, int) else None

    def _syscall_name(self, fn, expr, env):
        if isinstance(expr, Var) and expr.name not in env and fn.declared_type(expr.name) is None:
            name = expr.name
            return name[5:] if name.startswith("__NR_") else name
        value = self._eval(fn, expr, env)
        if isinstance(value, int):
            return self.by_number.get(value, f"nr_{value}")
        raise _Abort("bad syscall number")

    def _call(self, name, args, state, depth):
        canon = self.prog.canonical(name)
        fn = self.prog.functions.get(canon)
        if depth > self.max_depth:
            raise _Abort("call depth")
        if fn is None:
            # external function
            return [(state, h) for h in self.havoc]
        if not fn.has_body:
            if canon in self.prog.wrappers:
                sc = self.prog.wrappers[canon]
                ev = Event(sc, tuple(self._event_arg(sc, k, a) for k, a in enumerate(args)))
                state = state.emit(ev)
            return [(state, h) for h in self.havoc]
        env = {p.name: (args[i] if i < len(args) else None) for i, p in enumerate(fn.params)}
        blocks = {b.label: b for b in fn.blocks}
        order = [b.label for b in fn.blocks]
        outcomes = []
        # frames: (block index, statement index, env, state, steps)
        work = [(0, 0, env, state, 0)]
        while work:
            bi, si, env, st, steps = work.pop()
            try:
                self._run(fn, blocks, order, bi, si, env, st, steps, depth, work, outcomes)
            except _Abort:
                continue
            if len(outcomes) > self.max_outcomes:
                raise _Abort("too many outcomes")
        return outcomes

    def _unbound(self, fn, expr, env, st):
        """Reads the current environment cannot answer: locals and fields."""
        if isinstance(expr, Var):
            if expr.name in env:
                return []
            if self._is_function_name(fn, expr.name):
                return []
            return [("var", expr.name)]
        if isinstance(expr, CharAt):
            return self._unbound(fn, Var(expr.var), env, st)
        if isinstance(expr, Field):
            key = (fn.var_type(expr.obj), expr.field)
            _, present = st.heap_get(key)
            return [] if present else [("field", key)]
        if isinstance(expr, BinOp):
            return self._unbound(fn, expr.left, env, st) + self._unbound(fn, expr.right, env, st)
        return []

    def _is_function_name(self, fn, name):
        return fn.declared_type(name) is None and not fn.defs(name) and self.prog.knows(name)

    def _materialize(self, fn, exprs, env, st):
        """Fork over havoc values for every unbound read in ``exprs``."""
        needs = []
        for e in exprs:
            for u in self._unbound(fn, e, env, st):
                if u not in needs:
                    needs.append(u)
        if not needs:
            return [(env, st)]
        out = []
        for combo in itertools.product(self.havoc, repeat=len(needs)):
            env2, st2 = dict(env), st
            for (kind, key), value in zip(needs, combo):
                if kind == "var":
                    env2[key] = value
                else:
                    st2 = st2.heap_set(key, value)
            out.append((env2, st2))
        return out

    def _eval(self, fn, expr, env, st=None):
        if isinstance(expr, Const):
            return expr.value
        if isinstance(expr, FuncRef):
            return "&" + self.prog.canonical(expr.name)
        if isinstance(expr, Var):
            if expr.name in env:
                return env[expr.name]
            if self._is_function_name(fn, expr.name):
                return "&" + self.prog.canonical(expr.name)
            raise _Abort("unbound " + expr.name)
        if isinstance(expr, CharAt):
            s = self._eval(fn, Var(expr.var), env, st)
            if not isinstance(s, str):
                raise _Abort("index into non-string")
            return ord(s[expr.index]) if expr.index < len(s) else 0
        if isinstance(expr, Field):
            value, present = st.heap_get((fn.var_type(expr.obj), expr.field))
            if not present:
                raise _Abort("unset field")
            return value
        if isinstance(expr, BinOp):
            a = self._eval(fn, expr.left, env, st)
            b = self._eval(fn, expr.right, env, st)
            if not isinstance(a, int) or not isinstance(b, int):
                raise _Abort("arithmetic on non-integer")
            if expr.op in ("/", "%") and b == 0:
                raise _Abort("division by zero")
            return _OPS[expr.op](a, b)
        raise _Abort("expression")

    def _run(self, fn, blocks, order, bi, si, env, st, steps, depth, work, outcomes):
        while True:
            steps += 1
            self._fuel -= 1
            if steps > self.max_steps or self._fuel < 0:
                raise _Abort("step budget")
            block = blocks[order[bi]]
            if si >= len(block.statements):
                if bi + 1 >= len(order):
                    outcomes.append((st, None))
                    return
                bi, si = bi + 1, 0
                continue
            stmt = block.statements[si]

            if isinstance(stmt, Assign):
                forks = self._materialize(fn, [stmt.rhs], env, st)
                if len(forks) > 1:
                    for env2, st2 in forks:
                        work.append((bi, si, env2, st2, steps))
                    return
                env, st = forks[0]
                value = self._eval(fn, stmt.rhs, env, st)
                if isinstance(stmt.lhs, Field):
                    st = st.heap_set((fn.var_type(stmt.lhs.obj), stmt.lhs.field), value)
                else:
                    env = dict(env)
                    env[stmt.lhs] = value
                si += 1
                continue

            if isinstance(stmt, (Call, ICall, AsmSyscall)):
                exprs = list(stmt.args)
                if isinstance(stmt, ICall):
                    exprs.append(Var(stmt.target))
                if isinstance(stmt, AsmSyscall):
                    exprs.append(stmt.nr)
                if isinstance(stmt, Call) and stmt.callee in self.macros and stmt.args:
                    first = stmt.args[0]
                    if isinstance(first, Var) and first.name not in env and fn.declared_type(first.name) is None:
                        exprs = list(stmt.args[1:])
                if isinstance(stmt, AsmSyscall) and isinstance(stmt.nr, Var) and stmt.nr.name not in env \
                        and fn.declared_type(stmt.nr.name) is None and not fn.defs(stmt.nr.name):
                    exprs = list(stmt.args)
                forks = self._materialize(fn, exprs, env, st)
                if len(forks) > 1:
                    for env2, st2 in forks:
                        work.append((bi, si, env2, st2, steps))
                    return
                env, st = forks[0]
                results = self._invoke(fn, stmt, env, st, depth)
                rest = results[1:]
                for st2, ret in rest:
                    env2 = dict(env)
                    if stmt.lhs:
                        env2[stmt.lhs] = ret
                    work.append((bi, si + 1, env2, st2, steps))
                if not results:
                    return
                st, ret = results[0]
                if stmt.lhs:
                    env = dict(env)
                    env[stmt.lhs] = ret
                si += 1
                continue

            if isinstance(stmt, Cond):
                forks = self._materialize(fn, [stmt.left, stmt.right], env, st)
                if len(forks) > 1:
                    for env2, st2 in forks:
                        work.append((bi, si, env2, st2, steps))
                    return
                env, st = forks[0]
                a = self._eval(fn, stmt.left, env, st)
                b = self._eval(fn, stmt.right, env, st)
                if isinstance(a, int) != isinstance(b, int):
                    taken = stmt.op == "!="
                else:
                    taken = _CMPS[stmt.op](a, b)
                bi, si = order.index(stmt.then_label if taken else stmt.else_label), 0
                continue

            if isinstance(stmt, Switch):
                forks = self._materialize(fn, [stmt.scrutinee], env, st)
                if len(forks) > 1:
                    for env2, st2 in forks:
                        work.append((bi, si, env2, st2, steps))
                    return
                env, st = forks[0]
                v = self._eval(fn, stmt.scrutinee, env, st)
                label = stmt.default
                for const, lbl in stmt.cases:
                    if const.value == v:
                        label = lbl
                        break
                bi, si = order.index(label), 0
                continue

            if isinstance(stmt, Goto):
                bi, si = order.index(stmt.label), 0
                continue

            if isinstance(stmt, Return):
                if stmt.value is None:
                    outcomes.append((st, None))
                    return
                forks = self._materialize(fn, [stmt.value], env, st)
                if len(forks) > 1:
                    for env2, st2 in forks:
                        work.append((bi, si, env2, st2, steps))
                    return
                env, st = forks[0]
                outcomes.append((st, self._eval(fn, stmt.value, env, st)))
                return
            raise _Abort("unknown statement")

    @staticmethod
    def _compatible(fn, stmt, callee) -> bool:
        # calling through a pointer of the wrong function type is undefined
        if callee is None or len(callee.params) != len(stmt.args):
            return False
        for arg, p in zip(stmt.args, callee.params):
            tag = fn.expr_type(arg)
            if "?" not in (tag, p.type) and tag != p.type:
                return False
        return stmt.lhs is None or callee.returns_value()

    def _invoke(self, fn, stmt, env, st, depth):
        if isinstance(stmt, AsmSyscall):
            name = self._syscall_name(fn, stmt.nr, env)
            args = [self._eval(fn, a, env, st) for a in stmt.args]
            st = st.emit(Event(name, tuple(self._event_arg(name, k, a) for k, a in enumerate(args))))
            return [(st, h) for h in self.havoc]
        if isinstance(stmt, Call) and stmt.callee in self.macros:
            if not stmt.args:
                raise _Abort("macro without number")
            name = self._syscall_name(fn, stmt.args[0], env)
            args = [self._eval(fn, a, env, st) for a in stmt.args[1:]]
            st = st.emit(Event(name, tuple(self._event_arg(name, k, a) for k, a in enumerate(args))))
            return [(st, h) for h in self.havoc]
        args = [self._eval(fn, a, env, st) for a in stmt.args]
        if isinstance(stmt, ICall):
            target = self._eval(fn, Var(stmt.target), env, st)
            if not isinstance(target, str) or not target.startswith("&"):
                raise _Abort("call through a non-function")
            callee = target[1:]
            if not self._compatible(fn, stmt, self.prog.function(callee)):
                raise _Abort("call through an incompatible function type")
        else:
            callee = stmt.callee
        canon = self.prog.canonical(callee)
        if canon in self.prog.functions:
            st = st.edge(fn.name, canon)
        return self._call(canon, args, st, depth + 1)


# ---------------------------------------------------------------------------
# binary emulation


def _reg(token: str, arch: str):
    t = token.strip().lower()
    if arch == "a64":
        if t in ("xzr", "wzr"):
            return "zr"
        if t in ("sp", "wsp"):
            return "sp"
        if t == "lr":
            return "x30"
        if t == "fp":
            return "x29"
        m = re.fullmatch(r"[xw](\d+)", t)
        return "x" + m.group(1) if m else None
    t = {"fp": "r11", "ip": "r12", "r13": "sp", "r14": "lr", "r15": "pc"}.get(t, t)
    if t in ("sp", "lr", "pc") or re.fullmatch(r"r\d+", t):
        return t
    return None


def _imm(token: str):
    t = token.strip().lstrip("#")
    try:
        return int(t, 0)
    except ValueError:
        return None


def _lsl(ops, i):
    if len(ops) <= i:
        return 0
    m = re.fullmatch(r"lsl\s+#?(\d+)", ops[i].strip().lower())
    return int(m.group(1)) if m else 0


_COND_RE = re.compile(r"(?:b\.?(?:eq|ne|cs|hs|cc|lo|mi|pl|vs|vc|hi|ls|ge|lt|gt|le)|cbn?z|tbn?z)")


def _is_cond_branch(m, arch):
    if arch == "a32" and m.startswith("b."):
        return False
    return bool(_COND_RE.fullmatch(m))


def _pair_form(ops, arch):
    """(base, offset, pre-indexed, post increment) of a load/store pair."""
    m = re.fullmatch(r"\[\s*(\w+)\s*(?:,\s*#?(-?(?:0x)?[0-9a-fA-F]+))?\s*\](!?)", ops[0].strip())
    if not m:
        return None
    base = _reg(m.group(1), arch)
    off = int(m.group(2), 0) if m.group(2) else 0
    post = _imm(ops[1]) if len(ops) > 1 else 0
    return base, off, bool(m.group(3)), post or 0


@dataclass
class EmuPath:
    events: list = field(default_factory=list)
    api_calls: list = field(default_factory=list)
    lib_edges: set = field(default_factory=set)


class BinaryEmulator:
    EXIT_SYSCALLS = ("exit", "exit_group")

    def __init__(self, img, library: LibraryInterpreter, table: dict, pointer_args=None,
                 havoc=BIN_HAVOC, max_paths: int = 512, max_steps: int = 5000):
        self.img = img
        self.arch = img.arch
        self.lib = library
        self.by_number = {v: k for k, v in table.items()}
        self.pointer_args = pointer_args or {}
        self.havoc = tuple(havoc)
        self.max_paths = max_paths
        self.max_steps = max_steps
        self.addr_index = {}
        for fi, fn in enumerate(img.functions):
            for ii, ins in enumerate(fn.instructions):
                self.addr_index[ins.address] = (fi, ii)
        self.starts = {fn.start: fi for fi, fn in enumerate(img.functions) if fn.instructions}

    def _arg_regs(self):
        return [f"x{i}" for i in range(8)] if self.arch == "a64" else [f"r{i}" for i in range(7)]

    def run(self, entry: str = "main") -> list[EmuPath]:
        fn = self.img.function_named(entry)
        if fn is None:
            raise KeyError(entry)
        regs = {"sp": 0x7FF000}
        start = self.addr_index[fn.instructions[0].address]
        # (position, regs, memory, call stack, library state, path, steps)
        work = [(start, regs, {}, (), LibState(), EmuPath(), 0)]
        done = []
        while work:
            item = work.pop()
            try:
                self._step_path(item, work, done)
            except _Abort:
                continue
            if len(done) + len(work) > self.max_paths:
                raise RuntimeError("binary emulation path budget exceeded")
        return done

    def _read(self, regs, r):
        if r == "zr":
            return 0
        return regs.get(r, 0)

    def _load(self, mem, addr):
        if addr in mem:
            return mem[addr]
        return self.img.literal_pool.get(addr)

    def _fork(self, pos, regs, mem, stack, lib, path, steps, work):
        work.append((pos, regs, mem, stack, lib, EmuPath(list(path.events), list(path.api_calls), set(path.lib_edges)), steps))

    def _step_path(self, item, work, done):
        pos, regs, mem, stack, lib, path, steps = item
        regs, mem = dict(regs), dict(mem)
        arch = self.arch
        while True:
            steps += 1
            if steps > self.max_steps:
                done.append(path)
                return
            if pos is None:
                done.append(path)
                return
            fi, ii = pos
            fn = self.img.functions[fi]
            if ii >= len(fn.instructions):
                done.append(path)
                return
            ins = fn.instructions[ii]
            m, ops = ins.mnemonic, ins.operands
            nxt = (fi, ii + 1)
            R = lambda t: _reg(t, arch)  # noqa: E731

            if m == "nop":
                pos = nxt
                continue
            if m == "mov" and len(ops) == 2 and R(ops[0]):
                v = _imm(ops[1])
                if v is None:
                    src = R(ops[1])
                    if src is None:
                        raise _Abort("mov operand")
                    v = self._read(regs, src)
                regs[R(ops[0])] = v
                pos = nxt
                continue
            if m in ("movz", "movw"):
                regs[R(ops[0])] = _imm(ops[1]) << _lsl(ops, 2)
                pos = nxt
                continue
            if m in ("movn", "mvn") and _imm(ops[1]) is not None:
                regs[R(ops[0])] = ~(_imm(ops[1]) << _lsl(ops, 2))
                pos = nxt
                continue
            if m == "movk":
                sh = _lsl(ops, 2)
                old = self._read(regs, R(ops[0]))
                regs[R(ops[0])] = (old & ~(0xFFFF << sh)) | (_imm(ops[1]) << sh)
                pos = nxt
                continue
            if m == "movt":
                old = self._read(regs, R(ops[0]))
                regs[R(ops[0])] = (old & 0xFFFF) | (_imm(ops[1]) << 16)
                pos = nxt
                continue
            if m in ("orr", "add", "sub") and len(ops) == 3 and _imm(ops[2]) is not None and R(ops[1]):
                a, b = self._read(regs, R(ops[1])), _imm(ops[2])
                regs[R(ops[0])] = a | b if m == "orr" else (a + b if m == "add" else a - b)
                pos = nxt
                continue
            if m in ("ldr", "str") and len(ops) == 2:
                addr = self._address(ins, ops[1], regs)
                if addr is not None:
                    if m == "str":
                        mem[addr] = self._read(regs, R(ops[0]))
                        pos = nxt
                        continue
                    val = self._load(mem, addr)
                    if val is None:
                        for h in self.havoc[1:]:
                            r2 = dict(regs)
                            r2[R(ops[0])] = h
                            self._fork(nxt, r2, mem, stack, lib, path, steps, work)
                        val = self.havoc[0]
                    regs[R(ops[0])] = val
                    pos = nxt
                    continue
            if m == "bl" and ins.target is not None:
                if ins.target in self.img.plt_stubs:
                    api = self.img.plt_stubs[ins.target]
                    outcomes = self._call_api(api, regs, lib, path)
                    first = None
                    for st, ret in outcomes:
                        r2 = dict(regs)
                        r2[self._arg_regs()[0]] = ret if isinstance(ret, int) else 0
                        new_events = list(st.events[len(lib.events):])
                        p2 = EmuPath(path.events + [e for e in new_events], path.api_calls + [self._last_call],
                                     path.lib_edges | set(st.edges))
                        if first is None:
                            first = (r2, st, p2)
                        else:
                            work.append((nxt, r2, dict(mem), stack, st, p2, steps))
                    if first is None:
                        return
                    regs, lib, path = first
                    pos = nxt
                    continue
                if ins.target in self.starts:
                    regs["x30" if arch == "a64" else "lr"] = ins.address + 4
                    stack = stack + (nxt,)
                    pos = (self.starts[ins.target], 0)
                    continue
                raise _Abort("call to unknown address")
            if m == "b" and ins.target is not None:
                if ins.target not in self.addr_index:
                    raise _Abort("jump to unknown address")
                pos = self.addr_index[ins.target]
                continue
            if m == "ret" or (m == "bx" and ops and R(ops[0]) == "lr"):
                if not stack:
                    done.append(path)
                    return
                pos, stack = stack[-1], stack[:-1]
                continue
            if m in ("stp", "ldp") and len(ops) >= 3:
                form = _pair_form(ops[2:], arch)
                if form is not None:
                    base, off, pre, post = form
                    addr = self._read(regs, base) + (off if pre or not post else 0)
                    if m == "stp":
                        mem[addr] = self._read(regs, R(ops[0]))
                        mem[addr + 8] = self._read(regs, R(ops[1]))
                    else:
                        for k, r in enumerate((R(ops[0]), R(ops[1]))):
                            val = self._load(mem, addr + 8 * k)
                            regs[r] = 0 if val is None else val
                    if pre:
                        regs[base] = addr
                    elif post:
                        regs[base] = addr + post
                    pos = nxt
                    continue
            if m in ("push", "pop") and ops and ops[0].startswith("{"):
                names = [R(t) for t in ops[0].strip("{}").split(",")]
                sp = self._read(regs, "sp")
                if m == "push":
                    sp -= 4 * len(names)
                    for k, r in enumerate(names):
                        mem[sp + 4 * k] = self._read(regs, r)
                    regs["sp"] = sp
                    pos = nxt
                    continue
                for k, r in enumerate(names):
                    if r != "pc":
                        val = self._load(mem, sp + 4 * k)
                        regs[r] = 0 if val is None else val
                regs["sp"] = sp + 4 * len(names)
                if "pc" in names:
                    if not stack:
                        done.append(path)
                        return
                    pos, stack = stack[-1], stack[:-1]
                else:
                    pos = nxt
                continue
            if m in ("svc", "swi"):
                if arch == "a32":
                    imm = _imm(ops[0]) if ops else 0
                    nr = (imm - 0x900000 if imm >= 0x900000 else imm) if imm else self._read(regs, "r7")
                else:
                    nr = self._read(regs, "x8")
                name = self.by_number.get(nr, f"nr_{nr}")
                args = []
                for k, r in enumerate(self._arg_regs()[:6]):
                    v = self._read(regs, r)
                    args.append(None if k in self.pointer_args.get(name, ()) else v)
                path.events.append(Event(name, tuple(args)))
                if name in self.EXIT_SYSCALLS:
                    done.append(path)
                    return
                regs[self._arg_regs()[0]] = 0
                pos = nxt
                continue

            if m in ("cmp", "cmn", "tst"):
                # flags are not modelled; the branches that read them fork
                pos = nxt
                continue
            if _is_cond_branch(m, arch):
                if ins.target in self.addr_index:
                    self._fork(self.addr_index[ins.target], dict(regs), mem, stack, lib, path, steps, work)
                pos = nxt
                continue

            # anything else: opaque
            dest = R(ops[0]) if ops else None
            targets = [nxt]
            if ins.target is not None and ins.target in self.addr_index and m not in ("bl",):
                targets.append(self.addr_index[ins.target])
            first = True
            for tgt in targets:
                values = self.havoc if dest and dest not in ("sp", "zr", "pc") else (None,)
                for h in values:
                    r2 = dict(regs)
                    if h is not None:
                        r2[dest] = h
                    if first:
                        first = False
                        keep = (tgt, r2)
                    else:
                        self._fork(tgt, r2, mem, stack, lib, path, steps, work)
            pos, regs = keep

    def _address(self, ins, operand, regs):
        operand = operand.strip()
        if ins.target is not None and not operand.startswith("["):
            return ins.target
        m = re.fullmatch(r"\[\s*([A-Za-z0-9]+)\s*(?:,\s*#?(-?(?:0x)?[0-9a-fA-F]+))?\s*\]", operand)
        if not m:
            return None
        base = _reg(m.group(1), self.arch)
        off = int(m.group(2), 0) if m.group(2) else 0
        if base == "pc":
            return ins.address + 8 + off
        return self._read(regs, base) + off

    def _call_api(self, api, regs, lib, path):
        fn = self.lib.prog.function(api)
        regs_list = self._arg_regs()
        args = []
        if fn is not None:
            for k, p in enumerate(fn.params):
                v = self._read(regs, regs_list[k]) if k < len(regs_list) else 0
                if p.type == "str":
                    args.append(self.img.strings.get(v))
                elif p.type == "int":
                    args.append(v)
                else:
                    args.append(None)
        self._last_call = (api, tuple(args))
        try:
            return self.lib.call_api(api, args, lib)
        except _Abort:
            return []


def ground_truth_trace(paths: list[EmuPath]) -> list[Event]:
    """First path's events, then events of later paths not yet seen."""
    if not paths:
        return []
    out = list(paths[0].events)
    seen = set(out)
    for p in paths[1:]:
        for ev in p.events:
            if ev not in seen:
                seen.add(ev)
                out.append(ev)
    return out


def dumps_trace(events) -> str:
    return "".join(json.dumps(e.to_json()) + "\n" for e in events)
