"""Library intermediate representation: data model, dump parser, serializer and
statement-level control-flow graphs.

The dump grammar is line oriented. Top-level lines::

    func <name>(<param>:<type>, ...)     ... endfunc
    extern <name>
    api <name>
    wrapper <name> -> <syscall>
    alias: <name> -> <name>

Inside a function::

    local <name>:<type>
    bb <label>:
      <lhs> = <expr>
      <lhs> = call <name>(<args>)           |  call <name>(<args>)
      <lhs> = icall <var> from <Type>(<args>)  (``from <Type>`` optional)
      <lhs> = syscall(<nr>, <args>)         |  syscall(<nr>, <args>)
      if (<var> <cmp> <operand>) goto <l1> else <l2>
      switch (<var>) { <const>: <label>, ... default: <label> }
      goto <label>
      return [<expr>]

``#`` starts a comment. Types are ``int``, ``ptr``, ``str``, ``fnptr`` or an
object type name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from .errors import CyclicAlias, DanglingLabel, DuplicateFunction, IrSyntaxError

SCALAR_TYPES = ("int", "ptr", "str", "fnptr")
POINTER_TYPES = frozenset({"ptr", "str", "fnptr"})
BINOPS = ("<<", ">>", "+", "-", "*", "/", "%", "&", "|", "^")
CMPOPS = ("==", "!=", "<=", ">=", "<", ">")

_IDENT = r"[A-Za-z_][A-Za-z0-9_.$@]*"
_NAME = r"[A-Za-z_][A-Za-z0-9_$@]*"


# ---------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class Const:
    value: int | str

    def __str__(self):
        if isinstance(self.value, str):
            return '"' + self.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
        return str(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class FuncRef:
    name: str

    def __str__(self):
        return "&" + self.name


@dataclass(frozen=True)
class Field:
    obj: str
    field: str

    def __str__(self):
        return f"{self.obj}.{self.field}"


@dataclass(frozen=True)
class CharAt:
    var: str
    index: int

    def __str__(self):
        return f"{self.var}[{self.index}]"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


Expr = Const | Var | FuncRef | Field | CharAt | BinOp


def expr_vars(expr) -> set[str]:
    """Variable names read by an expression."""
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, (Field, CharAt)):
        return {expr.obj if isinstance(expr, Field) else expr.var}
    if isinstance(expr, BinOp):
        return expr_vars(expr.left) | expr_vars(expr.right)
    return set()


# ---------------------------------------------------------------------------
# statements


@dataclass(frozen=True)
class Assign:
    lhs: str | Field
    rhs: Expr
    kind = "assign"


@dataclass(frozen=True)
class Call:
    lhs: str | None
    callee: str
    args: tuple
    kind = "call"


@dataclass(frozen=True)
class ICall:
    lhs: str | None
    target: str
    obj_type: str | None
    args: tuple
    kind = "indirect-call"


@dataclass(frozen=True)
class AsmSyscall:
    lhs: str | None
    nr: Expr
    args: tuple
    kind = "asm-syscall"


@dataclass(frozen=True)
class Cond:
    left: Expr
    op: str
    right: Expr
    then_label: str
    else_label: str
    kind = "cond"


@dataclass(frozen=True)
class Switch:
    scrutinee: Expr
    cases: tuple  # of (Const, label)
    default: str
    kind = "switch"


@dataclass(frozen=True)
class Goto:
    label: str
    kind = "goto"


@dataclass(frozen=True)
class Return:
    value: Expr | None
    kind = "return"


Statement = Assign | Call | ICall | AsmSyscall | Cond | Switch | Goto | Return
TERMINATORS = (Cond, Switch, Goto, Return)


def jump_targets(stmt) -> list[str]:
    if isinstance(stmt, Cond):
        return [stmt.then_label, stmt.else_label]
    if isinstance(stmt, Switch):
        return [label for _, label in stmt.cases] + [stmt.default]
    if isinstance(stmt, Goto):
        return [stmt.label]
    return []


def defined_var(stmt) -> str | None:
    """Name of the local written by ``stmt`` (field stores excluded)."""
    if isinstance(stmt, Assign):
        return stmt.lhs if isinstance(stmt.lhs, str) else None
    if isinstance(stmt, (Call, ICall, AsmSyscall)):
        return stmt.lhs
    return None


# ---------------------------------------------------------------------------
# program


@dataclass(frozen=True)
class Param:
    name: str
    type: str


@dataclass(frozen=True)
class Block:
    label: str
    statements: tuple


@dataclass(frozen=True)
class IrFunction:
    name: str
    params: tuple = ()
    blocks: tuple = ()
    locals: tuple = ()  # of Param

    def statements(self) -> Iterator[tuple[int, Statement]]:
        """Yield ``(statement id, statement)`` in positional order."""
        sid = 0
        for block in self.blocks:
            for stmt in block.statements:
                yield sid, stmt
                sid += 1

    def statement(self, sid: int):
        for i, stmt in self.statements():
            if i == sid:
                return stmt
        raise KeyError(sid)

    def param_index(self, name: str) -> int | None:
        for i, p in enumerate(self.params):
            if p.name == name:
                return i
        return None

    @property
    def param_types(self) -> tuple:
        return tuple(p.type for p in self.params)

    @property
    def has_body(self) -> bool:
        return bool(self.blocks)

    def returns_value(self) -> bool:
        return any(isinstance(s, Return) and s.value is not None for _, s in self.statements())

    def defs(self, var: str) -> list[tuple[int, Statement]]:
        return [(sid, s) for sid, s in self.statements() if defined_var(s) == var]

    def declared_type(self, var: str) -> str | None:
        for p in self.params + self.locals:
            if p.name == var:
                return p.type
        return None

    def var_type(self, var: str, _seen=None) -> str:
        """Semantic type tag of ``var``; ``?`` when it cannot be recovered.

        Declared parameters and locals win; otherwise the definitions inside
        the function are scanned backward for a typed source.
        """
        declared = self.declared_type(var)
        if declared is not None:
            return declared
        seen = _seen or set()
        if var in seen:
            return "?"
        seen.add(var)
        kinds = set()
        for _, stmt in self.defs(var):
            if isinstance(stmt, Assign):
                kinds.add(self.expr_type(stmt.rhs, seen))
            else:
                kinds.add("int")
        kinds.discard("?")
        if len(kinds) == 1:
            return kinds.pop()
        return "?"

    def expr_type(self, expr, _seen=None) -> str:
        if isinstance(expr, Const):
            return "str" if isinstance(expr.value, str) else "int"
        if isinstance(expr, FuncRef):
            return "fnptr"
        if isinstance(expr, Var):
            return self.var_type(expr.name, _seen)
        if isinstance(expr, (CharAt, BinOp)):
            return "int"
        return "?"


@dataclass(frozen=True)
class IrProgram:
    functions: dict = field(default_factory=dict)  # name -> IrFunction, in order
    aliases: dict = field(default_factory=dict)
    externs: frozenset = frozenset()
    apis: tuple = ()
    wrappers: dict = field(default_factory=dict)  # function name -> syscall name

    def canonical(self, name: str) -> str:
        return self.aliases.get(name, name)

    def function(self, name: str) -> IrFunction | None:
        return self.functions.get(self.canonical(name))

    def knows(self, name: str) -> bool:
        canon = self.canonical(name)
        return canon in self.functions or canon in self.externs

    def with_lists(self, *, aliases=None, apis=None, wrappers=None, externs=None) -> "IrProgram":
        """Return a copy with extra alias/API/wrapper/extern entries merged in."""
        merged_aliases = dict(self.aliases)
        if aliases:
            merged_aliases.update(aliases)
            merged_aliases = collapse_aliases(merged_aliases.items())
        merged_apis = tuple(dict.fromkeys(self.apis + tuple(apis or ())))
        merged_wrappers = {**self.wrappers, **(wrappers or {})}
        merged_externs = self.externs | frozenset(externs or ())
        return IrProgram(self.functions, merged_aliases, merged_externs, merged_apis, merged_wrappers)


# ---------------------------------------------------------------------------
# parsing helpers


def strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == "\\":
                continue
            if ch == quote and line[i - 1] != "\\":
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def split_args(text: str) -> list[str]:
    """Split on top-level commas, honouring quotes and brackets."""
    parts, depth, quote, cur = [], 0, None, []
    i = 0
    while i < len(text):
        ch = text[i]
        if quote:
            cur.append(ch)
            if ch == "\\" and i + 1 < len(text):
                cur.append(text[i + 1])
                i += 1
            elif ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
            cur.append(ch)
        elif ch in "([{":
            depth += 1
            cur.append(ch)
        elif ch in ")]}":
            depth -= 1
            cur.append(ch)
        elif ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
        i += 1
    tail = "".join(cur).strip()
    if tail or parts:
        parts.append(tail)
    return parts


_INT_RE = re.compile(r"-?(0[xX][0-9a-fA-F]+|\d+)$")
_CHAR_RE = re.compile(r"'(\\.|[^'\\])'$")
_STR_RE = re.compile(r'"((?:\\.|[^"\\])*)"$')
_FIELD_RE = re.compile(rf"({_NAME})\.({_NAME})$")
_INDEX_RE = re.compile(rf"({_NAME})\[(\d+)\]$")
_ESCAPES = {"n": "\n", "t": "\t", "0": "\0", "\\": "\\", "'": "'", '"': '"'}


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), body)


def parse_atom(text: str, line: int):
    text = text.strip()
    if _INT_RE.match(text):
        return Const(int(text, 0))
    m = _CHAR_RE.match(text)
    if m:
        return Const(ord(_unescape(m.group(1))))
    m = _STR_RE.match(text)
    if m:
        return Const(_unescape(m.group(1)))
    if text.startswith("&") and re.fullmatch(_NAME, text[1:]):
        return FuncRef(text[1:])
    m = _FIELD_RE.match(text)
    if m:
        return Field(m.group(1), m.group(2))
    m = _INDEX_RE.match(text)
    if m:
        return CharAt(m.group(1), int(m.group(2)))
    if re.fullmatch(_NAME, text):
        return Var(text)
    raise IrSyntaxError(line, f"cannot parse operand {text!r}")


def parse_expr(text: str, line: int):
    text = text.strip()
    for op in BINOPS:
        parts = text.split(f" {op} ")
        if len(parts) == 2:
            return BinOp(op, parse_atom(parts[0], line), parse_atom(parts[1], line))
    return parse_atom(text, line)


def _parse_args(text: str, line: int) -> tuple:
    return tuple(parse_expr(a, line) for a in split_args(text)) if text.strip() else ()


def _parse_type(text: str, line: int) -> str:
    text = text.strip()
    if not re.fullmatch(_NAME, text):
        raise IrSyntaxError(line, f"bad type {text!r}")
    return text


def _parse_params(text: str, line: int) -> tuple:
    params = []
    for chunk in split_args(text):
        if ":" not in chunk:
            raise IrSyntaxError(line, f"parameter {chunk!r} lacks a type")
        name, typ = chunk.split(":", 1)
        name = name.strip()
        if not re.fullmatch(_NAME, name):
            raise IrSyntaxError(line, f"bad parameter name {name!r}")
        params.append(Param(name, _parse_type(typ, line)))
    names = [p.name for p in params]
    if len(set(names)) != len(names):
        raise IrSyntaxError(line, "duplicate parameter name")
    return tuple(params)


_CALL_RE = re.compile(rf"call\s+({_NAME})\s*\((.*)\)$")
_ICALL_RE = re.compile(rf"icall\s+({_NAME})(?:\s+from\s+({_NAME}))?\s*\((.*)\)$")
_SYSCALL_RE = re.compile(r"syscall\s*\((.*)\)$")
_IF_RE = re.compile(r"if\s*\((.+?)\s*(==|!=|<=|>=|<|>)\s*(.+?)\)\s*goto\s+(\S+)\s+else\s+(?:goto\s+)?(\S+)$")
_SWITCH_RE = re.compile(r"switch\s*\((.+?)\)\s*\{(.*)\}$")
_LHS_RE = re.compile(rf"({_NAME}(?:\.{_NAME})?)\s*=\s*(.+)$")


def _parse_invocation(text: str, lhs, line: int):
    m = _CALL_RE.match(text)
    if m:
        return Call(lhs, m.group(1), _parse_args(m.group(2), line))
    m = _ICALL_RE.match(text)
    if m:
        return ICall(lhs, m.group(1), m.group(2), _parse_args(m.group(3), line))
    m = _SYSCALL_RE.match(text)
    if m:
        args = _parse_args(m.group(1), line)
        if not args:
            raise IrSyntaxError(line, "syscall needs a number expression")
        if len(args) > 7:
            raise IrSyntaxError(line, "syscall takes at most 6 arguments")
        return AsmSyscall(lhs, args[0], args[1:])
    return None


def parse_statement(text: str, line: int):
    text = text.strip()
    if text.startswith("if"):
        m = _IF_RE.match(text)
        if not m:
            raise IrSyntaxError(line, "malformed if statement")
        return Cond(parse_atom(m.group(1), line), m.group(2), parse_atom(m.group(3), line), m.group(4), m.group(5))
    if text.startswith("switch"):
        m = _SWITCH_RE.match(text)
        if not m:
            raise IrSyntaxError(line, "malformed switch statement")
        cases, default = [], None
        for arm in split_args(m.group(2)):
            if not arm:
                continue
            key, sep, label = arm.rpartition(":")
            if not sep or not label.strip():
                raise IrSyntaxError(line, f"malformed switch arm {arm!r}")
            key, label = key.strip(), label.strip()
            if key == "default":
                default = label
            else:
                const = parse_atom(key, line)
                if not isinstance(const, Const):
                    raise IrSyntaxError(line, "switch case must be a constant")
                cases.append((const, label))
        if default is None:
            raise IrSyntaxError(line, "switch without default")
        return Switch(parse_atom(m.group(1), line), tuple(cases), default)
    if text.startswith("goto "):
        return Goto(text[5:].strip())
    if text == "return" or text.startswith("return "):
        rest = text[6:].strip()
        return Return(parse_expr(rest, line) if rest else None)
    stmt = _parse_invocation(text, None, line)
    if stmt is not None:
        return stmt
    m = _LHS_RE.match(text)
    if m:
        lhs_text, rhs = m.group(1), m.group(2).strip()
        if "." in lhs_text:
            obj, fld = lhs_text.split(".", 1)
            lhs = Field(obj, fld)
        else:
            lhs = lhs_text
        stmt = _parse_invocation(rhs, lhs, line)
        if stmt is not None:
            if isinstance(lhs, Field):
                raise IrSyntaxError(line, "call results must be assigned to a local")
            return stmt
        return Assign(lhs, parse_expr(rhs, line))
    raise IrSyntaxError(line, f"unknown statement form {text!r}")


def collapse_aliases(pairs) -> dict:
    """Collapse alias chains to their final canonical name."""
    direct = {}
    for alias, target in pairs:
        direct[alias] = target
    out = {}
    for alias in direct:
        chain = [alias]
        cur = alias
        while cur in direct:
            cur = direct[cur]
            if cur in chain:
                raise CyclicAlias(chain[chain.index(cur):] + [cur])
            chain.append(cur)
        out[alias] = cur
    return out


_ALIAS_RE = re.compile(rf"alias:\s*({_NAME})\s*->\s*({_NAME})$")


def parse_alias_graph(text: str) -> dict:
    """Parse an alias dump (``alias: a -> b`` per line) into alias -> canonical."""
    pairs = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = strip_comment(raw).strip()
        if not line:
            continue
        m = _ALIAS_RE.match(line)
        if not m:
            raise IrSyntaxError(n, f"malformed alias line {line!r}")
        pairs.append((m.group(1), m.group(2)))
    return collapse_aliases(pairs)


_FUNC_RE = re.compile(rf"func\s+({_NAME})\s*\((.*)\)$")
_BB_RE = re.compile(rf"bb\s+({_NAME}):$")
_LOCAL_RE = re.compile(rf"local\s+({_NAME})\s*:\s*({_NAME})$")
_WRAPPER_RE = re.compile(rf"wrapper\s+({_NAME})\s*->\s*({_NAME})$")


class _FunctionBuilder:
    def __init__(self, name, params, line):
        self.name = name
        self.params = params
        self.line = line
        self.locals = []
        self.blocks = []  # [label, [stmts], line]

    def finish(self) -> IrFunction:
        labels = set()
        for label, stmts, line in self.blocks:
            if label in labels:
                raise IrSyntaxError(line, f"duplicate block label {label!r} in {self.name}")
            if not stmts:
                raise IrSyntaxError(line, f"empty block {label!r} in {self.name}")
            labels.add(label)
        for _, stmts, _ in self.blocks:
            for stmt in stmts:
                for target in jump_targets(stmt):
                    if target not in labels:
                        raise DanglingLabel(self.name, target)
        blocks = tuple(Block(label, tuple(stmts)) for label, stmts, _ in self.blocks)
        return IrFunction(self.name, self.params, blocks, tuple(self.locals))


def parse_ir(text: str) -> IrProgram:
    """Parse an IR dump document into an :class:`IrProgram`."""
    functions: dict[str, IrFunction] = {}
    alias_pairs, externs, apis, wrappers = [], [], [], {}
    current: _FunctionBuilder | None = None

    for n, raw in enumerate(text.splitlines(), 1):
        line = strip_comment(raw).strip()
        if not line:
            continue
        if current is None:
            m = _FUNC_RE.match(line)
            if m:
                current = _FunctionBuilder(m.group(1), _parse_params(m.group(2), n), n)
                continue
            m = _ALIAS_RE.match(line)
            if m:
                alias_pairs.append((m.group(1), m.group(2)))
                continue
            if line.startswith("extern "):
                name = line[7:].strip()
                if not re.fullmatch(_NAME, name):
                    raise IrSyntaxError(n, f"bad extern name {name!r}")
                externs.append(name)
                continue
            if line.startswith("api "):
                for name in line[4:].replace(",", " ").split():
                    apis.append(name)
                continue
            m = _WRAPPER_RE.match(line)
            if m:
                wrappers[m.group(1)] = m.group(2)
                continue
            raise IrSyntaxError(n, f"unexpected line outside function: {line!r}")

        if line == "endfunc":
            fn = current.finish()
            if fn.name in functions:
                raise DuplicateFunction(fn.name)
            functions[fn.name] = fn
            current = None
            continue
        m = _LOCAL_RE.match(line)
        if m:
            if current.blocks:
                raise IrSyntaxError(n, "local declarations must precede the first block")
            current.locals.append(Param(m.group(1), m.group(2)))
            continue
        m = _BB_RE.match(line)
        if m:
            current.blocks.append([m.group(1), [], n])
            continue
        if not current.blocks:
            raise IrSyntaxError(n, "statement outside a basic block")
        stmts = current.blocks[-1][1]
        if stmts and isinstance(stmts[-1], TERMINATORS):
            raise IrSyntaxError(n, "statement after block terminator")
        stmts.append(parse_statement(line, n))

    if current is not None:
        raise IrSyntaxError(current.line, f"function {current.name} lacks endfunc")

    aliases = collapse_aliases(alias_pairs)
    for alias, target in aliases.items():
        if alias in functions:
            raise DuplicateFunction(alias)
    return IrProgram(functions, aliases, frozenset(externs), tuple(dict.fromkeys(apis)), wrappers)


# ---------------------------------------------------------------------------
# serialization


def _format_lhs(lhs) -> str:
    return str(lhs)


def format_statement(stmt) -> str:
    def args(xs):
        return ", ".join(str(a) for a in xs)

    if isinstance(stmt, Assign):
        return f"{_format_lhs(stmt.lhs)} = {stmt.rhs}"
    prefix = f"{stmt.lhs} = " if getattr(stmt, "lhs", None) else ""
    if isinstance(stmt, Call):
        return f"{prefix}call {stmt.callee}({args(stmt.args)})"
    if isinstance(stmt, ICall):
        src = f" from {stmt.obj_type}" if stmt.obj_type else ""
        return f"{prefix}icall {stmt.target}{src}({args(stmt.args)})"
    if isinstance(stmt, AsmSyscall):
        return f"{prefix}syscall({args((stmt.nr,) + stmt.args)})"
    if isinstance(stmt, Cond):
        return f"if ({stmt.left} {stmt.op} {stmt.right}) goto {stmt.then_label} else {stmt.else_label}"
    if isinstance(stmt, Switch):
        arms = [f"{c}: {label}" for c, label in stmt.cases] + [f"default: {stmt.default}"]
        return f"switch ({stmt.scrutinee}) {{ {', '.join(arms)} }}"
    if isinstance(stmt, Goto):
        return f"goto {stmt.label}"
    if isinstance(stmt, Return):
        return "return" if stmt.value is None else f"return {stmt.value}"
    raise TypeError(stmt)


def serialize_ir(prog: IrProgram) -> str:
    lines = []
    for name in sorted(prog.externs):
        lines.append(f"extern {name}")
    for alias, target in prog.aliases.items():
        lines.append(f"alias: {alias} -> {target}")
    for api in prog.apis:
        lines.append(f"api {api}")
    for fn_name, syscall in prog.wrappers.items():
        lines.append(f"wrapper {fn_name} -> {syscall}")
    for fn in prog.functions.values():
        params = ", ".join(f"{p.name}:{p.type}" for p in fn.params)
        lines.append(f"func {fn.name}({params})")
        for loc in fn.locals:
            lines.append(f"local {loc.name}:{loc.type}")
        for block in fn.blocks:
            lines.append(f"bb {block.label}:")
            lines.extend("  " + format_statement(s) for s in block.statements)
        lines.append("endfunc")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# control-flow graphs


@dataclass(frozen=True)
class StatementCfg:
    nodes: tuple  # statement ids
    edges: tuple  # (from, to) pairs, may repeat for identical targets
    entry: int | None

    def successors(self, node: int) -> list[int]:
        return [b for a, b in self.edges if a == node]

    def predecessors(self, node: int) -> list[int]:
        return [a for a, b in self.edges if b == node]


def build_function_cfg(fn: IrFunction) -> StatementCfg:
    """Statement-level CFG: fall-through edges plus one edge per jump target."""
    label_entry = {}
    block_spans = []
    sid = 0
    for block in fn.blocks:
        label_entry[block.label] = sid
        block_spans.append((sid, sid + len(block.statements)))
        sid += len(block.statements)
    total = sid
    edges = []
    for bi, (start, end) in enumerate(block_spans):
        stmts = fn.blocks[bi].statements
        for k, stmt in enumerate(stmts):
            node = start + k
            if isinstance(stmt, (Cond, Switch, Goto)):
                edges.extend((node, label_entry[t]) for t in jump_targets(stmt))
            elif isinstance(stmt, Return):
                continue
            elif node + 1 < total:
                edges.append((node, node + 1))
    return StatementCfg(tuple(range(total)), tuple(edges), 0 if total else None)
