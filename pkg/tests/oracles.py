"""Independent reference computations used by the tests.

These walk the IR directly and share nothing with the analysis modules
beyond the parsed data types.
"""

from collections import deque

from secforge.ir import AsmSyscall, Assign, BinOp, Call, CharAt, Const, Field, FuncRef, ICall, Return, Var


def _stmts(fn):
    for block in fn.blocks:
        yield from block.statements


def _indexed(fn):
    sid = 0
    for block in fn.blocks:
        for stmt in block.statements:
            yield sid, stmt
            sid += 1


def _is_local(fn, name):
    if any(p.name == name for p in fn.params):
        return True
    if any(p.name == name for p in fn.locals):
        return True
    for stmt in _stmts(fn):
        lhs = getattr(stmt, "lhs", None)
        if lhs == name:
            return True
    return False


def _names_in(expr):
    if isinstance(expr, (Var, FuncRef)):
        yield expr
    elif isinstance(expr, BinOp):
        yield from _names_in(expr.left)
        yield from _names_in(expr.right)


def _expr_slots(stmt, macros):
    """Expressions of a statement that may carry a function address."""
    if isinstance(stmt, Assign):
        return [stmt.rhs]
    if isinstance(stmt, Call):
        return list(stmt.args[1:] if stmt.callee in macros else stmt.args)
    if isinstance(stmt, ICall):
        return list(stmt.args)
    if isinstance(stmt, Return) and stmt.value is not None:
        return [stmt.value]
    return []


def address_taken(prog, macros):
    """Every function whose name appears as a value anywhere in the program."""
    out = set()
    for fn in prog.functions.values():
        for stmt in _stmts(fn):
            for expr in _expr_slots(stmt, macros):
                for ref in _names_in(expr):
                    name = ref.name
                    if isinstance(ref, Var) and _is_local(fn, name):
                        continue
                    canon = prog.aliases.get(name, name)
                    if canon in prog.functions:
                        out.add(canon)
    return out


def _type_of(fn, name):
    for p in fn.params:
        if p.name == name:
            return p.type
    for p in fn.locals:
        if p.name == name:
            return p.type
    return "?"


def _arg_tag(fn, expr):
    if isinstance(expr, Var):
        return _type_of(fn, expr.name)
    if isinstance(expr, Const):
        return "int" if isinstance(expr.value, int) else "str"
    if isinstance(expr, (BinOp, CharAt)):
        return "int"
    return "?"


def _returns_value(fn):
    return any(isinstance(s, Return) and s.value is not None for s in _stmts(fn))


def type_matches(site_fn, site, cand):
    if len(cand.params) != len(site.args):
        return False
    for arg, p in zip(site.args, cand.params):
        tag = _arg_tag(site_fn, arg)
        if "?" not in (tag, p.type) and tag != p.type:
            return False
    return site.lhs is None or _returns_value(cand)


def _funcs_flowing(fn, expr, prog, depth=0):
    """Functions an expression can evaluate to via local single assignments."""
    if isinstance(expr, FuncRef):
        return {prog.aliases.get(expr.name, expr.name)}
    if isinstance(expr, Var) and depth < 16:
        if not _is_local(fn, expr.name):
            canon = prog.aliases.get(expr.name, expr.name)
            return {canon} if canon in prog.functions else set()
        out = set()
        for stmt in _stmts(fn):
            if isinstance(stmt, Assign) and stmt.lhs == expr.name:
                out |= _funcs_flowing(fn, stmt.rhs, prog, depth + 1)
        return out
    return set()


def stored_into(prog, obj_type):
    out = set()
    for fn in prog.functions.values():
        for stmt in _stmts(fn):
            if isinstance(stmt, Assign) and isinstance(stmt.lhs, Field):
                if _type_of(fn, stmt.lhs.obj) == obj_type:
                    out |= _funcs_flowing(fn, stmt.rhs, prog)
    return out


def brute_force_candidates(prog, macros):
    """(function, site) -> (address-taken, type-matched, object-refined).

    Each predicate is checked independently for every function.
    """
    taken = address_taken(prog, macros)
    out = {}
    for fn in prog.functions.values():
        for sid, stmt in _indexed(fn):
            if not isinstance(stmt, ICall):
                continue
            at, tm, obj = set(), set(), set()
            stored = stored_into(prog, stmt.obj_type)
            for name, cand in prog.functions.items():
                if name not in taken:
                    continue
                at.add(name)
                if type_matches(fn, stmt, cand):
                    tm.add(name)
                    if name in stored:
                        obj.add(name)
            out[(fn.name, sid)] = (at, tm, obj)
    return out


def _syscall_names(prog, fn, macros):
    names = set()
    if fn.name in prog.wrappers:
        names.add(prog.wrappers[fn.name])
    for stmt in _stmts(fn):
        nr = None
        if isinstance(stmt, AsmSyscall):
            nr = stmt.nr
        elif isinstance(stmt, Call) and stmt.callee in macros and stmt.args:
            nr = stmt.args[0]
        else:
            continue
        if isinstance(nr, Var) and not _is_local(fn, nr.name):
            names.add(nr.name[5:] if nr.name.startswith("__NR_") else nr.name)
        else:
            names.add("dynamic")
    return names


def callees(prog, macros):
    """Adjacency using direct calls plus object-refined indirect candidates."""
    cands = brute_force_candidates(prog, macros)
    adj = {name: set() for name in prog.functions}
    for fn in prog.functions.values():
        for sid, stmt in _indexed(fn):
            if isinstance(stmt, Call):
                canon = prog.aliases.get(stmt.callee, stmt.callee)
                if canon in prog.functions:
                    adj[fn.name].add(canon)
            elif isinstance(stmt, ICall):
                adj[fn.name] |= cands[(fn.name, sid)][2]
    return adj


def bfs_api_syscalls(prog, macros):
    adj = callees(prog, macros)
    out = {}
    for api in prog.apis:
        root = prog.aliases.get(api, api)
        seen, queue = {root}, deque([root])
        while queue:
            for nxt in adj[queue.popleft()]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        names = set()
        for f in seen:
            names |= _syscall_names(prog, prog.functions[f], macros)
        out[api] = names
    return out


def interpreted_table(interp, api, arg_index, domain, fixed_args, syscall, syscall_arg):
    """Input value -> set of values observed at a syscall argument, by running
    the interpreter on every domain member."""
    table = {}
    for value in domain:
        args = list(fixed_args)
        args[arg_index] = value
        seen = set()
        for st, _ in interp.call_api(api, args):
            for ev in st.events:
                if ev.name == syscall:
                    seen.add(ev.args[syscall_arg])
        if seen:
            table[value] = seen
    return table
