"""Disassembly ingestion and best-effort backward slicing.

Input is objdump-like text::

    0000000000400100 <socket@plt>:
      400100:	d503201f 	nop
    0000000000400200 <make_sock>:
      400200:	52800040 	mov	w0, #0x2
      400210:	94000000 	bl	400100 <socket@plt>
      400300:	.quad	0x400210
      400310:	.asciz	"r"

The raw-bytes column is optional.  Instructions outside the supported set are
kept as opaque; a slice that crosses one gives up on that value.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from .errors import DisassemblySyntaxError, UnknownArch
from .valueset import ENUM_LIMIT, ValueSet

log = logging.getLogger(__name__)

ARCHES = ("a64", "a32")
_CONDS = ("eq", "ne", "cs", "hs", "cc", "lo", "mi", "pl", "vs", "vc", "hi", "ls", "ge", "lt", "gt", "le")
COND_BRANCHES = {
    "a64": {"b." + c for c in _CONDS} | {"cbz", "cbnz", "tbz", "tbnz"},
    "a32": {"b" + c for c in _CONDS},
}
COMPARES = {"cmp", "cmn", "tst"}
SUPPORTED = {
    "a64": {"mov", "movz", "movk", "movn", "orr", "add", "sub", "ldr", "str", "bl", "b", "svc", "ret", "nop",
            "stp", "ldp"} | COMPARES | COND_BRANCHES["a64"],
    "a32": {"mov", "movw", "movt", "mvn", "orr", "add", "sub", "ldr", "str", "bl", "b", "svc", "swi", "bx", "nop",
            "push", "pop"} | COMPARES | COND_BRANCHES["a32"],
}
ANY_MEMORY = "mem*"
ARG_REGS = {"a64": [f"x{i}" for i in range(8)], "a32": ["r0", "r1", "r2", "r3", "r4", "r5", "r6"]}
CALL_CLOBBERS = {
    "a64": {f"x{i}" for i in range(19)} | {"x30"},
    "a32": {"r0", "r1", "r2", "r3", "r12", "lr"},
}
SYSCALL_NR_REG = {"a64": "x8", "a32": "r7"}
OABI_BASE = 0x900000
SLICE_LIMIT = 500
MAX_CALLER_HOPS = 1
UNKNOWN = None  # slice result for "no knowledge"

_A32_ALIASES = {"fp": "r11", "ip": "r12", "sl": "r10", "sb": "r9", "r13": "sp", "r14": "lr", "r15": "pc"}


def norm_reg(token: str, arch: str) -> str | None:
    t = token.strip().lower()
    if arch == "a64":
        if t in ("xzr", "wzr"):
            return "zr"
        if t in ("sp", "wsp"):
            return "sp"
        if t == "fp":
            return "x29"
        if t == "lr":
            return "x30"
        m = re.fullmatch(r"[xw](\d+)", t)
        if m and int(m.group(1)) <= 30:
            return "x" + m.group(1)
        return None
    t = _A32_ALIASES.get(t, t)
    if t in ("sp", "lr", "pc"):
        return t
    m = re.fullmatch(r"r(\d+)", t)
    if m and int(m.group(1)) <= 12:
        return t
    return None


def parse_imm(token: str) -> int | None:
    t = token.strip()
    if t.startswith("#"):
        t = t[1:]
    try:
        return int(t, 0)
    except ValueError:
        return None


@dataclass(frozen=True)
class Instruction:
    address: int
    mnemonic: str
    operands: tuple
    target: int | None = None  # branch / call target address
    target_name: str | None = None
    text: str = ""

    def with_mnemonic(self, mnemonic: str) -> "Instruction":
        return Instruction(self.address, mnemonic, self.operands, self.target, self.target_name, self.text)


@dataclass
class BinFunction:
    name: str
    start: int
    instructions: list = field(default_factory=list)


@dataclass
class BinaryImage:
    arch: str
    functions: list = field(default_factory=list)
    plt_stubs: dict = field(default_factory=dict)  # address -> API name
    literal_pool: dict = field(default_factory=dict)  # address -> int
    strings: dict = field(default_factory=dict)  # address -> str
    diagnostics: list = field(default_factory=list)

    def function_at(self, address: int) -> BinFunction | None:
        for fn in self.functions:
            if fn.start == address:
                return fn
        return None

    def function_named(self, name: str) -> BinFunction | None:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None

    def read_word(self, address: int):
        return self.literal_pool.get(address)

    def is_supported(self, ins: Instruction) -> bool:
        return ins.mnemonic in SUPPORTED[self.arch]

    def replace_instruction(self, address: int, ins: Instruction) -> "BinaryImage":
        """Copy of the image with one instruction swapped (used by tests)."""
        funcs = []
        for fn in self.functions:
            instrs = [ins if i.address == address else i for i in fn.instructions]
            funcs.append(BinFunction(fn.name, fn.start, instrs))
        return BinaryImage(self.arch, funcs, dict(self.plt_stubs), dict(self.literal_pool), dict(self.strings))


_HEADER_RE = re.compile(r"^([0-9a-fA-F]+)\s+<([^>]+)>:\s*$")
_LINE_RE = re.compile(r"^\s*([0-9a-fA-F]+):\s*(.*)$")
_ADDR_LIKE_RE = re.compile(r"^\s*(\S+):\s+\S")
_RAW_RE = re.compile(r"^(?:[0-9a-f]{8}|[0-9a-f]{4}(?: [0-9a-f]{4})?|(?:[0-9a-f]{2} )*[0-9a-f]{2})$")
_TARGET_RE = re.compile(r"^([0-9a-fA-F]+)(?:\s+<([^>]+)>)?$")


def _split_operands(text: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "[{":
            depth += 1
        elif ch in "]}":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        out.append(tail)
    return out


def _strip_comment(text: str) -> str:
    # objdump trailing comments: "// #2" (a64) or "; 0x..." (a32)
    for marker in ("//", ";"):
        quote = False
        for i, ch in enumerate(text):
            if ch == '"':
                quote = not quote
            elif not quote and text.startswith(marker, i):
                text = text[:i]
                break
    return text.rstrip()


def _parse_string(token: str, lineno: int) -> str:
    token = token.strip()
    if len(token) < 2 or token[0] != '"' or token[-1] != '"':
        raise DisassemblySyntaxError(lineno, "string directive needs a quoted literal")
    return bytes(token[1:-1], "utf-8").decode("unicode_escape")


def parse_disassembly(text: str, arch: str) -> BinaryImage:
    if arch not in ARCHES:
        raise UnknownArch(arch)
    img = BinaryImage(arch)
    current: BinFunction | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "file format" in line or line.startswith("Disassembly of section"):
            continue
        m = _HEADER_RE.match(line)
        if m:
            current = BinFunction(m.group(2), int(m.group(1), 16))
            img.functions.append(current)
            if current.name.endswith("@plt"):
                api = current.name[:-4]
                if api in img.plt_stubs.values():
                    raise DisassemblySyntaxError(lineno, f"duplicate plt stub {current.name}")
                img.plt_stubs[current.start] = api
            continue
        m = _LINE_RE.match(line)
        if not m:
            if _ADDR_LIKE_RE.match(line):
                raise DisassemblySyntaxError(lineno, "malformed address")
            raise DisassemblySyntaxError(lineno, f"unrecognised line {line.strip()!r}")
        addr = int(m.group(1), 16)
        body = _strip_comment(m.group(2))
        parts = [p.strip() for p in re.split(r"\t+", body) if p.strip()]
        if len(parts) > 1 and _RAW_RE.match(parts[0]):
            parts = parts[1:]
        if len(parts) == 1:
            bits = parts[0].split(None, 1)
            if len(bits) == 2 and re.fullmatch(r"[0-9a-f]{8}", bits[0]):
                bits = bits[1].split(None, 1)
            parts = bits
        if not parts:
            raise DisassemblySyntaxError(lineno, "missing mnemonic")
        mnemonic = parts[0].lower()
        operand_text = " ".join(parts[1:])
        if mnemonic.startswith("."):
            if mnemonic in (".word", ".quad", ".xword", ".long"):
                value = parse_imm(operand_text)
                if value is None:
                    raise DisassemblySyntaxError(lineno, f"bad data value {operand_text!r}")
                img.literal_pool[addr] = value
            elif mnemonic in (".asciz", ".string"):
                img.strings[addr] = _parse_string(operand_text, lineno)
            else:
                raise DisassemblySyntaxError(lineno, f"unsupported directive {mnemonic}")
            continue
        if current is None:
            raise DisassemblySyntaxError(lineno, "instruction outside a function")
        if current.instructions and addr <= current.instructions[-1].address:
            raise DisassemblySyntaxError(lineno, "addresses must increase within a function")
        operands = tuple(_split_operands(operand_text))
        target = target_name = None
        if operands:
            tm = _TARGET_RE.match(operands[-1])
            if tm and mnemonic not in ("svc", "swi") and not operands[-1].startswith("#"):
                target = int(tm.group(1), 16)
                target_name = tm.group(2)
        current.instructions.append(Instruction(addr, mnemonic, operands, target, target_name, body))
    return img


# ---------------------------------------------------------------------------
# instruction semantics shared by the slicer and the emulator


def _mem_operand(op: str, arch: str):
    """``[base, #off]`` -> (base register, offset); None when not of that form."""
    m = re.fullmatch(r"\[\s*([A-Za-z0-9]+)\s*(?:,\s*#?(-?(?:0x)?[0-9a-fA-F]+))?\s*\]", op.strip())
    if not m:
        return None
    base = norm_reg(m.group(1), arch)
    if base is None:
        return None
    off = int(m.group(2), 0) if m.group(2) else 0
    return base, off


def _shift(ops, idx) -> int | None:
    if len(ops) <= idx:
        return 0
    m = re.fullmatch(r"lsl\s+#?(\d+)", ops[idx].strip().lower())
    return int(m.group(1)) if m else None


@dataclass(frozen=True)
class Effect:
    """Decoded data effect of one supported instruction.

    ``dest`` is a register name or a memory location ``("mem", base, off)``;
    ``sources`` are read locations; ``fn`` maps source values to the result.
    """

    dest: object
    sources: tuple
    fn: object
    kind: str = "alu"


def decode(ins: Instruction, arch: str):
    """List of effects, or None for opaque/unsupported instructions."""
    m, ops = ins.mnemonic, ins.operands
    if m not in SUPPORTED[arch]:
        return None
    reg = lambda t: norm_reg(t, arch)  # noqa: E731
    try:
        if m in ("nop", "ret", "b", "svc", "swi", "bx") or m in COMPARES or m in COND_BRANCHES[arch]:
            return []
        if m in ("stp", "ldp", "push", "pop"):
            return _stack_effects(m, ops, arch)
        if m == "bl":
            return [Effect(r, (), None, "clobber") for r in sorted(CALL_CLOBBERS[arch])]
        rd = reg(ops[0])
        if rd is None:
            return None
        if m == "mov":
            imm = parse_imm(ops[1])
            if imm is not None:
                return [Effect(rd, (), lambda imm=imm: imm)]
            rs = reg(ops[1])
            if rs is None:
                return None
            if rs == "zr":
                return [Effect(rd, (), lambda: 0)]
            return [Effect(rd, (rs,), lambda v: v)]
        if m in ("movz", "movw"):
            imm, sh = parse_imm(ops[1]), _shift(ops, 2)
            if imm is None or sh is None:
                return None
            return [Effect(rd, (), lambda imm=imm, sh=sh: imm << sh)]
        if m == "movn" or m == "mvn":
            imm, sh = parse_imm(ops[1]), _shift(ops, 2)
            if imm is None or sh is None:
                return None
            return [Effect(rd, (), lambda imm=imm, sh=sh: ~(imm << sh))]
        if m == "movk":
            imm, sh = parse_imm(ops[1]), _shift(ops, 2)
            if imm is None or sh is None:
                return None
            mask = 0xFFFF << sh
            return [Effect(rd, (rd,), lambda v, imm=imm, sh=sh, mask=mask: (v & ~mask) | (imm << sh))]
        if m == "movt":
            imm = parse_imm(ops[1])
            if imm is None:
                return None
            return [Effect(rd, (rd,), lambda v, imm=imm: (v & 0xFFFF) | (imm << 16))]
        if m in ("orr", "add", "sub"):
            if len(ops) != 3:
                return None
            rs = reg(ops[1])
            imm = parse_imm(ops[2])
            if rs is None or imm is None:
                return None
            op = {"orr": lambda a, b: a | b, "add": lambda a, b: a + b, "sub": lambda a, b: a - b}[m]
            if rs == "zr":
                return [Effect(rd, (), lambda imm=imm, op=op: op(0, imm))]
            return [Effect(rd, (rs,), lambda v, imm=imm, op=op: op(v, imm))]
        if m == "ldr":
            if ins.target is not None and len(ops) == 2 and not ops[1].startswith("["):
                addr = ins.target
                return [Effect(rd, (("lit", addr),), lambda v: v, "load")]
            if ops[1].strip().startswith("="):
                val = parse_imm(ops[1].strip()[1:])
                if val is None:
                    return None
                return [Effect(rd, (), lambda val=val: val)]
            mem = _mem_operand(ops[1], arch)
            if mem is None or len(ops) != 2:
                return None
            base, off = mem
            if base == "pc":
                return [Effect(rd, (("lit", ins.address + 8 + off),), lambda v: v, "load")]
            return [Effect(rd, (("mem", base, off),), lambda v: v, "load")]
        if m == "str":
            mem = _mem_operand(ops[1], arch) if len(ops) == 2 else None
            if mem is None:
                return None
            return [Effect(("mem", mem[0], mem[1]), (rd,), lambda v: v, "store")]
    except (IndexError, ValueError):
        return None
    return None


def _stack_effects(m, ops, arch):
    """Register-pair and multi-register transfers: only what they clobber."""
    clobber = lambda r: Effect(r, (), None, "clobber")  # noqa: E731
    if m in ("push", "pop"):
        regs = [norm_reg(t, arch) for t in ops[0].strip("{}").split(",")]
        out = [clobber("sp")]
        if m == "push":
            return out + [Effect(ANY_MEMORY, (), None, "clobber")]
        return out + [clobber(r) for r in regs if r and r != "sp"]
    if len(ops) < 3 or not ops[2].startswith("["):
        return None
    base = norm_reg(ops[2].strip("[]!").split(",")[0], arch)
    out = []
    if ops[2].endswith("!") or len(ops) > 3:
        out.append(clobber(base))
    if m == "stp":
        out.append(Effect(ANY_MEMORY, (), None, "clobber"))
    else:
        out += [clobber(norm_reg(ops[0], arch)), clobber(norm_reg(ops[1], arch))]
    return out


def successors(fn: BinFunction, index: int, arch: str) -> list[int]:
    ins = fn.instructions[index]
    nxt = index + 1 if index + 1 < len(fn.instructions) else None
    by_addr = {i.address: k for k, i in enumerate(fn.instructions)}
    m = ins.mnemonic
    if m == "ret" or (m == "bx" and ins.operands and norm_reg(ins.operands[0], arch) == "lr"):
        return []
    if m == "pop" and ins.operands and "pc" in ins.operands[0]:
        return []
    if m == "b":
        return [by_addr[ins.target]] if ins.target in by_addr else []
    out = [] if nxt is None else [nxt]
    if (m in COND_BRANCHES[arch] or decode(ins, arch) is None) and ins.target in by_addr and m not in ("bl",):
        out.append(by_addr[ins.target])
    return out


# ---------------------------------------------------------------------------
# backward slicing


@dataclass
class DirectSyscall:
    function: str
    address: int
    nr_set: ValueSet
    arg_sets: tuple

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "address": self.address,
            "nrSet": self.nr_set.to_json(),
            "argSets": [a.to_json() for a in self.arg_sets],
        }

    @classmethod
    def from_json(cls, doc) -> "DirectSyscall":
        return cls(doc["function"], doc["address"], ValueSet.from_json(doc["nrSet"]),
                   tuple(ValueSet.from_json(a) for a in doc["argSets"]))


@dataclass
class BinaryCallsite:
    function: str
    address: int
    api: str
    arg_sets: tuple = ()

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "address": self.address,
            "api": self.api,
            "argSets": [a.to_json() for a in self.arg_sets],
        }

    @classmethod
    def from_json(cls, doc) -> "BinaryCallsite":
        return cls(doc["function"], doc["address"], doc["api"], tuple(ValueSet.from_json(a) for a in doc["argSets"]))


class _GiveUp(Exception):
    pass


class Slicer:
    """Backward value recovery over one image.

    Values are finite sets of integers; ``None`` means unknown.
    """

    def __init__(self, img: BinaryImage, limit: int = SLICE_LIMIT, max_hops: int = MAX_CALLER_HOPS):
        self.img = img
        self.arch = img.arch
        self.limit = limit
        self.max_hops = max_hops
        self._preds = {}
        self._callers = self._collect_callers()

    def _collect_callers(self) -> dict:
        """function start -> list of (function index, instruction index, direct?)."""
        out: dict[int, list] = {}
        starts = {fn.start for fn in self.img.functions}
        for fi, fn in enumerate(self.img.functions):
            for ii, ins in enumerate(fn.instructions):
                if ins.target in starts:
                    direct = ins.mnemonic == "bl"
                    out.setdefault(ins.target, []).append((fi, ii, direct))
                for op in ins.operands:
                    # a function address materialised as data escapes
                    for tok in re.findall(r"0x[0-9a-fA-F]+|\b[0-9a-fA-F]{4,}\b", op):
                        val = int(tok, 16)
                        if val in starts and val != ins.target:
                            out.setdefault(val, []).append((fi, ii, False))
        for addr, refs in list(self.img.literal_pool.items()):
            if refs in starts:
                out.setdefault(refs, []).append((-1, -1, False))
        return out

    def preds(self, fi: int, index: int) -> list[int]:
        key = fi
        if key not in self._preds:
            fn = self.img.functions[fi]
            table: dict[int, list[int]] = {}
            for i in range(len(fn.instructions)):
                for s in successors(fn, i, self.arch):
                    table.setdefault(s, []).append(i)
            self._preds[key] = table
        return self._preds[key].get(index, [])

    def value_before(self, fi: int, index: int, loc, hops: int = 0):
        """Possible values of ``loc`` just before instruction ``index`` runs."""
        budget = [self.limit]
        try:
            return self._before(fi, index, loc, hops, budget, frozenset())
        except _GiveUp:
            return UNKNOWN

    def _tick(self, budget):
        budget[0] -= 1
        if budget[0] < 0:
            raise _GiveUp()

    def _before(self, fi, index, loc, hops, budget, active):
        if loc == "zr":
            return {0}
        if isinstance(loc, tuple) and loc[0] == "lit":
            val = self.img.read_word(loc[1])
            return UNKNOWN if val is None else {val}
        key = (fi, index, loc)
        if key in active:
            raise _GiveUp()
        active = active | {key}
        preds = self.preds(fi, index)
        if not preds and index == 0:
            return self._live_in(fi, loc, hops, budget, active)
        if not preds:
            # only reachable through something we cannot see
            raise _GiveUp()
        out = set()
        for p in preds:
            vals = self._after(fi, p, loc, hops, budget, active)
            if vals is UNKNOWN:
                raise _GiveUp()
            out |= vals
            if len(out) > ENUM_LIMIT:
                raise _GiveUp()
        if index == 0:
            # entry instruction that is also a loop target: the caller
            # contributes as well
            live = self._live_in(fi, loc, hops, budget, active)
            if live is UNKNOWN:
                raise _GiveUp()
            out |= live
        return out

    def _after(self, fi, p, loc, hops, budget, active):
        """Values of ``loc`` right after instruction ``p``."""
        self._tick(budget)
        fn = self.img.functions[fi]
        ins = fn.instructions[p]
        effects = decode(ins, self.arch)
        if effects is None:
            raise _GiveUp()
        if ins.mnemonic in ("svc", "swi"):
            if loc == ARG_REGS[self.arch][0]:
                raise _GiveUp()
        for eff in effects:
            if eff.dest == ANY_MEMORY and isinstance(loc, tuple):
                raise _GiveUp()
            if eff.dest == loc:
                if eff.kind == "clobber":
                    raise _GiveUp()
                if not eff.sources:
                    return {eff.fn()}
                return self._apply(fi, p, eff, hops, budget, active)
            # writes to the base register invalidate stack slots
            if isinstance(loc, tuple) and loc[0] == "mem" and eff.dest == loc[1]:
                raise _GiveUp()
        return self._before(fi, p, loc, hops, budget, active)

    def _apply(self, fi, p, eff, hops, budget, active):
        src_vals = []
        for src in eff.sources:
            vals = self._before(fi, p, src, hops, budget, active)
            if vals is UNKNOWN:
                raise _GiveUp()
            src_vals.append(vals)
        if len(src_vals) == 1:
            out = set()
            for v in src_vals[0]:
                out.add(eff.fn(v))
            return out
        raise _GiveUp()

    def _live_in(self, fi, loc, hops, budget, active):
        if hops >= self.max_hops:
            raise _GiveUp()
        if isinstance(loc, tuple):
            # a stack slot of the callee frame is not visible to the caller
            raise _GiveUp()
        fn = self.img.functions[fi]
        callers = self._callers.get(fn.start, [])
        if len(callers) != 1 or not callers[0][2]:
            raise _GiveUp()
        cfi, cii, _ = callers[0]
        return self._before(cfi, cii, loc, hops + 1, budget, active)


def classify_values(values) -> ValueSet:
    if values is UNKNOWN or not values:
        return ValueSet.unknown()
    if len(values) > 64:
        lo, hi = min(values), max(values)
        if hi - lo + 1 == len(values):
            return ValueSet.range(lo, hi)
    return ValueSet("distinct", frozenset(values))


def find_api_callsites(img: BinaryImage, api_list) -> list[BinaryCallsite]:
    wanted = set(api_list)
    out = []
    for fn in img.functions:
        if fn.name.endswith("@plt"):
            continue
        for ins in fn.instructions:
            if ins.mnemonic == "blr" or (ins.mnemonic == "blx" and ins.target is None):
                msg = f"indirect call at {ins.address:#x} in {fn.name} skipped"
                log.warning(msg)
                img.diagnostics.append(msg)
                continue
            if ins.mnemonic == "bl" and ins.target in img.plt_stubs:
                api = img.plt_stubs[ins.target]
                if api in wanted:
                    out.append(BinaryCallsite(fn.name, ins.address, api))
    return sorted(out, key=lambda c: c.address)


def _locate(img: BinaryImage, address: int):
    for fi, fn in enumerate(img.functions):
        for ii, ins in enumerate(fn.instructions):
            if ins.address == address:
                return fi, ii
    raise KeyError(hex(address))


def _to_strings(img: BinaryImage, values) -> ValueSet:
    if values is UNKNOWN or not values:
        return ValueSet.unknown()
    out = set()
    for v in values:
        if v not in img.strings:
            return ValueSet.unknown()
        out.add(img.strings[v])
    return ValueSet("distinct", frozenset(out))


def extract_call_args(img: BinaryImage, callsite: BinaryCallsite, arity: int | None = None,
                      param_types=None, slicer: Slicer | None = None) -> BinaryCallsite:
    slicer = slicer or Slicer(img)
    fi, ii = _locate(img, callsite.address)
    regs = ARG_REGS[img.arch]
    n = min(arity, len(regs)) if arity is not None else len(regs)
    sets = []
    for k in range(n):
        values = slicer.value_before(fi, ii, regs[k])
        ptype = param_types[k] if param_types and k < len(param_types) else "int"
        if ptype == "str":
            sets.append(_to_strings(img, values))
        elif ptype == "int" or ptype == "?":
            sets.append(classify_values(values))
        else:
            sets.append(ValueSet.unknown())
    return BinaryCallsite(callsite.function, callsite.address, callsite.api, tuple(sets))


def find_direct_syscalls(img: BinaryImage, slicer: Slicer | None = None) -> list[DirectSyscall]:
    slicer = slicer or Slicer(img)
    regs = ARG_REGS[img.arch][:6]
    out = []
    for fi, fn in enumerate(img.functions):
        for ii, ins in enumerate(fn.instructions):
            if ins.mnemonic not in ("svc", "swi"):
                continue
            nr = None
            if img.arch == "a32":
                imm = parse_imm(ins.operands[0]) if ins.operands else 0
                if imm:
                    nr = ValueSet.distinct(imm - OABI_BASE if imm >= OABI_BASE else imm)
            if nr is None:
                nr = classify_values(slicer.value_before(fi, ii, SYSCALL_NR_REG[img.arch]))
            args = tuple(classify_values(slicer.value_before(fi, ii, r)) for r in regs)
            out.append(DirectSyscall(fn.name, ins.address, nr, args))
    return out


def scan_report(callsites, direct) -> dict:
    return {
        "callsites": [c.to_json() for c in callsites],
        "directSyscalls": [d.to_json() for d in direct],
    }


def dumps_scan(callsites, direct) -> str:
    return json.dumps(scan_report(callsites, direct), indent=2, sort_keys=True) + "\n"
