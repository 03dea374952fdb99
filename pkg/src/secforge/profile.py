"""Syscall tables and seccomp allowlist profiles."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import jsonschema

from .data import data_path, pointer_args
from .errors import ArchMismatch, DuplicateName, DuplicateNumber, SchemaError, UnknownArch
from .symexec import ArgumentMapping
from .valueset import ValueSet

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
DEFAULT_ACTIONS = ("errno", "kill")
FILTER_OPS = ("eq", "maskedEq", "inSet", "inRange")


@dataclass(frozen=True)
class SyscallTable:
    arch: str
    by_name: dict
    by_number: dict

    def __len__(self):
        return len(self.by_name)

    def number(self, name: str) -> int | None:
        return self.by_name.get(name)

    def name(self, number: int) -> str | None:
        return self.by_number.get(number)

    def resolve(self, name_or_number) -> int | None:
        """Number for a name, a number, or an ``nr_<n>`` placeholder."""
        if isinstance(name_or_number, int):
            return name_or_number
        if name_or_number in self.by_name:
            return self.by_name[name_or_number]
        if isinstance(name_or_number, str) and name_or_number.startswith("nr_"):
            try:
                return int(name_or_number[3:])
            except ValueError:
                return None
        return None


def _no_duplicate_keys(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise DuplicateName(k)
        seen[k] = v
    return seen


def load_syscall_table(arch: str, path=None) -> SyscallTable:
    path = path or data_path("syscalls", f"{arch}.json")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh, object_pairs_hook=_no_duplicate_keys)
    except FileNotFoundError:
        raise UnknownArch(arch) from None
    if doc.get("arch", arch) != arch:
        raise ArchMismatch(arch, doc.get("arch"))
    by_name = dict(doc["syscalls"])
    by_number = {}
    for name, nr in by_name.items():
        if nr in by_number:
            raise DuplicateNumber(nr, by_number[nr], name)
        by_number[nr] = name
    return SyscallTable(arch, by_name, by_number)


# ---------------------------------------------------------------------------
# profile document


@dataclass(frozen=True)
class ArgFilter:
    index: int
    op: str
    values: tuple
    mask: int | None = None

    def matches(self, value) -> bool:
        if not isinstance(value, int):
            return False
        if self.op == "eq":
            return value == self.values[0]
        if self.op == "inSet":
            return value in self.values
        if self.op == "inRange":
            return self.values[0] <= value <= self.values[1]
        if self.op == "maskedEq":
            return (value & self.mask) == self.values[0]
        return False

    def to_json(self) -> dict:
        doc = {"index": self.index, "op": self.op, "values": list(self.values)}
        if self.mask is not None:
            doc["mask"] = self.mask
        return doc


@dataclass(frozen=True)
class Rule:
    syscall: int
    name: str
    args: tuple = ()
    action: str = "allow"

    def to_json(self) -> dict:
        return {"syscall": self.syscall, "name": self.name, "action": self.action,
                "args": [a.to_json() for a in self.args]}


@dataclass
class SeccompProfile:
    arch: str
    default_action: str = "errno"
    rules: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list, compare=False)

    def rule_for(self, number: int) -> Rule | None:
        for r in self.rules:
            if r.syscall == number:
                return r
        return None

    @property
    def allowed(self) -> set[int]:
        return {r.syscall for r in self.rules}

    def blocked_count(self, table: SyscallTable) -> int:
        return len(set(table.by_number) - self.allowed)

    def to_json(self) -> dict:
        return {"arch": self.arch, "defaultAction": self.default_action,
                "rules": [r.to_json() for r in self.rules]}


PROFILE_SCHEMA = {
    "type": "object",
    "required": ["arch", "defaultAction", "rules"],
    "additionalProperties": False,
    "properties": {
        "arch": {"type": "string"},
        "defaultAction": {"enum": list(DEFAULT_ACTIONS)},
        "rules": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["syscall", "name", "action", "args"],
                "additionalProperties": False,
                "properties": {
                    "syscall": {"type": "integer"},
                    "name": {"type": "string"},
                    "action": {"const": "allow"},
                    "args": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["index", "op", "values"],
                            "additionalProperties": False,
                            "properties": {
                                "index": {"type": "integer", "minimum": 0, "maximum": 5},
                                "op": {"enum": list(FILTER_OPS)},
                                "values": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                                "mask": {"type": "integer"},
                            },
                        },
                    },
                },
            },
        },
    },
}


def serialize_profile(profile: SeccompProfile) -> str:
    return json.dumps(profile.to_json(), indent=2) + "\n"


def profile_from_json(doc) -> SeccompProfile:
    try:
        jsonschema.validate(doc, PROFILE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(exc.message) from None
    rules = []
    for r in doc["rules"]:
        args = tuple(ArgFilter(a["index"], a["op"], tuple(a["values"]), a.get("mask")) for a in r["args"])
        for a in args:
            if a.op == "maskedEq" and a.mask is None:
                raise SchemaError("maskedEq filter needs a mask")
            if a.op == "inRange" and len(a.values) != 2:
                raise SchemaError("inRange filter needs exactly two values")
        rules.append(Rule(r["syscall"], r["name"], args, r["action"]))
    return SeccompProfile(doc["arch"], doc["defaultAction"], rules)


def parse_profile(text: str) -> SeccompProfile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"profile is not JSON: {exc}") from None
    return profile_from_json(doc)


# ---------------------------------------------------------------------------
# generation


def value_set_filter(index: int, vs: ValueSet) -> ArgFilter | None:
    if vs.kind == "range":
        return ArgFilter(index, "inRange", (vs.lo, vs.hi))
    if vs.kind == "flags":
        return ArgFilter(index, "maskedEq", (0,), ~vs.mask & MASK64)
    if vs.kind == "distinct":
        if not all(isinstance(v, int) for v in vs.values):
            return None
        return ArgFilter(index, "inSet", tuple(sorted(vs.values)))
    return None


class _Allow:
    """Per-syscall accumulator: arg index -> joined ValueSet, or None when free."""

    def __init__(self):
        self.args: dict[int, ValueSet | None] = {}
        self.contributions = 0

    def add(self, known: dict):
        if self.contributions == 0:
            self.args = {k: v for k, v in known.items() if v.known}
        else:
            merged = {}
            for k, v in self.args.items():
                other = known.get(k)
                if other is None or not other.known:
                    continue
                u = v.union(other)
                if u.known:
                    merged[k] = u
            self.args = merged
        self.contributions += 1


def _mappings_of(entry) -> dict:
    out = {}
    for m in entry.arg_mappings:
        am = m if isinstance(m, ArgumentMapping) else ArgumentMapping.from_json(m)
        out[(tuple(am.site), am.syscall_arg)] = am
    return out


def generate_profile(api_map, callsites, direct_sites, table: SyscallTable, default_action: str = "errno",
                     scan_arch: str | None = None) -> SeccompProfile:
    if scan_arch is not None and scan_arch != table.arch:
        raise ArchMismatch(scan_arch, table.arch)
    if default_action not in DEFAULT_ACTIONS:
        raise ValueError(f"default action must be one of {DEFAULT_ACTIONS}")
    ptr = pointer_args()
    acc: dict[int, _Allow] = {}
    diagnostics = []
    allow_everything = False

    def allow(name_or_nr, known):
        nr = table.resolve(name_or_nr)
        if nr is None:
            diagnostics.append(f"syscall {name_or_nr!r} is not in the {table.arch} table")
            return
        name = table.name(nr) or f"nr_{nr}"
        known = {k: v for k, v in known.items() if k not in ptr.get(name, ())}
        acc.setdefault(nr, _Allow()).add(known)

    for cs in callsites:
        entry = api_map.entries.get(cs.api)
        if entry is None:
            diagnostics.append(f"API {cs.api} called at {cs.address:#x} is not in the mapping")
            continue
        mappings = _mappings_of(entry)
        nr_maps = {tuple(m["site"]): m["apiArg"] for m in entry.nr_mappings}
        for key in entry.sites:
            key = tuple(key)
            site = api_map.sites[key]
            if site.is_dynamic:
                j = nr_maps.get(key)
                vs = cs.arg_sets[j] if j is not None and j < len(cs.arg_sets) else ValueSet.unknown()
                members = vs.enumerate() if vs.known else None
                if members is None or not all(isinstance(v, int) for v in members):
                    msg = (f"{cs.api} at {cs.address:#x} needs a full allowlist: "
                           f"syscall number at {key} is unknown; allowing every syscall")
                    log.warning(msg)
                    diagnostics.append(msg)
                    allow_everything = True
                    continue
                for nr in members:
                    allow(nr, {})
                continue
            known = {}
            for (skey, k), am in mappings.items():
                if skey != key:
                    continue
                if am.api_arg is None:
                    known[k] = am.image(None)
                elif am.api_arg < len(cs.arg_sets):
                    known[k] = am.image(cs.arg_sets[am.api_arg])
            allow(site.syscall, known)

    for ds in direct_sites:
        members = ds.nr_set.enumerate() if ds.nr_set.known else None
        if members is None:
            msg = f"direct syscall at {ds.address:#x} has an unknown number; allowing every syscall"
            log.warning(msg)
            diagnostics.append(msg)
            allow_everything = True
            continue
        known = {k: v for k, v in enumerate(ds.arg_sets)}
        for nr in members:
            if nr not in table.by_number:
                msg = f"direct syscall number {nr} at {ds.address:#x} is not in the {table.arch} table"
                log.warning(msg)
                diagnostics.append(msg)
                continue
            allow(nr, known)

    if allow_everything:
        rules = [Rule(nr, table.by_number[nr]) for nr in sorted(table.by_number)]
        return SeccompProfile(table.arch, default_action, rules, diagnostics)

    rules = []
    for nr in sorted(acc):
        filters = []
        for k in sorted(acc[nr].args):
            f = value_set_filter(k, acc[nr].args[k])
            if f is not None:
                filters.append(f)
        rules.append(Rule(nr, table.name(nr) or f"nr_{nr}", tuple(filters)))
    return SeccompProfile(table.arch, default_action, rules, diagnostics)
