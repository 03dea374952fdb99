"""Argument value knowledge: distinct values, OR-combined flags, closed ranges,
or nothing at all."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

ENUM_LIMIT = 4096


@dataclass(frozen=True)
class ValueSet:
    kind: str  # distinct | flags | range | unknown
    values: frozenset = frozenset()
    lo: int | None = None
    hi: int | None = None

    def __post_init__(self):
        if self.kind in ("distinct", "flags") and not self.values:
            raise ValueError(f"{self.kind} value set must be non-empty")
        if self.kind == "range" and (self.lo is None or self.hi is None or self.lo > self.hi):
            raise ValueError("range needs lo <= hi")
        if self.kind not in ("distinct", "flags", "range", "unknown"):
            raise ValueError(f"bad value-set kind {self.kind!r}")

    # constructors ---------------------------------------------------------

    @classmethod
    def distinct(cls, *values) -> "ValueSet":
        return cls("distinct", frozenset(values))

    @classmethod
    def flags(cls, *bits) -> "ValueSet":
        return cls("flags", frozenset(bits))

    @classmethod
    def range(cls, lo: int, hi: int) -> "ValueSet":
        return cls("range", lo=lo, hi=hi)

    @classmethod
    def unknown(cls) -> "ValueSet":
        return cls("unknown")

    # queries --------------------------------------------------------------

    @property
    def known(self) -> bool:
        return self.kind != "unknown"

    @property
    def mask(self) -> int:
        m = 0
        for b in self.values:
            m |= b
        return m

    def contains(self, value) -> bool:
        if self.kind == "unknown":
            return True
        if self.kind == "distinct":
            return value in self.values
        if not isinstance(value, int):
            return False
        if self.kind == "range":
            return self.lo <= value <= self.hi
        # flags: any OR-combination of the listed bits, including none
        return value & ~self.mask == 0

    __contains__ = contains

    def enumerate(self, limit: int = ENUM_LIMIT) -> list | None:
        """Concrete members, or None when too many (or unknown)."""
        if self.kind == "unknown":
            return None
        if self.kind == "distinct":
            if len(self.values) > limit:
                return None
            return sorted(self.values, key=_order_key)
        if self.kind == "range":
            if self.hi - self.lo + 1 > limit:
                return None
            return list(range(self.lo, self.hi + 1))
        bits = sorted(self.values)
        if 2 ** len(bits) > limit:
            return None
        out = set()
        for r in range(len(bits) + 1):
            for combo in combinations(bits, r):
                v = 0
                for b in combo:
                    v |= b
                out.add(v)
        return sorted(out)

    def union(self, other: "ValueSet") -> "ValueSet":
        if not self.known or not other.known:
            return ValueSet.unknown()
        if self.kind == other.kind == "distinct":
            return ValueSet("distinct", self.values | other.values)
        if self.kind == other.kind == "flags":
            return ValueSet("flags", self.values | other.values)
        if self.kind == other.kind == "range":
            return ValueSet.range(min(self.lo, other.lo), max(self.hi, other.hi))
        a, b = self.enumerate(), other.enumerate()
        if a is None or b is None:
            return ValueSet.unknown()
        merged = set(a) | set(b)
        if len(merged) > ENUM_LIMIT:
            return ValueSet.unknown()
        return ValueSet("distinct", frozenset(merged))

    # serialization --------------------------------------------------------

    def to_json(self) -> dict:
        if self.kind == "unknown":
            return {"kind": "unknown"}
        if self.kind == "range":
            return {"kind": "range", "lo": self.lo, "hi": self.hi}
        return {"kind": self.kind, "values": sorted(self.values, key=_order_key)}

    @classmethod
    def from_json(cls, doc: dict) -> "ValueSet":
        kind = doc["kind"]
        if kind == "unknown":
            return cls.unknown()
        if kind == "range":
            return cls.range(doc["lo"], doc["hi"])
        return cls(kind, frozenset(doc["values"]))

    def __str__(self):
        if self.kind == "unknown":
            return "unknown"
        if self.kind == "range":
            return f"[{self.lo}, {self.hi}]"
        inner = ", ".join(repr(v) for v in sorted(self.values, key=_order_key))
        return f"{self.kind}{{{inner}}}"


def _order_key(v):
    # ints before strings, each in natural order
    return (0, v, "") if isinstance(v, int) else (1, 0, str(v))


def join_all(sets) -> ValueSet:
    sets = list(sets)
    if not sets:
        return ValueSet.unknown()
    acc = sets[0]
    for s in sets[1:]:
        acc = acc.union(s)
    return acc
