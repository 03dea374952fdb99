"""Hypothesis strategies producing small random libraries in the IR text form."""

from hypothesis import strategies as st

SYSCALL_NAMES = ["read", "write", "close", "getpid", "socket", "ioctl", "sendto"]
OBJ_TYPES = ["T0", "T1"]


@st.composite
def library_texts(draw, max_functions=6, max_statements=4):
    n = draw(st.integers(2, max_functions))
    sigs = [(draw(st.sampled_from(OBJ_TYPES)), draw(st.integers(1, 2))) for _ in range(n)]
    lines = ["extern __syscall_cancel", "api " + ", ".join(f"f{i}" for i in range(n))]
    for i, (typ, arity) in enumerate(sigs):
        params = [f"o:{typ}"] + [f"a{k}:int" for k in range(arity)]
        lines.append(f"func f{i}({', '.join(params)})")
        lines.append("bb entry:")
        for s in range(draw(st.integers(0, max_statements))):
            kind = draw(st.sampled_from(["call", "sys", "macro", "store", "store_local", "icall"]))
            j = draw(st.integers(0, n - 1))
            name = draw(st.sampled_from(SYSCALL_NAMES))
            if kind == "call":
                args = ["o"] + ["a0"] * sigs[j][1]
                lines.append(f"  call f{j}({', '.join(args)})")
            elif kind == "sys":
                lines.append(f"  r{s} = syscall(__NR_{name}, a0)")
            elif kind == "macro":
                lines.append(f"  r{s} = call __syscall_cancel({name}, a0)")
            elif kind == "store":
                lines.append(f"  o.h = &f{j}")
            elif kind == "store_local":
                lines.append(f"  h{s} = &f{j}")
                lines.append(f"  o.h = h{s}")
            else:
                k = draw(st.integers(1, 2))
                args = ["o"] + ["a0"] * k
                lines.append(f"  g{s} = o.h")
                lines.append(f"  r{s} = icall g{s} from {typ}({', '.join(args)})")
        lines.append("  return 0")
        lines.append("endfunc")
    return "\n".join(lines) + "\n"


# straight-line a64 snippets feeding one plt call -----------------------------

REGS = [f"x{i}" for i in range(6)]


@st.composite
def a64_snippets(draw):
    """Disassembly text with random register setup before ``bl socket@plt``."""
    ops = []
    for _ in range(draw(st.integers(1, 12))):
        rd = draw(st.sampled_from(REGS))
        kind = draw(st.sampled_from(["mov", "movrr", "add", "sub", "orr", "movk", "opaque", "cmp"]))
        imm = draw(st.integers(0, 0xFFF))
        if kind == "mov":
            ops.append(f"mov\t{rd}, #{imm:#x}")
        elif kind == "movrr":
            ops.append(f"mov\t{rd}, {draw(st.sampled_from(REGS))}")
        elif kind in ("add", "sub", "orr"):
            ops.append(f"{kind}\t{rd}, {draw(st.sampled_from(REGS))}, #{imm:#x}")
        elif kind == "movk":
            ops.append(f"movk\t{rd}, #{imm:#x}, lsl #16")
        elif kind == "cmp":
            ops.append(f"cmp\t{rd}, #{imm:#x}")
        else:
            ops.append(f"mrs\t{rd}, tpidr_el0")
    lines = ["0000000000400400 <socket@plt>:", "  400400:\tbr\tx17", "", "0000000000400500 <main>:"]
    addr = 0x400500
    for op in ops:
        lines.append(f"  {addr:x}:\t{op}")
        addr += 4
    lines.append(f"  {addr:x}:\tbl\t400400 <socket@plt>")
    lines.append(f"  {addr + 4:x}:\tret")
    return "\n".join(lines) + "\n"
