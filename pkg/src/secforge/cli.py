"""Command line entry point.

Every stage reads and writes JSON files in the output directory, so the
stages can be run one by one or chained with ``pipeline``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .analysis import analyze_library, dumps_scan_report, load_scan_report, scan_binary
from .binscan import parse_disassembly
from .data import data_path, default_macros, load_flags
from .errors import ConfigError, SecforgeError
from .ir import parse_alias_graph, parse_ir
from .policy import histogram, optimize_order, parse_trace, score_cve, simulate_trace
from .profile import generate_profile, parse_profile, serialize_profile, load_syscall_table
from .syscall_ident import ApiSyscallMap

log = logging.getLogger("secforge")

MAPPING = "mapping.json"
CALLGRAPH = "callgraph.json"
CALLSITES = "callsites.json"
PROFILE = "profile.seccomp.json"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


class StageError(Exception):
    def __init__(self, stage, exc):
        self.stage = stage
        self.exc = exc
        super().__init__(f"{stage}: {exc}")


def _read(path, what: str) -> str:
    if path is None:
        raise ConfigError(f"missing {what} path")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} file not found: {path}")
    return p.read_text(encoding="utf-8")


def _read_json(path, what: str):
    text = _read(path, what)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} is not valid JSON: {exc}") from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _names(text: str) -> list[str]:
    return [n for n in text.replace(",", " ").split() if not n.startswith("#")]


def _check_common(args):
    if args.jobs < 1:
        raise ConfigError("--jobs must be positive")
    if args.flags_dir is not None and not Path(args.flags_dir).is_dir():
        raise ConfigError(f"flags directory not found: {args.flags_dir}")


def _flags(args) -> dict:
    try:
        return load_flags(args.arch, args.flags_dir)
    except FileNotFoundError:
        raise ConfigError(f"no flag table for {args.arch}") from None


# ---------------------------------------------------------------------------
# stages


def load_program(args):
    prog = parse_ir(_read(args.ir, "IR dump"))
    aliases = parse_alias_graph(_read(args.aliases, "alias dump")) if args.aliases else None
    apis = _names(_read(args.apis, "API list")) if args.apis else None
    wrappers = None
    if getattr(args, "wrappers", None):
        wrappers = {}
        for line in _read(args.wrappers, "wrapper list").splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                fn, _, sc = line.partition("->")
                wrappers[fn.strip()] = (sc.strip() or fn.strip())
    prog = prog.with_lists(aliases=aliases, wrappers=wrappers)
    if apis is not None:
        prog = replace(prog, apis=tuple(dict.fromkeys(apis)))
    return prog


def _macros(args):
    if getattr(args, "macros", None):
        return frozenset(_names(_read(args.macros, "macro list")))
    return default_macros()


def stage_analyze_lib(args):
    prog = load_program(args)
    la = analyze_library(prog, args.arch, _macros(args), _flags(args), jobs=args.jobs)
    out = _out_dir(args)
    _write(out / MAPPING, la.api_map.dumps())
    _write(out / CALLGRAPH, la.graph.dumps())
    return la


def _mapping(args) -> ApiSyscallMap:
    path = args.mapping or Path(args.out) / MAPPING
    return ApiSyscallMap.from_json(_read_json(path, "mapping"))


def stage_scan_bin(args):
    api_map = _mapping(args)
    img = parse_disassembly(_read(args.bin_dis, "disassembly"), args.arch)
    callsites, direct = scan_binary(img, api_map, jobs=args.jobs)
    _write(_out_dir(args) / CALLSITES, dumps_scan_report(args.arch, callsites, direct, img.diagnostics))
    return callsites, direct


def stage_gen_profile(args):
    api_map = _mapping(args)
    path = args.callsites or Path(args.out) / CALLSITES
    scan_arch, callsites, direct = load_scan_report(_read_json(path, "callsite report"))
    table = load_syscall_table(args.arch)
    profile = generate_profile(api_map, callsites, direct, table, args.default_action, scan_arch=scan_arch)
    for d in profile.diagnostics:
        log.warning("%s", d)
    _write(_out_dir(args) / PROFILE, serialize_profile(profile))
    return profile


def _profile(args):
    path = args.profile or Path(args.out) / PROFILE
    return parse_profile(_read(path, "profile"))


def stage_simulate(args):
    profile = _profile(args)
    events = parse_trace(_read(args.trace, "trace"))
    report = simulate_trace(profile, events, load_syscall_table(args.arch), jobs=args.jobs)
    text = json.dumps(report, indent=2) + "\n"
    _write(_out_dir(args) / "simulate.json", text)
    return report


def stage_score_cve(args):
    profile = _profile(args)
    cve_map = _read_json(args.cve_map or data_path("cve_map.json"), "CVE map")
    report = score_cve(profile, cve_map, load_syscall_table(args.arch), _flags(args))
    _write(_out_dir(args) / "cve.json", json.dumps(report, indent=2) + "\n")
    return report


def stage_optimize_order(args):
    profile = _profile(args)
    table = load_syscall_table(args.arch)
    if args.histogram:
        freq = {int(k): v for k, v in _read_json(args.histogram, "histogram").items()}
    elif args.trace:
        freq = histogram(parse_trace(_read(args.trace, "trace")), table)
    else:
        raise ConfigError("optimize-order needs --trace or --histogram")
    result = optimize_order(profile, freq)
    _write(_out_dir(args) / "profile.optimized.json", serialize_profile(result))
    return result


def stage_pipeline(args):
    for path, what in ((args.ir, "IR dump"), (args.bin_dis, "disassembly")):
        _read(path, what)
    results = {}
    for name, fn in (("analyze-lib", stage_analyze_lib), ("scan-bin", stage_scan_bin),
                     ("gen-profile", stage_gen_profile)):
        results[name] = _run_stage(name, fn, args)
    if args.trace:
        results["simulate"] = _run_stage("simulate", stage_simulate, args)
    if args.cve_map:
        results["score-cve"] = _run_stage("score-cve", stage_score_cve, args)
    return results["gen-profile"]


def _run_stage(name, fn, args):
    try:
        return fn(args)
    except ConfigError:
        raise
    except SecforgeError as exc:
        raise StageError(name, exc) from exc


# ---------------------------------------------------------------------------
# inspection helpers


def cmd_graph(args):
    la = analyze_library(load_program(args), args.arch, _macros(args), _flags(args), jobs=args.jobs)
    sys.stdout.write(la.graph.dumps())


def cmd_map(args):
    la = analyze_library(load_program(args), args.arch, _macros(args), _flags(args), jobs=args.jobs)
    sys.stdout.write(la.api_map.dumps())


def cmd_taint(args):
    la = analyze_library(load_program(args), args.arch, _macros(args), _flags(args), jobs=args.jobs)
    docs = []
    for (api, site, k), ddg in sorted(la.ddgs.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        if args.api and api != args.api:
            continue
        docs.append(ddg.to_json() if args.dump else {"api": api, "site": list(site), "arg": k})
    sys.stdout.write(json.dumps(docs, indent=2) + "\n")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--arch", default="a64", choices=("a64", "a32"))
    common.add_argument("--out", default="secforge-out", help="output directory")
    common.add_argument("--flags-dir", help="directory with <arch>.json flag tables")
    common.add_argument("--default-action", default="errno", choices=("errno", "kill"))
    common.add_argument("--jobs", type=int, default=1, help="worker cap")
    common.add_argument("-v", "--verbose", action="store_true")

    lib = _Parser(add_help=False)
    lib.add_argument("--ir", help="library IR dump")
    lib.add_argument("--aliases", help="alias dump")
    lib.add_argument("--apis", help="exported API list")
    lib.add_argument("--wrappers", help="wrapper list, one 'function -> syscall' per line")
    lib.add_argument("--macros", help="syscall macro names")

    parser = _Parser(prog="secforge", description="Derive seccomp allowlists from library and binary analysis.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze-lib", parents=[common, lib], help="library call graph and API syscall map")
    p.set_defaults(func=stage_analyze_lib)

    p = sub.add_parser("scan-bin", parents=[common], help="find API callsites and direct syscalls")
    p.add_argument("--bin-dis", help="disassembly listing")
    p.add_argument("--mapping", help="mapping file (default: OUT/mapping.json)")
    p.set_defaults(func=stage_scan_bin)

    p = sub.add_parser("gen-profile", parents=[common], help="build the seccomp profile")
    p.add_argument("--mapping")
    p.add_argument("--callsites")
    p.set_defaults(func=stage_gen_profile)

    p = sub.add_parser("simulate", parents=[common], help="replay a JSONL trace against a profile")
    p.add_argument("--profile")
    p.add_argument("--trace")
    p.set_defaults(func=stage_simulate)

    p = sub.add_parser("score-cve", parents=[common], help="count CVEs mitigated by a profile")
    p.add_argument("--profile")
    p.add_argument("--cve-map")
    p.set_defaults(func=stage_score_cve)

    p = sub.add_parser("optimize-order", parents=[common], help="reorder rules by observed frequency")
    p.add_argument("--profile")
    p.add_argument("--trace")
    p.add_argument("--histogram", help="JSON object: syscall number -> count")
    p.set_defaults(func=stage_optimize_order)

    p = sub.add_parser("pipeline", parents=[common, lib], help="analyze-lib, scan-bin and gen-profile in order")
    p.add_argument("--bin-dis")
    p.add_argument("--mapping")
    p.add_argument("--callsites")
    p.add_argument("--profile")
    p.add_argument("--trace")
    p.add_argument("--cve-map")
    p.set_defaults(func=stage_pipeline)

    p = sub.add_parser("graph", parents=[common, lib], help="print the merged call graph")
    p.set_defaults(func=cmd_graph)
    p = sub.add_parser("map", parents=[common, lib], help="print the API syscall map")
    p.set_defaults(func=cmd_map)
    p = sub.add_parser("taint", parents=[common, lib], help="list or dump data dependency graphs")
    p.add_argument("--dump", action="store_true", help="print full graphs")
    p.add_argument("--api")
    p.set_defaults(func=cmd_taint)
    return parser


def _diagnostic(kind, message, stage=None) -> str:
    doc = {"error": kind, "message": message}
    if stage:
        doc["stage"] = stage
    return json.dumps(doc)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        _check_common(args)
        args.func(args)
    except ConfigError as exc:
        print(_diagnostic("ConfigError", str(exc)), file=sys.stderr)
        return 2
    except StageError as exc:
        print(_diagnostic(type(exc.exc).__name__, str(exc.exc), exc.stage), file=sys.stderr)
        return 1
    except SecforgeError as exc:
        print(_diagnostic(type(exc).__name__, str(exc), getattr(args, "command", None)), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
