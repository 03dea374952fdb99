"""Stage drivers: library analysis and binary scanning."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .binscan import BinaryCallsite, DirectSyscall, Slicer, extract_call_args, find_api_callsites, \
    find_direct_syscalls
from .callgraph import CallGraph, build_callgraph
from .data import default_macros, load_flags
from .ir import IrProgram
from .profile import load_syscall_table
from .symexec import SymexecEngine, resolve_arg_mapping, resolve_nr_mapping
from .syscall_ident import ApiSyscallMap, build_api_syscall_map, identify_syscall_functions
from .taint import TaintCache, taint_site_args


@dataclass
class LibraryAnalysis:
    graph: CallGraph
    sites: list
    api_map: ApiSyscallMap
    ddgs: dict = field(default_factory=dict)  # (api, site key, arg) -> DDG
    diagnostics: list = field(default_factory=list)


def _map_api(api, api_map, prog, graph, engine, cache, macros):
    entry = api_map.entries[api]
    arg_maps, nr_maps, ddgs = [], [], {}
    for key in entry.sites:
        site = api_map.sites[tuple(key)]
        if site.is_dynamic:
            nr = resolve_nr_mapping(engine, graph, site, api)
            if nr is not None:
                nr_maps.append(nr)
            continue
        for k, ddg in taint_site_args(api, site, prog, graph, cache, macros).items():
            ddgs[(api, site.key, k)] = ddg
            m = resolve_arg_mapping(ddg, engine, graph, site, api)
            if m is not None:
                arg_maps.append(m.to_json())
    arg_maps.sort(key=lambda m: (m["site"], m["syscallArg"]))
    return api, arg_maps, nr_maps, ddgs


def analyze_library(prog: IrProgram, arch: str = "a64", macros=None, flags: dict | None = None,
                    jobs: int = 1, cache: TaintCache | None = None,
                    engine: SymexecEngine | None = None) -> LibraryAnalysis:
    macros = default_macros() if macros is None else frozenset(macros)
    flags = flags if flags is not None else load_flags(arch)
    table = load_syscall_table(arch)
    graph = build_callgraph(prog, macros)
    diagnostics = []
    sites = identify_syscall_functions(prog, macros, table.by_name, diagnostics)
    api_map = build_api_syscall_map(graph, sites, prog.apis, prog)
    cache = cache if cache is not None else TaintCache()
    engine = engine or SymexecEngine(prog, flags.get("domains", {}), macros)

    def work(api):
        return _map_api(api, api_map, prog, graph, engine, cache, macros)

    apis = list(api_map.entries)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, apis))
    else:
        results = [work(a) for a in apis]
    ddgs = {}
    for api, arg_maps, nr_maps, part in results:
        api_map.entries[api].arg_mappings = arg_maps
        api_map.entries[api].nr_mappings = nr_maps
        ddgs.update(part)
    return LibraryAnalysis(graph, sites, api_map, ddgs, [d.reason for d in diagnostics])


def scan_binary(img, api_map: ApiSyscallMap, jobs: int = 1):
    """API callsites with argument value sets, plus direct syscall sites."""
    slicer = Slicer(img)
    found = find_api_callsites(img, api_map.entries)

    def work(cs):
        params = api_map.entries[cs.api].params
        return extract_call_args(img, cs, arity=len(params), param_types=params, slicer=slicer)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            callsites = list(pool.map(work, found))
    else:
        callsites = [work(c) for c in found]
    direct = find_direct_syscalls(img, slicer)
    return callsites, direct


def dumps_scan_report(arch: str, callsites, direct, diagnostics=()) -> str:
    doc = {
        "arch": arch,
        "callsites": [c.to_json() for c in callsites],
        "directSyscalls": [d.to_json() for d in direct],
        "diagnostics": list(diagnostics),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_scan_report(doc: dict):
    callsites = [BinaryCallsite.from_json(c) for c in doc["callsites"]]
    direct = [DirectSyscall.from_json(d) for d in doc["directSyscalls"]]
    return doc.get("arch"), callsites, direct
