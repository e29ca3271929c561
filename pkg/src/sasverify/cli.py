"""``sasverify`` command line.

Exit codes: 0 success, 1 I/O or parse error, 2 validation diagnostics,
3 state cap exceeded, 4 inconsistent state under ``--governance fail``.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .lifecycle import (
    GOVERNANCE,
    Inconsistent,
    SasSystem,
    StateCapExceeded,
    build_rts,
    parse_system,
    sts_abox,
    transitions,
    violated_disjointness,
)
from .mapping import MappingError, ObdaSystem, materialize, parse_mappings
from .ontology import TBox, parse_tbox
from .syntax import ParseError
from .temporal import (
    compile_property,
    format_property,
    parse_property,
    rewrite_property,
    validate,
)
from .temporal.checker import check_rts, check_sts
from .terms import SchemaError, canonical_form, format_fact, format_literal

OK, INPUT_ERROR, DIAGNOSTICS, CAP_EXCEEDED, INCONSISTENT = 0, 1, 2, 3, 4


class _Exit(Exception):
    def __init__(self, code, message, payload=None):
        super().__init__(message)
        self.code = code
        self.payload = payload or {}


def _read(path, what):
    if path is None:
        raise _Exit(INPUT_ERROR, f"missing --{what}")
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Exit(INPUT_ERROR, f"cannot read {path}: {exc.strerror or exc}") from None


def _parse(path, what, parser):
    text = _read(path, what)
    try:
        return parser(text)
    except (ParseError, SchemaError, MappingError) as exc:
        raise _Exit(INPUT_ERROR, f"{path}: {exc}") from None


def _load_system(args):
    return _parse(args.sys, "sys", parse_system)


def _load_tbox(args, required=True):
    if args.tbox is None and not required:
        return TBox()
    return _parse(args.tbox, "tbox", parse_tbox)


def _load_mappings(args, schema):
    return _parse(args.map, "map", lambda text: parse_mappings(text, schema))


def _obda(schema, t, m):
    try:
        return ObdaSystem(schema, t, m)
    except MappingError as exc:
        raise _Exit(INPUT_ERROR, str(exc)) from None


def _load_sas(args):
    s = _load_system(args)
    t = _load_tbox(args)
    m = _load_mappings(args, s.schema)
    return SasSystem(s, _obda(s.schema, t, m))


def _load_property(args, t):
    f = _parse(args.prop, "prop", parse_property)
    diagnostics = validate(f, t)
    if diagnostics:
        raise _Exit(DIAGNOSTICS, "\n".join(str(d) for d in diagnostics), {"diagnostics": [str(d) for d in diagnostics]})
    return f


def _build(args, sas):
    try:
        return build_rts(sas, args.governance, args.cap)
    except StateCapExceeded as exc:
        raise _Exit(CAP_EXCEEDED, str(exc)) from None
    except Inconsistent as exc:
        facts = [format_fact(n, t) for n, t in exc.instance.facts()]
        raise _Exit(INCONSISTENT, str(exc), {"state": facts, "violated": exc.violated}) from None


def _facts(items):
    return [format_fact(n, t) for n, t in items]


# -- commands ------------------------------------------------------------------------


def cmd_rewrite(args):
    t = _load_tbox(args)
    f = _load_property(args, t)
    text = format_property(rewrite_property(f, t))
    return {"result": text}, text


def cmd_compile(args):
    t = _load_tbox(args)
    f = _load_property(args, t)
    schema = _load_system(args).schema if args.sys else None
    m = _load_mappings(args, schema)
    _obda(m.schema, t, m)
    text = format_property(compile_property(f, t, m))
    return {"result": text}, text


def cmd_check(args):
    sas = _load_sas(args)
    f = _load_property(args, sas.tbox)
    started = time.perf_counter()
    rts = _build(args, sas)
    compiled = compile_property(f, sas.tbox, sas.mappings)
    verdict = check_rts(compiled, rts)
    doc = {
        "verdict": {"holds": verdict.holds},
        "witness": None if verdict.witness is None else list(verdict.witness),
        "stats": {"states": len(rts.states), "edges": len(rts.edges)},
    }
    lines = [f"property {'holds' if verdict.holds else 'does not hold'}", f"states: {len(rts.states)}, edges: {len(rts.edges)}"]
    if args.cross_check:
        reference = check_sts(f, rts, sas.tbox, sas.mappings)
        agree = reference.holds == verdict.holds
        doc["verdict"]["semantic"] = reference.holds
        doc["verdict"]["agree"] = agree
        lines.append(f"semantic-level check: {'holds' if reference.holds else 'does not hold'} (agreement: {str(agree).lower()})")
    if verdict.witness is not None:
        label = "counterexample" if not verdict.holds else "witness"
        lines.append(f"{label} path: {' -> '.join(map(str, verdict.witness))}")
        for s in verdict.witness:
            lines.append(f"  state {s}: {{{', '.join(_facts(rts.states[s].facts()))}}}")
    if args.timing:
        doc["stats"]["seconds"] = round(time.perf_counter() - started, 6)
        lines.append(f"time: {doc['stats']['seconds']:.3f}s")
    return doc, "\n".join(lines)


def cmd_materialize(args):
    s = _load_system(args)
    t = _load_tbox(args, required=False)
    m = _load_mappings(args, s.schema)
    if args.tbox is not None:
        _obda(s.schema, t, m)
    if args.state is None:
        a = materialize(m, s.init)
    else:
        rts = _build(args, SasSystem(s, _obda(s.schema, t, m)) if args.tbox else s)
        if not 0 <= args.state < len(rts.states):
            raise _Exit(INPUT_ERROR, f"unknown state {args.state}")
        a = sts_abox(rts, m, args.state)
    facts = _facts(a.facts())
    return {"result": facts, "stats": {"facts": len(facts)}}, "\n".join(facts)


def cmd_consistency(args):
    sas = _load_sas(args)
    args.governance = "assume"
    rts = _build(args, sas)
    report, lines = [], []
    for s, i in enumerate(rts.states):
        violated = violated_disjointness(sas.tbox, sas.mappings, i)
        report.append({"state": s, "consistent": not violated, "violated": violated})
        lines.append(f"state {s}: " + ("consistent" if not violated else "inconsistent: " + ", ".join(violated)))
    bad = sum(1 for r in report if not r["consistent"])
    lines.append(f"{bad} of {len(report)} states inconsistent")
    doc = {"result": report, "stats": {"states": len(report), "inconsistent": bad}}
    return doc, "\n".join(lines)


def cmd_simulate(args):
    s = _load_system(args)
    if args.steps < 0:
        raise _Exit(INPUT_ERROR, "--steps must be non-negative")
    seen = {s.init: 0}
    order = [s.init]
    depth = [0]
    edges = []
    frontier = [0]
    for step in range(args.steps):
        nxt = []
        for k in frontier:
            found = {}
            for action, binding, j in transitions(s, order[k]):
                label = f"{action.name}({', '.join(format_literal(binding[v]) for v in action.param_vars)})"
                found.setdefault(j, []).append(label)
            for j in sorted(found, key=canonical_form):
                if j not in seen:
                    if len(order) >= args.cap:
                        raise _Exit(CAP_EXCEEDED, f"state cap of {args.cap} exceeded")
                    seen[j] = len(order)
                    order.append(j)
                    depth.append(step + 1)
                    nxt.append(seen[j])
                for label in sorted(found[j]):
                    edges.append((k, seen[j], label))
        frontier = nxt
    lines = []
    states = []
    for k, i in enumerate(order):
        facts = _facts(i.facts())
        states.append({"id": k, "depth": depth[k], "facts": facts})
        lines.append(f"state {k} (depth {depth[k]}): {{{', '.join(facts)}}}")
    for a, b, label in edges:
        lines.append(f"{a} --{label}--> {b}")
    doc = {"result": {"states": states, "edges": [[a, b, label] for a, b, label in edges]}, "stats": {"states": len(order), "edges": len(edges)}}
    return doc, "\n".join(lines)


COMMANDS = {
    "rewrite": cmd_rewrite,
    "compile": cmd_compile,
    "check": cmd_check,
    "materialize": cmd_materialize,
    "consistency": cmd_consistency,
    "simulate": cmd_simulate,
}


def _positive(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; argparse's own code 2 means diagnostics here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(INPUT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="sasverify", description="Verify ontology-level temporal properties of artifact systems.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tbox", help=".tbox file")
    common.add_argument("--map", help=".map file")
    common.add_argument("--sys", help=".sys file")
    common.add_argument("--prop", help=".prop file")
    common.add_argument("--governance", choices=GOVERNANCE, default="prune")
    common.add_argument("--cap", type=_positive, default=10000, help="maximum number of states (default 10000)")
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--cross-check", action="store_true", help="also run the semantic-level checker")
    common.add_argument("--timing", action="store_true", help="report wall time (output is then not reproducible)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "materialize":
            p.add_argument("--state", type=int, help="state id instead of the initial instance")
        if name == "simulate":
            p.add_argument("--steps", type=int, default=1, help="exploration depth")
    return parser


def _inputs(args):
    out = {k: getattr(args, k) for k in ("tbox", "map", "sys", "prop") if getattr(args, k) is not None}
    out.update(governance=args.governance, cap=args.cap)
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    doc = {"command": args.command, "inputs": _inputs(args), "verdict": None, "witness": None, "stats": {}}
    try:
        extra, text = COMMANDS[args.command](args)
        code = OK
        doc.update(extra)
    except _Exit as exc:
        code = exc.code
        text = str(exc)
        doc["error"] = {"code": code, "message": text, **exc.payload}
    if args.format == "structured":
        print(json.dumps(doc, indent=2, sort_keys=True))
    elif code == OK:
        print(text)
    else:
        print(f"error: {text}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
