"""
persenc command line.

    persenc validate data/quadrant.json
    persenc --output cokernel.json cokernel data/lshape.json
    persenc counit data/antichain_collapse.json
    persenc run data/lshape.json
    persenc suite --seed 7

JSON (or DOT) goes to stdout or --output; status lines go to stderr.
Exit codes: 0 ok, 1 failed certificate, 2 unreadable manifest or bad reference.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from persenc.cli import serialize
from persenc.cli.manifest import Manifest, Workspace, load_manifest, resolve_or_default
from persenc.config import DEFAULT_FIELD_CHAR, DEFAULT_SEED, FieldConfig, SuiteConfig
from persenc.errors import ParseError, PersencError, UnresolvedReference
from persenc.geometry import encoding as enc
from persenc.geometry.staircase import (
    closed_class_status,
    closed_interval_decompose,
    down_closure,
    interior,
    is_interval,
    leq_components_cells,
    render_ascii,
    tilde,
    topological_closure,
    topological_components,
    underline,
    up_closure,
)
from persenc.modules.persistence import counit_check, hom_space, validate_module
from persenc.modules.pipeline import EncodedModule, abelian_pipeline, finish, prepare, unrefined_hom_dimension
from persenc.oracle.oracle import crosscheck_result, sample_table
from persenc.oracle.scenarios import DEFAULT_SUITES, SUITES, run_suites, summary_table
from persenc.order.poset import explain_ff_conditions
from persenc.order.poset import to_dot as poset_to_dot

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PARSE = 2


@dataclass
class CommandResult:
    payload: Dict[str, Any]
    ok: bool = True
    message: str = ""
    dot: Optional[str] = None
    table: Optional[str] = None
    notes: List[str] = field(default_factory=list)


def status(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


# --- commands over a manifest ---


def _encoded_pair(ws: Workspace, args: Dict[str, Any]) -> tuple[EncodedModule, EncodedModule]:
    names = ws.names("encoded")
    left = args.get("source") or (names[0] if names else ws.default("encoded"))
    right = args.get("target") or (names[1] if len(names) > 1 else left)
    return ws.encoded(left), ws.encoded(right)


def cmd_validate(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
    checked: Dict[str, List[str]] = {}
    pruned: Dict[str, List[Any]] = {}
    for name in ws.names("posets"):
        ws.poset(name)
    checked["posets"] = ws.names("posets")
    for name in ws.names("maps"):
        ws.map(name).validate()
    checked["maps"] = ws.names("maps")
    for name in ws.names("sets"):
        ws.cellset(name)
    checked["sets"] = ws.names("sets")
    for name in ws.names("encodings"):
        _, dropped = enc.validate_encoding(ws.encoding(name))
        if dropped:
            pruned[name] = [serialize.element_to_json(q) for q in dropped]
    checked["encodings"] = ws.names("encodings")
    for name in ws.names("modules"):
        validate_module(ws.module(name))
    checked["modules"] = ws.names("modules")
    for name in ws.names("encoded"):
        ws.encoded(name).validate()
    checked["encoded"] = ws.names("encoded")
    for name in ws.names("morphisms"):
        ws.morphism(name)
    checked["morphisms"] = ws.names("morphisms")
    for name in ws.names("plans"):
        ws.plan(name)
    checked["plans"] = ws.names("plans")
    notes = [f"encoding {n}: pruned {len(v)} elements with empty fibers" for n, v in pruned.items()]
    total = sum(len(v) for v in checked.values())
    return CommandResult({"ok": True, "checked": checked, "pruned": pruned}, message=f"{total} objects valid", notes=notes)


def _pick_encoding(ws: Workspace, args: Dict[str, Any]) -> enc.Encoding:
    if args.get("encoding"):
        return ws.encoding(args["encoding"])
    if args.get("encoded"):
        return ws.encoded(args["encoded"]).encoding
    if ws.names("encodings"):
        return ws.encoding(ws.default("encodings"))
    return ws.encoded(ws.default("encoded")).encoding


def cmd_common(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
    if args.get("encodings"):
        encodings = [ws.encoding(n) for n in args["encodings"]]
    elif args.get("encoded"):
        encodings = [ws.encoded(n).encoding for n in args["encoded"]]
    else:
        encodings = [ws.encoded(n).encoding for n in ws.names("encoded")] or [ws.encoding(n) for n in ws.names("encodings")]
    if not encodings:
        raise UnresolvedReference("Manifest has no encodings to combine")
    common, dropped = enc.validate_encoding(enc.common_encoding_many(encodings))
    payload = serialize.encoding_to_json(common)
    payload["pruned"] = [serialize.element_to_json(q) for q in dropped]
    return CommandResult(
        payload,
        message=f"common encoding: {common.grid.n_cells} cells, {len(common.target)} target elements",
        dot=enc.to_dot(common, "common"),
    )


def cmd_refine(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
    e = enc.validate_encoding(_pick_encoding(ws, args))[0]
    refined = enc.connective_refinement(e)
    report = enc.fibers_in_closed_class(refined)
    payload = serialize.encoding_to_json(refined)
    payload["closed_class"] = report.model_dump()
    return CommandResult(
        payload,
        ok=report.ok,
        message=f"refined {len(e.target)} -> {len(refined.target)} target elements",
        dot=enc.to_dot(refined, "refined"),
    )


def cmd_check_ff(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
    if args.get("map") or (ws.names("maps") and not args.get("encoding")):
        f = ws.map(resolve_or_default(ws, args, "map", "maps")).validate()
    else:
        f = enc.cell_map(_pick_encoding(ws, args))
    verdict = explain_ff_conditions(f)
    payload = serialize.to_jsonable(
        {**verdict, "bad_fibers": [{**b, "element": serialize.element_to_json(b["element"])} for b in verdict["bad_fibers"]]}
    )
    msg = "pullback is fully faithful" if verdict["ok"] else "pullback is not fully faithful"
    if not verdict["order_generated"]:
        msg += " (target order not generated by the image)"
    if verdict["bad_fibers"]:
        msg += f" ({len(verdict['bad_fibers'])} disconnected fibers)"
    return CommandResult(payload, ok=verdict["ok"], message=msg)


def cmd_counit(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
    f = ws.map(resolve_or_default(ws, args, "map", "maps")).validate()
    M = validate_module(ws.module(resolve_or_default(ws, args, "module", "modules")))
    report = counit_check(f, M)
    failures = report.failures()
    if report.ok:
        msg = f"counit is an isomorphism at all {len(report.rows)} elements"
    else:
        first = failures[0]
        kind = "not injective" if not first.injective else "not surjective"
        msg = f"counit {kind} at {first.element} (colimit dim {first.colimit_dim} vs {first.target_dim})"
    return CommandResult(
        {**report.model_dump(), "verdict": msg},
        ok=report.ok,
        message=msg,
        table=report.to_frame().to_string(index=False),
    )


def cmd_hom(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
    if args.get("source_module"):
        M = ws.module(args["source_module"])
        N = ws.module(args.get("target_module", args["source_module"]))
        dim, basis = hom_space(M, N)
        payload = {"hom_dim": dim, "basis": [serialize.morphism_to_json(b) for b in basis]}
        return CommandResult(payload, message=f"dim Hom = {dim}")
    a, b = _encoded_pair(ws, args)
    _, src, tgt, steps = prepare(a, b)
    dim, basis = hom_space(src, tgt)
    payload = {
        "hom_dim": dim,
        "basis": [serialize.morphism_to_json(m) for m in basis],
        "steps": steps,
    }
    notes = []
    if args.get("compare_unrefined"):
        coarse = unrefined_hom_dimension(a, b)
        payload["unrefined_hom_dim"] = coarse
        notes.append(f"without refinement: dim Hom = {coarse}")
    return CommandResult(payload, message=f"dim Hom = {dim} over the refined encoding", notes=notes)


def _pipeline_command(operation: str) -> Callable[[Workspace, Dict[str, Any]], CommandResult]:
    def run(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
        a, b, spec = ws.morphism(resolve_or_default(ws, args, "morphism", "morphisms"))
        result = abelian_pipeline(a, b, spec, operation)
        payload = serialize.pipeline_to_json(result)
        notes = []
        if not result.report.complete:
            notes.append("some fibers are not intervals; closed-class check is only partial")
        return CommandResult(
            payload,
            ok=result.report.ok,
            message=f"{operation}: total dim {result.module.total_dim} over {len(result.refined.target)} target elements",
            dot=enc.to_dot(result.refined, operation),
            notes=notes,
        )

    return run


def _pick_set(ws: Workspace, args: Dict[str, Any]):
    if "expr" in args:
        return ws.set_or_expr(args["expr"])
    return ws.cellset(resolve_or_default(ws, args, "set", "sets"))


def _cells(s) -> List[List[int]]:
    return [list(c) for c in s.cells()]


def cmd_components(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
    s = _pick_set(ws, args)
    leq = leq_components_cells(s)
    top = topological_components(s)
    agree = sorted(map(_cells, leq)) == sorted(map(_cells, top))
    payload = {
        "grid": serialize.grid_to_json(s.grid),
        "leq_components": [_cells(c) for c in leq],
        "topological_components": [_cells(c) for c in top],
        "agree": agree,
        "interval_components": [is_interval(c) for c in leq],
    }
    return CommandResult(payload, message=f"{len(leq)} <=-components, {len(top)} topological components")


def cmd_closure(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
    s = _pick_set(ws, args)
    ops = {
        "underline": underline,
        "tilde": tilde,
        "closure": topological_closure,
        "interior": interior,
        "up": up_closure,
        "down": down_closure,
    }
    payload: Dict[str, Any] = {"grid": serialize.grid_to_json(s.grid), "set": _cells(s)}
    payload.update({name: _cells(op(s)) for name, op in ops.items()})
    payload["status"] = closed_class_status(s)
    table = render_ascii(s) if s.grid.dim == 2 else None
    return CommandResult(payload, message=f"{len(s)} cells on a {s.grid.dim}-d grid", table=table)


def cmd_decompose(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
    s = _pick_set(ws, args)
    u, v = closed_interval_decompose(s)
    payload = {"upper": serialize.cellset_to_json(u), "lower": serialize.cellset_to_json(v)}
    return CommandResult(payload, message=f"interval = U \\ V with |U| = {len(u)}, |V| = {len(v)} cells")


def cmd_crosscheck(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
    a, b, spec = ws.morphism(resolve_or_default(ws, args, "morphism", "morphisms"))
    plan = ws.plan(resolve_or_default(ws, args, "plan", "plans"))
    ops = args.get("operations") or ["kernel", "image", "cokernel"]
    refined, src, tgt, steps = prepare(a, b)
    reports = {}
    for op in ops:
        result = finish(refined, src, tgt, spec, op, steps)
        reports[op] = crosscheck_result(result, a, b, plan)
    ok = all(r.ok for r in reports.values())
    bad = [op for op, r in reports.items() if not r.ok]
    msg = f"{len(ops)} operations agree on {len(plan.points)} sample points" if ok else f"mismatch in {', '.join(bad)}"
    table = sample_table(a, plan).to_string(index=False)
    return CommandResult({op: r.model_dump() for op, r in reports.items()}, ok=ok, message=msg, table=table)


def cmd_export_dot(ws: Workspace, args: Dict[str, Any]) -> CommandResult:
    if args.get("poset"):
        dot = poset_to_dot(ws.poset(args["poset"]), name=args["poset"])
        what = f"poset {args['poset']}"
    elif args.get("module"):
        M = ws.module(args["module"])
        dot = poset_to_dot(M.base, {x: f"dim {d}" for x, d in zip(M.base.elements, M.dims)}, name=args["module"])
        what = f"module {args['module']}"
    elif args.get("encoded"):
        e = ws.encoded(args["encoded"])
        M = e.module
        dot = poset_to_dot(M.base, {x: f"dim {d}" for x, d in zip(M.base.elements, M.dims)}, name=args["encoded"])
        what = f"encoded module {args['encoded']}"
    elif args.get("encoding") or ws.names("encodings"):
        name = resolve_or_default(ws, args, "encoding", "encodings")
        dot = enc.to_dot(ws.encoding(name), name)
        what = f"encoding {name}"
    else:
        name = ws.default("posets")
        dot = poset_to_dot(ws.poset(name), name=name)
        what = f"poset {name}"
    return CommandResult({"dot": dot}, message=f"exported {what}", dot=dot)


COMMANDS: Dict[str, Callable[[Workspace, Dict[str, Any]], CommandResult]] = {
    "validate": cmd_validate,
    "common": cmd_common,
    "refine": cmd_refine,
    "check-ff": cmd_check_ff,
    "counit": cmd_counit,
    "hom": cmd_hom,
    "kernel": _pipeline_command("kernel"),
    "image": _pipeline_command("image"),
    "cokernel": _pipeline_command("cokernel"),
    "components": cmd_components,
    "closure": cmd_closure,
    "decompose": cmd_decompose,
    "crosscheck": cmd_crosscheck,
    "export-dot": cmd_export_dot,
}


def execute(ws: Workspace, command: str, args: Dict[str, Any]) -> tuple[int, Dict[str, Any], CommandResult | None]:
    """Runs one command; returns (exit code, JSON record, result)."""
    if command not in COMMANDS:
        err = ParseError(f"Unknown command {command!r}", {"command": command, "known": sorted(COMMANDS)})
        return EXIT_PARSE, err.to_dict(), None
    try:
        result = COMMANDS[command](ws, args)
    except (ParseError, UnresolvedReference) as e:
        status(f"❌ {command}: {e.message}")
        return EXIT_PARSE, e.to_dict(), None
    except PersencError as e:
        status(f"❌ {command}: {e.message}")
        return EXIT_FAILED, e.to_dict(), None
    icon = "✅" if result.ok else "❌"
    status(f"{icon} {command}: {result.message}")
    for note in result.notes:
        status(f"⚠️  {note}")
    return (EXIT_OK if result.ok else EXIT_FAILED), result.payload, result


def commands_for(manifest: Manifest, command: str) -> List[Dict[str, Any]]:
    found = [c.args for c in manifest.commands if c.command == command]
    return found or [{}]


# --- output ---


def emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
        status(f"📝 Wrote {output}")
    else:
        sys.stdout.write(text + "\n")
        sys.stdout.flush()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="persenc",
        description="Staircase-encoded persistence modules: validation, refinement, kernels, cokernels and images",
    )
    parser.add_argument(
        "--field-char",
        type=int,
        default=None,
        help=f"Prime characteristic of the coefficient field (default: manifest value or {DEFAULT_FIELD_CHAR})",
    )
    parser.add_argument("--format", choices=["json", "dot"], default="json", help="Output format (default: json)")
    parser.add_argument("--output", "-o", default=None, help="Write the report here instead of stdout")
    parser.add_argument("--table", action="store_true", help="Also print a table or picture to stderr when available")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in [*COMMANDS, "run"]:
        p = sub.add_parser(name, help=f"Run '{name}' on a manifest" if name != "run" else "Run every command listed in a manifest")
        p.add_argument("manifest", help="Path to a JSON manifest")
        if name != "run":
            p.add_argument(
                "--name",
                default=None,
                help="Name of the main object (morphism, set, map, encoding, ...) instead of the manifest's commands",
            )

    s = sub.add_parser("suite", help="Run the randomized acceptance suites")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"Seed for random cases (default: {DEFAULT_SEED})")
    s.add_argument(
        "--suites",
        nargs="+",
        choices=sorted(SUITES),
        default=None,
        help="Suites to run (default: all except determinism)",
    )
    return parser


NAME_KEYS = {
    "refine": "encoding",
    "check-ff": "map",
    "counit": "map",
    "hom": "source",
    "kernel": "morphism",
    "image": "morphism",
    "cokernel": "morphism",
    "components": "set",
    "closure": "set",
    "decompose": "set",
    "crosscheck": "morphism",
    "export-dot": "encoding",
}


def run_suite_command(args: argparse.Namespace) -> int:
    p = FieldConfig(args.field_char or DEFAULT_FIELD_CHAR).p
    status(f"🔧 Running suites with seed {args.seed} over F_{p}...")
    summaries = run_suites(args.suites or DEFAULT_SUITES, seed=args.seed, config=SuiteConfig(), p=p)
    ok = all(s.ok for s in summaries)
    if args.table:
        status(summary_table(summaries).to_string(index=False))
    for s in summaries:
        status(f"{'✅' if s.ok else '❌'} {s.name}: {s.cases - s.failures}/{s.cases} cases passed")
    emit(serialize.dumps({"seed": args.seed, "field_char": p, "suites": summaries, "ok": ok}), args.output)
    return EXIT_OK if ok else EXIT_FAILED


def run_manifest_command(args: argparse.Namespace) -> int:
    try:
        manifest = load_manifest(args.manifest)
        ws = Workspace(manifest, args.field_char)
    except PersencError as e:
        status(f"❌ {e.message}")
        emit(serialize.dumps(e.to_dict()), args.output)
        return EXIT_PARSE
    except ValueError as e:
        status(f"❌ {e}")
        return EXIT_PARSE

    if args.command == "run":
        records = []
        code = EXIT_OK
        for c in manifest.commands:
            rc, record, _ = execute(ws, c.command, c.args)
            code = max(code, rc)
            records.append({"command": c.command, "args": c.args, "exit_code": rc, "result": record})
        if not manifest.commands:
            status("⚠️  Manifest lists no commands")
        emit(serialize.dumps({"commands": records, "ok": code == EXIT_OK}), args.output)
        return code

    if args.name is not None:
        batches = [{NAME_KEYS.get(args.command, "name"): args.name}]
    else:
        batches = commands_for(manifest, args.command)
    code = EXIT_OK
    records, dots = [], []
    for cargs in batches:
        rc, record, result = execute(ws, args.command, cargs)
        code = max(code, rc)
        records.append(record)
        if result is not None:
            if result.dot:
                dots.append(result.dot)
            if args.table and result.table:
                status(result.table)
    if args.format == "dot":
        if not dots:
            status(f"⚠️  {args.command} has no DOT output")
            return max(code, EXIT_FAILED)
        emit("\n".join(d.rstrip() for d in dots), args.output)
    else:
        emit(serialize.dumps(records[0] if len(records) == 1 else records), args.output)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "suite":
        return run_suite_command(args)
    return run_manifest_command(args)


if __name__ == "__main__":
    sys.exit(main())
