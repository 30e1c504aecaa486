"""Command line front end.

Exit codes: 0 success, 1 input error, 2 internal error. Reports print one
per line as ``severity file:line:col message``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .compose import (
    BundleEntry,
    BundleManifest,
    ComposedLanguage,
    FragmentLoader,
    bundle_tools,
    compose_from_config,
    manifest_from_json,
    resolve_inheritance,
)
from .demo import demo_action_registry, demo_workflow_registry
from .engine import build_engine, parse
from .errors import FragmentcError
from .grammar import parse_grammar, parse_tool_config, validate_fragment
from .grammar.model import ActionKind
from .reports import ProblemReport, Span, error, has_errors
from .services import compute_features, run_editor_action, run_navigator_action
from .version import __version__


def _print_reports(reports: list[ProblemReport], as_json: bool, out_path: str | None) -> None:
    if as_json:
        payload = json.dumps([r.to_json_dict() for r in reports], indent=2, sort_keys=True) + "\n"
        _write_out(payload, out_path)
        return
    for report in reports:
        print(report.format())


def _write_out(payload: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)


def _loader(args: argparse.Namespace, *extra_roots: str) -> FragmentLoader:
    roots = [*extra_roots, *(args.grammar_path or [])]
    return FragmentLoader(roots)


def _load_tool(args: argparse.Namespace, config_path: str):
    text = Path(config_path).read_text(encoding="utf-8")
    cfg = parse_tool_config(text, config_path)
    loader = _loader(args, str(Path(config_path).parent))
    lang = compose_from_config(cfg, loader)
    return cfg, lang


# --------------------------------------------------------------------------
# subcommands


def cmd_check(args: argparse.Namespace) -> int:
    reports: list[ProblemReport] = []
    for path in args.grammars:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            reports.append(error(f"cannot read file: {exc}", path, source="cli"))
            continue
        try:
            fragment = parse_grammar(text, path)
        except FragmentcError as exc:
            reports.extend(exc.reports)
            continue
        reports.extend(fragment.parse_warnings)
        loader = _loader(args, str(Path(path).parent))
        supers = []
        try:
            for name in fragment.super_grammars:
                supers.append(resolve_inheritance(
                    loader(name, relative_to=str(Path(path).parent)), loader))
        except FragmentcError as exc:
            reports.extend(exc.reports)
            continue
        reports.extend(validate_fragment(fragment, supers))
    _print_reports(reports, args.json, args.out)
    return 1 if has_errors(reports) else 0


def cmd_compose(args: argparse.Namespace) -> int:
    cfg, lang = _load_tool(args, args.config)
    handle = build_engine(lang)
    editor = lang.effective_editor
    extensions = tuple(args.extension or [f".{lang.name.lower()}"])
    manifest = bundle_tools([BundleEntry(cfg, lang, extensions, config_path=args.config)])
    if args.json or args.out:
        _write_out(manifest.to_json(), args.out)
    if not args.json:
        print(f"language {lang.name}: start {lang.start_symbol}, "
              f"fragments [{', '.join(lang.source_fragments)}]")
        print(f"  keywords: {len(editor.keywords)}, foldable: {len(editor.foldable)}, "
              f"segments: {len(editor.segments)}")
        print(f"  workflows: [{', '.join(editor.workflows)}], "
              f"actions: {len(editor.actions())}, format: {'yes' if editor.format_available else 'no'}")
        print("  unbound externals: 0")
        for report in handle.warnings:
            print(report.format())
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    _, lang = _load_tool(args, args.config)
    handle = build_engine(lang)
    text = Path(args.document).read_text(encoding="utf-8")
    outcome = parse(text, lang, args.document, handle=handle)
    passes, workflow_problems = demo_workflow_registry().resolve(
        lang.effective_editor.workflows, args.config)
    features = compute_features(outcome, lang, text, args.document, passes)
    payload = features.to_json_dict()
    payload["diagnostics"].extend(r.to_json_dict() for r in workflow_problems)
    _write_out(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_action(args: argparse.Namespace) -> int:
    _, lang = _load_tool(args, args.config)
    handle = build_engine(lang)
    requested = args.action_id
    action = next(
        (a for a in lang.effective_editor.actions()
         if a.action_id == requested or a.display_name == requested),
        None,
    )
    if action is None:
        print(error(f"unknown action {requested!r}", args.config, source="cli").format())
        return 1
    registry = demo_action_registry()
    files = [str(Path(f)) for f in args.files]
    if not files:
        print(error("action needs at least one file", args.config, source="cli").format())
        return 1
    if action.kind is ActionKind.EDITOR:
        text = Path(files[0]).read_text(encoding="utf-8")
        result = run_editor_action(action.action_id, text, files[0], Span(1, 1, 1, 1),
                                   lang, handle, registry)
    else:
        mapping = {f: str(Path(f).resolve().parent) for f in files}
        result = run_navigator_action(action.action_id, mapping, lang, handle, registry)
    for report in result.reports:
        print(report.format())
    out_dir = Path(args.out_dir) if args.out_dir else Path(files[0]).resolve().parent
    for name, content in result.new_files.items():
        target = out_dir / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content, encoding="utf-8")
        print(f"wrote {target}")
    for edit in result.edits:
        sys.stdout.write(edit.new_text)
    return 1 if result.failed() else 0


def cmd_bundle(args: argparse.Namespace) -> int:
    entries: list[BundleEntry] = []
    for spec in args.tools:
        if "=" not in spec:
            print(error(f"tool spec must look like config.mctool=.ext[,.ext]: {spec!r}",
                        spec, source="cli").format())
            return 1
        config_path, _, ext_list = spec.partition("=")
        extensions = tuple(e if e.startswith(".") else f".{e}" for e in ext_list.split(",") if e)
        cfg, lang = _load_tool(args, config_path)
        entries.append(BundleEntry(cfg, lang, extensions or (f".{lang.name.lower()}",),
                                   config_path=config_path))
    manifest = bundle_tools(entries)
    _write_out(manifest.to_json(), args.out)
    return 0


def _load_bundle_for_serve(args: argparse.Namespace) -> tuple[BundleManifest, dict[str, ComposedLanguage]]:
    path = Path(args.config)
    if path.suffix == ".mctool":
        cfg, lang = _load_tool(args, str(path))
        manifest = bundle_tools([BundleEntry(cfg, lang, (f".{lang.name.lower()}",),
                                             config_path=str(path))])
        return manifest, {lang.name: lang}
    manifest = manifest_from_json(path.read_text(encoding="utf-8"), str(path))
    composed: dict[str, ComposedLanguage] = {}
    for entry in manifest.languages:
        if not entry.config_path:
            raise FragmentcError([error(
                f"bundle entry {entry.name!r} carries no tool config path", str(path), source="cli")])
        config_path = Path(entry.config_path)
        if not config_path.is_absolute():
            config_path = path.parent / config_path
        _, lang = _load_tool(args, str(config_path))
        composed[lang.name] = lang
    return manifest, composed


def cmd_serve(args: argparse.Namespace) -> int:
    from . import lsp

    manifest, composed = _load_bundle_for_serve(args)
    return lsp.serve(manifest, composed, log_file=args.log_file)


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fragmentc",
        description="Compose grammar fragments into languages and serve their editors.",
    )
    parser.add_argument("--version", action="version", version=f"fragmentc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--grammar-path", action="append", default=[], metavar="DIR",
                       help="grammar root directory (repeatable; FRAGMENTC_GRAMMAR_PATH also applies)")

    p = sub.add_parser("check", help="parse and validate grammar files")
    p.add_argument("grammars", nargs="+", metavar="GRAMMAR.mc")
    p.add_argument("--json", action="store_true", help="emit reports as JSON")
    p.add_argument("--out", metavar="FILE", help="write output to FILE")
    common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("compose", help="compose a language from a tool config")
    p.add_argument("config", metavar="TOOL.mctool")
    p.add_argument("--json", action="store_true", help="print the bundle manifest JSON only")
    p.add_argument("--out", metavar="FILE", help="write the manifest JSON to FILE")
    p.add_argument("--extension", action="append", metavar=".EXT",
                   help="file extension for the language (repeatable)")
    common(p)
    p.set_defaults(fn=cmd_compose)

    p = sub.add_parser("features", help="dump highlight/fold/outline/diagnostics JSON for a document")
    p.add_argument("config", metavar="TOOL.mctool")
    p.add_argument("document", metavar="DOCUMENT")
    p.add_argument("--out", metavar="FILE")
    common(p)
    p.set_defaults(fn=cmd_features)

    p = sub.add_parser("action", help="run an editor or navigator action headlessly")
    p.add_argument("config", metavar="TOOL.mctool")
    p.add_argument("action_id", metavar="ACTION", help="action id or display name")
    p.add_argument("files", nargs="*", metavar="FILE")
    p.add_argument("--out-dir", metavar="DIR", help="directory for generated files")
    common(p)
    p.set_defaults(fn=cmd_action)

    p = sub.add_parser("bundle", help="bundle one or more tools into a manifest")
    p.add_argument("tools", nargs="+", metavar="TOOL.mctool=.ext[,.ext]")
    p.add_argument("--out", metavar="FILE")
    common(p)
    p.set_defaults(fn=cmd_bundle)

    p = sub.add_parser("serve", help="serve a tool config or bundle over stdio (language server)")
    p.add_argument("config", metavar="TOOL.mctool|BUNDLE.json")
    p.add_argument("--log-file", metavar="FILE")
    common(p)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FragmentcError as exc:
        for report in exc.reports:
            print(report.format())
        return 1
    except OSError as exc:
        print(error(str(exc), getattr(exc, "filename", None) or "<io>", source="cli").format())
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
