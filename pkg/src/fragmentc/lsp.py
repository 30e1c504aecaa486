"""Language server: editor services over JSON-RPC on stdio.

One server process serves every language in a bundle. Documents sync whole
(no incremental edits); every mutation republishes diagnostics for the new
version, and feature requests are answered from a version-checked cache.
"""
from __future__ import annotations

import json
import sys
import urllib.parse
import urllib.request
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, BinaryIO

from .compose import BundleManifest, ComposedLanguage
from .demo import demo_action_registry, demo_workflow_registry
from .engine import COMMENT_KINDS, ParseOutcome, ParserHandle, TokenKind, build_engine, parse
from .grammar.model import ActionKind
from .reports import ProblemReport, Severity, Span
from .services import (
    ActionRegistry,
    ActionResult,
    FeatureSet,
    WorkflowRegistry,
    compute_features,
    format_document,
    run_editor_action,
    run_navigator_action,
)

SEMANTIC_TOKEN_TYPES = ["keyword", "comment"]
_SEVERITY_CODES = {Severity.ERROR: 1, Severity.WARNING: 2, Severity.INFO: 3}


def read_message(stream: BinaryIO) -> dict | None:
    """One Content-Length framed JSON-RPC message, or None at EOF."""
    length = None
    while True:
        line = stream.readline()
        if not line:
            return None
        line = line.strip()
        if not line:
            break
        if line.lower().startswith(b"content-length:"):
            length = int(line.split(b":", 1)[1])
    if length is None:
        return None
    body = stream.read(length)
    if len(body) < length:
        return None
    return json.loads(body.decode("utf-8"))


def write_message(stream: BinaryIO, message: dict) -> None:
    body = json.dumps(message).encode("utf-8")
    stream.write(f"Content-Length: {len(body)}\r\n\r\n".encode("ascii") + body)
    stream.flush()


def uri_to_path(uri: str) -> str:
    parsed = urllib.parse.urlparse(uri)
    if parsed.scheme and parsed.scheme != "file":
        return uri
    return urllib.request.url2pathname(parsed.path) if parsed.scheme else uri


def path_to_uri(path: str) -> str:
    return Path(path).resolve().as_uri()


def _position(line: int, col: int) -> dict:
    return {"line": max(line - 1, 0), "character": max(col - 1, 0)}


def _range(span: Span) -> dict:
    return {"start": _position(span.start_line, span.start_col),
            "end": _position(span.end_line, span.end_col)}


def _diagnostic(report: ProblemReport) -> dict:
    return {
        "range": {"start": _position(report.line, report.column),
                  "end": {"line": report.line - 1, "character": report.column}},
        "severity": _SEVERITY_CODES[report.severity],
        "message": report.message,
        "source": report.source or "fragmentc",
    }


@dataclass
class _Document:
    text: str
    version: int
    language: str


@dataclass
class _Derived:
    version: int
    outcome: ParseOutcome
    features: FeatureSet


class DocumentStore:
    """Open documents plus a version-checked derived cache."""

    def __init__(self) -> None:
        self.documents: dict[str, _Document] = {}
        self.derived: dict[str, _Derived] = {}

    def open(self, uri: str, text: str, version: int, language: str) -> None:
        self.documents[uri] = _Document(text, version, language)
        self.derived.pop(uri, None)

    def change(self, uri: str, text: str, version: int) -> None:
        doc = self.documents.get(uri)
        if doc is None:
            return
        doc.text = text
        doc.version = version
        self.derived.pop(uri, None)

    def close(self, uri: str) -> None:
        self.documents.pop(uri, None)
        self.derived.pop(uri, None)

    def empty(self) -> bool:
        return not self.documents and not self.derived


class LanguageServer:
    def __init__(
        self,
        bundle: BundleManifest,
        composed: dict[str, ComposedLanguage],
        log_file: str | None = None,
        workflow_registry: WorkflowRegistry | None = None,
        action_registry: ActionRegistry | None = None,
    ):
        self.bundle = bundle
        self.composed = composed
        self.handles: dict[str, ParserHandle] = {n: build_engine(l) for n, l in composed.items()}
        self.store = DocumentStore()
        self.workflows = workflow_registry or demo_workflow_registry()
        self.actions = action_registry or demo_action_registry()
        self._log_stream = open(log_file, "a", encoding="utf-8") if log_file else None
        self._shutdown = False
        self.exit_requested = False

    def log(self, message: str) -> None:
        if self._log_stream is not None:
            self._log_stream.write(message + "\n")
            self._log_stream.flush()

    # -- language routing ---------------------------------------------------

    def language_for_uri(self, uri: str) -> str | None:
        suffix = Path(uri_to_path(uri)).suffix
        name = self.bundle.language_for_extension(suffix)
        if name is None or name not in self.composed:
            self.log(f"no bundled language for {uri}")
            return None
        return name

    def _passes(self, lang: ComposedLanguage):
        names = lang.effective_editor.workflows
        passes, problems = self.workflows.resolve(names, lang.name)
        return passes, problems

    def _derive(self, uri: str) -> _Derived | None:
        doc = self.store.documents.get(uri)
        if doc is None:
            return None
        cached = self.store.derived.get(uri)
        if cached is not None and cached.version == doc.version:
            return cached
        lang = self.composed[doc.language]
        handle = self.handles[doc.language]
        path = uri_to_path(uri)
        outcome = parse(doc.text, lang, path, handle=handle)
        passes, workflow_problems = self._passes(lang)
        features = compute_features(outcome, lang, doc.text, path, passes,
                                    workspace=self._workspace_lookup)
        if workflow_problems:
            features = replace(features,
                               diagnostics=features.diagnostics + tuple(workflow_problems))
        derived = _Derived(doc.version, outcome, features)
        self.store.derived[uri] = derived
        return derived

    def _workspace_lookup(self, path: str) -> str | None:
        for uri, doc in self.store.documents.items():
            if uri_to_path(uri) == path:
                return doc.text
        try:
            return Path(path).read_text(encoding="utf-8")
        except OSError:
            return None

    # -- request handling -----------------------------------------------------

    def handle(self, message: dict, out: BinaryIO) -> bool:
        """Process one message; returns False once the server should stop."""
        method = message.get("method")
        msg_id = message.get("id")
        if method is None:
            return True  # a response to a server-initiated request; none are sent
        params = message.get("params") or {}
        if method == "exit":
            self.exit_requested = True
            return False
        try:
            result, respond = self._dispatch(method, params, out)
        except Exception as exc:  # surface internal errors as JSON-RPC errors
            self.log(f"error handling {method}: {exc}")
            if msg_id is not None:
                write_message(out, {"jsonrpc": "2.0", "id": msg_id,
                                    "error": {"code": -32603, "message": str(exc)}})
            return True
        if msg_id is not None and respond:
            write_message(out, {"jsonrpc": "2.0", "id": msg_id, "result": result})
        return True

    def _dispatch(self, method: str, params: dict, out: BinaryIO) -> tuple[Any, bool]:
        if method == "initialize":
            return self._initialize(), True
        if method == "initialized":
            return None, False
        if method == "shutdown":
            self._shutdown = True
            return None, True
        if method == "textDocument/didOpen":
            self._did_open(params, out)
            return None, False
        if method == "textDocument/didChange":
            self._did_change(params, out)
            return None, False
        if method == "textDocument/didClose":
            self.store.close(params["textDocument"]["uri"])
            return None, False
        if method == "textDocument/foldingRange":
            return self._folding(params), True
        if method == "textDocument/documentSymbol":
            return self._symbols(params), True
        if method == "textDocument/semanticTokens/full":
            return self._semantic_tokens(params), True
        if method == "textDocument/formatting":
            return self._formatting(params), True
        if method == "workspace/executeCommand":
            return self._execute_command(params), True
        self.log(f"unhandled method {method}")
        return None, True

    def _initialize(self) -> dict:
        commands = sorted({
            action.action_id
            for lang in self.composed.values()
            for action in lang.effective_editor.actions()
        })
        return {
            "capabilities": {
                "textDocumentSync": {"openClose": True, "change": 1},
                "foldingRangeProvider": True,
                "documentSymbolProvider": True,
                "semanticTokensProvider": {
                    "legend": {"tokenTypes": SEMANTIC_TOKEN_TYPES, "tokenModifiers": []},
                    "full": True,
                },
                "documentFormattingProvider": True,
                "executeCommandProvider": {"commands": commands},
            },
            "serverInfo": {"name": "fragmentc", "version": self.bundle.version},
        }

    # -- document lifecycle ---------------------------------------------------

    def _did_open(self, params: dict, out: BinaryIO) -> None:
        doc = params["textDocument"]
        uri = doc["uri"]
        language = self.language_for_uri(uri)
        if language is None:
            return
        self.store.open(uri, doc["text"], doc.get("version", 0), language)
        self._publish(uri, out)

    def _did_change(self, params: dict, out: BinaryIO) -> None:
        uri = params["textDocument"]["uri"]
        version = params["textDocument"].get("version", 0)
        changes = params.get("contentChanges") or []
        if not changes:
            return
        self.store.change(uri, changes[-1]["text"], version)
        self._publish(uri, out)

    def _publish(self, uri: str, out: BinaryIO) -> None:
        doc = self.store.documents.get(uri)
        derived = self._derive(uri)
        if doc is None or derived is None:
            return
        write_message(out, {
            "jsonrpc": "2.0",
            "method": "textDocument/publishDiagnostics",
            "params": {
                "uri": uri,
                "version": doc.version,
                "diagnostics": [_diagnostic(d) for d in derived.features.diagnostics],
            },
        })

    # -- feature requests -------------------------------------------------------

    def _folding(self, params: dict) -> list:
        derived = self._derive(params["textDocument"]["uri"])
        if derived is None:
            return []
        return [
            {
                "startLine": fold.span.start_line - 1,
                "startCharacter": fold.span.start_col - 1,
                "endLine": fold.span.end_line - 1,
                "endCharacter": fold.span.end_col - 1,
                "collapsedText": fold.placeholder,
            }
            for fold in derived.features.folds
        ]

    def _symbols(self, params: dict) -> list:
        derived = self._derive(params["textDocument"]["uri"])
        if derived is None:
            return []

        def convert(symbol) -> dict:
            return {
                "name": symbol.label,
                "detail": symbol.icon_path,
                "kind": 2,
                "range": _range(symbol.span),
                "selectionRange": _range(symbol.span),
                "children": [convert(c) for c in symbol.children],
            }

        return [convert(s) for s in derived.features.outline]

    def _semantic_tokens(self, params: dict) -> dict:
        uri = params["textDocument"]["uri"]
        derived = self._derive(uri)
        doc = self.store.documents.get(uri)
        if derived is None or doc is None:
            return {"data": []}
        lines = doc.text.split("\n")
        rows: list[tuple[int, int, int, int]] = []  # line0, char0, length, type
        for tok in derived.outcome.tokens:
            if tok.kind is TokenKind.KEYWORD:
                type_index = 0
            elif tok.kind in COMMENT_KINDS:
                type_index = 1
            else:
                continue
            span = tok.span
            for line in range(span.start_line, span.end_line + 1):
                start_col = span.start_col if line == span.start_line else 1
                end_col = span.end_col if line == span.end_line else len(lines[line - 1]) + 1
                if end_col > start_col:
                    rows.append((line - 1, start_col - 1, end_col - start_col, type_index))
        rows.sort()
        data: list[int] = []
        prev_line = 0
        prev_char = 0
        for line, char, length, type_index in rows:
            delta_line = line - prev_line
            delta_char = char - prev_char if delta_line == 0 else char
            data.extend([delta_line, delta_char, length, type_index, 0])
            prev_line, prev_char = line, char
        return {"data": data}

    def _formatting(self, params: dict) -> list:
        uri = params["textDocument"]["uri"]
        derived = self._derive(uri)
        doc = self.store.documents.get(uri)
        if derived is None or doc is None or derived.outcome.root is None:
            return []
        lang = self.composed[doc.language]
        formatted = format_document(derived.outcome, lang)
        lines = doc.text.split("\n")
        end = {"line": len(lines) - 1, "character": len(lines[-1])}
        return [{"range": {"start": {"line": 0, "character": 0}, "end": end},
                 "newText": formatted}]

    # -- commands -----------------------------------------------------------------

    def _execute_command(self, params: dict) -> dict:
        command = params.get("command", "")
        arguments = params.get("arguments") or []
        uris = [a for a in arguments if isinstance(a, str)]
        if not uris:
            return {"error": f"command {command!r} needs at least one uri argument"}
        language = self.language_for_uri(uris[0])
        if language is None:
            return {"error": f"no bundled language for {uris[0]}"}
        lang = self.composed[language]
        handle = self.handles[language]
        kind = None
        for action in lang.effective_editor.actions():
            if action.action_id == command:
                kind = action.kind
        if kind is None:
            return {"error": f"unknown command {command!r}"}
        if kind is ActionKind.EDITOR:
            uri = uris[0]
            doc = self.store.documents.get(uri)
            text = doc.text if doc is not None else self._workspace_lookup(uri_to_path(uri)) or ""
            selection = _selection_from_arguments(arguments)
            result = run_editor_action(command, text, uri_to_path(uri), selection,
                                       lang, handle, self.actions)
        else:
            files = {uri_to_path(u): str(Path(uri_to_path(u)).parent) for u in uris}
            result = run_navigator_action(command, files, lang, handle, self.actions,
                                          read_file=lambda p: self._workspace_lookup(p) or "")
        return self._action_result(result, uris[0])

    def _action_result(self, result: ActionResult, first_uri: str) -> dict:
        written: dict[str, str] = {}
        base = Path(uri_to_path(first_uri)).parent
        for name, content in result.new_files.items():
            target = base / name
            target.write_text(content, encoding="utf-8")
            written[str(target)] = content
        return {
            "newFiles": sorted(written),
            "edits": [
                {"span": e.span.to_list() if e.span else None, "newText": e.new_text}
                for e in result.edits
            ],
            "reports": [r.to_json_dict() for r in result.reports],
        }


def _selection_from_arguments(arguments: list) -> Span:
    for arg in arguments:
        if isinstance(arg, list) and len(arg) == 4 and all(isinstance(v, int) for v in arg):
            return Span(*arg)
    return Span(1, 1, 1, 1)


def serve(
    bundle: BundleManifest,
    composed: dict[str, ComposedLanguage],
    stdin: BinaryIO | None = None,
    stdout: BinaryIO | None = None,
    log_file: str | None = None,
) -> int:
    """Run the server loop until an exit notification or EOF."""
    server = LanguageServer(bundle, composed, log_file=log_file)
    inp = stdin or sys.stdin.buffer
    out = stdout or sys.stdout.buffer
    while True:
        message = read_message(inp)
        if message is None:
            break
        server.log(f"<- {message.get('method', 'response')}")
        if not server.handle(message, out):
            break
    return 0
