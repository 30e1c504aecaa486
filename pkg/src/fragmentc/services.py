"""Editor features computed from parse outcomes.

Everything here is a pure function of (document, composed language): keyword
and comment highlighting, folding ranges, the outline tree, diagnostics via
workflow passes, formatting, and the action registry.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .compose import ComposedLanguage, EffectiveEditorConfig
from .engine import (
    COMMENT_KINDS,
    ParseOutcome,
    ParserHandle,
    SyntaxNode,
    Token,
    TokenKind,
)
from .grammar.model import ActionKind, NamedAction, SegmentDef, SegmentTemplateLiteral
from .reports import ProblemReport, Span, error, warning

Workspace = Callable[[str], "str | None"]


def _no_workspace(_path: str) -> str | None:
    return None


# --------------------------------------------------------------------------
# highlighting


@dataclass(frozen=True)
class HighlightSpan:
    span: Span
    category: str  # "keyword" | "comment"

    def to_json_dict(self) -> dict:
        return {"span": self.span.to_list(), "category": self.category}


def highlight(tokens: list[Token] | tuple[Token, ...]) -> list[HighlightSpan]:
    """One span per keyword token and per comment token, nothing else."""
    spans: list[HighlightSpan] = []
    for tok in tokens:
        if tok.kind is TokenKind.KEYWORD:
            spans.append(HighlightSpan(tok.span, "keyword"))
        elif tok.kind in COMMENT_KINDS:
            spans.append(HighlightSpan(tok.span, "comment"))
    return spans


# --------------------------------------------------------------------------
# folding


@dataclass(frozen=True)
class FoldingRange:
    span: Span
    placeholder: str

    def to_json_dict(self) -> dict:
        return {"span": self.span.to_list(), "placeholder": self.placeholder}


def folding_ranges(root: SyntaxNode, cfg: EffectiveEditorConfig, text: str) -> list[FoldingRange]:
    """A range per foldable node spanning at least two lines, document order."""
    lines = text.splitlines()
    ranges: list[FoldingRange] = []
    for node in root.walk():
        if node.production not in cfg.foldable:
            continue
        if node.span.end_line <= node.span.start_line:
            continue
        first = lines[node.span.start_line - 1].strip() if node.span.start_line <= len(lines) else ""
        ranges.append(FoldingRange(node.span, first + ".."))
    return ranges


# --------------------------------------------------------------------------
# outline


@dataclass(frozen=True)
class OutlineSymbol:
    label: str
    icon_path: str
    span: Span
    children: tuple["OutlineSymbol", ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "icon": self.icon_path,
            "span": self.span.to_list(),
            "children": [c.to_json_dict() for c in self.children],
        }


def render_segment_label(seg: SegmentDef, node: SyntaxNode, text: str | None = None) -> str:
    """Concatenate the template items, no implicit separators."""
    parts: list[str] = []
    for item in seg.template:
        if isinstance(item, SegmentTemplateLiteral):
            parts.append(item.text)
        else:
            parts.append(_attr_text(node.attr(item.name), text))
    return "".join(parts)


def _attr_text(value, text: str | None) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        return ", ".join(_attr_text(v, text) for v in value)
    if isinstance(value, SyntaxNode):
        leaves = value.leaf_tokens()
        if not leaves:
            return ""
        if text is not None:
            return text[leaves[0].offset:leaves[-1].end_offset].strip()
        return " ".join(t.text for t in leaves)
    return str(value)


def outline(root: SyntaxNode, cfg: EffectiveEditorConfig, text: str | None = None) -> list[OutlineSymbol]:
    """Depth-first symbols for segment-bearing nodes, nested by tree structure."""

    def visit(node: SyntaxNode) -> list[OutlineSymbol]:
        nested: list[OutlineSymbol] = []
        for child in node.children:
            nested.extend(visit(child))
        seg = cfg.segments.get(node.production)
        if seg is None:
            return nested
        label = render_segment_label(seg, node, text)
        return [OutlineSymbol(label, seg.icon_path, node.span, tuple(nested))]

    return visit(root)


# --------------------------------------------------------------------------
# diagnostics and workflows


@dataclass(frozen=True)
class WorkflowPass:
    """A named analysis pass run after parsing; must not mutate documents."""

    name: str
    run: Callable[[SyntaxNode, str, Workspace], list[ProblemReport]]


class WorkflowRegistry:
    def __init__(self) -> None:
        self._passes: dict[str, WorkflowPass] = {}

    def register(self, wf: WorkflowPass) -> None:
        self._passes[wf.name] = wf

    def resolve(self, names: tuple[str, ...], origin: str) -> tuple[list[WorkflowPass], list[ProblemReport]]:
        passes: list[WorkflowPass] = []
        problems: list[ProblemReport] = []
        for name in names:
            wf = self._passes.get(name)
            if wf is None:
                problems.append(warning(f"unknown workflow {name!r} skipped", origin, source="workflow"))
            else:
                passes.append(wf)
        return passes, problems


def diagnostics(
    outcome: ParseOutcome,
    passes: list[WorkflowPass],
    file: str,
    workspace: Workspace = _no_workspace,
) -> list[ProblemReport]:
    """Parser reports first, then each pass in order; passes need a root."""
    reports = list(outcome.problems)
    if outcome.root is not None:
        for wf in passes:
            reports.extend(wf.run(outcome.root, file, workspace))
    return reports


# --------------------------------------------------------------------------
# formatting


_OPEN = "{"
_CLOSE = "}"
_END = ";"
_GLUE_LEFT = {";", ",", "(", ")", "."}
_GLUE_RIGHT = {"(", "."}


class LayoutWriter:
    """Token-stream layout: blocks indent by two, ``;`` ends lines."""

    def __init__(self, comment_map: dict[int, list[Token]] | None = None):
        self._lines: list[str] = []
        self._current: list[str] = []
        self._indent = 0
        self._comments = comment_map or {}

    def token(self, tok: Token) -> None:
        for comment in self._comments.pop(tok.offset, ()):
            self.comment(comment.text)
        text = tok.text
        if text == _CLOSE:
            self._newline_if_open()
            self._indent = max(0, self._indent - 1)
            self._current.append(self._pad() + text)
            self._break()
            return
        self._append(text)
        if text == _OPEN:
            self._break()
            self._indent += 1
        elif text == _END:
            self._break()

    def comment(self, text: str) -> None:
        self._newline_if_open()
        self._current.append(self._pad() + text)
        self._break()

    def _append(self, text: str) -> None:
        if not self._current:
            self._current.append(self._pad() + text)
            return
        last = self._current[-1]
        glue = text in _GLUE_LEFT or (last and last[-1] in _GLUE_RIGHT)
        self._current.append(text if glue else " " + text)

    def _pad(self) -> str:
        return "  " * self._indent

    def _break(self) -> None:
        self._lines.append("".join(self._current))
        self._current = []

    def _newline_if_open(self) -> None:
        if self._current:
            self._break()

    def finish(self) -> str:
        for comments in self._comments.values():
            for comment in comments:
                self.comment(comment.text)
        self._newline_if_open()
        return "\n".join(self._lines) + ("\n" if self._lines else "")


class FragmentPrinter(Protocol):
    def write(self, node: SyntaxNode, writer: LayoutWriter, chain: "PrinterChain") -> None: ...


class DefaultPrinter:
    """Grammar-driven layout over the node's concrete token stream."""

    def write(self, node: SyntaxNode, writer: LayoutWriter, chain: "PrinterChain") -> None:
        items: list[tuple[int, object]] = [(t.offset, t) for t in node.own_tokens]
        for child in node.children:
            leaves = child.leaf_tokens()
            if leaves:
                items.append((leaves[0].offset, child))
        items.sort(key=lambda pair: pair[0])
        for _, item in items:
            if isinstance(item, Token):
                writer.token(item)
            else:
                chain.write(item, writer)


class PrinterChain:
    """Dispatches on the node's owning fragment; unmatched fragments get the default."""

    def __init__(self, per_fragment: dict[str, FragmentPrinter] | None = None):
        self._per_fragment = dict(per_fragment or {})
        self._default = DefaultPrinter()

    def write(self, node: SyntaxNode, writer: LayoutWriter) -> None:
        printer = self._per_fragment.get(node.fragment, self._default)
        printer.write(node, writer, self)


class PrinterRegistry:
    """Resolves the opaque printer names of a tool config to implementations."""

    def __init__(self) -> None:
        self._printers: dict[str, tuple[str | None, FragmentPrinter]] = {}

    def register(self, name: str, fragment: str | None, printer: FragmentPrinter) -> None:
        self._printers[name] = (fragment, printer)

    def chain_for(self, printer_names: tuple[str, ...]) -> PrinterChain:
        per_fragment: dict[str, FragmentPrinter] = {}
        for name in printer_names:
            entry = self._printers.get(name)
            if entry is None:
                continue  # unknown names fall back to the default printer
            fragment, printer = entry
            if fragment is not None:
                per_fragment[fragment] = printer
        return PrinterChain(per_fragment)


def format_tree(root: SyntaxNode, chain: PrinterChain | None = None,
                comment_map: dict[int, list[Token]] | None = None) -> str:
    writer = LayoutWriter(comment_map)
    (chain or PrinterChain()).write(root, writer)
    return writer.finish()


def format_document(outcome: ParseOutcome, lang: ComposedLanguage,
                    registry: "PrinterRegistry | None" = None) -> str:
    """Format a parsed document; comments re-attach before their next token."""
    if outcome.root is None:
        raise ValueError("cannot format a document that did not parse")
    printer_names: tuple[str, ...] = ()
    if lang.tool is not None:
        printer_names = lang.tool.pretty_printers
    chain = (registry or default_printer_registry()).chain_for(printer_names)

    comment_map: dict[int, list[Token]] = {}
    leaves = outcome.root.leaf_tokens()
    comments = [t for t in outcome.tokens if t.kind in COMMENT_KINDS]
    for comment in comments:
        anchor = next((l for l in leaves if l.offset > comment.offset), None)
        comment_map.setdefault(anchor.offset if anchor else -1, []).append(comment)
    trailing = comment_map.pop(-1, [])

    writer = LayoutWriter(comment_map)
    chain.write(outcome.root, writer)
    for comment in trailing:
        writer.comment(comment.text)
    return writer.finish()


# --------------------------------------------------------------------------
# actions


@dataclass(frozen=True)
class TextEdit:
    span: Span | None  # None replaces the whole document
    new_text: str


@dataclass(frozen=True)
class ActionResult:
    edits: tuple[TextEdit, ...] = ()
    new_files: dict[str, str] = field(default_factory=dict)
    reports: tuple[ProblemReport, ...] = ()

    def failed(self) -> bool:
        return any(r.severity.value == "error" for r in self.reports)


@dataclass(frozen=True)
class EditorActionRequest:
    text: str
    path: str
    selection: Span
    lang: ComposedLanguage
    handle: ParserHandle


@dataclass(frozen=True)
class NavigatorActionRequest:
    files_to_projects: dict[str, str]
    lang: ComposedLanguage
    handle: ParserHandle
    read_file: Callable[[str], str]


EditorActionFn = Callable[[EditorActionRequest], ActionResult]
NavigatorActionFn = Callable[[NavigatorActionRequest], ActionResult]


class ActionRegistry:
    def __init__(self) -> None:
        self._editor: dict[str, EditorActionFn] = {}
        self._navigator: dict[str, NavigatorActionFn] = {}

    def register_editor(self, action_id: str, fn: EditorActionFn) -> None:
        self._editor[action_id] = fn

    def register_navigator(self, action_id: str, fn: NavigatorActionFn) -> None:
        self._navigator[action_id] = fn

    def editor_action(self, action_id: str) -> EditorActionFn | None:
        return self._editor.get(action_id)

    def navigator_action(self, action_id: str) -> NavigatorActionFn | None:
        return self._navigator.get(action_id)


def _declared(lang: ComposedLanguage, action_id: str, kind: ActionKind) -> NamedAction | None:
    pool = (lang.effective_editor.menu_items if kind is ActionKind.EDITOR
            else lang.effective_editor.navigator_items)
    for action in pool:
        if action.action_id == action_id:
            return action
    return None


def run_editor_action(
    action_id: str,
    text: str,
    path: str,
    selection: Span,
    lang: ComposedLanguage,
    handle: ParserHandle,
    registry: ActionRegistry,
) -> ActionResult:
    if _declared(lang, action_id, ActionKind.EDITOR) is None:
        return ActionResult(reports=(error(f"unknown editor action {action_id!r}", path, source="action"),))
    fn = registry.editor_action(action_id)
    if fn is None:
        return ActionResult(reports=(error(f"editor action {action_id!r} has no implementation",
                                           path, source="action"),))
    return fn(EditorActionRequest(text, path, selection, lang, handle))


def run_navigator_action(
    action_id: str,
    files_to_projects: dict[str, str],
    lang: ComposedLanguage,
    handle: ParserHandle,
    registry: ActionRegistry,
    read_file: Callable[[str], str] | None = None,
) -> ActionResult:
    origin = next(iter(files_to_projects), "<navigator>")
    if not files_to_projects:
        return ActionResult(reports=(error("navigator action needs at least one file", origin,
                                           source="action"),))
    if _declared(lang, action_id, ActionKind.NAVIGATOR) is None:
        return ActionResult(reports=(error(f"unknown navigator action {action_id!r}", origin,
                                           source="action"),))
    fn = registry.navigator_action(action_id)
    if fn is None:
        return ActionResult(reports=(error(f"navigator action {action_id!r} has no implementation",
                                           origin, source="action"),))
    reader = read_file or (lambda p: Path(p).read_text(encoding="utf-8"))
    return fn(NavigatorActionRequest(dict(files_to_projects), lang, handle, reader))


# --------------------------------------------------------------------------
# the per-document feature set


@dataclass(frozen=True)
class FeatureSet:
    highlights: tuple[HighlightSpan, ...]
    folds: tuple[FoldingRange, ...]
    outline: tuple[OutlineSymbol, ...]
    diagnostics: tuple[ProblemReport, ...]
    actions: tuple[NamedAction, ...] = ()

    def to_json_dict(self) -> dict:
        # the dump format is fixed to these four arrays; actions are static
        # per language and surface through capabilities instead
        return {
            "highlights": [h.to_json_dict() for h in self.highlights],
            "folds": [f.to_json_dict() for f in self.folds],
            "outline": [s.to_json_dict() for s in self.outline],
            "diagnostics": [d.to_json_dict() for d in self.diagnostics],
        }


def compute_features(
    outcome: ParseOutcome,
    lang: ComposedLanguage,
    text: str,
    file: str,
    passes: list[WorkflowPass] | None = None,
    workspace: Workspace = _no_workspace,
) -> FeatureSet:
    folds: list[FoldingRange] = []
    symbols: list[OutlineSymbol] = []
    if outcome.root is not None:
        folds = folding_ranges(outcome.root, lang.effective_editor, text)
        symbols = outline(outcome.root, lang.effective_editor, text)
    return FeatureSet(
        highlights=tuple(highlight(outcome.tokens)),
        folds=tuple(folds),
        outline=tuple(symbols),
        diagnostics=tuple(diagnostics(outcome, passes or [], file, workspace)),
        actions=lang.effective_editor.actions(),
    )


# populated by fragmentc.demo at import time below
def default_printer_registry() -> PrinterRegistry:
    from .demo import demo_printer_registry

    return demo_printer_registry()
