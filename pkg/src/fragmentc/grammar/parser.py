"""Recursive-descent parser for grammar fragments and tool configurations.

Parsing is fail-fast: the first offending token raises ``MetaParseError``
with a report at that token's line and column.
"""
from __future__ import annotations

from ..errors import MetaParseError
from ..reports import ProblemReport, error, warning
from .lexer import MToken, meta_lex
from .model import (
    ActionKind,
    Alternative,
    Block,
    BodyExpr,
    Cardinality,
    CardinalityKind,
    EmbeddingBinding,
    FragmentEditorConcept,
    GrammarFragment,
    NamedAction,
    NonterminalRef,
    OpaqueConcept,
    PresenceFlag,
    Production,
    QualifiedName,
    SegmentDef,
    SegmentTemplateAttr,
    SegmentTemplateLiteral,
    Sequence,
    StartBinding,
    Terminal,
    TokenProduction,
    ToolConfig,
    ToolEditorConcept,
)

_CARDINALITY = {"?": CardinalityKind.OPTIONAL, "*": CardinalityKind.STAR, "+": CardinalityKind.PLUS}


class _Cursor:
    def __init__(self, tokens: list[MToken], origin: str):
        self.tokens = tokens
        self.origin = origin
        self.pos = 0

    @property
    def cur(self) -> MToken:
        return self.tokens[self.pos]

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.cur
        return t.kind == kind and (text is None or t.text == text)

    def at_word(self, word: str) -> bool:
        return self.at("ident", word)

    def advance(self) -> MToken:
        t = self.cur
        if t.kind != "eof":
            self.pos += 1
        return t

    def accept(self, kind: str, text: str | None = None) -> MToken | None:
        if self.at(kind, text):
            return self.advance()
        return None

    def expect(self, kind: str, text: str | None = None, what: str = "") -> MToken:
        if self.at(kind, text):
            return self.advance()
        return self.fail(what or f"expected {text or kind}")

    def fail(self, message: str) -> MToken:
        t = self.cur
        found = t.text if t.kind != "eof" else "end of file"
        raise MetaParseError(
            [error(f"{message}, found {found!r}", self.origin, t.line, t.col, source="meta-parser")]
        )

    def ident(self, what: str = "identifier") -> MToken:
        return self.expect("ident", what=f"expected {what}")

    def dotted(self, what: str = "qualified name") -> tuple[list[str], MToken]:
        first = self.ident(what)
        parts = [first.text]
        while self.accept("sym", "."):
            parts.append(self.ident("name after '.'").text)
        return parts, first


# --------------------------------------------------------------------------
# grammar fragments


def parse_grammar(text: str, origin: str) -> GrammarFragment:
    """Parse one ``.mc`` file. Raises MetaParseError on the first bad token."""
    if not text.strip():
        raise MetaParseError([error("no grammar found", origin, 1, 1, source="meta-parser")])
    c = _Cursor(meta_lex(text, origin), origin)
    c.expect("ident", "grammar", what="expected 'grammar'")
    name = c.ident("grammar name").text
    supers: list[str] = []
    if c.accept("ident", "extends"):
        parts, _ = c.dotted("supergrammar name")
        supers.append(".".join(parts))
        while c.accept("sym", ","):
            parts, _ = c.dotted("supergrammar name")
            supers.append(".".join(parts))
    c.expect("sym", "{")

    interfaces: list[str] = []
    externals: list[str] = []
    productions: list[Production] = []
    token_productions: list[TokenProduction] = []
    concept: FragmentEditorConcept | None = None
    opaque: list[OpaqueConcept] = []
    warnings: list[ProblemReport] = []
    interface_lines: dict[str, int] = {}
    external_lines: dict[str, int] = {}
    seen_names: dict[str, int] = {}

    while not c.at("sym", "}"):
        if c.at("eof"):
            c.fail("unterminated grammar body")
        tok = c.cur
        if c.accept("ident", "interface"):
            itok = c.ident("interface name")
            interfaces.append(itok.text)
            interface_lines.setdefault(itok.text, itok.line)
            c.expect("sym", ";")
        elif c.accept("ident", "external"):
            etok = c.ident("external name")
            externals.append(etok.text)
            external_lines.setdefault(etok.text, etok.line)
            c.expect("sym", ";")
        elif c.accept("ident", "token"):
            ttok = c.ident("token name")
            c.expect("sym", "=")
            pattern = c.expect("regex", what="expected /regex/").text
            c.expect("sym", ";")
            token_productions.append(TokenProduction(ttok.text, pattern, ttok.line))
        elif c.accept("ident", "concept"):
            ctok = c.ident("concept name")
            if ctok.text == "texteditor":
                if concept is not None:
                    raise MetaParseError(
                        [error("duplicate texteditor concept", origin, ctok.line, ctok.col, source="meta-parser")]
                    )
                concept = _parse_texteditor(c, ctok.line)
            else:
                opaque.append(_parse_opaque_concept(c, ctok))
                warnings.append(
                    warning(f"concept {ctok.text!r} is not understood and was kept verbatim",
                            origin, ctok.line, ctok.col, source="meta-parser")
                )
        else:
            prod = _parse_production(c)
            if prod.name in seen_names:
                raise MetaParseError(
                    [error(f"duplicate production name {prod.name!r}", origin, tok.line, tok.col,
                           source="meta-parser")]
                )
            seen_names[prod.name] = tok.line
            productions.append(prod)
    c.expect("sym", "}")
    c.expect("eof", what="expected end of file after grammar")

    return GrammarFragment(
        name=name,
        super_grammars=tuple(supers),
        interfaces=tuple(interfaces),
        externals=tuple(externals),
        productions=tuple(productions),
        token_productions=tuple(token_productions),
        editor_concept=concept,
        opaque_concepts=tuple(opaque),
        origin=origin,
        parse_warnings=tuple(warnings),
        interface_lines=interface_lines,
        external_lines=external_lines,
    )


def _parse_production(c: _Cursor) -> Production:
    name_tok = c.ident("production name")
    implements: list[str] = []
    if c.accept("ident", "implements"):
        implements.append(c.ident("interface name").text)
        while c.accept("sym", ","):
            implements.append(c.ident("interface name").text)
    c.expect("sym", "=")
    body = _parse_alternative(c)
    c.expect("sym", ";")
    return Production(name_tok.text, body, tuple(implements), name_tok.line)


def _parse_alternative(c: _Cursor) -> BodyExpr:
    branches = [_parse_sequence(c)]
    while c.accept("sym", "|"):
        branches.append(_parse_sequence(c))
    if len(branches) == 1:
        return branches[0]
    return Alternative(tuple(branches))


_ITEM_START = {"string"}  # plus idents and "("


def _at_item_start(c: _Cursor) -> bool:
    return c.cur.kind in ("string", "ident") or c.at("sym", "(")


def _parse_sequence(c: _Cursor) -> BodyExpr:
    items = [_parse_item(c)]
    while _at_item_start(c):
        items.append(_parse_item(c))
    if len(items) == 1:
        return items[0]
    return Sequence(tuple(items))


def _parse_item(c: _Cursor) -> BodyExpr:
    expr = _parse_primary(c)
    if c.cur.kind == "sym" and c.cur.text in _CARDINALITY:
        kind = _CARDINALITY[c.advance().text]
        return Cardinality(expr, kind)
    return expr


def _parse_primary(c: _Cursor) -> BodyExpr:
    if c.cur.kind == "string":
        return Terminal(c.advance().text)
    if c.accept("sym", "("):
        inner = _parse_alternative(c)
        c.expect("sym", ")")
        return Block(inner)
    name_tok = c.ident("nonterminal or label")
    if c.accept("sym", ":"):
        if c.accept("sym", "["):
            kw = c.expect("string", what="expected keyword string in [...]").text
            c.expect("sym", "]")
            return PresenceFlag(name_tok.text, kw)
        if c.accept("sym", "("):
            inner = _parse_alternative(c)
            c.expect("sym", ")")
            return Block(inner, label=name_tok.text)
        if c.cur.kind == "string":
            c.fail('labeled terminals must use the presence form label:["kw"]')
        target = c.ident("nonterminal after label")
        return NonterminalRef(target.text, label=name_tok.text, line=target.line)
    return NonterminalRef(name_tok.text, line=name_tok.line)


def _parse_texteditor(c: _Cursor, line: int) -> FragmentEditorConcept:
    c.expect("sym", "{")
    keywords: list[str] = []
    foldable: list[str] = []
    segments: list[SegmentDef] = []
    while not c.at("sym", "}"):
        if c.accept("ident", "keywords"):
            c.expect("sym", ":")
            keywords.append(c.ident("keyword").text)
            while c.accept("sym", ","):
                keywords.append(c.ident("keyword").text)
            c.expect("sym", ";")
        elif c.accept("ident", "foldable"):
            c.expect("sym", ":")
            foldable.append(c.ident("nonterminal").text)
            while c.accept("sym", ","):
                foldable.append(c.ident("nonterminal").text)
            c.expect("sym", ";")
        elif c.accept("ident", "segment"):
            c.expect("sym", ":")
            nt = c.ident("segment nonterminal")
            c.expect("sym", "(")
            icon = c.expect("string", what="expected icon path string").text
            c.expect("sym", ")")
            c.expect("ident", "show", what="expected 'show'")
            c.expect("sym", ":")
            template: list = []
            while not c.at("sym", ";"):
                if c.cur.kind == "string":
                    template.append(SegmentTemplateLiteral(c.advance().text))
                elif c.cur.kind == "ident":
                    template.append(SegmentTemplateAttr(c.advance().text))
                else:
                    c.fail("expected template literal or attribute name")
            c.expect("sym", ";")
            if not template:
                c.fail("segment template must not be empty")
            segments.append(SegmentDef(nt.text, icon, tuple(template), nt.line))
        else:
            c.fail("expected keywords:, foldable:, or segment: clause")
    c.expect("sym", "}")
    return FragmentEditorConcept(tuple(keywords), tuple(foldable), tuple(segments), line)


def _parse_opaque_concept(c: _Cursor, name_tok: MToken) -> OpaqueConcept:
    c.expect("sym", "{")
    depth = 1
    parts: list[str] = []
    while depth > 0:
        if c.at("eof"):
            c.fail("unterminated concept block")
        tok = c.advance()
        if tok.kind == "sym" and tok.text == "{":
            depth += 1
        elif tok.kind == "sym" and tok.text == "}":
            depth -= 1
            if depth == 0:
                break
        parts.append(_render_meta_token(tok))
    return OpaqueConcept(name_tok.text, " ".join(parts), name_tok.line)


def _render_meta_token(tok: MToken) -> str:
    if tok.kind == "string":
        escaped = tok.text.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if tok.kind == "regex":
        return "/" + tok.text.replace("/", "\\/") + "/"
    return tok.text


# --------------------------------------------------------------------------
# tool configurations


def parse_tool_config(text: str, origin: str) -> ToolConfig:
    """Parse one ``.mctool`` file."""
    if not text.strip():
        raise MetaParseError([error("no tool configuration found", origin, 1, 1, source="meta-parser")])
    c = _Cursor(meta_lex(text, origin), origin)
    c.expect("ident", "rootfactory", what="expected 'rootfactory'")
    factory_tok = c.ident("rootfactory name")
    c.expect("ident", "for", what="expected 'for'")
    root_type = c.ident("root type name").text
    if c.accept("sym", "<"):
        param = c.ident("type parameter").text
        c.expect("sym", ">")
        root_type = f"{root_type}<{param}>"
    c.expect("sym", "{")

    start: StartBinding | None = None
    embeddings: list[EmbeddingBinding] = []
    printers: list[str] = []
    while not c.at("sym", "}"):
        if c.at("eof"):
            c.fail("unterminated rootfactory body")
        if c.accept("ident", "prettyprint"):
            c.expect("sym", "{")
            while not c.at("sym", "}"):
                parts, _ = c.dotted("printer name")
                printers.append(".".join(parts))
                c.expect("sym", ";")
            c.expect("sym", "}")
            continue
        parts, first = c.dotted("parser binding")
        if len(parts) < 2:
            c.fail("binding needs a qualified Grammar.Nonterminal name")
        alias = c.ident("binding alias").text
        if c.at("sym", "<<"):
            marker = c.advance()
            c.expect("ident", "start", what="expected 'start' marker")
            c.expect("sym", ">>")
            c.expect("sym", ";")
            if start is not None:
                raise MetaParseError(
                    [error("duplicate <<start>> marker", origin, marker.line, marker.col, source="meta-parser")]
                )
            start = StartBinding(QualifiedName(tuple(parts)), alias, first.line)
        elif c.accept("ident", "in"):
            path_parts, _ = c.dotted("host path")
            c.expect("sym", ";")
            embeddings.append(
                EmbeddingBinding(
                    external_name=path_parts[-1],
                    host_path=".".join(path_parts),
                    filler_grammar=".".join(parts[:-1]),
                    filler_nonterminal=parts[-1],
                    alias=alias,
                    line=first.line,
                )
            )
        else:
            c.fail("expected <<start>> or 'in' after binding alias")
    c.expect("sym", "}")

    editor = ToolEditorConcept()
    while not c.at("eof"):
        c.expect("ident", "concept", what="expected 'concept' section")
        ctok = c.ident("concept name")
        if ctok.text != "texteditor":
            c.fail(f"unknown section {ctok.text!r}")
        editor = _parse_tool_texteditor(c)
    if start is None:
        raise MetaParseError(
            [error("missing <<start>> marker in rootfactory", origin, factory_tok.line, factory_tok.col,
                   source="meta-parser")]
        )

    return ToolConfig(
        root_factory_name=factory_tok.text,
        root_type_name=root_type,
        start=start,
        embeddings=tuple(embeddings),
        pretty_printers=tuple(printers),
        editor=editor,
        origin=origin,
    )


def _parse_tool_texteditor(c: _Cursor) -> ToolEditorConcept:
    c.expect("sym", "{")
    tool_class = ""
    workflows: list[str] = []
    menu: list[NamedAction] = []
    navigator: list[NamedAction] = []
    while not c.at("sym", "}"):
        if c.accept("ident", "tool"):
            c.expect("sym", ":")
            tool_class = c.expect("string", what="expected tool class string").text
            c.expect("sym", ";")
        elif c.accept("ident", "workflows"):
            c.expect("sym", ":")
            workflows.append(c.ident("workflow name").text)
            while c.accept("sym", ","):
                workflows.append(c.ident("workflow name").text)
            c.expect("sym", ";")
        elif c.at_word("menuitem") or c.at_word("navigatoritem"):
            kind = ActionKind.EDITOR if c.advance().text == "menuitem" else ActionKind.NAVIGATOR
            words = [c.ident("action name").text]
            while c.cur.kind == "ident":
                words.append(c.advance().text)
            c.expect("sym", "(")
            action_id = c.expect("string", what="expected action class string").text
            c.expect("sym", ")")
            c.expect("sym", ";")
            action = NamedAction(" ".join(words), action_id, kind)
            (menu if kind is ActionKind.EDITOR else navigator).append(action)
        else:
            c.fail("expected tool:, workflows:, menuitem, or navigatoritem")
    c.expect("sym", "}")
    return ToolEditorConcept(tool_class, tuple(workflows), tuple(menu), tuple(navigator))
