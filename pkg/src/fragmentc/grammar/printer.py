"""Canonical text rendering of grammar fragments.

``parse_grammar(meta_pretty_print(f))`` is structurally equal to ``f``; the
round-trip property test in the suite holds the two sides together.
"""
from __future__ import annotations

from .model import (
    Alternative,
    Block,
    BodyExpr,
    Cardinality,
    GrammarFragment,
    NonterminalRef,
    PresenceFlag,
    SegmentTemplateAttr,
    SegmentTemplateLiteral,
    Sequence,
    Terminal,
)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_body(expr: BodyExpr) -> str:
    if isinstance(expr, Terminal):
        return _quote(expr.text)
    if isinstance(expr, NonterminalRef):
        return f"{expr.label}:{expr.target}" if expr.label else expr.target
    if isinstance(expr, PresenceFlag):
        return f"{expr.label}:[{_quote(expr.keyword)}]"
    if isinstance(expr, Sequence):
        return " ".join(render_body(i) for i in expr.items)
    if isinstance(expr, Alternative):
        return " | ".join(render_body(b) for b in expr.branches)
    if isinstance(expr, Block):
        inner = f"({render_body(expr.inner)})"
        return f"{expr.label}:{inner}" if expr.label else inner
    if isinstance(expr, Cardinality):
        return f"{render_body(expr.inner)}{expr.kind.value}"
    raise TypeError(f"unknown body node: {expr!r}")


def meta_pretty_print(fragment: GrammarFragment) -> str:
    lines: list[str] = []
    header = f"grammar {fragment.name}"
    if fragment.super_grammars:
        header += " extends " + ", ".join(fragment.super_grammars)
    lines.append(header + " {")
    lines.append("")
    for name in fragment.interfaces:
        lines.append(f"  interface {name};")
    for name in fragment.externals:
        lines.append(f"  external {name};")
    for tok in fragment.token_productions:
        lines.append(f"  token {tok.name} = /{tok.pattern.replace('/', chr(92) + '/')}/;")
    if fragment.interfaces or fragment.externals or fragment.token_productions:
        lines.append("")
    for prod in fragment.productions:
        impl = ""
        if prod.implements_list:
            impl = " implements " + ", ".join(prod.implements_list)
        lines.append(f"  {prod.name}{impl} = {render_body(prod.body)};")
        lines.append("")
    concept = fragment.editor_concept
    if concept is not None:
        lines.append("  concept texteditor {")
        if concept.keywords:
            lines.append(f"    keywords: {', '.join(concept.keywords)};")
        if concept.foldable:
            lines.append(f"    foldable: {', '.join(concept.foldable)};")
        for seg in concept.segments:
            items = " ".join(
                _quote(i.text) if isinstance(i, SegmentTemplateLiteral) else i.name
                for i in seg.template
            )
            lines.append(f"    segment: {seg.nonterminal} ({_quote(seg.icon_path)}) show: {items};")
        lines.append("  }")
        lines.append("")
    for opaque in fragment.opaque_concepts:
        body = f" {opaque.body} " if opaque.body else " "
        lines.append(f"  concept {opaque.name} {{{body}}}")
        lines.append("")
    while lines and lines[-1] == "":
        lines.pop()
    lines.append("}")
    return "\n".join(lines) + "\n"
