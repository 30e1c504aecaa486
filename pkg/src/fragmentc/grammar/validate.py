"""Well-formedness checks over parsed grammar fragments."""
from __future__ import annotations

from ..reports import ProblemReport, error
from .model import (
    IDENT_TOKEN,
    GrammarFragment,
    SegmentTemplateAttr,
    body_labels,
    referenced_nonterminals,
)


def validate_fragment(
    fragment: GrammarFragment,
    resolved_supers: list[GrammarFragment] | None = None,
) -> list[ProblemReport]:
    """Return one report per invariant violation, in declaration order.

    ``resolved_supers`` must cover every name in ``fragment.super_grammars``
    (transitively); pass the flattened supergrammars when available.
    """
    supers = resolved_supers or []
    origin = fragment.origin or fragment.name
    reports: list[ProblemReport] = []

    def err(message: str, line: int) -> None:
        reports.append(error(message, origin, max(line, 1), 1, source="validate"))

    own_productions = {p.name: p for p in fragment.productions}
    own_interfaces = set(fragment.interfaces)
    own_externals = set(fragment.externals)
    own_tokens = fragment.token_names()

    super_productions = {p.name: p for s in supers for p in s.productions}
    super_interfaces = {i for s in supers for i in s.interfaces}
    super_externals = {e for s in supers for e in s.externals}
    super_token_names = {t.name for s in supers for t in s.token_productions}

    # pairwise disjointness of production / interface / external names
    for prod in fragment.productions:
        if prod.name in own_interfaces:
            err(f"name {prod.name!r} is declared both as production and interface", prod.line)
        if prod.name in own_externals:
            err(f"name {prod.name!r} is declared both as production and external", prod.line)
        if prod.name in own_tokens:
            err(f"name {prod.name!r} is declared both as production and token", prod.line)
    for name in fragment.interfaces:
        if name in own_externals:
            err(f"name {name!r} is declared both as interface and external",
                fragment.interface_lines.get(name, 0))

    known = (
        set(own_productions)
        | own_interfaces
        | own_externals
        | own_tokens
        | set(super_productions)
        | super_interfaces
        | super_externals
        | super_token_names
        | {IDENT_TOKEN}
    )
    all_interfaces = own_interfaces | super_interfaces

    for prod in fragment.productions:
        for name in prod.implements_list:
            if name not in all_interfaces:
                err(f"production {prod.name!r} implements unknown interface {name!r}", prod.line)
        for ref in referenced_nonterminals(prod.body):
            if ref.target not in known:
                err(f"unresolved nonterminal {ref.target!r}", ref.line or prod.line)

    concept = fragment.editor_concept
    if concept is not None:
        foldable_targets = set(own_productions) | set(super_productions)
        for name in concept.keywords:
            if not name or any(ch.isspace() for ch in name):
                err(f"keyword {name!r} must be a single non-empty word", concept.line)
        for name in concept.foldable:
            if name not in foldable_targets:
                err(f"foldable {name!r} does not name a production", concept.line)
        for seg in concept.segments:
            target = own_productions.get(seg.nonterminal) or super_productions.get(seg.nonterminal)
            if target is None:
                err(f"segment {seg.nonterminal!r} does not name a production", seg.line)
                continue
            labels = body_labels(target.body)
            for item in seg.template:
                if isinstance(item, SegmentTemplateAttr) and item.name not in labels:
                    err(
                        f"segment for {seg.nonterminal!r} references unknown attribute {item.name!r}",
                        seg.line,
                    )
    return reports
