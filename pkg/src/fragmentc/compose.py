"""Two-stage language composition.

Stage one flattens inheritance at the fragment level; stage two binds
embeddings from a tool config, merges the editor concepts of every involved
fragment, and can bundle several composed languages into one manifest.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .errors import ComposeError, MetaParseError
from .grammar.model import (
    IDENT_TOKEN,
    Alternative,
    Block,
    BodyExpr,
    Cardinality,
    FragmentEditorConcept,
    GrammarFragment,
    NamedAction,
    NonterminalRef,
    PresenceFlag,
    Production,
    SegmentDef,
    Sequence,
    Terminal,
    TokenProduction,
    ToolConfig,
    ToolEditorConcept,
    referenced_nonterminals,
)
from .grammar.parser import parse_grammar
from .grammar.validate import validate_fragment
from .reports import ProblemReport, error, has_errors
from .version import __version__


class FragmentLookup(Protocol):
    def __call__(self, name: str, relative_to: str | None = None) -> GrammarFragment: ...


GRAMMAR_PATH_ENV = "FRAGMENTC_GRAMMAR_PATH"


class FragmentLoader:
    """Loads ``.mc`` files by qualified name from a list of root directories."""

    def __init__(self, roots: list[str | Path] | None = None, use_env: bool = True):
        self.roots = [Path(r) for r in (roots or [])]
        if use_env:
            for entry in os.environ.get(GRAMMAR_PATH_ENV, "").split(os.pathsep):
                if entry:
                    self.roots.append(Path(entry))
        self._cache: dict[Path, GrammarFragment] = {}

    def __call__(self, name: str, relative_to: str | None = None) -> GrammarFragment:
        parts = name.split(".")
        grammar_name = parts[-1]
        candidates: list[Path] = []
        if relative_to is not None and len(parts) == 1:
            candidates.append(Path(relative_to) / f"{grammar_name}.mc")
        for root in self.roots:
            candidates.append(root.joinpath(*parts[:-1], f"{grammar_name}.mc"))
        for candidate in candidates:
            if candidate.is_file():
                return self._load_file(candidate, grammar_name)
        tried = ", ".join(str(c) for c in candidates) or "no grammar path configured"
        raise ComposeError([error(f"cannot resolve grammar {name!r} (tried: {tried})",
                                  name, source="composer")])

    def _load_file(self, path: Path, expected_name: str) -> GrammarFragment:
        resolved = path.resolve()
        if resolved not in self._cache:
            fragment = parse_grammar(path.read_text(encoding="utf-8"), str(path))
            self._cache[resolved] = fragment
        fragment = self._cache[resolved]
        if fragment.name != expected_name:
            raise ComposeError([error(
                f"file {path} declares grammar {fragment.name!r}, expected {expected_name!r}",
                str(path), source="composer")])
        return fragment


def dict_loader(fragments: dict[str, GrammarFragment]) -> FragmentLookup:
    """In-memory lookup, handy for tests and programmatic composition."""

    def load(name: str, relative_to: str | None = None) -> GrammarFragment:
        key = name.split(".")[-1]
        if name in fragments:
            return fragments[name]
        if key in fragments:
            return fragments[key]
        raise ComposeError([error(f"cannot resolve grammar {name!r}", name, source="composer")])

    return load


# --------------------------------------------------------------------------
# stage one: inheritance flattening


def resolve_inheritance(fragment: GrammarFragment, loader: FragmentLookup) -> GrammarFragment:
    """Flatten the inheritance closure of ``fragment`` into a single fragment."""
    return _flatten(fragment, loader, stack=[])


def _flatten(fragment: GrammarFragment, loader: FragmentLookup, stack: list[str]) -> GrammarFragment:
    if not fragment.super_grammars:
        return fragment
    if fragment.name in stack:
        cycle = " -> ".join(stack[stack.index(fragment.name):] + [fragment.name])
        raise ComposeError([error(f"inheritance cycle: {cycle}",
                                  fragment.origin or fragment.name, source="composer")])
    stack = stack + [fragment.name]
    origin_dir = str(Path(fragment.origin).parent) if fragment.origin else None

    flat_supers = []
    for super_name in fragment.super_grammars:
        sup = loader(super_name, relative_to=origin_dir)
        flat_supers.append(_flatten(sup, loader, stack))

    own_names = fragment.production_names()
    origin = fragment.origin or fragment.name

    merged_prods: dict[str, tuple[str, Production]] = {}  # name -> (owner, production)
    merged_tokens: dict[str, tuple[str, TokenProduction]] = {}
    interfaces: list[str] = []
    externals: list[str] = []
    interface_lines: dict[str, int] = {}
    external_lines: dict[str, int] = {}
    keywords: list[str] = []
    foldable: list[str] = []
    segments: dict[str, tuple[str, SegmentDef]] = {}
    provenance: list[str] = []

    for sup in flat_supers:
        for prod in sup.productions:
            prev = merged_prods.get(prod.name)
            if prev is not None and prev[1] != prod and prod.name not in own_names:
                raise ComposeError([error(
                    f"production {prod.name!r} is defined differently by supergrammars "
                    f"{prev[0]!r} and {sup.name!r} and not overridden by {fragment.name!r}",
                    origin, source="composer")])
            if prev is None:
                merged_prods[prod.name] = (sup.name, prod)
        for tok in sup.token_productions:
            prev_tok = merged_tokens.get(tok.name)
            if prev_tok is not None and prev_tok[1] != tok:
                raise ComposeError([error(
                    f"token {tok.name!r} is defined differently by supergrammars "
                    f"{prev_tok[0]!r} and {sup.name!r}",
                    origin, source="composer")])
            merged_tokens.setdefault(tok.name, (sup.name, tok))
        for name in sup.interfaces:
            if name not in interfaces:
                interfaces.append(name)
                interface_lines[name] = sup.interface_lines.get(name, 0)
        for name in sup.externals:
            if name not in externals:
                externals.append(name)
                external_lines[name] = sup.external_lines.get(name, 0)
        if sup.editor_concept is not None:
            for kw in sup.editor_concept.keywords:
                if kw not in keywords:
                    keywords.append(kw)
            for nt in sup.editor_concept.foldable:
                if nt not in foldable:
                    foldable.append(nt)
            for seg in sup.editor_concept.segments:
                prev_seg = segments.get(seg.nonterminal)
                own_concept = fragment.editor_concept
                overridden = own_concept is not None and any(
                    s.nonterminal == seg.nonterminal for s in own_concept.segments
                )
                if prev_seg is not None and prev_seg[1] != seg and not overridden:
                    raise ComposeError([error(
                        f"segment for {seg.nonterminal!r} is defined differently by supergrammars "
                        f"{prev_seg[0]!r} and {sup.name!r} and not overridden by {fragment.name!r}",
                        origin, source="composer")])
                segments.setdefault(seg.nonterminal, (sup.name, seg))
        if sup.name not in provenance:
            provenance.append(sup.name)
        provenance.extend(p for p in sup.flattened_from if p not in provenance)

    # the fragment's own declarations win
    ordered: list[Production] = []
    for name, (_, prod) in merged_prods.items():
        own = fragment.production(name)
        ordered.append(own if own is not None else prod)
    for prod in fragment.productions:
        if prod.name not in merged_prods:
            ordered.append(prod)
    for tok in fragment.token_productions:
        merged_tokens[tok.name] = (fragment.name, tok)
    for name in fragment.interfaces:
        if name not in interfaces:
            interfaces.append(name)
        interface_lines[name] = fragment.interface_lines.get(name, 0)
    for name in fragment.externals:
        if name not in externals:
            externals.append(name)
        external_lines[name] = fragment.external_lines.get(name, 0)

    own_concept = fragment.editor_concept
    if own_concept is not None:
        for kw in own_concept.keywords:
            if kw not in keywords:
                keywords.append(kw)
        for nt in own_concept.foldable:
            if nt not in foldable:
                foldable.append(nt)
        for seg in own_concept.segments:
            segments[seg.nonterminal] = (fragment.name, seg)

    concept: FragmentEditorConcept | None = None
    if keywords or foldable or segments or own_concept is not None:
        concept = FragmentEditorConcept(
            keywords=tuple(keywords),
            foldable=tuple(foldable),
            segments=tuple(seg for _, seg in segments.values()),
            line=own_concept.line if own_concept is not None else 0,
        )

    return GrammarFragment(
        name=fragment.name,
        super_grammars=(),
        interfaces=tuple(interfaces),
        externals=tuple(externals),
        productions=tuple(ordered),
        token_productions=tuple(tok for _, tok in merged_tokens.values()),
        editor_concept=concept,
        opaque_concepts=fragment.opaque_concepts,
        origin=fragment.origin,
        flattened_from=tuple(provenance),
        parse_warnings=fragment.parse_warnings,
        interface_lines=interface_lines,
        external_lines=external_lines,
    )


# --------------------------------------------------------------------------
# stage two: embedding and editor-concept merging


@dataclass(frozen=True)
class EffectiveEditorConfig:
    keywords: frozenset[str] = frozenset()
    foldable: frozenset[str] = frozenset()  # qualified Fragment.Nonterminal names
    segments: dict[str, SegmentDef] = field(default_factory=dict)
    workflows: tuple[str, ...] = ()
    menu_items: tuple[NamedAction, ...] = ()
    navigator_items: tuple[NamedAction, ...] = ()
    format_available: bool = False

    def actions(self) -> tuple[NamedAction, ...]:
        return self.menu_items + self.navigator_items


@dataclass(frozen=True)
class ComposedLanguage:
    name: str
    start_symbol: str  # qualified Fragment.Nonterminal
    productions: dict[str, Production]  # qualified name -> production with qualified refs
    interfaces: frozenset[str]  # qualified interface names
    interface_impls: dict[str, tuple[str, ...]]
    token_productions: dict[str, TokenProduction]  # qualified name -> token rule
    effective_editor: EffectiveEditorConfig
    source_fragments: tuple[str, ...]
    fragment_keywords: dict[str, frozenset[str]]
    tool: ToolConfig | None = field(default=None, compare=False)

    def fragment_of(self, qualified: str) -> str:
        return qualified.split(".", 1)[0]


def merge_editor_concepts(
    contributions: list[tuple[str, FragmentEditorConcept | None]],
    tool_editor: ToolEditorConcept,
    pretty_printers: tuple[str, ...] = (),
) -> EffectiveEditorConfig:
    """Union the fragment-level concepts, host first, later writers winning segments."""
    keywords: set[str] = set()
    foldable: set[str] = set()
    segments: dict[str, SegmentDef] = {}
    for fragment_name, concept in contributions:
        if concept is None:
            continue
        keywords.update(concept.keywords)
        foldable.update(f"{fragment_name}.{nt}" for nt in concept.foldable)
        for seg in concept.segments:
            segments[f"{fragment_name}.{seg.nonterminal}"] = seg
    return EffectiveEditorConfig(
        keywords=frozenset(keywords),
        foldable=frozenset(foldable),
        segments=segments,
        workflows=tool_editor.workflows,
        menu_items=tool_editor.menu_items,
        navigator_items=tool_editor.navigator_items,
        format_available=len(pretty_printers) > 0,
    )


def _qualify_body(expr: BodyExpr, rename: Callable[[NonterminalRef], str]) -> BodyExpr:
    if isinstance(expr, Terminal) or isinstance(expr, PresenceFlag):
        return expr
    if isinstance(expr, NonterminalRef):
        return NonterminalRef(rename(expr), label=expr.label, line=expr.line)
    if isinstance(expr, Sequence):
        return Sequence(tuple(_qualify_body(i, rename) for i in expr.items))
    if isinstance(expr, Alternative):
        return Alternative(tuple(_qualify_body(b, rename) for b in expr.branches))
    if isinstance(expr, Block):
        return Block(_qualify_body(expr.inner, rename), label=expr.label)
    if isinstance(expr, Cardinality):
        return Cardinality(_qualify_body(expr.inner, rename), kind=expr.kind)
    raise TypeError(f"unknown body node: {expr!r}")


def _import_fragment(
    fragment: GrammarFragment,
    external_targets: dict[str, str],
    productions: dict[str, Production],
    interfaces: set[str],
    interface_impls: dict[str, list[str]],
    tokens: dict[str, TokenProduction],
) -> None:
    prefix = fragment.name
    local_prods = fragment.production_names()
    local_ifaces = set(fragment.interfaces)
    local_tokens = fragment.token_names()

    def rename(ref: NonterminalRef) -> str:
        if ref.target == IDENT_TOKEN:
            return IDENT_TOKEN
        if ref.target in local_prods or ref.target in local_ifaces or ref.target in local_tokens:
            return f"{prefix}.{ref.target}"
        if ref.target in external_targets:
            return external_targets[ref.target]
        raise ComposeError([error(
            f"unresolved nonterminal {ref.target!r} in fragment {fragment.name!r}",
            fragment.origin or fragment.name, max(ref.line, 1), source="composer")])

    for iface in fragment.interfaces:
        interfaces.add(f"{prefix}.{iface}")
        interface_impls.setdefault(f"{prefix}.{iface}", [])
    for prod in fragment.productions:
        qualified = f"{prefix}.{prod.name}"
        productions[qualified] = Production(
            name=qualified,
            body=_qualify_body(prod.body, rename),
            implements_list=tuple(f"{prefix}.{i}" for i in prod.implements_list),
            line=prod.line,
        )
        for iface in prod.implements_list:
            interface_impls.setdefault(f"{prefix}.{iface}", []).append(qualified)
    for tok in fragment.token_productions:
        tokens[f"{prefix}.{tok.name}"] = tok


def bind_embeddings(
    host: GrammarFragment,
    cfg: ToolConfig,
    loader: FragmentLookup,
) -> ComposedLanguage:
    """Fill the host's external nonterminals per the tool config's bindings.

    ``host`` must already be inheritance-flattened and validated; filler
    grammars are loaded, flattened, and validated here.
    """
    origin = cfg.origin or host.origin or host.name
    if host.name != cfg.start.qualified.grammar:
        raise ComposeError([error(
            f"tool config starts at grammar {cfg.start.qualified.grammar!r} "
            f"but was composed against {host.name!r}", origin, source="composer")])
    start_nt = cfg.start.qualified.nonterminal
    if host.production(start_nt) is None:
        raise ComposeError([error(
            f"start nonterminal {start_nt!r} not found in grammar {host.name!r}",
            origin, max(cfg.start.line, 1), source="composer")])

    config_dir = str(Path(cfg.origin).parent) if cfg.origin else None
    external_targets: dict[str, str] = {}
    fillers: list[GrammarFragment] = []
    filler_names: set[str] = {host.name}
    for binding in cfg.embeddings:
        prefix = binding.host_path.rsplit(".", 1)[0] if "." in binding.host_path else ""
        if prefix != cfg.start.alias:
            raise ComposeError([error(
                f"binding path {binding.host_path!r} does not start at the start alias "
                f"{cfg.start.alias!r}", origin, max(binding.line, 1), source="composer")])
        if binding.external_name not in host.externals:
            raise ComposeError([error(
                f"binding names an external not declared by {host.name!r}: "
                f"{binding.external_name!r}", origin, max(binding.line, 1), source="composer")])
        if binding.external_name in external_targets:
            raise ComposeError([error(
                f"external {binding.external_name!r} is bound twice",
                origin, max(binding.line, 1), source="composer")])
        filler = loader(binding.filler_grammar, relative_to=config_dir)
        filler = resolve_inheritance(filler, loader)
        problems = validate_fragment(filler, [])
        if has_errors(problems):
            raise ComposeError(problems)
        if filler.externals:
            raise ComposeError([error(
                f"filler grammar {filler.name!r} has unbound externals: "
                f"{', '.join(filler.externals)}", origin, max(binding.line, 1), source="composer")])
        if binding.filler_nonterminal not in filler.production_names() \
                and binding.filler_nonterminal not in filler.interfaces:
            raise ComposeError([error(
                f"filler nonterminal {binding.filler_nonterminal!r} not found in grammar "
                f"{filler.name!r}", origin, max(binding.line, 1), source="composer")])
        if filler.name not in filler_names:
            filler_names.add(filler.name)
            fillers.append(filler)
        elif filler.name == host.name:
            raise ComposeError([error(
                f"filler grammar {filler.name!r} collides with the host grammar name",
                origin, max(binding.line, 1), source="composer")])
        external_targets[binding.external_name] = f"{filler.name}.{binding.filler_nonterminal}"

    unbound = [e for e in host.externals if e not in external_targets]
    if unbound:
        raise ComposeError([error(
            f"unbound external {name!r} in grammar {host.name!r}", origin, source="composer")
            for name in unbound])

    productions: dict[str, Production] = {}
    interfaces: set[str] = set()
    interface_impls: dict[str, list[str]] = {}
    tokens: dict[str, TokenProduction] = {}
    _import_fragment(host, external_targets, productions, interfaces, interface_impls, tokens)
    for filler in fillers:
        _import_fragment(filler, {}, productions, interfaces, interface_impls, tokens)

    # every referenced interface needs at least one implementor
    referenced: set[str] = set()
    for prod in productions.values():
        for ref in referenced_nonterminals(prod.body):
            referenced.add(ref.target)
    for iface in sorted(interfaces & referenced):
        if not interface_impls.get(iface):
            raise ComposeError([error(
                f"interface {iface!r} is referenced but has no implementations",
                origin, source="composer")])

    contributions: list[tuple[str, FragmentEditorConcept | None]] = [(host.name, host.editor_concept)]
    contributions.extend((f.name, f.editor_concept) for f in fillers)
    effective = merge_editor_concepts(contributions, cfg.editor, cfg.pretty_printers)

    fragment_keywords = {
        name: frozenset(concept.keywords) if concept else frozenset()
        for name, concept in contributions
    }
    provenance: list[str] = [host.name, *host.flattened_from]
    for filler in fillers:
        provenance.append(filler.name)
        provenance.extend(p for p in filler.flattened_from if p not in provenance)

    return ComposedLanguage(
        name=host.name,
        start_symbol=f"{host.name}.{start_nt}",
        productions=productions,
        interfaces=frozenset(interfaces),
        interface_impls={k: tuple(v) for k, v in interface_impls.items()},
        token_productions=tokens,
        effective_editor=effective,
        source_fragments=tuple(provenance),
        fragment_keywords=fragment_keywords,
        tool=cfg,
    )


def compose_from_config(cfg: ToolConfig, loader: FragmentLookup) -> ComposedLanguage:
    """Load, flatten, validate, and bind: the whole pipeline for one tool config."""
    config_dir = str(Path(cfg.origin).parent) if cfg.origin else None
    host = loader(cfg.start.qualified.grammar_path, relative_to=config_dir)
    host = resolve_inheritance(host, loader)
    problems = validate_fragment(host, [])
    if has_errors(problems):
        raise ComposeError(problems)
    return bind_embeddings(host, cfg, loader)


def compose_single(
    fragment: GrammarFragment,
    start: str,
    loader: FragmentLookup | None = None,
) -> ComposedLanguage:
    """Compose one fragment with no embeddings into a language starting at ``start``."""
    from .grammar.model import QualifiedName, StartBinding

    loader = loader or dict_loader({})
    flat = resolve_inheritance(fragment, loader)
    problems = validate_fragment(flat, [])
    if has_errors(problems):
        raise ComposeError(problems)
    cfg = ToolConfig(
        root_factory_name=f"{flat.name}Factory",
        root_type_name=flat.name,
        start=StartBinding(QualifiedName((flat.name, start)), alias="root"),
    )
    return bind_embeddings(flat, cfg, loader)


# --------------------------------------------------------------------------
# tool level: bundling


@dataclass(frozen=True)
class BundleEntry:
    tool: ToolConfig
    language: ComposedLanguage
    extensions: tuple[str, ...]
    config_path: str = ""


@dataclass(frozen=True)
class BundleLanguage:
    name: str
    extensions: tuple[str, ...]
    start: str
    fragments: tuple[str, ...]
    config_path: str = ""


@dataclass(frozen=True)
class BundleManifest:
    languages: tuple[BundleLanguage, ...]
    version: str = __version__

    def language_for_extension(self, ext: str) -> str | None:
        for lang in self.languages:
            if ext in lang.extensions:
                return lang.name
        return None

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "languages": [
                {
                    "name": lang.name,
                    "extensions": list(lang.extensions),
                    "start": lang.start,
                    "fragments": list(lang.fragments),
                    "config": lang.config_path,
                }
                for lang in self.languages
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


def bundle_tools(entries: list[BundleEntry]) -> BundleManifest:
    """Combine every tool into one deployable manifest; extensions must not clash."""
    if not entries:
        raise ValueError("bundle needs at least one tool")
    claimed: dict[str, str] = {}
    languages: list[BundleLanguage] = []
    for entry in entries:
        for ext in entry.extensions:
            if ext in claimed:
                raise ComposeError([error(
                    f"file extension {ext!r} claimed by both {claimed[ext]!r} and "
                    f"{entry.language.name!r}", entry.config_path or entry.language.name,
                    source="composer")])
            claimed[ext] = entry.language.name
        languages.append(BundleLanguage(
            name=entry.language.name,
            extensions=entry.extensions,
            start=entry.language.start_symbol,
            fragments=entry.language.source_fragments,
            config_path=entry.config_path,
        ))
    return BundleManifest(tuple(languages))


def manifest_from_json(text: str, origin: str = "<bundle>") -> BundleManifest:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MetaParseError([error(f"bundle manifest is not valid JSON: {exc}", origin,
                                    source="composer")]) from exc
    try:
        languages = tuple(
            BundleLanguage(
                name=lang["name"],
                extensions=tuple(lang["extensions"]),
                start=lang.get("start", ""),
                fragments=tuple(lang.get("fragments", ())),
                config_path=lang.get("config", ""),
            )
            for lang in data["languages"]
        )
        return BundleManifest(languages, version=data.get("version", __version__))
    except (KeyError, TypeError) as exc:
        raise MetaParseError([error(f"bundle manifest missing field: {exc}", origin,
                                    source="composer")]) from exc
