"""Domain model for grammar fragments and tool configurations.

Equality on these types is structural: source line fields carry
``compare=False`` so that a pretty-printed and re-parsed fragment compares
equal to the original.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from ..reports import ProblemReport

IDENT_TOKEN = "IDENT"


class CardinalityKind(str, Enum):
    OPTIONAL = "?"
    STAR = "*"
    PLUS = "+"


@dataclass(frozen=True)
class Terminal:
    text: str


@dataclass(frozen=True)
class NonterminalRef:
    target: str
    label: str | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PresenceFlag:
    """The ``label:["kw"]`` form; yields a boolean production attribute."""

    label: str
    keyword: str


@dataclass(frozen=True)
class Sequence:
    items: tuple["BodyExpr", ...]

    def __post_init__(self) -> None:
        if not self.items:
            raise ValueError("sequence needs at least one item")


@dataclass(frozen=True)
class Alternative:
    branches: tuple["BodyExpr", ...]

    def __post_init__(self) -> None:
        if len(self.branches) < 2:
            raise ValueError("alternative needs at least two branches")


@dataclass(frozen=True)
class Block:
    inner: "BodyExpr"
    label: str | None = None


@dataclass(frozen=True)
class Cardinality:
    inner: "BodyExpr"
    kind: CardinalityKind


BodyExpr = Union[Terminal, NonterminalRef, PresenceFlag, Sequence, Alternative, Block, Cardinality]


@dataclass(frozen=True)
class Production:
    name: str
    body: BodyExpr
    implements_list: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class TokenProduction:
    """``token NAME = /regex/;`` — a fragment-local lexical rule."""

    name: str
    pattern: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SegmentTemplateLiteral:
    text: str


@dataclass(frozen=True)
class SegmentTemplateAttr:
    name: str


SegmentTemplateItem = Union[SegmentTemplateLiteral, SegmentTemplateAttr]


@dataclass(frozen=True)
class SegmentDef:
    nonterminal: str
    icon_path: str
    template: tuple[SegmentTemplateItem, ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class FragmentEditorConcept:
    keywords: tuple[str, ...] = ()
    foldable: tuple[str, ...] = ()
    segments: tuple[SegmentDef, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class OpaqueConcept:
    """A ``concept`` block other than texteditor, kept verbatim."""

    name: str
    body: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class GrammarFragment:
    name: str
    super_grammars: tuple[str, ...] = ()
    interfaces: tuple[str, ...] = ()
    externals: tuple[str, ...] = ()
    productions: tuple[Production, ...] = ()
    token_productions: tuple[TokenProduction, ...] = ()
    editor_concept: FragmentEditorConcept | None = None
    opaque_concepts: tuple[OpaqueConcept, ...] = ()
    origin: str = field(default="", compare=False)
    # names of grammars folded in by inheritance flattening, nearest first
    flattened_from: tuple[str, ...] = field(default=(), compare=False)
    parse_warnings: tuple[ProblemReport, ...] = field(default=(), compare=False)
    interface_lines: dict = field(default_factory=dict, compare=False, repr=False)
    external_lines: dict = field(default_factory=dict, compare=False, repr=False)

    def production(self, name: str) -> Production | None:
        for p in self.productions:
            if p.name == name:
                return p
        return None

    def production_names(self) -> set[str]:
        return {p.name for p in self.productions}

    def token_names(self) -> set[str]:
        return {t.name for t in self.token_productions}


@dataclass(frozen=True)
class QualifiedName:
    """Dotted name from a tool config: package path + grammar + nonterminal."""

    parts: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.parts) < 2:
            raise ValueError(f"qualified name needs grammar and nonterminal: {self.parts}")

    @property
    def package(self) -> tuple[str, ...]:
        return self.parts[:-2]

    @property
    def grammar(self) -> str:
        return self.parts[-2]

    @property
    def nonterminal(self) -> str:
        return self.parts[-1]

    @property
    def grammar_path(self) -> str:
        return ".".join(self.parts[:-1])

    def __str__(self) -> str:
        return ".".join(self.parts)


@dataclass(frozen=True)
class StartBinding:
    qualified: QualifiedName
    alias: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class EmbeddingBinding:
    external_name: str
    host_path: str
    filler_grammar: str
    filler_nonterminal: str
    alias: str = ""
    line: int = field(default=0, compare=False)


class ActionKind(str, Enum):
    EDITOR = "editor"
    NAVIGATOR = "navigator"


@dataclass(frozen=True)
class NamedAction:
    display_name: str
    action_id: str
    kind: ActionKind


@dataclass(frozen=True)
class ToolEditorConcept:
    tool_class_name: str = ""
    workflows: tuple[str, ...] = ()
    menu_items: tuple[NamedAction, ...] = ()
    navigator_items: tuple[NamedAction, ...] = ()


@dataclass(frozen=True)
class ToolConfig:
    root_factory_name: str
    root_type_name: str
    start: StartBinding
    embeddings: tuple[EmbeddingBinding, ...] = ()
    pretty_printers: tuple[str, ...] = ()
    editor: ToolEditorConcept = field(default_factory=ToolEditorConcept)
    origin: str = field(default="", compare=False)


def iter_body(expr: BodyExpr):
    """Yield every node of a body expression, preorder."""
    yield expr
    if isinstance(expr, Sequence):
        for item in expr.items:
            yield from iter_body(item)
    elif isinstance(expr, Alternative):
        for branch in expr.branches:
            yield from iter_body(branch)
    elif isinstance(expr, (Block, Cardinality)):
        yield from iter_body(expr.inner)


def body_labels(body: BodyExpr) -> set[str]:
    """All attribute names a production body can bind."""
    labels: set[str] = set()
    for node in iter_body(body):
        if isinstance(node, (NonterminalRef, Block)) and node.label:
            labels.add(node.label)
        elif isinstance(node, PresenceFlag):
            labels.add(node.label)
    return labels


def referenced_nonterminals(body: BodyExpr) -> list[NonterminalRef]:
    return [n for n in iter_body(body) if isinstance(n, NonterminalRef)]
