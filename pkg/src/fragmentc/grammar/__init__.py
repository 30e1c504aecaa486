"""Meta level: parsing and checking grammar fragments and tool configs."""
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
    body_labels,
    iter_body,
    referenced_nonterminals,
)
from .parser import parse_grammar, parse_tool_config
from .printer import meta_pretty_print, render_body
from .validate import validate_fragment

__all__ = [
    "ActionKind",
    "Alternative",
    "Block",
    "BodyExpr",
    "Cardinality",
    "CardinalityKind",
    "EmbeddingBinding",
    "FragmentEditorConcept",
    "GrammarFragment",
    "NamedAction",
    "NonterminalRef",
    "PresenceFlag",
    "Production",
    "QualifiedName",
    "SegmentDef",
    "SegmentTemplateAttr",
    "SegmentTemplateLiteral",
    "Sequence",
    "StartBinding",
    "Terminal",
    "TokenProduction",
    "ToolConfig",
    "ToolEditorConcept",
    "body_labels",
    "iter_body",
    "meta_pretty_print",
    "parse_grammar",
    "parse_tool_config",
    "referenced_nonterminals",
    "render_body",
    "validate_fragment",
]
