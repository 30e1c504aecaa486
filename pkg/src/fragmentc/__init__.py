"""fragmentc: a compositional DSL workbench.

Grammar fragments (with embedded texteditor concepts) compose by inheritance
and embedding into full languages; the derived editor features are served
over the language-server protocol or dumped as JSON.
"""
from .compose import (
    BundleEntry,
    BundleManifest,
    ComposedLanguage,
    EffectiveEditorConfig,
    FragmentLoader,
    bind_embeddings,
    bundle_tools,
    compose_from_config,
    compose_single,
    merge_editor_concepts,
    resolve_inheritance,
)
from .engine import ParseOutcome, ParserHandle, SyntaxNode, Token, build_engine, lex, parse
from .errors import ComposeError, EngineBuildError, FragmentcError, MetaParseError
from .grammar import (
    GrammarFragment,
    ToolConfig,
    meta_pretty_print,
    parse_grammar,
    parse_tool_config,
    validate_fragment,
)
from .reports import ProblemReport, Severity, Span
from .version import __version__

__all__ = [
    "BundleEntry",
    "BundleManifest",
    "ComposeError",
    "ComposedLanguage",
    "EffectiveEditorConfig",
    "EngineBuildError",
    "FragmentLoader",
    "FragmentcError",
    "GrammarFragment",
    "MetaParseError",
    "ParseOutcome",
    "ParserHandle",
    "ProblemReport",
    "Severity",
    "Span",
    "SyntaxNode",
    "Token",
    "ToolConfig",
    "__version__",
    "bind_embeddings",
    "build_engine",
    "bundle_tools",
    "compose_from_config",
    "compose_single",
    "lex",
    "merge_editor_concepts",
    "meta_pretty_print",
    "parse",
    "parse_grammar",
    "parse_tool_config",
    "resolve_inheritance",
    "validate_fragment",
]
