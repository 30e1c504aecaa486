"""Grammar-definition language: parsing, validation, printing."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fragmentc.errors import MetaParseError
from fragmentc.grammar import (
    Alternative,
    Block,
    Cardinality,
    CardinalityKind,
    FragmentEditorConcept,
    GrammarFragment,
    NonterminalRef,
    PresenceFlag,
    Production,
    SegmentDef,
    SegmentTemplateAttr,
    SegmentTemplateLiteral,
    Sequence,
    Terminal,
    meta_pretty_print,
    parse_grammar,
    parse_tool_config,
    validate_fragment,
)
from fragmentc.reports import Severity

from conftest import MSC_GRAMMAR_SOURCE, QUALIFIED_TOOL_CONFIG, MSC_KEYWORDS


class TestParseGrammar:
    def test_msc_grammar(self):
        f = parse_grammar(MSC_GRAMMAR_SOURCE, "MSC.mc")
        assert f.name == "MSC"
        assert [p.name for p in f.productions] == [
            "MSC", "Instance", "SendEvent", "ReceiveEvent", "Condition"]
        assert f.interfaces == ("Event",)
        assert f.externals == ("Cond", "Method")
        assert set(f.editor_concept.keywords) == MSC_KEYWORDS
        assert len(f.editor_concept.keywords) == 9
        assert f.editor_concept.foldable == ("MSC", "Instance", "Condition")
        assert len(f.editor_concept.segments) >= 1
        seg = f.editor_concept.segments[0]
        assert seg.nonterminal == "SendEvent"
        assert seg.icon_path == "pict/arrow.gif"
        assert seg.template == (
            SegmentTemplateLiteral("Send to "),
            SegmentTemplateAttr("receiver"),
            SegmentTemplateLiteral(":"),
            SegmentTemplateAttr("message"),
        )

    def test_minimal_fragment(self):
        f = parse_grammar('grammar G { A = "a"; }', "g.mc")
        assert len(f.productions) == 1
        assert f.editor_concept is None
        assert f.productions[0].body == Terminal("a")

    def test_dropped_parenthesis_reports_line_7(self):
        broken = MSC_GRAMMAR_SOURCE.replace(
            'MSC = "msc" name:IDENT "{" (Instance | Method)* "}";',
            'MSC = "msc" name:IDENT "{" (Instance | Method* "}";')
        assert MSC_GRAMMAR_SOURCE.splitlines()[6].lstrip().startswith("MSC =")
        with pytest.raises(MetaParseError) as exc:
            parse_grammar(broken, "broken.mc")
        reports = exc.value.reports
        assert len(reports) == 1
        assert reports[0].severity is Severity.ERROR
        assert reports[0].line == 7

    def test_duplicate_production_name(self):
        with pytest.raises(MetaParseError) as exc:
            parse_grammar('grammar G { A = "a"; A = "b"; }', "g.mc")
        assert "duplicate production" in exc.value.reports[0].message

    def test_empty_file(self):
        with pytest.raises(MetaParseError) as exc:
            parse_grammar("  \n\n", "empty.mc")
        assert "no grammar found" in exc.value.reports[0].message

    def test_unterminated_string(self):
        with pytest.raises(MetaParseError) as exc:
            parse_grammar('grammar G { A = "a\n; }', "g.mc")
        assert "unterminated string" in exc.value.reports[0].message
        assert exc.value.reports[0].line == 1

    def test_unterminated_comment(self):
        with pytest.raises(MetaParseError) as exc:
            parse_grammar('grammar G { /* A = "a"; }', "g.mc")
        assert "unterminated block comment" in exc.value.reports[0].message

    def test_presence_flag_and_labels(self):
        f = parse_grammar(MSC_GRAMMAR_SOURCE, "MSC.mc")
        condition = f.production("Condition")
        flags = [n for n in _walk(condition.body) if isinstance(n, PresenceFlag)]
        assert {p.label for p in flags} == {"shared", "sharedWithAll"}

    def test_supergrammars(self):
        f = parse_grammar('grammar Sub extends pkg.Base, Other { A = "a"; }', "sub.mc")
        assert f.super_grammars == ("pkg.Base", "Other")

    def test_token_production(self):
        f = parse_grammar('grammar G { token NUM = /[0-9]+/; A = x:NUM; }', "g.mc")
        assert f.token_productions[0].name == "NUM"
        assert f.token_productions[0].pattern == "[0-9]+"

    def test_other_concept_kept_with_warning(self):
        f = parse_grammar('grammar G { A = "a"; concept outline { shape: box; } }', "g.mc")
        assert f.opaque_concepts[0].name == "outline"
        assert len(f.parse_warnings) == 1
        assert f.parse_warnings[0].severity is Severity.WARNING

    def test_labeled_bare_terminal_rejected(self):
        with pytest.raises(MetaParseError):
            parse_grammar('grammar G { A = x:"a"; }', "g.mc")


def _walk(expr):
    yield expr
    if isinstance(expr, Sequence):
        for item in expr.items:
            yield from _walk(item)
    elif isinstance(expr, Alternative):
        for branch in expr.branches:
            yield from _walk(branch)
    elif isinstance(expr, (Block, Cardinality)):
        yield from _walk(expr.inner)


class TestParseToolConfig:
    def test_rootfactory_shape(self):
        cfg = parse_tool_config(QUALIFIED_TOOL_CONFIG, "msc.tool")
        assert cfg.root_factory_name == "MSCRootFactory"
        assert cfg.root_type_name == "MSCRoot<MCCompilationUnit>"
        assert cfg.start.alias == "mscdefinition"
        assert cfg.start.qualified.grammar == "MSC"
        assert cfg.start.qualified.nonterminal == "MCCompilationUnit"
        assert len(cfg.embeddings) == 2
        cond, method = cfg.embeddings
        assert (cond.external_name, cond.filler_nonterminal) == ("cond", "Expression")
        assert method.filler_grammar == "mc.examples.msc.java.JavaDSL"
        assert len(cfg.pretty_printers) == 2
        assert cfg.editor.workflows == ("symtab", "check")
        assert [a.display_name for a in cfg.editor.menu_items] == ["Generate Trace"]
        assert [a.display_name for a in cfg.editor.navigator_items] == ["Compose"]
        assert cfg.editor.tool_class_name == "mc.examples.msc.msc.MSCTool"

    def test_minimal_config(self):
        cfg = parse_tool_config("rootfactory F for R { G.A root <<start>>; }", "t")
        assert cfg.embeddings == ()
        assert cfg.pretty_printers == ()
        assert cfg.editor.workflows == ()
        assert cfg.editor.menu_items == ()

    def test_duplicate_start_marker_names_second_line(self):
        text = ("rootfactory F for R {\n"
                "  G.A root <<start>>;\n"
                "  G.B other <<start>>;\n"
                "}\n")
        with pytest.raises(MetaParseError) as exc:
            parse_tool_config(text, "t")
        assert exc.value.reports[0].line == 3
        assert "duplicate <<start>>" in exc.value.reports[0].message

    def test_missing_start_marker(self):
        with pytest.raises(MetaParseError) as exc:
            parse_tool_config("rootfactory F for R { }", "t")
        assert "missing <<start>>" in exc.value.reports[0].message

    def test_unknown_section(self):
        text = "rootfactory F for R { G.A root <<start>>; }\nconcept weird { }"
        with pytest.raises(MetaParseError) as exc:
            parse_tool_config(text, "t")
        assert "unknown section" in exc.value.reports[0].message


class TestValidateFragment:
    def test_msc_grammar_is_clean(self):
        assert validate_fragment(parse_grammar(MSC_GRAMMAR_SOURCE, "MSC.mc")) == []

    def test_unresolved_nonterminal(self):
        f = parse_grammar("grammar G { A = X; }", "g.mc")
        reports = validate_fragment(f)
        assert len(reports) == 1
        assert "unresolved nonterminal 'X'" in reports[0].message
        assert reports[0].severity is Severity.ERROR

    def test_segment_with_unknown_attribute(self):
        text = MSC_GRAMMAR_SOURCE.replace('show: "Send to " receiver ":" message;',
                                    'show: "x" bogus;')
        f = parse_grammar(text, "g.mc")
        reports = validate_fragment(f)
        assert len(reports) == 1
        assert "SendEvent" in reports[0].message
        assert "bogus" in reports[0].message

    def test_unknown_interface_in_implements(self):
        f = parse_grammar('grammar G { A implements I = "a"; }', "g.mc")
        reports = validate_fragment(f)
        assert any("unknown interface 'I'" in r.message for r in reports)

    def test_name_collision_production_interface(self):
        f = parse_grammar('grammar G { interface A; A = "a"; }', "g.mc")
        reports = validate_fragment(f)
        assert any("both as production and interface" in r.message for r in reports)

    def test_foldable_must_name_production(self):
        f = parse_grammar(
            'grammar G { A = "a"; concept texteditor { foldable: B; } }', "g.mc")
        reports = validate_fragment(f)
        assert any("foldable 'B'" in r.message for r in reports)

    def test_super_production_resolves(self):
        base = parse_grammar('grammar Base { B = "b"; }', "base.mc")
        sub = parse_grammar('grammar Sub extends Base { A = B; }', "sub.mc")
        assert validate_fragment(sub, [base]) == []

    def test_deterministic_order(self):
        f = parse_grammar("grammar G { A = X; B = Y; }", "g.mc")
        first = validate_fragment(f)
        second = validate_fragment(f)
        assert first == second
        assert [r.message for r in first] == [
            "unresolved nonterminal 'X'", "unresolved nonterminal 'Y'"]

    def test_report_lines_within_file(self):
        f = parse_grammar("grammar G { A = X; }", "g.mc")
        for report in validate_fragment(f):
            assert 1 <= report.line <= len("grammar G { A = X; }".splitlines())


class TestRoundTrip:
    @pytest.mark.parametrize("text", [
        MSC_GRAMMAR_SOURCE,
        'grammar G { A = "a"; }',
        'grammar G { token N = /[0-9]+/; A = v:N (b:("x" | "y"))?; }',
        'grammar Sub extends Base { A = f:["flag"] items:IDENT*; }',
        'grammar G { A = "a"; concept other { key: "v\\"q"; } }',
    ])
    def test_print_then_parse_is_identity(self, text):
        f = parse_grammar(text, "in.mc")
        printed = meta_pretty_print(f)
        assert parse_grammar(printed, "printed.mc") == f

    def test_corpus_files_round_trip(self, corpus):
        for path in sorted(corpus.rglob("*.mc")):
            f = parse_grammar(path.read_text(encoding="utf-8"), str(path))
            assert parse_grammar(meta_pretty_print(f), "rt.mc") == f


# -- property: random fragments survive the print/parse loop ----------------

_ident = st.from_regex(r"[a-z][a-z0-9]{0,5}", fullmatch=True)
_upper = st.from_regex(r"[A-Z][a-zA-Z0-9]{0,5}", fullmatch=True)
_terminal = st.builds(Terminal, st.from_regex(r'[a-z{};.,()=|<>"\\ ]{1,4}', fullmatch=True))
_leaf = st.one_of(
    _terminal,
    st.builds(NonterminalRef, _upper, st.one_of(st.none(), _ident)),
    st.builds(NonterminalRef, st.just("IDENT"), _ident),
    st.builds(PresenceFlag, _ident, _ident),
)


def _grow(inner):
    """Only parser-representable shapes: blocks wrap, cardinality on primaries,
    sequences of items, alternatives of sequences."""
    block = st.builds(Block, inner, st.one_of(st.none(), _ident))
    primary = st.one_of(_leaf, block)
    item = st.one_of(
        primary,
        st.builds(Cardinality, primary, st.sampled_from(list(CardinalityKind))),
    )
    seq = st.one_of(item, st.builds(lambda items: Sequence(tuple(items)),
                                    st.lists(item, min_size=2, max_size=3)))
    return st.one_of(seq, st.builds(lambda bs: Alternative(tuple(bs)),
                                    st.lists(seq, min_size=2, max_size=3)))


_body = st.recursive(_leaf, _grow, max_leaves=8)
_fragments = st.builds(
    lambda names, bodies, kws: GrammarFragment(
        name="G",
        productions=tuple(Production(n, b) for n, b in zip(names, bodies)),
        editor_concept=FragmentEditorConcept(keywords=tuple(kws)) if kws else None,
    ),
    st.lists(_upper, min_size=1, max_size=3, unique=True),
    st.lists(_body, min_size=3, max_size=3),
    st.lists(_ident, max_size=3, unique=True),
)


@settings(max_examples=60, deadline=None)
@given(_fragments)
def test_random_fragment_round_trip(fragment):
    printed = meta_pretty_print(fragment)
    assert parse_grammar(printed, "gen.mc") == fragment
