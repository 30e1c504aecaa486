"""Inheritance flattening, embedding, editor-concept merging, bundling."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fragmentc.compose import (
    BundleEntry,
    FragmentLoader,
    bind_embeddings,
    bundle_tools,
    compose_from_config,
    compose_single,
    dict_loader,
    manifest_from_json,
    merge_editor_concepts,
    resolve_inheritance,
)
from fragmentc.errors import ComposeError
from fragmentc.grammar import (
    FragmentEditorConcept,
    SegmentDef,
    SegmentTemplateAttr,
    SegmentTemplateLiteral,
    ToolEditorConcept,
    parse_grammar,
    parse_tool_config,
)

from conftest import MSC_GRAMMAR_SOURCE, JAVA_KEYWORDS, MSC_KEYWORDS

VIP_GRAMMAR = '''grammar VipMSC extends MSC {
  VIP implements Event = "vip" name:IDENT ";";
  concept texteditor {
    keywords: vip;
    segment: VIP ("pict/vip.gif") show: "VIP " name;
  }
}
'''


def _msc():
    return parse_grammar(MSC_GRAMMAR_SOURCE, "MSC.mc")


def _loader(*fragments):
    return dict_loader({f.name: f for f in fragments})


class TestResolveInheritance:
    def test_subgrammar_extends_keywords_and_implementors(self):
        vip = parse_grammar(VIP_GRAMMAR, "VipMSC.mc")
        flat = resolve_inheritance(vip, _loader(_msc()))
        assert set(flat.editor_concept.keywords) == MSC_KEYWORDS | {"vip"}
        assert flat.production_names() == {
            "MSC", "Instance", "SendEvent", "ReceiveEvent", "Condition", "VIP"}
        assert flat.production("VIP").implements_list == ("Event",)
        assert flat.interfaces == ("Event",)
        assert flat.externals == ("Cond", "Method")
        assert flat.super_grammars == ()
        assert flat.flattened_from == ("MSC",)

    def test_no_supers_is_identity(self):
        msc = _msc()
        assert resolve_inheritance(msc, _loader()) == msc

    def test_two_cycle_reports_both_names(self):
        a = parse_grammar('grammar A extends B { P = "p"; }', "a.mc")
        b = parse_grammar('grammar B extends A { Q = "q"; }', "b.mc")
        with pytest.raises(ComposeError) as exc:
            resolve_inheritance(a, _loader(a, b))
        message = exc.value.reports[0].message
        assert "cycle" in message and "A" in message and "B" in message

    def test_unknown_supergrammar(self):
        sub = parse_grammar('grammar Sub extends Ghost { A = "a"; }', "sub.mc")
        with pytest.raises(ComposeError) as exc:
            resolve_inheritance(sub, _loader())
        assert "Ghost" in exc.value.reports[0].message

    def test_override_replaces_super_production(self):
        base = parse_grammar('grammar Base { A = "old"; B = "b"; }', "base.mc")
        sub = parse_grammar('grammar Sub extends Base { A = "new"; }', "sub.mc")
        flat = resolve_inheritance(sub, _loader(base))
        assert flat.production("A").body.text == "new"
        assert flat.production("B") is not None

    def test_sibling_conflict_without_override_errors(self):
        left = parse_grammar('grammar Left { A = "l"; }', "l.mc")
        right = parse_grammar('grammar Right { A = "r"; }', "r.mc")
        sub = parse_grammar('grammar Sub extends Left, Right { B = "b"; }', "sub.mc")
        with pytest.raises(ComposeError) as exc:
            resolve_inheritance(sub, _loader(left, right))
        assert "'A'" in exc.value.reports[0].message

    def test_sibling_conflict_resolved_by_override(self):
        left = parse_grammar('grammar Left { A = "l"; }', "l.mc")
        right = parse_grammar('grammar Right { A = "r"; }', "r.mc")
        sub = parse_grammar('grammar Sub extends Left, Right { A = "mine"; }', "sub.mc")
        flat = resolve_inheritance(sub, _loader(left, right))
        assert flat.production("A").body.text == "mine"

    def test_diamond_is_fine(self):
        base = parse_grammar('grammar Base { A = "a"; }', "base.mc")
        left = parse_grammar('grammar Left extends Base { L = "l"; }', "l.mc")
        right = parse_grammar('grammar Right extends Base { R = "r"; }', "r.mc")
        sub = parse_grammar('grammar Sub extends Left, Right { S = "s"; }', "sub.mc")
        flat = resolve_inheritance(sub, _loader(base, left, right))
        assert flat.production_names() == {"A", "L", "R", "S"}

    def test_sub_segment_overrides_super(self):
        base = parse_grammar(
            'grammar Base { Person = name:IDENT; concept texteditor {'
            ' segment: Person ("pict/person.gif") show: "Person " name; } }', "base.mc")
        sub = parse_grammar(
            'grammar Sub extends Base { concept texteditor {'
            ' segment: Person ("pict/vip.gif") show: "Star " name; } }', "sub.mc")
        flat = resolve_inheritance(sub, _loader(base))
        segs = {s.nonterminal: s for s in flat.editor_concept.segments}
        assert segs["Person"].icon_path == "pict/vip.gif"
        assert segs["Person"].template[0] == SegmentTemplateLiteral("Star ")

    def test_flattening_is_idempotent(self):
        vip = parse_grammar(VIP_GRAMMAR, "VipMSC.mc")
        flat = resolve_inheritance(vip, _loader(_msc()))
        assert resolve_inheritance(flat, _loader()) == flat


JAVA_MINI = '''grammar Mini {
  Expression = value:IDENT;
  concept texteditor { keywords: true, false; }
}
'''


class TestBindEmbeddings:
    def _cfg(self, text, origin="test.mctool"):
        return parse_tool_config(text, origin)

    def test_qualified_config_shape_composes(self, msc_lang):
        assert msc_lang.start_symbol == "MSC.MSC"
        assert msc_lang.effective_editor.keywords == frozenset(MSC_KEYWORDS | JAVA_KEYWORDS)
        assert "JavaDSL.Expression" in msc_lang.productions
        assert msc_lang.source_fragments == ("MSC", "JavaDSL")
        assert msc_lang.interface_impls["MSC.Event"] == (
            "MSC.SendEvent", "MSC.ReceiveEvent", "MSC.Condition")

    def test_no_holes_identity_shape(self):
        g = parse_grammar('grammar G { A = "a" b:B; B = "b"; }', "g.mc")
        lang = compose_single(g, "A")
        assert lang.start_symbol == "G.A"
        assert set(lang.productions) == {"G.A", "G.B"}
        assert lang.productions["G.A"].body.items[1].target == "G.B"

    def test_missing_binding_reports_unbound_external(self):
        msc = _msc()
        cfg = self._cfg(
            "rootfactory F for R {\n"
            "  MSC.MSC root <<start>>;\n"
            "  Mini.Expression cond in root.Cond;\n"
            "}")
        mini = parse_grammar(JAVA_MINI, "mini.mc")
        with pytest.raises(ComposeError) as exc:
            bind_embeddings(msc, cfg, _loader(mini))
        assert "unbound external 'Method'" in exc.value.reports[0].message

    def test_binding_undeclared_external(self):
        g = parse_grammar('grammar G { A = "a"; }', "g.mc")
        cfg = self._cfg(
            "rootfactory F for R {\n"
            "  G.A root <<start>>;\n"
            "  Mini.Expression x in root.Ghost;\n"
            "}")
        with pytest.raises(ComposeError) as exc:
            bind_embeddings(g, cfg, _loader(parse_grammar(JAVA_MINI, "mini.mc")))
        assert "external not declared" in exc.value.reports[0].message

    def test_filler_nonterminal_not_found(self):
        g = parse_grammar('grammar G { external E; A = "a" E; }', "g.mc")
        cfg = self._cfg(
            "rootfactory F for R {\n"
            "  G.A root <<start>>;\n"
            "  Mini.Ghost e in root.E;\n"
            "}")
        with pytest.raises(ComposeError) as exc:
            bind_embeddings(g, cfg, _loader(parse_grammar(JAVA_MINI, "mini.mc")))
        assert "filler nonterminal 'Ghost'" in exc.value.reports[0].message

    def test_binding_path_must_start_at_alias(self):
        g = parse_grammar('grammar G { external E; A = "a" E; }', "g.mc")
        cfg = self._cfg(
            "rootfactory F for R {\n"
            "  G.A root <<start>>;\n"
            "  Mini.Expression e in other.E;\n"
            "}")
        with pytest.raises(ComposeError) as exc:
            bind_embeddings(g, cfg, _loader(parse_grammar(JAVA_MINI, "mini.mc")))
        assert "start alias" in exc.value.reports[0].message

    def test_referenced_interface_needs_implementor(self):
        g = parse_grammar('grammar G { interface I; A = "a" I; }', "g.mc")
        with pytest.raises(ComposeError) as exc:
            compose_single(g, "A")
        assert "no implementations" in exc.value.reports[0].message

    def test_determinism(self, corpus):
        config = corpus / "msc.mctool"
        cfg = parse_tool_config(config.read_text(), str(config))
        loader = FragmentLoader([corpus], use_env=False)
        first = compose_from_config(cfg, loader)
        second = compose_from_config(cfg, loader)
        assert first == second


class TestMergeEditorConcepts:
    def test_keyword_union_with_filler(self):
        msc = _msc()
        mini = parse_grammar(JAVA_MINI, "mini.mc")
        merged = merge_editor_concepts(
            [("MSC", msc.editor_concept), ("Mini", mini.editor_concept)],
            ToolEditorConcept(),
        )
        assert merged.keywords == frozenset(MSC_KEYWORDS | {"true", "false"})

    def test_singleton_contribution(self):
        msc = _msc()
        merged = merge_editor_concepts([("MSC", msc.editor_concept)], ToolEditorConcept())
        assert merged.keywords == frozenset(MSC_KEYWORDS)
        assert merged.foldable == frozenset({"MSC.MSC", "MSC.Instance", "MSC.Condition"})
        assert merged.workflows == ()
        assert not merged.format_available

    def test_later_segment_wins(self):
        seg_a = SegmentDef("Person", "a.gif", (SegmentTemplateLiteral("A"),))
        seg_b = SegmentDef("Person", "b.gif", (SegmentTemplateLiteral("B"),))
        merged = merge_editor_concepts(
            [("F", FragmentEditorConcept(segments=(seg_a,))),
             ("F", FragmentEditorConcept(segments=(seg_b,)))],
            ToolEditorConcept(),
        )
        assert merged.segments["F.Person"] == seg_b

    def test_format_available_iff_printers(self):
        merged = merge_editor_concepts([], ToolEditorConcept(), ("p",))
        assert merged.format_available
        assert not merge_editor_concepts([], ToolEditorConcept()).format_available

    def test_keyword_union_monotone(self):
        msc = _msc()
        contributions = [("MSC", msc.editor_concept)]
        base = merge_editor_concepts(contributions, ToolEditorConcept())
        extra = parse_grammar(JAVA_MINI, "mini.mc")
        bigger = merge_editor_concepts(
            contributions + [("Mini", extra.editor_concept)], ToolEditorConcept())
        assert bigger.keywords >= base.keywords

    @given(st.lists(
        st.tuples(
            st.from_regex(r"[A-Z][a-z]{0,4}", fullmatch=True),
            st.one_of(st.none(), st.builds(
                lambda kws: FragmentEditorConcept(keywords=tuple(kws)),
                st.lists(st.from_regex(r"[a-z]{1,5}", fullmatch=True), max_size=4))),
        ), max_size=5),
        st.tuples(
            st.from_regex(r"[A-Z][a-z]{0,4}", fullmatch=True),
            st.builds(
                lambda kws: FragmentEditorConcept(keywords=tuple(kws)),
                st.lists(st.from_regex(r"[a-z]{1,5}", fullmatch=True), max_size=4))),
    )
    @settings(max_examples=60, deadline=None)
    def test_keyword_union_monotone_property(self, contributions, extra):
        base = merge_editor_concepts(contributions, ToolEditorConcept())
        grown = merge_editor_concepts(contributions + [extra], ToolEditorConcept())
        assert grown.keywords >= base.keywords
        assert grown.foldable >= base.foldable

    def test_fragment_contributes_identically_to_two_hosts(self):
        mini = parse_grammar(JAVA_MINI, "mini.mc")
        host_a = merge_editor_concepts(
            [("A", None), ("Mini", mini.editor_concept)], ToolEditorConcept())
        host_b = merge_editor_concepts(
            [("B", _msc().editor_concept), ("Mini", mini.editor_concept)], ToolEditorConcept())
        slice_a = {k for k in host_a.keywords if k in {"true", "false"}}
        slice_b = {k for k in host_b.keywords if k in {"true", "false"}}
        assert slice_a == slice_b == {"true", "false"}
        assert {s for s in host_a.foldable if s.startswith("Mini.")} == \
               {s for s in host_b.foldable if s.startswith("Mini.")}


class TestBundle:
    def _entry(self, name, extensions):
        g = parse_grammar(f'grammar {name} {{ A = "a"; }}', f"{name.lower()}.mc")
        lang = compose_single(g, "A")
        return BundleEntry(lang.tool, lang, extensions, config_path=f"{name.lower()}.mctool")

    def test_single_language(self):
        manifest = bundle_tools([self._entry("MSC", (".msc",))])
        assert len(manifest.languages) == 1
        assert manifest.languages[0].extensions == (".msc",)

    def test_two_languages_disjoint(self):
        manifest = bundle_tools([
            self._entry("MSC", (".msc",)), self._entry("Statechart", (".sc",))])
        assert [l.name for l in manifest.languages] == ["MSC", "Statechart"]

    def test_extension_conflict(self):
        with pytest.raises(ComposeError) as exc:
            bundle_tools([self._entry("MSC", (".msc",)), self._entry("Other", (".msc",))])
        assert "'.msc'" in exc.value.reports[0].message

    def test_manifest_json_round_trip(self):
        manifest = bundle_tools([self._entry("MSC", (".msc",))])
        parsed = manifest_from_json(manifest.to_json())
        assert parsed == manifest
        assert parsed.language_for_extension(".msc") == "MSC"
        assert parsed.language_for_extension(".xyz") is None
