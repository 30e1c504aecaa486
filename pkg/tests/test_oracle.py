"""Engine acceptance versus the brute-force CFG recognizer."""
import random

import pytest

from fragmentc.compose import compose_single
from fragmentc.engine import build_engine, parse
from fragmentc.grammar import parse_grammar

from cfg_oracle import CfgRecognizer
from grammar_gen import random_accepted_tokens, random_language, random_tokens


def _lang(text, start="A"):
    return compose_single(parse_grammar(text, "oracle.mc"), start)


def _engine_accepts(lang, handle, tokens):
    return parse(" ".join(tokens), lang, "t", handle=handle).root is not None


class TestOracleBasics:
    @pytest.mark.parametrize("tokens,expected", [
        ([], False),
        (["a"], True),
        (["a", "a"], False),
    ])
    def test_single_terminal(self, tokens, expected):
        lang = _lang('grammar G { A = "a"; }')
        assert CfgRecognizer(lang).accepts(tokens) is expected

    def test_star(self):
        lang = _lang('grammar G { A = "a"*; }')
        oracle = CfgRecognizer(lang)
        assert oracle.accepts([])
        assert oracle.accepts(["a", "a", "a"])
        assert not oracle.accepts(["b"])

    def test_alternative_and_recursion(self):
        lang = _lang('grammar G { A = "x" A | "y"; }')
        oracle = CfgRecognizer(lang)
        assert oracle.accepts(["y"])
        assert oracle.accepts(["x", "x", "y"])
        assert not oracle.accepts(["x", "x"])

    def test_ident(self):
        lang = _lang("grammar G { A = IDENT IDENT; }")
        oracle = CfgRecognizer(lang)
        assert oracle.accepts(["foo", "bar"])
        assert not oracle.accepts(["foo"])

    def test_interface(self):
        lang = _lang('grammar G { interface I; A = I; P implements I = "p"; '
                     'Q implements I = "q"; }')
        oracle = CfgRecognizer(lang)
        assert oracle.accepts(["p"]) and oracle.accepts(["q"])
        assert not oracle.accepts(["r"])

    def test_engine_agrees_on_handwritten_cases(self):
        lang = _lang('grammar G { A = "a" ("," "a")* ";"?; }')
        handle = build_engine(lang)
        oracle = CfgRecognizer(lang)
        for tokens in ([], ["a"], ["a", ";"], ["a", ",", "a"], ["a", ","],
                       ["a", ",", "a", ";"], [";"]):
            assert _engine_accepts(lang, handle, tokens) == oracle.accepts(tokens), tokens


class TestRandomEquivalence:
    def test_engine_matches_oracle_on_200_pairs(self):
        rng = random.Random(0xC0FFEE)
        checked = 0
        while checked < 200:
            lang = random_language(rng)
            handle = build_engine(lang)
            oracle = CfgRecognizer(lang)
            samples = [random_tokens(lang, rng) for _ in range(3)]
            derived = random_accepted_tokens(lang, rng)
            if derived is not None:
                samples.append(derived)
            for tokens in samples:
                if checked >= 200:
                    break
                expected = oracle.accepts(tokens)
                actual = _engine_accepts(lang, handle, tokens)
                assert actual == expected, (
                    f"divergence on {tokens!r} (engine={actual}, oracle={expected}) in "
                    f"{ {q: p.body for q, p in lang.productions.items()} }"
                )
                checked += 1
        assert checked == 200

    def test_derived_strings_are_accepted(self):
        rng = random.Random(2024)
        hits = 0
        for _ in range(40):
            lang = random_language(rng)
            tokens = random_accepted_tokens(lang, rng)
            if tokens is None:
                continue
            handle = build_engine(lang)
            assert _engine_accepts(lang, handle, tokens), (tokens, lang.productions)
            hits += 1
        assert hits >= 10
