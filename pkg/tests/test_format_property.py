"""Format round-trip and idempotence over generated MSC documents."""
import random

from fragmentc.engine import parse, trees_equal
from fragmentc.services import format_document

from msc_gen import random_msc_document


def test_generated_documents_round_trip(msc_lang, msc_handle):
    rng = random.Random(51)
    parsed = 0
    for _ in range(100):
        text = random_msc_document(rng)
        outcome = parse(text, msc_lang, "gen.msc", handle=msc_handle)
        assert outcome.root is not None, (text, [p.format() for p in outcome.problems])
        parsed += 1
        formatted = format_document(outcome, msc_lang)
        again = parse(formatted, msc_lang, "gen2.msc", handle=msc_handle)
        assert again.root is not None, formatted
        assert trees_equal(outcome.root, again.root), text
        assert format_document(again, msc_lang) == formatted, text
    assert parsed == 100
