import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from videoground.captions import (
    Dialect,
    GroundedCaption,
    PhraseSpan,
    SegBinding,
    parse,
    serialize,
    strip_tags,
    with_explicit_ids,
)
from videoground.errors import BadSegId, DanglingSeg, NestedTag, UnbalancedTag

WEIGHT_LIFTER_GT = (
    "A <p> weight </p> [SEG:1] lifter is in a <p> gym </p> [SEG:2] , "
    "and <p> he </p> [SEG:1] lifts a <p> barbell </p> [SEG:0]"
)


class TestParseInline:
    def test_leading_phrase(self):
        c = parse("<p>An adult woman in brown</p><SEG> is talking", Dialect.INLINE_SEG)
        assert c.plain == "An adult woman in brown is talking"
        assert c.spans == (
            PhraseSpan(0, 23, "An adult woman in brown", SegBinding.ordinal(0)),
        )

    def test_two_phrases_ordinal_order(self):
        text = (
            "<p>An adult woman in brown</p><SEG> is talking to another "
            "<p>adult man wearing jacket</p><SEG>"
        )
        c = parse(text, Dialect.INLINE_SEG)
        assert [s.binding for s in c.spans] == [
            SegBinding.ordinal(0),
            SegBinding.ordinal(1),
        ]
        assert c.plain == (
            "An adult woman in brown is talking to another adult man wearing jacket"
        )
        for s in c.spans:
            assert c.plain[s.start:s.end] == s.surface

    def test_no_tags(self):
        c = parse("  a  plain   sentence ", Dialect.INLINE_SEG)
        assert c.plain == "a plain sentence"
        assert c.spans == ()

    def test_unbalanced_open(self):
        with pytest.raises(UnbalancedTag):
            parse("<p>cup<SEG>", Dialect.INLINE_SEG)

    def test_stray_close(self):
        with pytest.raises(UnbalancedTag):
            parse("cup</p><SEG>", Dialect.INLINE_SEG)

    def test_dangling_seg(self):
        with pytest.raises(DanglingSeg):
            parse("a cup <SEG>", Dialect.INLINE_SEG)

    def test_seg_separated_from_phrase(self):
        with pytest.raises(DanglingSeg):
            parse("<p>cup</p> on the table <SEG>", Dialect.INLINE_SEG)

    def test_phrase_without_seg(self):
        with pytest.raises(DanglingSeg):
            parse("<p>cup</p> on the table", Dialect.INLINE_SEG)

    def test_nested(self):
        with pytest.raises(NestedTag):
            parse("<p>a <p>cup</p></p><SEG>", Dialect.INLINE_SEG)


class TestParseIdSeg:
    def test_paper_style_phrase(self):
        c = parse("A <p> weight </p> [SEG:1] lifter", Dialect.ID_SEG)
        assert c.plain == "A weight lifter"
        assert c.spans == (PhraseSpan(2, 8, "weight", SegBinding.explicit(1)),)

    def test_full_ground_truth_caption(self):
        c = parse(WEIGHT_LIFTER_GT, Dialect.ID_SEG)
        assert c.plain == "A weight lifter is in a gym , and he lifts a barbell"
        assert [s.binding.id for s in c.spans] == [1, 2, 1, 0]
        for s in c.spans:
            assert c.plain[s.start:s.end] == s.surface

    def test_duplicate_ids_allowed(self):
        c = parse("<p> she </p> [SEG:1] and <p> her </p> [SEG:1]", Dialect.ID_SEG)
        assert [s.binding.id for s in c.spans] == [1, 1]

    def test_multiple_tags_share_offsets(self):
        c = parse("the <p> two dogs </p> [SEG:2] [SEG:3] run", Dialect.ID_SEG)
        assert len(c.spans) == 2
        assert c.spans[0].start == c.spans[1].start
        assert c.spans[0].end == c.spans[1].end
        assert [s.binding.id for s in c.spans] == [2, 3]

    def test_bad_id(self):
        with pytest.raises(BadSegId):
            parse("<p> cup </p> [SEG:x]", Dialect.ID_SEG)

    def test_negative_id(self):
        with pytest.raises(BadSegId):
            parse("<p> cup </p> [SEG:-1]", Dialect.ID_SEG)

    def test_dangling_id_tag(self):
        with pytest.raises(DanglingSeg):
            parse("a cup [SEG:1]", Dialect.ID_SEG)

    def test_phrase_without_tag(self):
        with pytest.raises(DanglingSeg):
            parse("a <p> cup </p> sits", Dialect.ID_SEG)


class TestParseBracket:
    def test_rabbit_example(self):
        c = parse(
            "there is a [white rabbit](0) leaning on an [adult](1) by the water",
            Dialect.BRACKET,
        )
        assert c.plain == "there is a white rabbit leaning on an adult by the water"
        assert len(c.spans) == 2
        assert c.spans[0].surface == "white rabbit"
        assert c.spans[0].binding == SegBinding.explicit(0)
        assert c.spans[1].surface == "adult"
        assert c.spans[1].binding == SegBinding.explicit(1)

    def test_multi_id_phrase(self):
        c = parse("the [two dogs](2,3) run", Dialect.BRACKET)
        assert len(c.spans) == 2
        assert c.spans[0].start == c.spans[1].start
        assert [s.binding.id for s in c.spans] == [2, 3]

    def test_unclosed_bracket(self):
        with pytest.raises(UnbalancedTag):
            parse("a [cup", Dialect.BRACKET)

    def test_stray_close(self):
        with pytest.raises(UnbalancedTag):
            parse("a cup] here", Dialect.BRACKET)

    def test_missing_ids(self):
        with pytest.raises(DanglingSeg):
            parse("a [cup] here", Dialect.BRACKET)

    def test_bad_id(self):
        with pytest.raises(BadSegId):
            parse("a [cup](one)", Dialect.BRACKET)

    def test_nested(self):
        with pytest.raises(NestedTag):
            parse("a [big [cup](0)](1)", Dialect.BRACKET)


class TestStripTags:
    def test_simple(self):
        assert strip_tags("<p>cup</p><SEG>", Dialect.INLINE_SEG) == "cup"

    def test_passthrough(self):
        assert strip_tags("just a caption", Dialect.ID_SEG) == "just a caption"

    def test_ground_truth_caption(self):
        assert strip_tags(WEIGHT_LIFTER_GT, Dialect.ID_SEG) == (
            "A weight lifter is in a gym , and he lifts a barbell"
        )

    def test_idempotent(self):
        once = strip_tags(WEIGHT_LIFTER_GT, Dialect.ID_SEG)
        assert strip_tags(once, Dialect.ID_SEG) == once


# ------------------------------------------------------------ serialization

def caption_equal_modulo_labels(a: GroundedCaption, b: GroundedCaption) -> bool:
    a, b = with_explicit_ids(a), with_explicit_ids(b)
    return a.plain == b.plain and a.spans == b.spans


class TestSerialize:
    @pytest.mark.parametrize(
        "text,dialect",
        [
            ("<p>An adult woman in brown</p><SEG> is talking", Dialect.INLINE_SEG),
            ("A <p> weight </p> [SEG:1] lifter", Dialect.ID_SEG),
            (WEIGHT_LIFTER_GT, Dialect.ID_SEG),
            (
                "there is a [white rabbit](0) leaning on an [adult](1) by the water",
                Dialect.BRACKET,
            ),
        ],
    )
    def test_roundtrip_same_dialect(self, text, dialect):
        c = parse(text, dialect)
        assert parse(serialize(c, dialect), dialect) == c

    def test_zero_span_passthrough(self):
        c = parse("nothing tagged here", Dialect.BRACKET)
        assert serialize(c, Dialect.BRACKET) == "nothing tagged here"

    def test_inline_to_idseg_assigns_sequential_ids(self):
        c = parse("<p>a</p><SEG> and <p>b</p><SEG>", Dialect.INLINE_SEG)
        out = serialize(c, Dialect.ID_SEG)
        assert out == "<p> a </p> [SEG:0] and <p> b </p> [SEG:1]"
        back = parse(out, Dialect.ID_SEG)
        assert caption_equal_modulo_labels(back, c)

    def test_bracket_multi_id_to_idseg(self):
        c = parse("the [two dogs](2,3) run", Dialect.BRACKET)
        out = serialize(c, Dialect.ID_SEG)
        assert out == "the <p> two dogs </p> [SEG:2] [SEG:3] run"
        assert caption_equal_modulo_labels(parse(out, Dialect.ID_SEG), c)


# ------------------------------------------------------- generated captions

WORDS = ["a", "small", "dog", "red", "ball", "park", "runs", "near", "tree", "man"]


def random_caption(rng: random.Random, dialect: Dialect) -> GroundedCaption:
    """A caption expressible in `dialect`: ordinal bindings for the inline
    form, explicit (possibly repeated) ids otherwise."""
    spans = []
    parts = []
    pos = 0
    tagged_any = False
    ordinal = 0
    used_ids: list[int] = []
    for chunk in range(rng.randint(1, 5)):
        if parts:
            parts.append(" ")
            pos += 1
        words = " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 3)))
        if rng.random() < 0.6 or (chunk == 4 and not tagged_any):
            start, end = pos, pos + len(words)
            if dialect is Dialect.INLINE_SEG:
                n = 2 if rng.random() < 0.15 else 1
                for _ in range(n):
                    spans.append(
                        PhraseSpan(start, end, words, SegBinding.ordinal(ordinal))
                    )
                    ordinal += 1
            else:
                n = rng.randint(2, 3) if rng.random() < 0.2 else 1
                group: list[int] = []
                for _ in range(n):
                    if used_ids and rng.random() < 0.2:
                        oid = rng.choice(used_ids)  # repeated reference
                        if oid in group:
                            oid = max(used_ids + group) + 1
                    else:
                        oid = (max(used_ids + group) + 1) if (used_ids or group) else 0
                    group.append(oid)
                for oid in group:
                    spans.append(
                        PhraseSpan(start, end, words, SegBinding.explicit(oid))
                    )
                used_ids.extend(group)
            tagged_any = True
        parts.append(words)
        pos += len(words)
    return GroundedCaption("".join(parts), tuple(spans), dialect)


@pytest.mark.parametrize("dialect", list(Dialect))
def test_generated_roundtrip(dialect):
    rng = random.Random(99)
    for _ in range(300):
        c = random_caption(rng, dialect)
        text = serialize(c, dialect)
        back = parse(text, dialect)
        assert back == c, text
        if dialect is not Dialect.INLINE_SEG:
            assert [s.binding.id for s in back.spans] == [
                s.binding.id for s in c.spans
            ]


def test_cross_dialect_conversion_preserves_structure():
    rng = random.Random(7)
    for _ in range(200):
        c = random_caption(rng, Dialect.INLINE_SEG)
        for target in (Dialect.ID_SEG, Dialect.BRACKET):
            back = parse(serialize(c, target), target)
            assert caption_equal_modulo_labels(back, c)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(Dialect)))
def test_roundtrip_property(seed, dialect):
    rng = random.Random(seed)
    c = random_caption(rng, dialect)
    assert parse(serialize(c, dialect), dialect) == c
