"""Inline mark grammar: stripping, escaping, and the render inverse."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from gstkit.model import Mark, MarkKind
from gstkit.wire import (
    MarkRenderError, ParseError, parse_marked_text, render_marked_text,
)


def test_interruption_example():
    plain, marks = parse_marked_text("No, I—[[interruption]]")
    assert plain == "No, I—"
    assert marks == (Mark(position=6, kind=MarkKind.INTERRUPTION),)


def test_tonal_pivot_example():
    plain, marks = parse_marked_text("fine.[[tonal_pivot|suddenly cold]] Leave.")
    assert plain == "fine. Leave."
    assert marks == (Mark(position=5, kind=MarkKind.TONAL_PIVOT, caption="suddenly cold"),)


def test_escape_example():
    plain, marks = parse_marked_text("price \\[[USD]]")
    assert plain == "price [[USD]]"
    assert marks == ()


def test_plain_passthrough():
    assert parse_marked_text("hi") == ("hi", ())
    assert render_marked_text("hi", []) == "hi"


def test_multiple_marks_and_unicode_offsets():
    plain, marks = parse_marked_text("a\U0001f399b[[other|x]]c[[interruption]]")
    assert plain == "a\U0001f399bc"
    assert [(m.position, m.kind) for m in marks] == \
        [(3, MarkKind.OTHER), (4, MarkKind.INTERRUPTION)]


def test_caption_may_contain_bar_and_brackets():
    plain, marks = parse_marked_text("x[[other|a|b [[c]]")
    assert plain == "x"
    assert marks[0].caption == "a|b [[c"


@pytest.mark.parametrize("authored,fragment", [
    ("oops [[interruption", "unterminated"),
    ("x[[sigh]]", "unknown mark kind"),
    ("x[[tonal_pivot]]", "require a caption"),
    ("x[[other|]]", "require a caption"),
    ("x[[interruption|nope]]", "carry no caption"),
])
def test_grammar_errors(authored, fragment):
    with pytest.raises(ParseError) as exc:
        parse_marked_text(authored)
    assert fragment in exc.value.message
    assert 0 <= exc.value.byte_offset <= len(authored.encode("utf-8"))


def test_unterminated_error_position():
    with pytest.raises(ParseError) as exc:
        parse_marked_text("ab[[interruption")
    assert exc.value.byte_offset == 2


def test_render_escapes_literal_brackets():
    assert "\\[[" in render_marked_text("has [[ inside", [])
    plain, marks = parse_marked_text(render_marked_text("has [[ inside", []))
    assert (plain, marks) == ("has [[ inside", ())


@pytest.mark.parametrize("plain,marks", [
    ("a[", (Mark(2, MarkKind.INTERRUPTION),)),                    # bracket before mark
    ("a[[", (Mark(3, MarkKind.INTERRUPTION),)),                   # pair before mark
    ("a[[[", (Mark(4, MarkKind.OTHER, "x"),)),                    # run before mark
    ("a\\", (Mark(2, MarkKind.INTERRUPTION),)),                   # backslash before mark
    ("a\\[[b", (Mark(1, MarkKind.INTERRUPTION),)),                # escape-lookalike
    ("[", (Mark(0, MarkKind.INTERRUPTION),)),                     # mark before bracket
    ("[", (Mark(0, MarkKind.INTERRUPTION), Mark(1, MarkKind.INTERRUPTION))),
    ("", (Mark(0, MarkKind.TONAL_PIVOT, "cold start"),)),
])
def test_render_parse_adversarial_cases(plain, marks):
    assert parse_marked_text(render_marked_text(plain, marks)) == (plain, tuple(marks))


def test_render_rejects_out_of_range():
    with pytest.raises(MarkRenderError):
        render_marked_text("hi", [Mark(3, MarkKind.INTERRUPTION)])


def test_render_rejects_unsorted():
    with pytest.raises(MarkRenderError):
        render_marked_text("hello", [Mark(3, MarkKind.INTERRUPTION),
                                     Mark(1, MarkKind.INTERRUPTION)])


def test_render_rejects_bad_arity():
    with pytest.raises(MarkRenderError):
        render_marked_text("hi", [Mark(0, MarkKind.OTHER, None)])
    with pytest.raises(MarkRenderError):
        render_marked_text("hi", [Mark(0, MarkKind.INTERRUPTION, "x")])
    with pytest.raises(MarkRenderError):
        render_marked_text("hi", [Mark(0, MarkKind.OTHER, "bad ]] caption")])


def _random_pair(rng: random.Random):
    alphabet = "ab [\\]|—é\U0001f399"
    plain = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
    marks = []
    for _ in range(rng.randint(0, 3)):
        kind = rng.choice(list(MarkKind))
        caption = None
        if kind is not MarkKind.INTERRUPTION:
            caption = "".join(rng.choice("xy z|[") for _ in range(rng.randint(1, 6)))
        marks.append(Mark(rng.randint(0, len(plain)), kind, caption))
    marks.sort(key=lambda m: m.position)
    return plain, tuple(marks)


def test_round_trip_1000_random_pairs():
    rng = random.Random(99)
    for _ in range(1000):
        plain, marks = _random_pair(rng)
        authored = render_marked_text(plain, marks)
        assert parse_marked_text(authored) == (plain, marks)


_caption_chars = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc"), blacklist_characters="]"),
    min_size=1, max_size=8).filter(lambda s: s.strip())


@st.composite
def _pairs(draw):
    plain = draw(st.text(
        alphabet=st.characters(blacklist_categories=("Cs", "Cc")), max_size=16))
    n = draw(st.integers(0, 3))
    positions = sorted(draw(st.integers(0, len(plain))) for _ in range(n))
    marks = []
    for pos in positions:
        kind = draw(st.sampled_from(list(MarkKind)))
        caption = None if kind is MarkKind.INTERRUPTION else draw(_caption_chars)
        marks.append(Mark(pos, kind, caption))
    return plain, tuple(marks)


@settings(max_examples=80, deadline=None)
@given(_pairs())
def test_round_trip_property(pair):
    plain, marks = pair
    assert parse_marked_text(render_marked_text(plain, marks)) == (plain, marks)
