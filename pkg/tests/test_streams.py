"""Instruct/Think partitioning: routing, bijection, stream purity."""

import dataclasses

import pytest

from gstkit.model import Stream, registry, validate
from gstkit.streams import (
    DanglingSentenceIndexError, DocIdMismatchError, DuplicateDimensionError,
    InstructView, ThinkSentence, ThinkView, count_dims, count_view_dims,
    merge, parse_instruct, parse_think, partition, serialize_instruct,
    serialize_think, stream_of,
)
from gstkit.model import UnknownDimensionError

from docgen import make_corpus


def test_stream_of_examples():
    assert stream_of("global.acoustic_environment_rating") is Stream.INSTRUCT
    assert stream_of("token.liaison") is Stream.THINK
    with pytest.raises(UnknownDimensionError):
        stream_of("bogus")


def test_partition_routes_by_stream(valid_doc):
    instruct, think = partition(valid_doc)
    assert instruct.speakers[0].dims["speaker.gender"] == "a warm baritone"
    assert "global.atmosphere" not in instruct.global_dims
    assert think.global_dims == {"global.atmosphere": "late-night ease"}
    assert think.sentences[0].dims == {"sentence.tone": "wry"}
    # text and marks live on the instruct side only
    assert instruct.sentences[0].text == "You did WHAT?"
    assert instruct.sentences[0].marks
    assert think.sentences[0].tokens[0].key == "token.stress"


def test_zero_think_doc_keeps_skeleton(valid_doc):
    bare = dataclasses.replace(
        valid_doc,
        global_dims={k: v for k, v in valid_doc.global_dims.items()
                     if k != "global.atmosphere"},
        sentences=tuple(dataclasses.replace(s, dims={}, tokens=())
                        for s in valid_doc.sentences),
    )
    _, think = partition(bare)
    assert think.global_dims == {}
    assert [s.index for s in think.sentences] == [0, 1]
    assert all(not s.dims and not s.tokens for s in think.sentences)


def test_merge_inverts_partition(valid_doc):
    instruct, think = partition(valid_doc)
    assert merge(instruct, think) == valid_doc


def test_merge_empty_think_view(valid_doc):
    instruct, _ = partition(valid_doc)
    doc = merge(instruct, ThinkView.empty(valid_doc.doc_id))
    assert validate(doc) == ()
    assert all(not s.dims and not s.tokens for s in doc.sentences)
    assert "global.atmosphere" not in doc.global_dims


def test_merge_doc_id_mismatch(valid_doc):
    instruct, _ = partition(valid_doc)
    with pytest.raises(DocIdMismatchError):
        merge(instruct, ThinkView.empty("other"))


def test_merge_dangling_sentence_index(valid_doc):
    instruct, _ = partition(valid_doc)
    think = ThinkView(doc_id=valid_doc.doc_id,
                      sentences=(ThinkSentence(index=7, dims={"sentence.tone": "x"}),))
    with pytest.raises(DanglingSentenceIndexError):
        merge(instruct, think)


def test_merge_duplicate_dimension(valid_doc):
    instruct, think = partition(valid_doc)
    clashing = dataclasses.replace(
        instruct, global_dims={**instruct.global_dims, "global.atmosphere": "dup"})
    with pytest.raises(DuplicateDimensionError):
        merge(clashing, think)


def test_merge_duplicate_sentence_entry(valid_doc):
    instruct, think = partition(valid_doc)
    doubled = dataclasses.replace(think, sentences=think.sentences + think.sentences[:1])
    with pytest.raises(DuplicateDimensionError):
        merge(instruct, doubled)


def test_bijection_and_dim_conservation_bulk():
    reg = registry()
    for doc in make_corpus(seed=23, count=300):
        instruct, think = partition(doc)
        assert merge(instruct, think) == doc
        # brute-force dim enumeration: every instance lands in exactly one view
        assert count_dims(doc) == count_view_dims(instruct, think)
        for key in instruct.global_dims:
            assert reg.lookup(key).stream is Stream.INSTRUCT
        for spk in instruct.speakers:
            for key in spk.dims:
                assert reg.lookup(key).stream is Stream.INSTRUCT
        for key in think.global_dims:
            assert reg.lookup(key).stream is Stream.THINK
        for ts in think.sentences:
            for key in ts.dims:
                assert reg.lookup(key).stream is Stream.THINK
            for tok in ts.tokens:
                assert reg.lookup(tok.key).stream is Stream.THINK


def test_partition_is_pure(valid_doc):
    assert partition(valid_doc) == partition(valid_doc)


def test_view_wire_round_trip(valid_doc):
    instruct, think = partition(valid_doc)
    i_data = serialize_instruct(instruct)
    t_data = serialize_think(think)
    assert b'"view":"instruct"' in i_data
    assert b'"view":"think"' in t_data
    assert parse_instruct(i_data) == instruct
    assert parse_think(t_data) == think
    assert merge(parse_instruct(i_data), parse_think(t_data)) == valid_doc


def test_view_parsers_reject_wrong_view(valid_doc):
    instruct, think = partition(valid_doc)
    from gstkit.wire import ParseError
    with pytest.raises(ParseError):
        parse_instruct(serialize_think(think))
    with pytest.raises(ParseError):
        parse_think(serialize_instruct(instruct))
