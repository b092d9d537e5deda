"""Partition a document into its Instruct and Think streams, and merge back.

Instruct carries the caller's hard constraints: scene-level global dims,
full speaker profiles, and the sentence skeletons (index, speaker, text,
marks). Think carries the expressive plan: global plan dims, per-sentence
dims, and token-span annotations. Partition routes every dimension instance
into exactly one view by its registry stream; merge is the exact inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from . import model, wire
from .errors import GstError, InvalidDocumentError
from .model import GstDocument, Mark, Sentence, SpeakerProfile, Stream, TokenAnnotation


class DocIdMismatchError(GstError):
    pass


class DanglingSentenceIndexError(GstError):
    pass


class DuplicateDimensionError(GstError):
    pass


@dataclass(frozen=True)
class SentenceSkeleton:
    index: int
    speaker_id: str
    text: str
    marks: tuple[Mark, ...] = ()


@dataclass(frozen=True)
class InstructView:
    doc_id: str
    global_dims: Mapping[str, str]
    speakers: tuple[SpeakerProfile, ...]
    sentences: tuple[SentenceSkeleton, ...]


@dataclass(frozen=True)
class ThinkSentence:
    index: int
    dims: Mapping[str, str] = field(default_factory=dict)
    tokens: tuple[TokenAnnotation, ...] = ()


@dataclass(frozen=True)
class ThinkView:
    doc_id: str
    global_dims: Mapping[str, str] = field(default_factory=dict)
    sentences: tuple[ThinkSentence, ...] = ()

    @classmethod
    def empty(cls, doc_id: str) -> "ThinkView":
        return cls(doc_id=doc_id)


def stream_of(key: str) -> Stream:
    """Registry routing decision for a key; raises UnknownDimensionError."""
    return model.registry().lookup(key).stream


def partition(doc: GstDocument) -> tuple[InstructView, ThinkView]:
    """Split a valid document into its two functional streams."""
    report = model.validate(doc)
    if report:
        raise InvalidDocumentError(report)
    reg = model.registry()
    instruct_globals = {k: v for k, v in doc.global_dims.items()
                        if reg.lookup(k).stream is Stream.INSTRUCT}
    think_globals = {k: v for k, v in doc.global_dims.items()
                     if reg.lookup(k).stream is Stream.THINK}
    skeletons = tuple(
        SentenceSkeleton(index=s.index, speaker_id=s.speaker_id, text=s.text, marks=s.marks)
        for s in doc.sentences
    )
    # Sentence dims and token annotations are all Think-stream by the
    # registry's layer rules; they travel to the plan side wholesale.
    think_sentences = tuple(
        ThinkSentence(index=s.index, dims=dict(s.dims), tokens=s.tokens)
        for s in doc.sentences
    )
    instruct = InstructView(doc_id=doc.doc_id, global_dims=instruct_globals,
                            speakers=doc.speakers, sentences=skeletons)
    think = ThinkView(doc_id=doc.doc_id, global_dims=think_globals,
                      sentences=think_sentences)
    return instruct, think


def merge(instruct: InstructView, think: ThinkView) -> GstDocument:
    """Reassemble a document; inverse of partition on valid documents."""
    if instruct.doc_id != think.doc_id:
        raise DocIdMismatchError(
            f"instruct doc_id {instruct.doc_id!r} != think doc_id {think.doc_id!r}")
    skeleton_indices = {s.index for s in instruct.sentences}
    think_by_index: dict[int, ThinkSentence] = {}
    for ts in think.sentences:
        if ts.index not in skeleton_indices:
            raise DanglingSentenceIndexError(
                f"think view references sentence index {ts.index}, "
                f"but the skeleton has only {sorted(skeleton_indices)}")
        if ts.index in think_by_index:
            raise DuplicateDimensionError(
                f"think view lists sentence index {ts.index} twice")
        think_by_index[ts.index] = ts
    for key in think.global_dims:
        if key in instruct.global_dims:
            raise DuplicateDimensionError(f"global dim {key!r} present in both views")

    global_dims = dict(instruct.global_dims)
    global_dims.update(think.global_dims)
    sentences = []
    for sk in instruct.sentences:
        ts = think_by_index.get(sk.index)
        sentences.append(Sentence(
            index=sk.index, speaker_id=sk.speaker_id, text=sk.text, marks=sk.marks,
            dims=dict(ts.dims) if ts else {},
            tokens=ts.tokens if ts else (),
        ))
    doc = GstDocument(doc_id=instruct.doc_id, global_dims=global_dims,
                      speakers=instruct.speakers, sentences=tuple(sentences))
    report = model.validate(doc)
    if report:
        raise InvalidDocumentError(report)
    return doc


# ---------------------------------------------------------------------------
# Wire forms: same grammar as documents, discriminated by a "view" field.

def instruct_to_value(view: InstructView) -> dict:
    return {
        "doc_id": view.doc_id,
        "global_dims": dict(view.global_dims),
        "sentences": [
            {"index": s.index,
             "marks": [wire.mark_to_value(m) for m in s.marks],
             "speaker_id": s.speaker_id,
             "text": s.text}
            for s in view.sentences
        ],
        "speakers": [{"dims": dict(s.dims), "speaker_id": s.speaker_id}
                     for s in view.speakers],
        "view": "instruct",
    }


def think_to_value(view: ThinkView) -> dict:
    return {
        "doc_id": view.doc_id,
        "global_dims": dict(view.global_dims),
        "sentences": [
            {"dims": dict(s.dims),
             "index": s.index,
             "tokens": [{"caption": t.caption, "key": t.key, "span_end": t.span_end,
                         "span_start": t.span_start} for t in s.tokens]}
            for s in view.sentences
        ],
        "view": "think",
    }


def serialize_instruct(view: InstructView) -> bytes:
    return wire.canonical_bytes(instruct_to_value(view))


def serialize_think(view: ThinkView) -> bytes:
    return wire.canonical_bytes(think_to_value(view))


def parse_instruct(data: bytes) -> InstructView:
    v = wire.decode_value(data)
    obj = wire.as_obj(v, "/", ("doc_id", "global_dims", "sentences", "speakers", "view"))
    if obj["view"] != "instruct":
        raise wire.shape_error("/view: expected \"instruct\"")
    sentences = []
    for i, sv in enumerate(wire.as_list(obj["sentences"], "/sentences")):
        path = f"/sentences/{i}"
        sobj = wire.as_obj(sv, path, ("index", "marks", "speaker_id", "text"))
        marks = tuple(
            wire.value_to_mark(mv, f"{path}/marks/{j}")
            for j, mv in enumerate(wire.as_list(sobj["marks"], f"{path}/marks"))
        )
        sentences.append(SentenceSkeleton(
            index=wire.as_int(sobj["index"], f"{path}/index"),
            speaker_id=wire.as_str(sobj["speaker_id"], f"{path}/speaker_id"),
            text=wire.as_str(sobj["text"], f"{path}/text"),
            marks=marks,
        ))
    speakers = tuple(
        wire.value_to_speaker(sv, f"/speakers/{i}")
        for i, sv in enumerate(wire.as_list(obj["speakers"], "/speakers"))
    )
    return InstructView(
        doc_id=wire.as_str(obj["doc_id"], "/doc_id"),
        global_dims=wire.as_str_map(obj["global_dims"], "/global_dims"),
        speakers=speakers,
        sentences=tuple(sentences),
    )


def parse_think(data: bytes) -> ThinkView:
    v = wire.decode_value(data)
    obj = wire.as_obj(v, "/", ("doc_id", "global_dims", "sentences", "view"))
    if obj["view"] != "think":
        raise wire.shape_error("/view: expected \"think\"")
    sentences = []
    for i, sv in enumerate(wire.as_list(obj["sentences"], "/sentences")):
        path = f"/sentences/{i}"
        sobj = wire.as_obj(sv, path, ("dims", "index", "tokens"))
        tokens = []
        for j, tv in enumerate(wire.as_list(sobj["tokens"], f"{path}/tokens")):
            tpath = f"{path}/tokens/{j}"
            tobj = wire.as_obj(tv, tpath, ("caption", "key", "span_end", "span_start"))
            tokens.append(TokenAnnotation(
                span_start=wire.as_int(tobj["span_start"], f"{tpath}/span_start"),
                span_end=wire.as_int(tobj["span_end"], f"{tpath}/span_end"),
                key=wire.as_str(tobj["key"], f"{tpath}/key"),
                caption=wire.as_str(tobj["caption"], f"{tpath}/caption"),
            ))
        sentences.append(ThinkSentence(
            index=wire.as_int(sobj["index"], f"{path}/index"),
            dims=wire.as_str_map(sobj["dims"], f"{path}/dims"),
            tokens=tuple(tokens),
        ))
    return ThinkView(
        doc_id=wire.as_str(obj["doc_id"], "/doc_id"),
        global_dims=wire.as_str_map(obj["global_dims"], "/global_dims"),
        sentences=tuple(sentences),
    )


def count_dims(doc: GstDocument) -> int:
    """Total dimension instances in a document (globals, speaker dims,
    sentence dims, token annotations)."""
    total = len(doc.global_dims)
    total += sum(len(s.dims) for s in doc.speakers)
    total += sum(len(s.dims) + len(s.tokens) for s in doc.sentences)
    return total


def count_view_dims(instruct: InstructView, think: ThinkView) -> int:
    total = len(instruct.global_dims) + sum(len(s.dims) for s in instruct.speakers)
    total += len(think.global_dims)
    total += sum(len(s.dims) + len(s.tokens) for s in think.sentences)
    return total
