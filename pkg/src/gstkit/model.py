"""Dimension registry and the typed annotation-document model.

The schema annotates a speech script at three layers -- Global (scene),
Sentence (utterance), Token (phoneme-level span) -- and routes every
dimension into one of two streams: Instruct (caller-supplied hard
constraints, always mandatory) or Think (the expressive plan, always
optional so masked slots can stay empty). Every dimension value is a
free-form natural-language caption, never an enum.

All types here are immutable values: sequences are tuples, and dims maps
must not be mutated after construction. Construction does not validate;
`validate` produces a report of every violation with a stable error code,
so freshly decoded documents can be checked in one pass.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping

from .errors import GstError

DOCUMENT_VERSION = 1
GST_MEDIA_IDENTITY = "application/x-gst+json; v=1"

CAPTION_MAX_GLOBAL = 500
CAPTION_MAX_SENTENCE = 280
CAPTION_MAX_TOKEN = 140

_DOC_ID_RE = re.compile(r"[A-Za-z0-9._-]+\Z")
_SPEAKER_ID_RE = re.compile(r"spk[0-9]+\Z")


class Layer(Enum):
    GLOBAL = "global"
    SENTENCE = "sentence"
    TOKEN = "token"


class Stream(Enum):
    INSTRUCT = "instruct"
    THINK = "think"


class Cardinality(Enum):
    PER_DOCUMENT = "one-per-document"
    PER_SPEAKER = "one-per-speaker"
    PER_SENTENCE = "one-per-sentence"
    PER_TOKEN_SPAN = "one-per-token-span"


class MarkKind(Enum):
    INTERRUPTION = "interruption"
    TONAL_PIVOT = "tonal_pivot"
    OTHER = "other"


class UnknownDimensionError(GstError, KeyError):
    """Lookup of a key that is not in the registry."""

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"unknown dimension key: {key!r}")


@dataclass(frozen=True)
class DimensionDescriptor:
    key: str
    layer: Layer
    stream: Stream
    cardinality: Cardinality
    caption_max: int


def _d(key: str, layer: Layer, stream: Stream, card: Cardinality) -> DimensionDescriptor:
    caps = {
        Layer.GLOBAL: CAPTION_MAX_GLOBAL,
        Layer.SENTENCE: CAPTION_MAX_SENTENCE,
        Layer.TOKEN: CAPTION_MAX_TOKEN,
    }
    if layer is Layer.GLOBAL:
        assert card in (Cardinality.PER_DOCUMENT, Cardinality.PER_SPEAKER)
    elif layer is Layer.SENTENCE:
        assert card is Cardinality.PER_SENTENCE
    else:
        assert card is Cardinality.PER_TOKEN_SPAN
    if stream is Stream.INSTRUCT:
        assert layer is Layer.GLOBAL
    return DimensionDescriptor(key, layer, stream, card, caps[layer])


# The canonical dimension table. Order is contractual: serializations and
# reports that enumerate "all dimensions" walk this list top to bottom.
_CANONICAL_TABLE: tuple[DimensionDescriptor, ...] = (
    # Instruct / Global -- scene-level hard constraints
    _d("global.show_format", Layer.GLOBAL, Stream.INSTRUCT, Cardinality.PER_DOCUMENT),
    _d("global.style_tags", Layer.GLOBAL, Stream.INSTRUCT, Cardinality.PER_DOCUMENT),
    _d("global.topic", Layer.GLOBAL, Stream.INSTRUCT, Cardinality.PER_DOCUMENT),
    _d("global.acoustic_environment_rating", Layer.GLOBAL, Stream.INSTRUCT, Cardinality.PER_DOCUMENT),
    # Instruct / Global -- speaker identity, one value per declared speaker
    _d("speaker.gender", Layer.GLOBAL, Stream.INSTRUCT, Cardinality.PER_SPEAKER),
    _d("speaker.age", Layer.GLOBAL, Stream.INSTRUCT, Cardinality.PER_SPEAKER),
    _d("speaker.vocal_personality", Layer.GLOBAL, Stream.INSTRUCT, Cardinality.PER_SPEAKER),
    # Think / Global -- the scene-wide expressive plan
    _d("global.atmosphere", Layer.GLOBAL, Stream.THINK, Cardinality.PER_DOCUMENT),
    _d("global.emotional_arc", Layer.GLOBAL, Stream.THINK, Cardinality.PER_DOCUMENT),
    _d("global.acoustic_environment", Layer.GLOBAL, Stream.THINK, Cardinality.PER_DOCUMENT),
    _d("global.sound_events", Layer.GLOBAL, Stream.THINK, Cardinality.PER_DOCUMENT),
    # Think / Sentence -- per-utterance delivery
    _d("sentence.tone", Layer.SENTENCE, Stream.THINK, Cardinality.PER_SENTENCE),
    _d("sentence.intonation", Layer.SENTENCE, Stream.THINK, Cardinality.PER_SENTENCE),
    _d("sentence.pace", Layer.SENTENCE, Stream.THINK, Cardinality.PER_SENTENCE),
    _d("sentence.volume", Layer.SENTENCE, Stream.THINK, Cardinality.PER_SENTENCE),
    _d("sentence.intent", Layer.SENTENCE, Stream.THINK, Cardinality.PER_SENTENCE),
    _d("sentence.background_state", Layer.SENTENCE, Stream.THINK, Cardinality.PER_SENTENCE),
    # Think / Token -- phoneme-level realization over text spans
    _d("token.stress", Layer.TOKEN, Stream.THINK, Cardinality.PER_TOKEN_SPAN),
    _d("token.pronunciation", Layer.TOKEN, Stream.THINK, Cardinality.PER_TOKEN_SPAN),
    _d("token.liaison", Layer.TOKEN, Stream.THINK, Cardinality.PER_TOKEN_SPAN),
    _d("token.tone_sandhi", Layer.TOKEN, Stream.THINK, Cardinality.PER_TOKEN_SPAN),
    _d("token.interjection_duration", Layer.TOKEN, Stream.THINK, Cardinality.PER_TOKEN_SPAN),
)


class DimensionRegistry:
    """The fixed, ordered taxonomy of annotation dimensions."""

    def __init__(self, descriptors: tuple[DimensionDescriptor, ...]):
        self._descriptors = descriptors
        self._by_key = {d.key: d for d in descriptors}
        if len(self._by_key) != len(descriptors):
            raise ValueError("duplicate dimension keys in registry")

    @property
    def count(self) -> int:
        return len(self._descriptors)

    def __len__(self) -> int:
        return len(self._descriptors)

    def __iter__(self) -> Iterator[DimensionDescriptor]:
        return iter(self._descriptors)

    def __contains__(self, key: str) -> bool:
        return key in self._by_key

    def lookup(self, key: str) -> DimensionDescriptor:
        """Descriptor for an exact key match; raises UnknownDimensionError."""
        try:
            return self._by_key[key]
        except KeyError:
            raise UnknownDimensionError(key) from None

    def find(self, key: str) -> DimensionDescriptor | None:
        return self._by_key.get(key)

    def keys(self, *, layer: Layer | None = None, stream: Stream | None = None,
             cardinality: Cardinality | None = None) -> tuple[str, ...]:
        """Keys in canonical order, optionally filtered."""
        out = []
        for d in self._descriptors:
            if layer is not None and d.layer is not layer:
                continue
            if stream is not None and d.stream is not stream:
                continue
            if cardinality is not None and d.cardinality is not cardinality:
                continue
            out.append(d.key)
        return tuple(out)


_REGISTRY = DimensionRegistry(_CANONICAL_TABLE)

INSTRUCT_DOC_KEYS = _REGISTRY.keys(stream=Stream.INSTRUCT, cardinality=Cardinality.PER_DOCUMENT)
SPEAKER_KEYS = _REGISTRY.keys(cardinality=Cardinality.PER_SPEAKER)
THINK_DOC_KEYS = _REGISTRY.keys(stream=Stream.THINK, cardinality=Cardinality.PER_DOCUMENT)
SENTENCE_KEYS = _REGISTRY.keys(layer=Layer.SENTENCE)
TOKEN_KEYS = _REGISTRY.keys(layer=Layer.TOKEN)


def registry() -> DimensionRegistry:
    """The canonical registry; the same instance on every call."""
    return _REGISTRY


# ---------------------------------------------------------------------------
# Document model


@dataclass(frozen=True)
class SpeakerProfile:
    speaker_id: str
    dims: Mapping[str, str]  # the three speaker.* Instruct captions


@dataclass(frozen=True)
class Mark:
    """Positional standoff annotation inside a sentence's plain text."""

    position: int  # Unicode-scalar offset, 0..len(text) inclusive
    kind: MarkKind
    caption: str | None = None


@dataclass(frozen=True)
class TokenAnnotation:
    span_start: int
    span_end: int
    key: str
    caption: str


@dataclass(frozen=True)
class Sentence:
    index: int
    speaker_id: str
    text: str
    marks: tuple[Mark, ...] = ()
    dims: Mapping[str, str] = field(default_factory=dict)
    tokens: tuple[TokenAnnotation, ...] = ()


@dataclass(frozen=True)
class GstDocument:
    doc_id: str
    speakers: tuple[SpeakerProfile, ...]
    sentences: tuple[Sentence, ...]
    global_dims: Mapping[str, str] = field(default_factory=dict)
    version: int = DOCUMENT_VERSION


# ---------------------------------------------------------------------------
# Validation

# Stable violation codes. E007 covers any bad speaker declaration (duplicate
# or malformed id); E006 covers caption and sentence-text content bounds.
E_UNKNOWN_KEY = "E001"
E_MISSING_INSTRUCT = "E002"
E_BAD_SPAN = "E003"
E_DANGLING_SPEAKER = "E004"
E_BAD_INDEX = "E005"
E_BAD_CAPTION = "E006"
E_BAD_SPEAKER_DECL = "E007"
E_OVERLAPPING_SPANS = "E008"
E_BAD_MARK = "E009"
E_BAD_HEADER = "E010"


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str


ValidationReport = tuple[Violation, ...]


def _caption_problem(text: str, max_len: int) -> str | None:
    if not text.strip():
        return "empty after trimming"
    if len(text) > max_len:
        return f"length {len(text)} exceeds maximum {max_len}"
    for ch in text:
        if ord(ch) < 0x20:
            return f"control character U+{ord(ch):04X} not allowed"
    return None


def validate(doc: GstDocument) -> ValidationReport:
    """Check every schema invariant; empty report means the document is valid.

    Pure: the same document always yields the same report, in a fixed
    traversal order (header, global dims, speakers, sentences).
    """
    out: list[Violation] = []

    def bad(code: str, path: str, message: str) -> None:
        out.append(Violation(code, path, message))

    if doc.version != DOCUMENT_VERSION:
        bad(E_BAD_HEADER, "/version", f"unsupported version {doc.version}")
    if not doc.doc_id or len(doc.doc_id) > 128 or not _DOC_ID_RE.match(doc.doc_id):
        bad(E_BAD_HEADER, "/doc_id", "doc_id must be 1-128 chars of [A-Za-z0-9._-]")

    # Global dims: per-document keys only; all Instruct ones mandatory.
    for key, caption in doc.global_dims.items():
        desc = _REGISTRY.find(key)
        path = f"/global_dims/{key}"
        if desc is None or desc.cardinality is not Cardinality.PER_DOCUMENT:
            bad(E_UNKNOWN_KEY, path, "not a per-document dimension key")
            continue
        problem = _caption_problem(caption, desc.caption_max)
        if problem:
            bad(E_BAD_CAPTION, path, problem)
    for key in INSTRUCT_DOC_KEYS:
        if key not in doc.global_dims:
            bad(E_MISSING_INSTRUCT, f"/global_dims/{key}", "mandatory Instruct dimension missing")

    seen_speakers: set[str] = set()
    for i, spk in enumerate(doc.speakers):
        path = f"/speakers/{i}"
        if not _SPEAKER_ID_RE.match(spk.speaker_id):
            bad(E_BAD_SPEAKER_DECL, f"{path}/speaker_id",
                f"speaker_id {spk.speaker_id!r} does not match spk<digits>")
        if spk.speaker_id in seen_speakers:
            bad(E_BAD_SPEAKER_DECL, f"{path}/speaker_id",
                f"duplicate speaker_id {spk.speaker_id!r}")
        seen_speakers.add(spk.speaker_id)
        for key, caption in spk.dims.items():
            kpath = f"{path}/dims/{key}"
            desc = _REGISTRY.find(key)
            if desc is None or desc.cardinality is not Cardinality.PER_SPEAKER:
                bad(E_UNKNOWN_KEY, kpath, "not a per-speaker dimension key")
                continue
            problem = _caption_problem(caption, desc.caption_max)
            if problem:
                bad(E_BAD_CAPTION, kpath, problem)
        for key in SPEAKER_KEYS:
            if key not in spk.dims:
                bad(E_MISSING_INSTRUCT, f"{path}/dims/{key}",
                    "mandatory per-speaker Instruct dimension missing")

    for i, sent in enumerate(doc.sentences):
        path = f"/sentences/{i}"
        if sent.index != i:
            bad(E_BAD_INDEX, f"{path}/index",
                f"expected consecutive index {i}, found {sent.index}")
        if sent.speaker_id not in seen_speakers:
            bad(E_DANGLING_SPEAKER, f"{path}/speaker_id",
                f"speaker_id {sent.speaker_id!r} is not declared")
        # Sentence text follows the caption content rules but has no length cap.
        text_problem = _caption_problem(sent.text, 10**9)
        if text_problem:
            bad(E_BAD_CAPTION, f"{path}/text", text_problem)
        n = len(sent.text)

        for j, mark in enumerate(sent.marks):
            mpath = f"{path}/marks/{j}"
            if not 0 <= mark.position <= n:
                bad(E_BAD_MARK, f"{mpath}/position",
                    f"position {mark.position} outside 0..{n}")
            if mark.kind is MarkKind.INTERRUPTION:
                if mark.caption is not None:
                    bad(E_BAD_MARK, f"{mpath}/caption", "interruption marks carry no caption")
            elif mark.caption is None:
                bad(E_BAD_MARK, f"{mpath}/caption",
                    f"{mark.kind.value} marks require a caption")
            else:
                problem = _caption_problem(mark.caption, CAPTION_MAX_SENTENCE)
                if problem:
                    bad(E_BAD_CAPTION, f"{mpath}/caption", problem)

        for key, caption in sent.dims.items():
            kpath = f"{path}/dims/{key}"
            desc = _REGISTRY.find(key)
            if desc is None or desc.layer is not Layer.SENTENCE:
                bad(E_UNKNOWN_KEY, kpath, "not a sentence-layer dimension key")
                continue
            problem = _caption_problem(caption, desc.caption_max)
            if problem:
                bad(E_BAD_CAPTION, kpath, problem)

        spans_by_key: dict[str, list[tuple[int, int, int]]] = {}
        for j, tok in enumerate(sent.tokens):
            tpath = f"{path}/tokens/{j}"
            desc = _REGISTRY.find(tok.key)
            if desc is None or desc.layer is not Layer.TOKEN:
                bad(E_UNKNOWN_KEY, f"{tpath}/key", "not a token-layer dimension key")
            else:
                problem = _caption_problem(tok.caption, desc.caption_max)
                if problem:
                    bad(E_BAD_CAPTION, f"{tpath}/caption", problem)
            if not (0 <= tok.span_start < tok.span_end <= n):
                bad(E_BAD_SPAN, tpath,
                    f"span ({tok.span_start}, {tok.span_end}) invalid for text of length {n}")
            else:
                spans_by_key.setdefault(tok.key, []).append((tok.span_start, tok.span_end, j))
        for key, spans in spans_by_key.items():
            spans.sort()
            for (s1, e1, _), (s2, _, j2) in zip(spans, spans[1:]):
                if s2 < e1:
                    bad(E_OVERLAPPING_SPANS, f"{path}/tokens/{j2}",
                        f"span overlaps an earlier {key} span")

    return tuple(out)


def is_valid(doc: GstDocument) -> bool:
    return not validate(doc)
