"""Bit-exact canonical interchange format, plus the inline mark grammar.

The wire form is a JSON subset with one canonical encoding per document:
object keys sorted by Unicode scalar at every level, no insignificant
whitespace, strings escaping only `"`, `\\` and control characters
(`\\n` `\\r` `\\t` two-char forms, otherwise `\\u00xx` lowercase hex),
non-negative base-10 integers with no leading zeros, `true`/`false`
booleans, and exactly one trailing newline. Parsing accepts any
whitespace/key order/escape spelling within the subset; `canonicalize`
is the normalizer. Floats, negative numbers, `null`, duplicate keys and
lone surrogates are rejected.

File extension: `.gst`. Media identity: `application/x-gst+json; v=1`.

The module also implements the inline authoring grammar for rich-text
marks: `[[kind]]` / `[[kind|caption]]` groups inside sentence text, with
`\\[[` escaping a literal `[[` and `\\\\` a literal backslash.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping

from . import model
from .errors import GstError, InvalidDocumentError
from .model import GstDocument, Mark, MarkKind, Sentence, SpeakerProfile, TokenAnnotation

GST_EXTENSION = ".gst"

Value = dict | list | str | int | bool


class WireErrorCode(Enum):
    BAD_UTF8 = "BadUtf8"
    BAD_SYNTAX = "BadSyntax"
    BAD_VERSION = "BadVersion"
    SCHEMA_VIOLATION = "SchemaViolation"


class ParseError(GstError):
    """First-failure parse diagnostic with exact input position."""

    def __init__(self, code: WireErrorCode, message: str, *, byte_offset: int = 0,
                 line: int = 1, column: int = 1, schema_code: str | None = None):
        self.code = code
        self.message = message
        self.byte_offset = byte_offset
        self.line = line
        self.column = column
        self.schema_code = schema_code  # set iff code is SCHEMA_VIOLATION
        label = schema_code if schema_code else code.value
        super().__init__(f"{label} at {line}:{column} (byte {byte_offset}): {message}")


# ---------------------------------------------------------------------------
# Canonical encoding (generic values)

_ESCAPES = {0x22: '\\"', 0x5C: "\\\\", 0x0A: "\\n", 0x0D: "\\r", 0x09: "\\t"}


def _encode_str(s: str, out: list[str]) -> None:
    out.append('"')
    start = 0
    for i, ch in enumerate(s):
        cp = ord(ch)
        if cp == 0x22 or cp == 0x5C or cp < 0x20:
            out.append(s[start:i])
            out.append(_ESCAPES.get(cp, f"\\u{cp:04x}"))
            start = i + 1
    out.append(s[start:])
    out.append('"')


def _encode_value(v: Value, out: list[str]) -> None:
    if v is True:
        out.append("true")
    elif v is False:
        out.append("false")
    elif isinstance(v, str):
        _encode_str(v, out)
    elif isinstance(v, int):
        if v < 0:
            raise ValueError(f"negative integers are outside the wire grammar: {v}")
        out.append(str(v))
    elif isinstance(v, Mapping):
        out.append("{")
        for i, key in enumerate(sorted(v)):
            if i:
                out.append(",")
            _encode_str(key, out)
            out.append(":")
            _encode_value(v[key], out)
        out.append("}")
    elif isinstance(v, (list, tuple)):
        out.append("[")
        for i, item in enumerate(v):
            if i:
                out.append(",")
            _encode_value(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot encode {type(v).__name__} on the wire")


def canonical_bytes(value: Value) -> bytes:
    """Canonical UTF-8 encoding of a value, with the single trailing newline."""
    out: list[str] = []
    _encode_value(value, out)
    out.append("\n")
    return "".join(out).encode("utf-8")


# ---------------------------------------------------------------------------
# Strict decoding (generic values)

_WS = " \t\n\r"
_HEX = "0123456789abcdefABCDEF"
_SIMPLE_UNESCAPES = {'"': '"', "\\": "\\", "/": "/", "b": "\b", "f": "\f",
                     "n": "\n", "r": "\r", "t": "\t"}


class _Decoder:
    def __init__(self, text: str):
        self.s = text
        self.i = 0
        self.n = len(text)

    def fail(self, message: str, at: int | None = None) -> "ParseError":
        i = self.i if at is None else at
        prefix = self.s[:i]
        byte_offset = len(prefix.encode("utf-8"))
        line = prefix.count("\n") + 1
        column = i - (prefix.rfind("\n") + 1) + 1
        return ParseError(WireErrorCode.BAD_SYNTAX, message,
                          byte_offset=byte_offset, line=line, column=column)

    def skip_ws(self) -> None:
        while self.i < self.n and self.s[self.i] in _WS:
            self.i += 1

    def decode(self) -> Value:
        self.skip_ws()
        value = self.value()
        self.skip_ws()
        if self.i != self.n:
            raise self.fail("trailing data after document")
        return value

    def value(self) -> Value:
        if self.i >= self.n:
            raise self.fail("expected a value")
        c = self.s[self.i]
        if c == "{":
            return self.object()
        if c == "[":
            return self.array()
        if c == '"':
            return self.string()
        if c in "0123456789":
            return self.integer()
        if self.s.startswith("true", self.i):
            self.i += 4
            return True
        if self.s.startswith("false", self.i):
            self.i += 5
            return False
        if c == "-":
            raise self.fail("negative numbers are outside the wire grammar")
        if self.s.startswith("null", self.i):
            raise self.fail("null is outside the wire grammar")
        raise self.fail(f"unexpected character {c!r}")

    def object(self) -> dict:
        obj: dict[str, Value] = {}
        self.i += 1
        self.skip_ws()
        if self.i < self.n and self.s[self.i] == "}":
            self.i += 1
            return obj
        while True:
            self.skip_ws()
            if self.i >= self.n or self.s[self.i] != '"':
                raise self.fail("expected a string key")
            key_at = self.i
            key = self.string()
            if key in obj:
                raise self.fail(f"duplicate key {key!r}", at=key_at)
            self.skip_ws()
            if self.i >= self.n or self.s[self.i] != ":":
                raise self.fail("expected ':' after key")
            self.i += 1
            self.skip_ws()
            obj[key] = self.value()
            self.skip_ws()
            if self.i >= self.n:
                raise self.fail("unterminated object")
            c = self.s[self.i]
            self.i += 1
            if c == "}":
                return obj
            if c != ",":
                raise self.fail("expected ',' or '}' in object", at=self.i - 1)

    def array(self) -> list:
        arr: list[Value] = []
        self.i += 1
        self.skip_ws()
        if self.i < self.n and self.s[self.i] == "]":
            self.i += 1
            return arr
        while True:
            self.skip_ws()
            arr.append(self.value())
            self.skip_ws()
            if self.i >= self.n:
                raise self.fail("unterminated array")
            c = self.s[self.i]
            self.i += 1
            if c == "]":
                return arr
            if c != ",":
                raise self.fail("expected ',' or ']' in array", at=self.i - 1)

    def integer(self) -> int:
        start = self.i
        while self.i < self.n and self.s[self.i].isdigit():
            self.i += 1
        text = self.s[start:self.i]
        if len(text) > 1 and text[0] == "0":
            raise self.fail("leading zeros are outside the wire grammar", at=start)
        if self.i < self.n and self.s[self.i] in ".eE":
            raise self.fail("non-integer numbers are outside the wire grammar")
        return int(text)

    def string(self) -> str:
        out: list[str] = []
        self.i += 1
        while True:
            if self.i >= self.n:
                raise self.fail("unterminated string")
            c = self.s[self.i]
            if c == '"':
                self.i += 1
                return "".join(out)
            if c == "\\":
                out.append(self._escape())
                continue
            if ord(c) < 0x20:
                raise self.fail("raw control character in string")
            out.append(c)
            self.i += 1

    def _escape(self) -> str:
        at = self.i
        self.i += 1
        if self.i >= self.n:
            raise self.fail("unterminated escape", at=at)
        c = self.s[self.i]
        self.i += 1
        if c in _SIMPLE_UNESCAPES:
            return _SIMPLE_UNESCAPES[c]
        if c != "u":
            raise self.fail(f"invalid escape '\\{c}'", at=at)
        unit = self._hex4(at)
        if 0xDC00 <= unit <= 0xDFFF:
            raise self.fail("lone low surrogate", at=at)
        if 0xD800 <= unit <= 0xDBFF:
            if not self.s.startswith("\\u", self.i):
                raise self.fail("lone high surrogate", at=at)
            self.i += 2
            low = self._hex4(at)
            if not 0xDC00 <= low <= 0xDFFF:
                raise self.fail("invalid surrogate pair", at=at)
            return chr(0x10000 + ((unit - 0xD800) << 10) + (low - 0xDC00))
        return chr(unit)

    def _hex4(self, at: int) -> int:
        digits = self.s[self.i:self.i + 4]
        if len(digits) < 4 or any(d not in _HEX for d in digits):
            raise self.fail("invalid \\u escape", at=at)
        self.i += 4
        return int(digits, 16)


def decode_value(data: bytes) -> Value:
    """Decode one wire-grammar value; raises ParseError at the first failure."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        prefix = data[:e.start].decode("utf-8", errors="replace")
        raise ParseError(
            WireErrorCode.BAD_UTF8, "invalid UTF-8",
            byte_offset=e.start, line=prefix.count("\n") + 1,
            column=len(prefix) - (prefix.rfind("\n") + 1) + 1,
        ) from None
    return _Decoder(text).decode()


# ---------------------------------------------------------------------------
# Shape helpers (decoded value -> typed model), shared by the other modules

def shape_error(message: str) -> ParseError:
    return ParseError(WireErrorCode.BAD_SYNTAX, message)


def as_obj(v: Value, path: str, required: tuple[str, ...],
           optional: tuple[str, ...] = ()) -> dict:
    if not isinstance(v, dict):
        raise shape_error(f"{path}: expected an object")
    for key in required:
        if key not in v:
            raise shape_error(f"{path}: missing field {key!r}")
    allowed = set(required) | set(optional)
    for key in v:
        if key not in allowed:
            raise shape_error(f"{path}: unknown field {key!r}")
    return v


def as_str(v: Value, path: str) -> str:
    if not isinstance(v, str):
        raise shape_error(f"{path}: expected a string")
    return v


def as_int(v: Value, path: str) -> int:
    if not isinstance(v, int) or isinstance(v, bool):
        raise shape_error(f"{path}: expected an integer")
    return v


def as_bool(v: Value, path: str) -> bool:
    if not isinstance(v, bool):
        raise shape_error(f"{path}: expected a boolean")
    return v


def as_list(v: Value, path: str) -> list:
    if not isinstance(v, list):
        raise shape_error(f"{path}: expected an array")
    return v


def as_str_map(v: Value, path: str) -> dict[str, str]:
    if not isinstance(v, dict):
        raise shape_error(f"{path}: expected an object")
    return {k: as_str(val, f"{path}/{k}") for k, val in v.items()}


# ---------------------------------------------------------------------------
# Document <-> wire

def document_to_value(doc: GstDocument) -> dict:
    return {
        "doc_id": doc.doc_id,
        "global_dims": dict(doc.global_dims),
        "sentences": [sentence_to_value(s) for s in doc.sentences],
        "speakers": [{"dims": dict(s.dims), "speaker_id": s.speaker_id} for s in doc.speakers],
        "version": doc.version,
    }


def sentence_to_value(s: Sentence) -> dict:
    return {
        "dims": dict(s.dims),
        "index": s.index,
        "marks": [mark_to_value(m) for m in s.marks],
        "speaker_id": s.speaker_id,
        "text": s.text,
        "tokens": [
            {"caption": t.caption, "key": t.key, "span_end": t.span_end,
             "span_start": t.span_start}
            for t in s.tokens
        ],
    }


def mark_to_value(m: Mark) -> dict:
    value: dict[str, Value] = {"kind": m.kind.value, "position": m.position}
    if m.caption is not None:
        value["caption"] = m.caption
    return value


def value_to_document(v: Value) -> GstDocument:
    obj = as_obj(v, "/", ("doc_id", "global_dims", "sentences", "speakers", "version"))
    version = as_int(obj["version"], "/version")
    if version != model.DOCUMENT_VERSION:
        raise ParseError(WireErrorCode.BAD_VERSION,
                         f"/version: unsupported version {version}")
    speakers = tuple(
        value_to_speaker(sv, f"/speakers/{i}")
        for i, sv in enumerate(as_list(obj["speakers"], "/speakers"))
    )
    sentences = tuple(
        value_to_sentence(sv, f"/sentences/{i}")
        for i, sv in enumerate(as_list(obj["sentences"], "/sentences"))
    )
    return GstDocument(
        doc_id=as_str(obj["doc_id"], "/doc_id"),
        global_dims=as_str_map(obj["global_dims"], "/global_dims"),
        speakers=speakers,
        sentences=sentences,
        version=version,
    )


def value_to_speaker(v: Value, path: str) -> SpeakerProfile:
    obj = as_obj(v, path, ("dims", "speaker_id"))
    return SpeakerProfile(
        speaker_id=as_str(obj["speaker_id"], f"{path}/speaker_id"),
        dims=as_str_map(obj["dims"], f"{path}/dims"),
    )


def value_to_sentence(v: Value, path: str) -> Sentence:
    obj = as_obj(v, path, ("dims", "index", "marks", "speaker_id", "text", "tokens"))
    marks = tuple(
        value_to_mark(mv, f"{path}/marks/{j}")
        for j, mv in enumerate(as_list(obj["marks"], f"{path}/marks"))
    )
    tokens = []
    for j, tv in enumerate(as_list(obj["tokens"], f"{path}/tokens")):
        tpath = f"{path}/tokens/{j}"
        tobj = as_obj(tv, tpath, ("caption", "key", "span_end", "span_start"))
        tokens.append(TokenAnnotation(
            span_start=as_int(tobj["span_start"], f"{tpath}/span_start"),
            span_end=as_int(tobj["span_end"], f"{tpath}/span_end"),
            key=as_str(tobj["key"], f"{tpath}/key"),
            caption=as_str(tobj["caption"], f"{tpath}/caption"),
        ))
    return Sentence(
        index=as_int(obj["index"], f"{path}/index"),
        speaker_id=as_str(obj["speaker_id"], f"{path}/speaker_id"),
        text=as_str(obj["text"], f"{path}/text"),
        marks=marks,
        dims=as_str_map(obj["dims"], f"{path}/dims"),
        tokens=tuple(tokens),
    )


def value_to_mark(v: Value, path: str) -> Mark:
    obj = as_obj(v, path, ("kind", "position"), optional=("caption",))
    kind_str = as_str(obj["kind"], f"{path}/kind")
    try:
        kind = MarkKind(kind_str)
    except ValueError:
        raise shape_error(f"{path}/kind: unknown mark kind {kind_str!r}") from None
    caption = as_str(obj["caption"], f"{path}/caption") if "caption" in obj else None
    return Mark(position=as_int(obj["position"], f"{path}/position"),
                kind=kind, caption=caption)


# ---------------------------------------------------------------------------
# Public document operations

def serialize_canonical(doc: GstDocument) -> bytes:
    """Canonical bytes of a valid document; injective over valid documents."""
    report = model.validate(doc)
    if report:
        raise InvalidDocumentError(report)
    return canonical_bytes(document_to_value(doc))


def decode_document(data: bytes) -> GstDocument:
    """Structural decode only; the result may still fail `validate`."""
    return value_to_document(decode_value(data))


def parse(data: bytes) -> GstDocument:
    """Decode and fully validate; the returned document is always valid."""
    doc = decode_document(data)
    report = model.validate(doc)
    if report:
        first = report[0]
        raise ParseError(WireErrorCode.SCHEMA_VIOLATION,
                         f"{first.path}: {first.message}", schema_code=first.code)
    return doc


def canonicalize(data: bytes) -> bytes:
    """Normalize any parseable bytes to the unique canonical form."""
    return serialize_canonical(parse(data))


# ---------------------------------------------------------------------------
# Inline mark grammar

class MarkRenderError(GstError):
    """A mark cannot be rendered against the given plain text."""


_KINDS_BY_NAME = {k.value: k for k in MarkKind}


def parse_marked_text(authored: str) -> tuple[str, tuple[Mark, ...]]:
    """Strip `[[...]]` groups out of authored text.

    Each group becomes a Mark at the Unicode-scalar position it occupied in
    the resulting plain text. `\\[[` unescapes to a literal `[[`, `\\\\` to a
    literal backslash; any other backslash is literal. In a run of three or
    more `[`, only the final two open a group, so plain brackets can sit
    flush against a mark.
    """

    def fail(message: str, at: int) -> ParseError:
        prefix = authored[:at]
        return ParseError(
            WireErrorCode.BAD_SYNTAX, message,
            byte_offset=len(prefix.encode("utf-8")),
            line=prefix.count("\n") + 1,
            column=at - (prefix.rfind("\n") + 1) + 1,
        )

    plain: list[str] = []
    plain_len = 0
    marks: list[Mark] = []
    i = 0
    n = len(authored)
    while i < n:
        c = authored[i]
        if c == "\\":
            if authored.startswith("\\[[", i):
                plain.append("[[")
                plain_len += 2
                i += 3
            elif authored.startswith("\\\\", i):
                plain.append("\\")
                plain_len += 1
                i += 2
            else:
                plain.append("\\")
                plain_len += 1
                i += 1
        elif c == "[":
            run = 1
            while i + run < n and authored[i + run] == "[":
                run += 1
            if run < 2:
                plain.append("[")
                plain_len += 1
                i += 1
                continue
            literal = run - 2
            if literal:
                plain.append("[" * literal)
                plain_len += literal
            opener = i + literal
            end = authored.find("]]", opener + 2)
            if end < 0:
                raise fail("unterminated mark group", opener)
            body = authored[opener + 2:end]
            kind_str, bar, caption = body.partition("|")
            kind = _KINDS_BY_NAME.get(kind_str)
            if kind is None:
                raise fail(f"unknown mark kind {kind_str!r}", opener)
            if kind is MarkKind.INTERRUPTION:
                if bar:
                    raise fail("interruption marks carry no caption", opener)
                marks.append(Mark(position=plain_len, kind=kind))
            else:
                if not bar or not caption:
                    raise fail(f"{kind_str} marks require a caption", opener)
                marks.append(Mark(position=plain_len, kind=kind, caption=caption))
            i = end + 2
        else:
            plain.append(c)
            plain_len += 1
            i += 1
    return "".join(plain), tuple(marks)


def _escape_plain(segment: str) -> str:
    return segment.replace("\\", "\\\\").replace("[[", "\\[[")


def render_marked_text(plain: str, marks: tuple[Mark, ...] | list[Mark]) -> str:
    """Inverse of parse_marked_text: re-inline marks into authored text.

    Requires marks sorted by position (ties keep list order), positions
    within 0..len(plain), and caption arity per kind; `parse_marked_text`
    output always qualifies.
    """
    n = len(plain)
    prev = 0
    parts: list[str] = []
    for m in marks:
        if not 0 <= m.position <= n:
            raise MarkRenderError(f"mark position {m.position} outside 0..{n}")
        if m.position < prev:
            raise MarkRenderError("marks must be sorted by position")
        if m.kind is MarkKind.INTERRUPTION:
            if m.caption is not None:
                raise MarkRenderError("interruption marks carry no caption")
            group = f"[[{m.kind.value}]]"
        else:
            if not m.caption:
                raise MarkRenderError(f"{m.kind.value} marks require a caption")
            if "]]" in m.caption:
                raise MarkRenderError("mark caption may not contain ']]'")
            group = f"[[{m.kind.value}|{m.caption}]]"
        parts.append(_escape_plain(plain[prev:m.position]))
        parts.append(group)
        prev = m.position
    parts.append(_escape_plain(plain[prev:]))
    return "".join(parts)
