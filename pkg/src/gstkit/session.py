"""Agent session layer: deterministic plan-then-render turns over a
bounded emotion-and-context state.

A session pins the scene-level Instruct dims and speaker roster at open
time; every turn then runs a two-stage pipeline: a rule-based planner
fills all six sentence-layer Think dims (caller overrides win verbatim),
the planned turn is merged into a full document and handed to a render
backend, and the context state is compressed schema-wise rather than by
appending history. The serialized context never exceeds CONTEXT_BUDGET
bytes no matter how many turns run.

The planner here is a deterministic stub standing in for a reasoning
model; a real planner can replace it behind the same operation shape.
Only the mock render backend ships: it emits one textual line per
sentence with a fixed duration rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping, Sequence

from . import model, streams, wire
from .errors import GstError, InvalidDocumentError
from .model import GstDocument, Mark, Sentence, SpeakerProfile, Stream
from .streams import ThinkSentence, ThinkView

CONTEXT_BUDGET = 4096  # bytes of serialized context, hard cap
MAX_SPEAKERS = 8

ARC_MAX = 280
BASELINE_MAX = 280
SCENE_MAX = 280
SPEAKER_TONE_MAX = 140

TONE_TAG_LEN = 24
TONE_TAG_DEFAULT = "unspecified"

BASE_DURATION_MS = 300
PER_TOKEN_DURATION_MS = 60


class SessionError(GstError):
    pass


class MissingInstructError(SessionError):
    pass


class TooManySpeakersError(SessionError):
    pass


class InvalidPhaseError(SessionError):
    pass


class BadOverrideKeyError(SessionError):
    pass


class UnknownSpeakerError(SessionError):
    pass


class BackendFailureError(SessionError):
    pass


class Phase(Enum):
    OPEN = "open"
    PLANNING = "planning"
    RENDERED = "rendered"
    CLOSED = "closed"


@dataclass(frozen=True)
class SessionContext:
    emotional_baseline: str = ""
    arc_summary: str = ""
    scene_state: str = ""
    speaker_last_tone: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class SessionState:
    session_id: str
    global_instruct: Mapping[str, str]  # the four scene-level Instruct dims
    speakers: tuple[SpeakerProfile, ...]
    turn_count: int = 0
    context: SessionContext = field(default_factory=SessionContext)
    phase: Phase = Phase.OPEN


@dataclass(frozen=True)
class TurnSentence:
    speaker_id: str
    text: str  # authored form; may carry inline [[...]] marks


@dataclass(frozen=True)
class TurnRequest:
    sentences: tuple[TurnSentence, ...]
    think_overrides: ThinkView | None = None


class Provenance(Enum):
    OVERRIDE = "override"
    PLANNED = "planned"


@dataclass(frozen=True)
class ThinkPlan:
    view: ThinkView
    provenance: Mapping[tuple[str, str], Provenance]  # (scope, key) -> origin
    sentence_speakers: tuple[str, ...]  # speaker per sentence index, for compression


@dataclass(frozen=True)
class RenderRequest:
    document: GstDocument
    context_snapshot: SessionContext


@dataclass(frozen=True)
class AcousticLine:
    index: int
    speaker_id: str
    duration_ms: int
    tone_tag: str
    text: str


@dataclass(frozen=True)
class AcousticPlan:
    lines: tuple[AcousticLine, ...]


RenderBackend = Callable[[RenderRequest], AcousticPlan]


# ---------------------------------------------------------------------------
# Context serialization and the byte bound

def context_to_value(ctx: SessionContext) -> dict:
    return {
        "arc_summary": ctx.arc_summary,
        "emotional_baseline": ctx.emotional_baseline,
        "scene_state": ctx.scene_state,
        "speaker_last_tone": dict(ctx.speaker_last_tone),
    }


def serialize_context(ctx: SessionContext) -> bytes:
    return wire.canonical_bytes(context_to_value(ctx))


def _tail(s: str, max_scalars: int) -> str:
    return s[-max_scalars:] if len(s) > max_scalars else s


def _fit_context(ctx: SessionContext) -> SessionContext:
    """Enforce the byte budget. Scalar caps alone cannot bound bytes (a
    scalar is up to 4 UTF-8 bytes, and quotes/backslashes escape to 2), so
    oversized contexts shed tail-truncated scalars field by field:
    arc_summary first, then scene_state, speaker tones, and finally the
    baseline. Deterministic, and a no-op for typical content."""
    if len(serialize_context(ctx)) <= CONTEXT_BUDGET:
        return ctx
    arc, scene = ctx.arc_summary, ctx.scene_state
    tones = dict(ctx.speaker_last_tone)
    baseline = ctx.emotional_baseline

    def size() -> int:
        return len(serialize_context(SessionContext(
            emotional_baseline=baseline, arc_summary=arc,
            scene_state=scene, speaker_last_tone=tones)))

    while size() > CONTEXT_BUDGET and arc:
        arc = arc[1:]
    while size() > CONTEXT_BUDGET and scene:
        scene = scene[1:]
    for spk in sorted(tones):
        while size() > CONTEXT_BUDGET and tones[spk]:
            tones[spk] = tones[spk][1:]
    while size() > CONTEXT_BUDGET and baseline:
        baseline = baseline[1:]
    return SessionContext(emotional_baseline=baseline, arc_summary=arc,
                          scene_state=scene, speaker_last_tone=tones)


# ---------------------------------------------------------------------------
# Session lifecycle

def open_session(global_instruct: Mapping[str, str],
                 speakers: Sequence[SpeakerProfile],
                 session_id: str = "session0") -> SessionState:
    """Open a session with the scene's hard constraints pinned for its life."""
    for key in model.INSTRUCT_DOC_KEYS:
        if key not in global_instruct or not global_instruct[key].strip():
            raise MissingInstructError(f"Instruct dimension {key!r} is required")
    for key in global_instruct:
        desc = model.registry().find(key)
        if desc is None or desc.stream is not Stream.INSTRUCT:
            raise BadOverrideKeyError(
                f"{key!r} is not a scene-level Instruct dimension")
    if not 1 <= len(speakers) <= MAX_SPEAKERS:
        raise TooManySpeakersError(
            f"sessions take 1..{MAX_SPEAKERS} speakers, got {len(speakers)}")
    seen = set()
    for spk in speakers:
        if spk.speaker_id in seen:
            raise TooManySpeakersError(f"duplicate speaker {spk.speaker_id!r}")
        seen.add(spk.speaker_id)
        for key in model.SPEAKER_KEYS:
            if key not in spk.dims or not spk.dims[key].strip():
                raise MissingInstructError(
                    f"speaker {spk.speaker_id!r} is missing {key!r}")
    context = SessionContext(
        emotional_baseline=global_instruct["global.style_tags"][:BASELINE_MAX])
    return SessionState(session_id=session_id,
                        global_instruct=dict(global_instruct),
                        speakers=tuple(speakers),
                        context=context)


def close_session(state: SessionState) -> SessionState:
    if state.phase is Phase.CLOSED:
        raise InvalidPhaseError("session already closed")
    return replace(state, phase=Phase.CLOSED)


# ---------------------------------------------------------------------------
# Planner

_EMPHASIS_SUFFIX = ", with emphasis"
_QUESTION_INTONATION = "rising, incredulous question"
_DEFAULTS = {
    "sentence.intonation": "level",
    "sentence.pace": "moderate",
    "sentence.volume": "conversational",
    "sentence.intent": "stating",
}


def _first_clause(text: str) -> str:
    for i, ch in enumerate(text):
        if ch in ",;":
            return text[:i].strip()
    return text.strip()


def _has_shout_word(text: str) -> bool:
    for token in text.split():
        letters = [c for c in token if c.isalpha()]
        if len(letters) >= 2 and all(c.isupper() for c in letters):
            return True
    return False


def _rule_dims(text: str, ctx: SessionContext) -> dict[str, str]:
    dims = dict(_DEFAULTS)
    if "?" in text:
        dims["sentence.intonation"] = _QUESTION_INTONATION
        dims["sentence.intent"] = "asking"
    if "!" in text:
        dims["sentence.volume"] = "raised"
    stripped = text.rstrip()
    if stripped.endswith("…") or stripped.endswith("..."):
        dims["sentence.pace"] = "slow, trailing"
    tone = _first_clause(ctx.emotional_baseline) or "neutral"
    if _has_shout_word(text):
        tone += _EMPHASIS_SUFFIX
    dims["sentence.tone"] = tone[:model.CAPTION_MAX_SENTENCE]
    dims["sentence.background_state"] = ctx.scene_state or "as established"
    return dims


def _check_overrides(state: SessionState, req: TurnRequest) -> ThinkView:
    overrides = req.think_overrides or ThinkView.empty("")
    reg = model.registry()
    for key in overrides.global_dims:
        desc = reg.find(key)
        if desc is None or desc.stream is not Stream.THINK or \
                desc.cardinality is not model.Cardinality.PER_DOCUMENT:
            raise BadOverrideKeyError(f"{key!r} is not a global Think dimension")
    n = len(req.sentences)
    for ts in overrides.sentences:
        if not 0 <= ts.index < n:
            raise BadOverrideKeyError(
                f"override sentence index {ts.index} outside this turn's 0..{n - 1}")
        for key in ts.dims:
            desc = reg.find(key)
            if desc is None or desc.layer is not model.Layer.SENTENCE:
                raise BadOverrideKeyError(f"{key!r} is not a sentence Think dimension")
        for tok in ts.tokens:
            desc = reg.find(tok.key)
            if desc is None or desc.layer is not model.Layer.TOKEN:
                raise BadOverrideKeyError(f"{tok.key!r} is not a token Think dimension")
    return overrides


def plan_think(state: SessionState, req: TurnRequest) -> ThinkPlan:
    """Fill every sentence-layer Think dim for the turn.

    Overrides are kept verbatim; the rule table fills the rest from the
    text and the compressed context. Pure in (state, req).
    """
    if state.phase not in (Phase.OPEN, Phase.RENDERED):
        raise InvalidPhaseError(f"cannot plan in phase {state.phase.value}")
    if not req.sentences:
        raise SessionError("a turn needs at least one sentence")
    declared = {s.speaker_id for s in state.speakers}
    for ts in req.sentences:
        if ts.speaker_id not in declared:
            raise UnknownSpeakerError(f"speaker {ts.speaker_id!r} not in this session")
    overrides = _check_overrides(state, req)
    override_sent = {ts.index: ts for ts in overrides.sentences}

    provenance: dict[tuple[str, str], Provenance] = {}
    for key in overrides.global_dims:
        provenance[("g", key)] = Provenance.OVERRIDE

    plan_sentences = []
    for i, ts in enumerate(req.sentences):
        plain, _marks = wire.parse_marked_text(ts.text)
        ruled = _rule_dims(plain, state.context)
        pinned = override_sent.get(i)
        dims: dict[str, str] = {}
        for key in model.SENTENCE_KEYS:
            scope = f"s{i}"
            if pinned is not None and key in pinned.dims:
                dims[key] = pinned.dims[key]
                provenance[(scope, key)] = Provenance.OVERRIDE
            else:
                dims[key] = ruled[key]
                provenance[(scope, key)] = Provenance.PLANNED
        tokens = pinned.tokens if pinned is not None else ()
        for j, tok in enumerate(tokens):
            provenance[(f"t{i}.{j}", tok.key)] = Provenance.OVERRIDE
        plan_sentences.append(ThinkSentence(index=i, dims=dims, tokens=tokens))

    view = ThinkView(doc_id=f"{state.session_id}.t{state.turn_count + 1:04d}",
                     global_dims=dict(overrides.global_dims),
                     sentences=tuple(plan_sentences))
    return ThinkPlan(view=view, provenance=provenance,
                     sentence_speakers=tuple(ts.speaker_id for ts in req.sentences))


# ---------------------------------------------------------------------------
# Render

def render_mock(req: RenderRequest) -> AcousticPlan:
    """Deterministic text-only stand-in for a synthesis engine."""
    report = model.validate(req.document)
    if report:
        raise InvalidDocumentError(report)
    lines = []
    for sent in req.document.sentences:
        tone = sent.dims.get("sentence.tone")
        lines.append(AcousticLine(
            index=sent.index,
            speaker_id=sent.speaker_id,
            duration_ms=BASE_DURATION_MS + PER_TOKEN_DURATION_MS * len(sent.text.split()),
            tone_tag=tone[:TONE_TAG_LEN] if tone else TONE_TAG_DEFAULT,
            text=sent.text,
        ))
    return AcousticPlan(lines=tuple(lines))


def _build_turn_document(state: SessionState, req: TurnRequest,
                         plan: ThinkPlan) -> GstDocument:
    think_by_index = {ts.index: ts for ts in plan.view.sentences}
    sentences = []
    for i, ts in enumerate(req.sentences):
        plain, marks = wire.parse_marked_text(ts.text)
        think = think_by_index[i]
        sentences.append(Sentence(index=i, speaker_id=ts.speaker_id, text=plain,
                                  marks=marks, dims=dict(think.dims),
                                  tokens=think.tokens))
    global_dims = dict(state.global_instruct)
    global_dims.update(plan.view.global_dims)
    doc = GstDocument(doc_id=plan.view.doc_id, global_dims=global_dims,
                      speakers=state.speakers, sentences=tuple(sentences))
    report = model.validate(doc)
    if report:
        raise InvalidDocumentError(report)
    return doc


def compress_context(state: SessionState, plan: ThinkPlan) -> SessionState:
    """Schema-guided compression: fold the turn's plan into the bounded
    context instead of appending history. The baseline never changes;
    speakers silent this turn keep their previous last-tone entry."""
    if not plan.view.sentences:
        raise SessionError("plan covers no sentences")
    ctx = state.context
    last = plan.view.sentences[-1]
    last_tone = last.dims.get("sentence.tone", "")
    if ctx.arc_summary and last_tone:
        arc = f"{ctx.arc_summary}; {last_tone}"
    else:
        arc = last_tone or ctx.arc_summary
    tones = dict(ctx.speaker_last_tone)
    for ts in plan.view.sentences:
        tone = ts.dims.get("sentence.tone")
        if tone:
            tones[plan.sentence_speakers[ts.index]] = tone[:SPEAKER_TONE_MAX]
    scene = last.dims.get("sentence.background_state") or ctx.scene_state
    new_ctx = SessionContext(
        emotional_baseline=ctx.emotional_baseline,
        arc_summary=_tail(arc, ARC_MAX),
        scene_state=_tail(scene, SCENE_MAX),
        speaker_last_tone=tones,
    )
    return replace(state, context=_fit_context(new_ctx))


def submit_turn(state: SessionState, req: TurnRequest,
                backend: RenderBackend = render_mock
                ) -> tuple[ThinkPlan, RenderRequest, AcousticPlan, SessionState]:
    """One full turn: plan, merge, render, compress. Returns the new state."""
    plan = plan_think(state, req)
    document = _build_turn_document(state, req, plan)
    render_request = RenderRequest(document=document, context_snapshot=state.context)
    try:
        acoustic = backend(render_request)
    except GstError:
        raise
    except Exception as e:  # backend is third-party code
        raise BackendFailureError(f"render backend failed: {e}") from e
    new_state = compress_context(state, plan)
    return plan, render_request, acoustic, replace(
        new_state, turn_count=state.turn_count + 1, phase=Phase.RENDERED)


# ---------------------------------------------------------------------------
# Context growth probe

_PROBE_INSTRUCT = {
    "global.show_format": "two-host discussion show, scripted turns",
    "global.style_tags": "steady, observational, dry wit",
    "global.topic": "long-haul context accounting",
    "global.acoustic_environment_rating": "treated room, rating 4 of 5",
}
_PROBE_SPEAKERS = (
    SpeakerProfile("spk0", {"speaker.gender": "unspecified",
                            "speaker.age": "adult",
                            "speaker.vocal_personality": "measured, warm"}),
    SpeakerProfile("spk1", {"speaker.gender": "unspecified",
                            "speaker.age": "adult",
                            "speaker.vocal_personality": "quick, clipped"}),
)

_PROBE_FILLER = ("the meter keeps running while the state stays flat and every "
                 "turn restates just enough of the scene to stay coherent ")


def _probe_turn(turn: int) -> TurnRequest:
    # Two sentences, padded so each turn's document comfortably exceeds 1 KiB.
    body = (_PROBE_FILLER * 6).strip()
    first = f"Turn {turn}: {body}."
    second_end = "?" if turn % 3 == 0 else ("!" if turn % 3 == 1 else "...")
    second = f"And the tally at step {turn} still holds{second_end}"
    overrides = None
    if turn % 7 == 0:
        overrides = ThinkView(
            doc_id="", sentences=(ThinkSentence(
                index=0, dims={"sentence.tone": f"wry, audit-minded at step {turn}"}),))
    return TurnRequest(
        sentences=(TurnSentence("spk0", first), TurnSentence("spk1", second)),
        think_overrides=overrides,
    )


def context_growth_probe(turns: int) -> dict[str, int]:
    """Scripted session: max bounded-context bytes vs naive history bytes.

    The naive baseline is the transcript a history-concatenating system
    would carry: the summed canonical bytes of every turn's document.
    """
    if turns < 1:
        raise ValueError("turns must be >= 1")
    state = open_session(_PROBE_INSTRUCT, _PROBE_SPEAKERS, session_id="probe")
    bounded_max = len(serialize_context(state.context))
    raw_history = 0
    for turn in range(1, turns + 1):
        _plan, render_request, _acoustic, state = submit_turn(state, _probe_turn(turn))
        raw_history += len(wire.serialize_canonical(render_request.document))
        bounded_max = max(bounded_max, len(serialize_context(state.context)))
    return {"bounded_bytes_max": bounded_max, "raw_history_bytes": raw_history}


# ---------------------------------------------------------------------------
# Script files and plan text

def acoustic_plan_text(plan: AcousticPlan) -> str:
    return "".join(
        f"{line.index}|{line.speaker_id}|{line.duration_ms}|{line.tone_tag}|{line.text}\n"
        for line in plan.lines
    )


DEFAULT_SCRIPT_PROFILE = {
    "global_dims": _PROBE_INSTRUCT,
    "speakers": _PROBE_SPEAKERS,
}


def _value_to_turn(v: wire.Value, path: str) -> TurnRequest:
    obj = wire.as_obj(v, path, ("sentences",), optional=("think_overrides",))
    sentences = []
    for i, sv in enumerate(wire.as_list(obj["sentences"], f"{path}/sentences")):
        spath = f"{path}/sentences/{i}"
        sobj = wire.as_obj(sv, spath, ("speaker_id", "text"))
        sentences.append(TurnSentence(
            speaker_id=wire.as_str(sobj["speaker_id"], f"{spath}/speaker_id"),
            text=wire.as_str(sobj["text"], f"{spath}/text"),
        ))
    overrides = None
    if "think_overrides" in obj:
        ov = wire.as_obj(obj["think_overrides"], f"{path}/think_overrides",
                         (), optional=("global_dims", "sentences"))
        o_globals = wire.as_str_map(ov.get("global_dims", {}),
                                    f"{path}/think_overrides/global_dims")
        o_sentences = []
        for i, sv in enumerate(wire.as_list(ov.get("sentences", []),
                                            f"{path}/think_overrides/sentences")):
            spath = f"{path}/think_overrides/sentences/{i}"
            sobj = wire.as_obj(sv, spath, ("index",), optional=("dims", "tokens"))
            tokens = []
            for j, tv in enumerate(wire.as_list(sobj.get("tokens", []), f"{spath}/tokens")):
                tpath = f"{spath}/tokens/{j}"
                tobj = wire.as_obj(tv, tpath, ("caption", "key", "span_end", "span_start"))
                tokens.append(model.TokenAnnotation(
                    span_start=wire.as_int(tobj["span_start"], f"{tpath}/span_start"),
                    span_end=wire.as_int(tobj["span_end"], f"{tpath}/span_end"),
                    key=wire.as_str(tobj["key"], f"{tpath}/key"),
                    caption=wire.as_str(tobj["caption"], f"{tpath}/caption"),
                ))
            o_sentences.append(ThinkSentence(
                index=wire.as_int(sobj["index"], f"{spath}/index"),
                dims=wire.as_str_map(sobj.get("dims", {}), f"{spath}/dims"),
                tokens=tuple(tokens),
            ))
        overrides = ThinkView(doc_id="", global_dims=o_globals,
                              sentences=tuple(o_sentences))
    return TurnRequest(sentences=tuple(sentences), think_overrides=overrides)


def parse_script(data: bytes) -> tuple[Mapping[str, str], tuple[SpeakerProfile, ...],
                                       tuple[TurnRequest, ...]]:
    """Read a session script: either a bare list of turn requests (run
    against the built-in default profile) or an object with a "session"
    header and a "turns" list."""
    v = wire.decode_value(data)
    if isinstance(v, list):
        turns = tuple(_value_to_turn(tv, f"/{i}") for i, tv in enumerate(v))
        return dict(_PROBE_INSTRUCT), _PROBE_SPEAKERS, turns
    obj = wire.as_obj(v, "/", ("session", "turns"))
    sobj = wire.as_obj(obj["session"], "/session", ("global_dims", "speakers"))
    global_dims = wire.as_str_map(sobj["global_dims"], "/session/global_dims")
    speakers = tuple(
        wire.value_to_speaker(pv, f"/session/speakers/{i}")
        for i, pv in enumerate(wire.as_list(sobj["speakers"], "/session/speakers"))
    )
    turns = tuple(
        _value_to_turn(tv, f"/turns/{i}")
        for i, tv in enumerate(wire.as_list(obj["turns"], "/turns"))
    )
    return global_dims, speakers, turns
