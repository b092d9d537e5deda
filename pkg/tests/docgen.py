"""Seeded generator of valid documents for corpus-scale tests.

Deterministic for a given (seed, index): the golden fixtures were frozen
from this generator and the round-trip suites regenerate the same byte
streams on every run. Content deliberately mixes ASCII, CJK, emoji,
combining characters, quotes, backslashes and bracket runs so the wire
escaping rules get exercised for real.
"""

from __future__ import annotations

import random

from gstkit.model import (
    GstDocument, Mark, MarkKind, Sentence, SpeakerProfile, TokenAnnotation,
    INSTRUCT_DOC_KEYS, SENTENCE_KEYS, SPEAKER_KEYS, THINK_DOC_KEYS, TOKEN_KEYS,
)

_SHOW_FORMATS = [
    "two-host podcast episode", "radio drama scene", "audiobook chapter",
    "sports commentary segment", "street interview montage", "晚间广播剧",
]
_STYLES = [
    "warm, unhurried, intimate", "clipped, urgent, newsroom pace",
    "wry and conspiratorial", "bright \"morning-show\" energy",
    "low-key 深夜 confessional", "breathless, rising excitement",
]
_TOPICS = [
    "tidal power economics", "a missing lighthouse keeper", "playoff recap",
    "backyard astronomy", "sourdough 失败案例", "the 1977 blackout",
]
_RATINGS = [
    "treated studio, 5 of 5", "quiet room with faint HVAC, 4 of 5",
    "field recording, windscreen on, 3 of 5", "crowded hall, 2 of 5",
]
_GENDERS = ["unspecified", "a warm baritone", "bright mezzo", "androgynous alto"]
_AGES = ["early twenties", "mid-forties", "elderly, steady", "teenager"]
_PERSONALITIES = [
    "dry, patient, professorial", "quick, clipped, amused",
    "gravelly late-night drawl", "earnest and slightly nervous",
]
_THINK_GLOBALS = {
    "global.atmosphere": ["late-night ease", "storm-warning tension", "festival hum 🎪"],
    "global.emotional_arc": [
        "calm opening that frays into alarm by the closing line",
        "banter cooling into something unsaid",
    ],
    "global.acoustic_environment": [
        "faint caf\u00e9 chatter with clinking cups", "dead-quiet booth",
        "distant traffic wash, occasional horn",
    ],
    "global.sound_events": ["door slam mid-scene", "glass breaking, then laughter"],
}
_SENTENCE_CAPTIONS = {
    "sentence.tone": ["wry", "flat, exhausted", "barely-contained glee", "forced calm"],
    "sentence.intonation": ["level", "rising, incredulous question", "falling, final"],
    "sentence.pace": ["moderate", "slow, trailing", "rapid-fire"],
    "sentence.volume": ["conversational", "raised", "near-whisper"],
    "sentence.intent": ["stating", "asking", "deflecting", "needling"],
    "sentence.background_state": ["as established", "crowd noise swells", "sudden hush"],
}
_TOKEN_CAPTIONS = {
    "token.stress": ["hard stress", "light stress on the first syllable"],
    "token.pronunciation": ["read as 'lead', the metal", "重 as zh\u00f2ng"],
    "token.liaison": ["link into the next word", "no liaison, hard stop"],
    "token.tone_sandhi": ["third tone sandhi applies", "neutral tone"],
    "token.interjection_duration": ["stretch to 600 ms", "clipped short"],
}
_TEXTS = [
    "You did WHAT?",
    "No, I\u2014",
    "It's fine. Honestly, it's fine.",
    "Wait, wait, wait\u2026",
    "The tide tables don't lie, Marisol!",
    "把灯关了吧。",
    "He said \"trust me\" and hung up.",
    "Path is C:\\archive\\tapes, same as before.",
    "Score's 3\u20132 with [[brackets]] in the transcript, oddly.",
    "So that's it? That's the plan?",
    "Mmm\u2026 maybe. 🤔",
    "LOUDER! Louder, both of you!",
]


def make_doc(seed: int, index: int) -> GstDocument:
    rng = random.Random((seed << 20) ^ index)
    n_speakers = rng.randint(1, 4)
    speakers = tuple(
        SpeakerProfile(
            speaker_id=f"spk{i}",
            dims={
                "speaker.gender": rng.choice(_GENDERS),
                "speaker.age": rng.choice(_AGES),
                "speaker.vocal_personality": rng.choice(_PERSONALITIES),
            },
        )
        for i in range(n_speakers)
    )
    global_dims = {
        "global.show_format": rng.choice(_SHOW_FORMATS),
        "global.style_tags": rng.choice(_STYLES),
        "global.topic": rng.choice(_TOPICS),
        "global.acoustic_environment_rating": rng.choice(_RATINGS),
    }
    for key, pool in _THINK_GLOBALS.items():
        if rng.random() < 0.7:
            global_dims[key] = rng.choice(pool)

    sentences = []
    for i in range(rng.randint(0, 6)):
        text = rng.choice(_TEXTS)
        n = len(text)
        marks = []
        for _ in range(rng.randint(0, 2)):
            kind = rng.choice(list(MarkKind))
            caption = None if kind is MarkKind.INTERRUPTION else rng.choice(
                ["suddenly cold", "pivot to warmth", "mid-word cutoff"])
            marks.append(Mark(position=rng.randint(0, n), kind=kind, caption=caption))
        marks.sort(key=lambda m: m.position)
        dims = {key: rng.choice(pool) for key, pool in _SENTENCE_CAPTIONS.items()
                if rng.random() < 0.6}
        tokens = []
        if n >= 4 and rng.random() < 0.5:
            # split the text into disjoint spans so same-key overlap can't happen
            cuts = sorted(rng.sample(range(1, n), min(2, n - 1)))
            bounds = [0, *cuts, n]
            for a, b in zip(bounds, bounds[1:]):
                if rng.random() < 0.6:
                    key = rng.choice(TOKEN_KEYS)
                    tokens.append(TokenAnnotation(
                        span_start=a, span_end=b, key=key,
                        caption=rng.choice(_TOKEN_CAPTIONS[key])))
        sentences.append(Sentence(
            index=i, speaker_id=f"spk{rng.randrange(n_speakers)}", text=text,
            marks=tuple(marks), dims=dims, tokens=tuple(tokens)))

    return GstDocument(doc_id=f"doc{index:04d}", global_dims=global_dims,
                       speakers=speakers, sentences=tuple(sentences))


def make_corpus(seed: int, count: int) -> list[GstDocument]:
    return [make_doc(seed, i) for i in range(count)]
