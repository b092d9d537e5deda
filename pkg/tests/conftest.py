import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gstkit.model import GstDocument, Sentence, SpeakerProfile, TokenAnnotation, Mark, MarkKind

FIXTURES = Path(__file__).parent / "fixtures"

GOLDEN_SEED = 20260801
GOLDEN_COUNT = 200


@pytest.fixture
def valid_doc() -> GstDocument:
    """A small hand-built document exercising every construct once."""
    return GstDocument(
        doc_id="demo1",
        global_dims={
            "global.show_format": "two-host podcast episode",
            "global.style_tags": "wry, unhurried",
            "global.topic": "tidal power economics",
            "global.acoustic_environment_rating": "quiet studio, 4 of 5",
            "global.atmosphere": "late-night ease",
        },
        speakers=(
            SpeakerProfile("spk0", {"speaker.gender": "a warm baritone",
                                    "speaker.age": "mid-forties",
                                    "speaker.vocal_personality": "dry, patient"}),
            SpeakerProfile("spk1", {"speaker.gender": "bright mezzo",
                                    "speaker.age": "early twenties",
                                    "speaker.vocal_personality": "quick, amused"}),
        ),
        sentences=(
            Sentence(index=0, speaker_id="spk0", text="You did WHAT?",
                     marks=(Mark(6, MarkKind.INTERRUPTION),),
                     dims={"sentence.tone": "wry"},
                     tokens=(TokenAnnotation(8, 12, "token.stress", "hard stress"),)),
            Sentence(index=1, speaker_id="spk1", text="It's fine. Leave.",
                     marks=(Mark(10, MarkKind.TONAL_PIVOT, "suddenly cold"),),
                     dims={"sentence.intent": "deflecting"}),
        ),
    )


def think_heavy_doc(n_sentences: int = 1700, doc_id: str = "demo1") -> GstDocument:
    """All six sentence dims on every sentence: 6*n + 4 Think slots."""
    sent_dims = {
        "sentence.tone": "steady", "sentence.intonation": "level",
        "sentence.pace": "moderate", "sentence.volume": "conversational",
        "sentence.intent": "stating", "sentence.background_state": "as established",
    }
    return GstDocument(
        doc_id=doc_id,
        global_dims={
            "global.show_format": "long-form narration",
            "global.style_tags": "even, archival",
            "global.topic": "inventory",
            "global.acoustic_environment_rating": "booth, 5 of 5",
            "global.atmosphere": "methodical",
            "global.emotional_arc": "flat by design",
            "global.acoustic_environment": "dead-quiet booth",
            "global.sound_events": "page turns",
        },
        speakers=(SpeakerProfile("spk0", {"speaker.gender": "unspecified",
                                          "speaker.age": "adult",
                                          "speaker.vocal_personality": "even"}),),
        sentences=tuple(
            Sentence(index=i, speaker_id="spk0", text=f"Item {i} accounted for.",
                     dims=dict(sent_dims))
            for i in range(n_sentences)
        ),
    )
