"""gstkit: hierarchical speech-annotation schema and its surrounding machinery.

Layers: Global (scene) / Sentence (utterance) / Token (phoneme-level span).
Streams: Instruct (mandatory hard constraints) / Think (optional expressive
plan). Everything downstream -- the canonical wire format, stream
partitioning, dimension dropout, the labeling pipeline, and the agent
session protocol -- works over this one schema.
"""

from .model import (
    Cardinality,
    DimensionDescriptor,
    DimensionRegistry,
    GstDocument,
    Layer,
    Mark,
    MarkKind,
    Sentence,
    SpeakerProfile,
    Stream,
    TokenAnnotation,
    UnknownDimensionError,
    ValidationReport,
    Violation,
    registry,
    validate,
)
from .errors import GstError, InvalidDocumentError
from .wire import (
    ParseError,
    WireErrorCode,
    canonicalize,
    parse,
    parse_marked_text,
    render_marked_text,
    serialize_canonical,
)
from .streams import InstructView, ThinkView, merge, partition, stream_of
from .dropout import DropoutConfig, MaskPlan, apply_mask, mask_stats, plan_mask
from .pipeline import (
    CorpusRecord,
    FilterPolicy,
    RetentionLedger,
    generate_synthetic_corpus,
    ingest_manifest,
    retention_report,
    run_filter_baseline,
    run_labeling,
)
from .session import (
    AcousticPlan,
    RenderRequest,
    SessionState,
    ThinkPlan,
    TurnRequest,
    TurnSentence,
    close_session,
    context_growth_probe,
    open_session,
    plan_think,
    render_mock,
    submit_turn,
)

__version__ = "0.1.0"

__all__ = [
    "AcousticPlan", "Cardinality", "CorpusRecord", "DimensionDescriptor",
    "DimensionRegistry", "DropoutConfig", "FilterPolicy", "GstDocument",
    "GstError", "InstructView", "InvalidDocumentError", "Layer", "Mark",
    "MarkKind", "MaskPlan", "ParseError", "RenderRequest", "RetentionLedger",
    "Sentence", "SessionState", "SpeakerProfile", "Stream", "ThinkPlan",
    "ThinkView", "TokenAnnotation", "TurnRequest", "TurnSentence",
    "UnknownDimensionError", "ValidationReport", "Violation", "WireErrorCode",
    "apply_mask", "canonicalize", "close_session", "context_growth_probe",
    "generate_synthetic_corpus", "ingest_manifest", "mask_stats", "merge",
    "open_session", "parse", "parse_marked_text", "partition", "plan_mask",
    "plan_think", "registry", "render_marked_text", "render_mock",
    "retention_report", "run_filter_baseline", "run_labeling",
    "serialize_canonical", "stream_of", "submit_turn", "validate",
]
