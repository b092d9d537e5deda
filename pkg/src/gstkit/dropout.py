"""Dimension Dropout: seeded, reproducible masking of Think dimensions.

Each present Think slot gets an independent keep/mask decision from a
64-bit FNV-1a hash of (seed, doc_id, slot scope, dimension key) -- never
of the caption text, so editing a caption cannot change whether it is
masked. Masked slots are removed outright, leaving the slot empty rather
than writing a placeholder; the result is still a valid document because
Think dimensions are optional. Instruct slots are never eligible.

Probabilities are micro-integers (parts per million) so the contract stays
float-free and bit-exact across implementations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

from . import fnv, model, wire
from .errors import GstError, InvalidDocumentError
from .model import GstDocument, Sentence, Stream

DEFAULT_P_MICRO = 200_000  # 0.2

MAX_SEED = (1 << 64) - 1


class InvalidConfigError(GstError):
    pass


class DocIdMismatchError(GstError):
    pass


class SlotNotFoundError(GstError):
    pass


class MisalignedError(GstError):
    pass


@dataclass(frozen=True)
class DropoutConfig:
    default_p: int = DEFAULT_P_MICRO
    overrides: Mapping[str, int] = field(default_factory=dict)

    def p_for(self, key: str) -> int:
        return self.overrides.get(key, self.default_p)


def check_config(cfg: DropoutConfig) -> None:
    if not 0 <= cfg.default_p <= fnv.MICRO:
        raise InvalidConfigError(f"default_p {cfg.default_p} outside 0..1000000")
    reg = model.registry()
    for key, p in cfg.overrides.items():
        desc = reg.find(key)
        if desc is None:
            raise InvalidConfigError(f"override on unknown key {key!r}")
        if desc.stream is not Stream.THINK:
            raise InvalidConfigError(
                f"override on Instruct key {key!r}: Instruct slots are never maskable")
        if not 0 <= p <= fnv.MICRO:
            raise InvalidConfigError(f"override {key!r} probability {p} outside 0..1000000")


@dataclass(frozen=True, order=True)
class SlotRef:
    """One maskable Think slot, addressed structurally.

    kind 0 = global dim, 1 = sentence dim, 2 = token annotation. The field
    order gives the canonical sort: globals, then sentences by index, then
    token annotations by (sentence, annotation) position, keys tie-breaking.
    """

    kind: int
    sentence_index: int
    annotation_index: int
    key: str

    @property
    def scope(self) -> str:
        if self.kind == 0:
            return "g"
        if self.kind == 1:
            return f"s{self.sentence_index}"
        return f"t{self.sentence_index}.{self.annotation_index}"

    @classmethod
    def global_dim(cls, key: str) -> "SlotRef":
        return cls(0, -1, -1, key)

    @classmethod
    def sentence_dim(cls, index: int, key: str) -> "SlotRef":
        return cls(1, index, -1, key)

    @classmethod
    def token(cls, sentence_index: int, annotation_index: int, key: str) -> "SlotRef":
        return cls(2, sentence_index, annotation_index, key)


@dataclass(frozen=True)
class MaskPlan:
    doc_id: str
    seed: int
    slots: tuple[SlotRef, ...]


def iter_think_slots(doc: GstDocument) -> Iterator[SlotRef]:
    """Every present, maskable Think slot of a document, in canonical order."""
    reg = model.registry()
    for key in sorted(doc.global_dims):
        if reg.lookup(key).stream is Stream.THINK:
            yield SlotRef.global_dim(key)
    for sent in doc.sentences:
        for key in sorted(sent.dims):
            yield SlotRef.sentence_dim(sent.index, key)
        for j, tok in enumerate(sent.tokens):
            yield SlotRef.token(sent.index, j, tok.key)


def slot_hash(seed: int, doc_id: str, slot: SlotRef) -> int:
    return fnv.hash_fields(str(seed), doc_id, slot.scope, slot.key)


def plan_mask(doc: GstDocument, cfg: DropoutConfig, seed: int) -> MaskPlan:
    """Select the slots to mask; pure in (doc structure, cfg, seed)."""
    check_config(cfg)
    if not 0 <= seed <= MAX_SEED:
        raise InvalidConfigError(f"seed {seed} outside unsigned 64-bit range")
    report = model.validate(doc)
    if report:
        raise InvalidDocumentError(report)
    slots = tuple(
        s for s in iter_think_slots(doc)
        if fnv.below_micro(slot_hash(seed, doc.doc_id, s), cfg.p_for(s.key))
    )
    return MaskPlan(doc_id=doc.doc_id, seed=seed, slots=tuple(sorted(slots)))


def apply_mask(doc: GstDocument, plan: MaskPlan) -> GstDocument:
    """Remove every planned slot; all other fields are untouched."""
    if plan.doc_id != doc.doc_id:
        raise DocIdMismatchError(f"plan is for {plan.doc_id!r}, document is {doc.doc_id!r}")
    drop_globals: set[str] = set()
    drop_sentence_dims: dict[int, set[str]] = {}
    drop_tokens: dict[int, set[int]] = {}
    sentences_by_index = {s.index: s for s in doc.sentences}
    for slot in plan.slots:
        if slot.kind == 0:
            if slot.key not in doc.global_dims:
                raise SlotNotFoundError(f"global dim {slot.key!r} not present")
            drop_globals.add(slot.key)
        elif slot.kind == 1:
            sent = sentences_by_index.get(slot.sentence_index)
            if sent is None or slot.key not in sent.dims:
                raise SlotNotFoundError(f"sentence dim {slot.scope}/{slot.key} not present")
            drop_sentence_dims.setdefault(slot.sentence_index, set()).add(slot.key)
        else:
            sent = sentences_by_index.get(slot.sentence_index)
            if (sent is None or slot.annotation_index >= len(sent.tokens)
                    or sent.tokens[slot.annotation_index].key != slot.key):
                raise SlotNotFoundError(f"token slot {slot.scope}/{slot.key} not present")
            drop_tokens.setdefault(slot.sentence_index, set()).add(slot.annotation_index)

    new_sentences = []
    for sent in doc.sentences:
        dim_drops = drop_sentence_dims.get(sent.index, ())
        tok_drops = drop_tokens.get(sent.index, ())
        new_sentences.append(Sentence(
            index=sent.index, speaker_id=sent.speaker_id, text=sent.text, marks=sent.marks,
            dims={k: v for k, v in sent.dims.items() if k not in dim_drops},
            tokens=tuple(t for j, t in enumerate(sent.tokens) if j not in tok_drops),
        ))
    return GstDocument(
        doc_id=doc.doc_id,
        global_dims={k: v for k, v in doc.global_dims.items() if k not in drop_globals},
        speakers=doc.speakers,
        sentences=tuple(new_sentences),
        version=doc.version,
    )


def mask_stats(plans: list[MaskPlan] | tuple[MaskPlan, ...],
               docs: list[GstDocument] | tuple[GstDocument, ...]) -> dict[str, int]:
    """Per-key empirical mask rates (micro) over aligned plan/document pairs.

    Keys with no eligible instances are omitted; Instruct keys are never
    eligible, so they never appear.
    """
    if len(plans) != len(docs):
        raise MisalignedError(f"{len(plans)} plans vs {len(docs)} documents")
    eligible: dict[str, int] = {}
    masked: dict[str, int] = {}
    for plan, doc in zip(plans, docs):
        if plan.doc_id != doc.doc_id:
            raise MisalignedError(
                f"plan {plan.doc_id!r} paired with document {doc.doc_id!r}")
        for slot in iter_think_slots(doc):
            eligible[slot.key] = eligible.get(slot.key, 0) + 1
        for slot in plan.slots:
            masked[slot.key] = masked.get(slot.key, 0) + 1
    return {key: masked.get(key, 0) * fnv.MICRO // count
            for key, count in eligible.items()}


# ---------------------------------------------------------------------------
# Wire forms

def plan_to_value(plan: MaskPlan) -> dict:
    return {
        "doc_id": plan.doc_id,
        "seed": plan.seed,
        "slots": [{"key": s.key, "scope": s.scope} for s in plan.slots],
    }


def serialize_plan(plan: MaskPlan) -> bytes:
    return wire.canonical_bytes(plan_to_value(plan))


def _slot_from_scope(scope: str, key: str) -> SlotRef:
    if scope == "g":
        return SlotRef.global_dim(key)
    if scope.startswith("s") and scope[1:].isdigit():
        return SlotRef.sentence_dim(int(scope[1:]), key)
    if scope.startswith("t"):
        sent_part, _, ann_part = scope[1:].partition(".")
        if sent_part.isdigit() and ann_part.isdigit():
            return SlotRef.token(int(sent_part), int(ann_part), key)
    raise wire.shape_error(f"invalid slot scope {scope!r}")


def parse_plan(data: bytes) -> MaskPlan:
    obj = wire.as_obj(wire.decode_value(data), "/", ("doc_id", "seed", "slots"))
    slots = []
    for i, sv in enumerate(wire.as_list(obj["slots"], "/slots")):
        path = f"/slots/{i}"
        sobj = wire.as_obj(sv, path, ("key", "scope"))
        slots.append(_slot_from_scope(wire.as_str(sobj["scope"], f"{path}/scope"),
                                      wire.as_str(sobj["key"], f"{path}/key")))
    return MaskPlan(doc_id=wire.as_str(obj["doc_id"], "/doc_id"),
                    seed=wire.as_int(obj["seed"], "/seed"),
                    slots=tuple(slots))


def config_to_value(cfg: DropoutConfig) -> dict:
    return {"default_p": cfg.default_p, "overrides": dict(cfg.overrides)}


def serialize_config(cfg: DropoutConfig) -> bytes:
    return wire.canonical_bytes(config_to_value(cfg))


def parse_config(data: bytes) -> DropoutConfig:
    obj = wire.as_obj(wire.decode_value(data), "/", ("default_p", "overrides"))
    raw_overrides = obj["overrides"]
    if not isinstance(raw_overrides, dict):
        raise wire.shape_error("/overrides: expected an object")
    overrides = {
        key: wire.as_int(p, f"/overrides/{key}")
        for key, p in raw_overrides.items()
    }
    cfg = DropoutConfig(default_p=wire.as_int(obj["default_p"], "/default_p"),
                        overrides=overrides)
    check_config(cfg)
    return cfg
