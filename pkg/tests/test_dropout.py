"""Dimension dropout: oracle agreement, statistics, and immunity.

The oracle below re-implements the slot-decision rule from scratch --
its own FNV-1a loop, its own slot enumeration straight off the document
structure -- and the library has to agree with it slot for slot.
"""

import dataclasses
import math

import pytest

from gstkit.dropout import (
    DocIdMismatchError, DropoutConfig, InvalidConfigError, MaskPlan,
    SlotNotFoundError, SlotRef, apply_mask, mask_stats, parse_config,
    parse_plan, plan_mask, serialize_config, serialize_plan,
)
from gstkit.model import Stream, registry, validate
from gstkit.wire import serialize_canonical

from conftest import think_heavy_doc
from docgen import make_corpus


# --- independent oracle ------------------------------------------------------

def _oracle_fnv(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) % (1 << 64)
    return h


def _oracle_masked(seed: int, doc_id: str, scope: str, key: str, p_micro: int) -> bool:
    payload = b"\x1f".join(
        part.encode("utf-8") for part in (str(seed), doc_id, scope, key))
    return _oracle_fnv(payload) * 10**6 < p_micro * 2**64


def _oracle_slots(doc, cfg: DropoutConfig, seed: int) -> set:
    think = {d.key for d in registry() if d.stream is Stream.THINK}
    picked = set()
    for key in doc.global_dims:
        if key in think and _oracle_masked(seed, doc.doc_id, "g", key, cfg.p_for(key)):
            picked.add(("g", key))
    for sent in doc.sentences:
        for key in sent.dims:
            if _oracle_masked(seed, doc.doc_id, f"s{sent.index}", key, cfg.p_for(key)):
                picked.add((f"s{sent.index}", key))
        for j, tok in enumerate(sent.tokens):
            scope = f"t{sent.index}.{j}"
            if _oracle_masked(seed, doc.doc_id, scope, tok.key, cfg.p_for(tok.key)):
                picked.add((scope, tok.key))
    return picked


def _plan_as_set(plan: MaskPlan) -> set:
    return {(s.scope, s.key) for s in plan.slots}


# --- plan_mask ---------------------------------------------------------------

def test_p_zero_masks_nothing(valid_doc):
    plan = plan_mask(valid_doc, DropoutConfig(default_p=0), seed=1)
    assert plan.slots == ()


def test_p_one_masks_every_think_slot(valid_doc):
    plan = plan_mask(valid_doc, DropoutConfig(default_p=1_000_000), seed=1)
    assert _plan_as_set(plan) == {
        ("g", "global.atmosphere"),
        ("s0", "sentence.tone"), ("s1", "sentence.intent"),
        ("t0.0", "token.stress"),
    }


@pytest.mark.parametrize("seed,doc_index", [(42, 0), (7, 3), (2**63, 11)])
def test_plan_matches_oracle(seed, doc_index):
    doc = make_corpus(seed=5, count=12)[doc_index]
    cfg = DropoutConfig(default_p=300_000,
                        overrides={"sentence.tone": 700_000, "token.stress": 0})
    plan = plan_mask(doc, cfg, seed)
    assert _plan_as_set(plan) == _oracle_slots(doc, cfg, seed)
    # and the decision is stable across runs
    assert plan == plan_mask(doc, cfg, seed)


def test_plan_slots_sorted_and_unique(valid_doc):
    plan = plan_mask(valid_doc, DropoutConfig(default_p=1_000_000), seed=3)
    assert list(plan.slots) == sorted(set(plan.slots))


def test_plan_independent_of_caption_text(valid_doc):
    cfg = DropoutConfig(default_p=500_000)
    before = plan_mask(valid_doc, cfg, seed=9)
    edited = dataclasses.replace(
        valid_doc,
        sentences=(
            dataclasses.replace(valid_doc.sentences[0],
                                dims={"sentence.tone": "completely different"}),
            valid_doc.sentences[1],
        ),
    )
    assert plan_mask(edited, cfg, seed=9) == before


def test_instruct_override_rejected(valid_doc):
    with pytest.raises(InvalidConfigError):
        plan_mask(valid_doc, DropoutConfig(overrides={"speaker.gender": 100}), seed=1)
    with pytest.raises(InvalidConfigError):
        plan_mask(valid_doc, DropoutConfig(overrides={"global.topic": 100}), seed=1)
    with pytest.raises(InvalidConfigError):
        plan_mask(valid_doc, DropoutConfig(overrides={"nope": 100}), seed=1)


def test_empirical_rate_ten_thousand_slots():
    doc = think_heavy_doc(1700)
    n_slots = 1700 * 6 + 4
    plan = plan_mask(doc, DropoutConfig(default_p=300_000), seed=42)
    rate = len(plan.slots) / n_slots
    # binomial 3-sigma around 0.3 over 10k slots is ~0.014
    assert abs(rate - 0.3) <= 3 * math.sqrt(0.3 * 0.7 / n_slots)
    assert abs(rate - 0.3) <= 0.02


def test_instruct_immunity_exhaustive():
    instruct_keys = {d.key for d in registry() if d.stream is Stream.INSTRUCT}
    for doc in make_corpus(seed=31, count=60):
        plan = plan_mask(doc, DropoutConfig(default_p=1_000_000), seed=13)
        assert all(s.key not in instruct_keys for s in plan.slots)
        masked = apply_mask(doc, plan)
        for key in instruct_keys:
            if key in doc.global_dims:
                assert masked.global_dims[key] == doc.global_dims[key]
        assert masked.speakers == doc.speakers


# --- apply_mask ----------------------------------------------------------------

def test_empty_plan_is_byte_identical(valid_doc):
    plan = MaskPlan(doc_id=valid_doc.doc_id, seed=0, slots=())
    assert serialize_canonical(apply_mask(valid_doc, plan)) == \
        serialize_canonical(valid_doc)


def test_full_mask_empties_think_view(valid_doc):
    from gstkit.streams import partition, serialize_instruct
    plan = plan_mask(valid_doc, DropoutConfig(default_p=1_000_000), seed=5)
    masked = apply_mask(valid_doc, plan)
    instruct_before, _ = partition(valid_doc)
    instruct_after, think_after = partition(masked)
    assert serialize_instruct(instruct_after) == serialize_instruct(instruct_before)
    assert think_after.global_dims == {}
    assert all(not s.dims and not s.tokens for s in think_after.sentences)


def test_single_slot_byte_diff(valid_doc):
    plan = MaskPlan(doc_id=valid_doc.doc_id, seed=0,
                    slots=(SlotRef.sentence_dim(0, "sentence.tone"),))
    before = serialize_canonical(valid_doc).decode()
    after = serialize_canonical(apply_mask(valid_doc, plan)).decode()
    assert '{"sentence.tone":"wry"}' in before
    assert after == before.replace('{"sentence.tone":"wry"}', "{}")


def test_mask_validity_preserved_bulk():
    for doc in make_corpus(seed=37, count=80):
        plan = plan_mask(doc, DropoutConfig(default_p=500_000), seed=21)
        assert validate(apply_mask(doc, plan)) == ()


def test_apply_mask_doc_id_mismatch(valid_doc):
    with pytest.raises(DocIdMismatchError):
        apply_mask(valid_doc, MaskPlan(doc_id="other", seed=0, slots=()))


def test_apply_mask_slot_not_found(valid_doc):
    plan = MaskPlan(doc_id=valid_doc.doc_id, seed=0,
                    slots=(SlotRef.global_dim("global.sound_events"),))
    with pytest.raises(SlotNotFoundError):
        apply_mask(valid_doc, plan)
    plan = MaskPlan(doc_id=valid_doc.doc_id, seed=0,
                    slots=(SlotRef.token(0, 5, "token.stress"),))
    with pytest.raises(SlotNotFoundError):
        apply_mask(valid_doc, plan)


def test_token_mask_removes_annotation(valid_doc):
    plan = MaskPlan(doc_id=valid_doc.doc_id, seed=0,
                    slots=(SlotRef.token(0, 0, "token.stress"),))
    masked = apply_mask(valid_doc, plan)
    assert masked.sentences[0].tokens == ()
    assert masked.sentences[0].dims == valid_doc.sentences[0].dims


# --- mask_stats ----------------------------------------------------------------

def test_stats_all_zero_at_p_zero(valid_doc):
    plan = plan_mask(valid_doc, DropoutConfig(default_p=0), seed=1)
    rates = mask_stats([plan], [valid_doc])
    assert set(rates) == {"global.atmosphere", "sentence.tone", "sentence.intent",
                          "token.stress"}
    assert all(rate == 0 for rate in rates.values())


def test_stats_half_rate_over_ten_thousand():
    doc = think_heavy_doc(1700)
    plan = plan_mask(doc, DropoutConfig(default_p=500_000), seed=6)
    rates = mask_stats([plan], [doc])
    for key in ("sentence.tone", "sentence.pace", "sentence.intent"):
        assert 480_000 <= rates[key] <= 520_000, (key, rates[key])


def test_stats_never_report_instruct_keys(valid_doc):
    plan = plan_mask(valid_doc, DropoutConfig(default_p=1_000_000), seed=2)
    instruct_keys = {d.key for d in registry() if d.stream is Stream.INSTRUCT}
    assert instruct_keys.isdisjoint(mask_stats([plan], [valid_doc]))


def test_stats_misaligned(valid_doc):
    from gstkit.dropout import MisalignedError
    plan = plan_mask(valid_doc, DropoutConfig(default_p=0), seed=1)
    with pytest.raises(MisalignedError):
        mask_stats([plan], [])
    with pytest.raises(MisalignedError):
        mask_stats([dataclasses.replace(plan, doc_id="zzz")], [valid_doc])


# --- wire forms ----------------------------------------------------------------

def test_plan_round_trip(valid_doc):
    plan = plan_mask(valid_doc, DropoutConfig(default_p=700_000), seed=77)
    assert parse_plan(serialize_plan(plan)) == plan


def test_config_round_trip():
    cfg = DropoutConfig(default_p=250_000, overrides={"sentence.tone": 900_000})
    assert parse_config(serialize_config(cfg)) == cfg


def test_config_file_rejects_instruct_override():
    with pytest.raises(InvalidConfigError):
        parse_config(b'{"default_p":0,"overrides":{"speaker.age":1}}\n')
