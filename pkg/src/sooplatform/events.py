"""Append-only event log and the deterministic fold that builds state.

Every state change is an event; the live path and replay share the same
`apply_event` transitions, so folding events 1..n always reproduces the
exact state that existed after event n. Timestamps are informational
only and never enter any decision.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from . import participants as pm
from .ei import (
    Answer,
    EiInstance,
    EiSlot,
    EiType,
    INTENSITY_RATIOS,
    Option,
    PairwiseJudgment,
    YES,
    NO,
    payload_from_json,
)
from .model import (
    DefinitionCandidate,
    ElementKind,
    ElementState,
    Milestone,
    Phase,
    ValidityRecord,
    canonical_snapshot,
    create_element,
    find_active_sibling,
    frac_from_str,
)
from .participants import Participant, SelfEstimation, StakeholderGroup
from .policy import AggregationPolicy
from .state import (
    DiscussionPost,
    MergeProposal,
    PlatformState,
    instance_descriptor,
    pair_key,
)


class StorageFailure(Exception):
    pass


class CorruptLog(Exception):
    def __init__(self, message: str, first_bad_seq: int):
        super().__init__(f"{message} (first bad seq {first_bad_seq})")
        self.first_bad_seq = first_bad_seq


class EventType(str, Enum):
    GOAL_DEFINED = "GoalDefined"
    POLICY_SET = "PolicySet"
    PARTICIPANT_REGISTERED = "ParticipantRegistered"
    INTRO_TEST_SCORED = "IntroTestScored"
    EI_ISSUED = "EiIssued"
    ANSWER_SUBMITTED = "AnswerSubmitted"
    ELEMENT_CREATED = "ElementCreated"
    VALIDITY_UPDATED = "ValidityUpdated"
    ELEMENT_VALIDATED = "ElementValidated"
    ELEMENT_REMOVED = "ElementRemoved"
    MERGE_PROPOSED = "MergeProposed"
    ELEMENTS_MERGED = "ElementsMerged"
    PARENT_REASSIGNED = "ParentReassigned"
    DEFINITION_ADOPTED = "DefinitionAdopted"
    WEIGHTS_COMPUTED = "WeightsComputed"
    MILESTONE_CREATED = "MilestoneCreated"
    DISCUSSION_POSTED = "DiscussionPosted"
    STALE_ANSWER_AUDITED = "StaleAnswerAudited"


# Events that change the shape of the tree; they reset the stability window.
STRUCTURAL_EVENTS = frozenset(
    {
        EventType.ELEMENT_CREATED,
        EventType.ELEMENT_VALIDATED,
        EventType.ELEMENT_REMOVED,
        EventType.ELEMENTS_MERGED,
        EventType.PARENT_REASSIGNED,
    }
)


@dataclass
class Event:
    seq: int
    ts: datetime
    type: EventType
    payload: dict

    def to_json_line(self) -> str:
        doc = {
            "seq": self.seq,
            "ts": self.ts.isoformat(),
            "type": self.type.value,
            "payload": self.payload,
        }
        return json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":"))

    @staticmethod
    def from_json_line(line: str) -> "Event":
        doc = json.loads(line)
        return Event(
            seq=int(doc["seq"]),
            ts=datetime.fromisoformat(doc["ts"]),
            type=EventType(doc["type"]),
            payload=doc["payload"],
        )


class EventLog:
    """Line-delimited JSON log; appends are flushed before returning."""

    def __init__(self, path: str | Path | None = None, fsync: bool = False):
        self.path = Path(path) if path is not None else None
        self.fsync = fsync
        self.events: list[Event] = []
        self._fh = None
        if self.path is not None:
            try:
                self._fh = open(self.path, "a", encoding="utf-8")
            except OSError as exc:
                raise StorageFailure(str(exc)) from exc

    def append(self, event: Event) -> None:
        if self._fh is not None:
            try:
                self._fh.write(event.to_json_line() + "\n")
                self._fh.flush()
                if self.fsync:
                    os.fsync(self._fh.fileno())
            except OSError as exc:
                raise StorageFailure(str(exc)) from exc
        self.events.append(event)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_log(path: str | Path) -> list[Event]:
    events: list[Event] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                events.append(Event.from_json_line(line))
            except (ValueError, KeyError) as exc:
                raise CorruptLog(f"unparseable event: {exc}", lineno) from exc
    return events


# --- instance (de)serialization ------------------------------------------------


def instance_to_json(inst: EiInstance) -> dict:
    return {
        "eiId": inst.id,
        "type": inst.type.value,
        "slot": inst.slot.value,
        "targets": list(inst.targets),
        "parentId": inst.parent_id,
        "childKind": inst.child_kind.value if inst.child_kind else None,
        "k": inst.k,
        "allowFreeText": inst.allow_free_text,
        "options": [{"id": o.id, "label": o.label} for o in inst.options],
        "questionText": inst.question_text,
        "groupTags": list(inst.group_tags),
    }


def instance_from_json(data: dict, seq: int) -> EiInstance:
    return EiInstance(
        id=data["eiId"],
        type=EiType(data["type"]),
        slot=EiSlot(data["slot"]),
        targets=list(data["targets"]),
        question_text=data["questionText"],
        options=[Option(o["id"], o["label"]) for o in data["options"]],
        parent_id=data.get("parentId"),
        child_kind=ElementKind(data["childKind"]) if data.get("childKind") else None,
        k=data.get("k"),
        allow_free_text=bool(data.get("allowFreeText", False)),
        group_tags=list(data.get("groupTags", [])),
        created_at_seq=seq,
    )


# --- fold ----------------------------------------------------------------------


def apply_event(state: PlatformState, ev: Event) -> None:
    """Mechanically apply one event; never makes aggregation decisions."""
    handler = _HANDLERS[ev.type]
    handler(state, ev)
    if ev.type in STRUCTURAL_EVENTS:
        state.quiet_answers = 0


def _advance_counter(state: PlatformState, attr: str, ident: str) -> None:
    no = int(ident[1:])
    if getattr(state, attr) <= no:
        setattr(state, attr, no + 1)


def _apply_goal_defined(state: PlatformState, ev: Event) -> None:
    p = ev.payload
    create_element(
        state.tree,
        p["elementId"],
        ElementKind.GOAL,
        p["title"],
        None,
        p.get("createdBy", ""),
        Fraction(0),
        ev.seq,
        state=ElementState.VALIDATED,
    )
    no = int(p["elementId"][1:])
    if state.tree.next_element_no <= no:
        state.tree.next_element_no = no + 1
    state.goal_meta = {
        "title": p["title"],
        "description": p.get("description", ""),
        "systemBoundaries": p.get("systemBoundaries", ""),
    }


def _apply_policy_set(state: PlatformState, ev: Event) -> None:
    state.policy = AggregationPolicy.from_json(ev.payload["policy"])


def _apply_participant_registered(state: PlatformState, ev: Event) -> None:
    p = ev.payload
    pid = p["participantId"]
    state.participants[pid] = Participant(
        id=pid,
        display_name=p["name"],
        stakeholder_group=StakeholderGroup(p["stakeholderGroup"]),
        self_estimation=SelfEstimation(p["selfEstimation"]),
        registered_at_seq=ev.seq,
    )
    _advance_counter(state, "next_participant_no", pid)


def _apply_intro_test_scored(state: PlatformState, ev: Event) -> None:
    p = ev.payload
    state.participants[p["participantId"]].competency = frac_from_str(p["competency"])


def _apply_ei_issued(state: PlatformState, ev: Event) -> None:
    inst = instance_from_json(ev.payload, ev.seq)
    state.instances[inst.id] = inst
    state.instance_by_descriptor[instance_descriptor(inst)] = inst.id
    if inst.slot is EiSlot.CONFIRM:
        state.confirm_instance_for[inst.targets[0]] = inst.id
    _advance_counter(state, "next_ei_no", inst.id)


def _apply_answer_submitted(state: PlatformState, ev: Event) -> None:
    p = ev.payload
    payload = payload_from_json(p["payload"])
    answer = Answer(
        ei_id=p["eiId"],
        participant_id=p["participantId"],
        payload=payload,
        at_seq=ev.seq,
    )
    state.answers.setdefault(answer.ei_id, {})[answer.participant_id] = answer
    state.answered_by.setdefault(answer.participant_id, set()).add(answer.ei_id)
    participant = state.participants.get(answer.participant_id)
    if participant is not None:
        participant.answered_count += 1
    state.answer_count += 1
    state.quiet_answers += 1
    state.answer_times.append(ev.ts)
    inst = state.instances.get(answer.ei_id)
    if (
        inst is not None
        and inst.slot is EiSlot.PAIRWISE
        and isinstance(payload, PairwiseJudgment)
    ):
        key = pair_key(inst.targets[0], inst.targets[1])
        ratio = INTENSITY_RATIOS[payload.intensity]
        if inst.targets[0] != key[0]:
            ratio = 1.0 / ratio
        state.judgments.setdefault(key, []).append(
            (ratio, frac_from_str(p["weight"]))
        )


def _apply_element_created(state: PlatformState, ev: Event) -> None:
    p = ev.payload
    create_element(
        state.tree,
        p["elementId"],
        ElementKind(p["kind"]),
        p["name"],
        p.get("parentId"),
        p.get("createdBy", ""),
        frac_from_str(p["namingWeight"]),
        ev.seq,
    )
    no = int(p["elementId"][1:])
    if state.tree.next_element_no <= no:
        state.tree.next_element_no = no + 1
    if p.get("mergePair"):
        _link_merge_candidate(state, p["elementId"], tuple(p["mergePair"]))


def _link_merge_candidate(
    state: PlatformState, element_id: str, pair: tuple[str, str]
) -> None:
    key = pair_key(*pair)
    state.merge_link[element_id] = key
    proposal = state.proposals.get(key)
    if proposal is not None:
        proposal.name_candidate_ids.add(element_id)


def _apply_validity_updated(state: PlatformState, ev: Event) -> None:
    p = ev.payload
    scope = p["scope"]
    if scope == "element":
        el = state.tree.element(p["elementId"])
        el.validity = ValidityRecord.from_json(p["record"])
        el.validity.last_affecting_seq = ev.seq
        if p.get("mergePair"):
            _link_merge_candidate(state, p["elementId"], tuple(p["mergePair"]))
    elif scope == "pair":
        stats = state.stats_for_pair(p["a"], p["b"])
        stats.yes_weight = frac_from_str(p["yes"])
        stats.no_weight = frac_from_str(p["no"])
        stats.dont_know_count = int(p["dontKnow"])
    elif scope == "definition":
        el = state.tree.element(p["elementId"])
        el.definition_candidates = [
            DefinitionCandidate(
                text=c["text"],
                record=ValidityRecord(
                    confirm_weight=frac_from_str(c["support"]),
                    last_affecting_seq=ev.seq,
                ),
            )
            for c in p["candidates"]
        ]
    else:
        raise CorruptLog(f"unknown validity scope {scope!r}", ev.seq)


def _reputation_updates_for_element(
    state: PlatformState, element_id: str, validated: bool
) -> None:
    """Nudge reputations of everyone whose confirm vote has been resolved."""
    ei_id = state.confirm_instance_for.get(element_id)
    if ei_id is None:
        return
    for pid in sorted(state.answers.get(ei_id, {})):
        answer = state.answers[ei_id][pid]
        choice = getattr(answer.payload, "choice", None)
        if choice not in (YES, NO):
            continue
        participant = state.participants.get(pid)
        if participant is None:
            continue
        agreed = (choice == YES) == validated
        pm.update_reputation(participant, agreed)


def _apply_element_validated(state: PlatformState, ev: Event) -> None:
    el = state.tree.element(ev.payload["elementId"])
    el.state = ElementState.VALIDATED
    _reputation_updates_for_element(state, el.id, validated=True)


def _apply_element_removed(state: PlatformState, ev: Event) -> None:
    el = state.tree.element(ev.payload["elementId"])
    el.state = ElementState.REMOVED
    _reputation_updates_for_element(state, el.id, validated=False)
    _retire_pairs_for(state, el.id)


def _apply_merge_proposed(state: PlatformState, ev: Event) -> None:
    p = ev.payload
    key = pair_key(p["a"], p["b"])
    state.proposals[key] = MergeProposal(a=key[0], b=key[1], parent_id=p["parentId"])
    state.stats_for_pair(*key).proposed = True


def _retire_pairs_for(state: PlatformState, element_id: str) -> None:
    for key, stats in state.pair_stats.items():
        if element_id in key:
            stats.resolved = True
    for key, proposal in state.proposals.items():
        if element_id in key:
            proposal.resolved = True


def _absorb_record(dst: ValidityRecord, src: ValidityRecord, seq: int) -> None:
    dst.confirm_weight += src.confirm_weight
    dst.reject_weight += src.reject_weight
    dst.naming_weight += src.naming_weight
    dst.dont_know_count += src.dont_know_count
    dst.structure_confirm_weight += src.structure_confirm_weight
    for pid, w in src.structure_relocate_weight.items():
        dst.structure_relocate_weight[pid] = (
            dst.structure_relocate_weight.get(pid, Fraction(0)) + w
        )
    dst.last_affecting_seq = seq


def _reparent_with_fold(
    state: PlatformState, child_id: str, new_parent_id: str, seq: int
) -> None:
    """Move a child under a new parent, folding same-name siblings together."""
    tree = state.tree
    child = tree.element(child_id)
    target = find_active_sibling(tree, new_parent_id, child.name)
    if target is not None and target.id != child.id:
        _absorb_record(target.validity, child.validity, seq)
        child.state = ElementState.MERGED
        child.merged_into = target.id
        _retire_pairs_for(state, child.id)
        for gc in sorted(
            (
                e.id
                for e in tree.elements.values()
                if e.active and e.parent_id == child.id
            ),
        ):
            _reparent_with_fold(state, gc, target.id, seq)
    else:
        child.parent_id = new_parent_id


def _apply_elements_merged(state: PlatformState, ev: Event) -> None:
    p = ev.payload
    tree = state.tree
    survivor = tree.element(p["survivorId"])
    for mid in sorted(p["memberIds"]):
        if mid == survivor.id:
            continue
        member = tree.element(mid)
        _absorb_record(survivor.validity, member.validity, ev.seq)
        member.state = ElementState.MERGED
        member.merged_into = survivor.id
        _retire_pairs_for(state, mid)
        for child_id in sorted(
            e.id
            for e in tree.elements.values()
            if e.active and e.parent_id == mid
        ):
            _reparent_with_fold(state, child_id, survivor.id, ev.seq)
    key = pair_key(p["pair"][0], p["pair"][1])
    stats = state.stats_for_pair(*key)
    stats.resolved = True
    proposal = state.proposals.get(key)
    if proposal is not None:
        proposal.resolved = True
    # duplicate votes on the merged pair are now resolved: yes was right
    dup_id = state.instance_by_descriptor.get(("dup", key))
    if dup_id is not None:
        for pid in sorted(state.answers.get(dup_id, {})):
            answer = state.answers[dup_id][pid]
            verdict = answer.payload
            says = getattr(verdict, "choice", None)
            if says not in (YES, NO):
                continue
            participant = state.participants.get(pid)
            if participant is not None:
                pm.update_reputation(participant, says == YES)


def _apply_parent_reassigned(state: PlatformState, ev: Event) -> None:
    el = state.tree.element(ev.payload["elementId"])
    el.parent_id = ev.payload["toParentId"]
    el.validity.structure_confirm_weight = Fraction(0)
    el.validity.structure_relocate_weight = {}
    el.validity.last_affecting_seq = ev.seq


def _apply_definition_adopted(state: PlatformState, ev: Event) -> None:
    el = state.tree.element(ev.payload["elementId"])
    el.definition = ev.payload["definition"]


def _apply_weights_computed(state: PlatformState, ev: Event) -> None:
    p = ev.payload
    state.weights.weights.update({cid: float(w) for cid, w in p["weights"].items()})
    state.weights.consistency_ratios[p["parentId"]] = float(p["consistencyRatio"])


def _apply_milestone_created(state: PlatformState, ev: Event) -> None:
    p = ev.payload
    state.tree.milestones.append(
        Milestone(
            id=p["milestoneId"],
            at_seq=ev.seq,
            snapshot=p["snapshot"],
            snapshot_hash=p["snapshotHash"],
            forced=bool(p.get("forced", False)),
        )
    )
    state.tree.phase = Phase.WEIGHTING
    _advance_counter(state, "next_milestone_no", p["milestoneId"])


def _apply_discussion_posted(state: PlatformState, ev: Event) -> None:
    p = ev.payload
    post = DiscussionPost(
        id=p["postId"],
        element_id=p["elementId"],
        participant_id=p["participantId"],
        text=p["text"],
        at_seq=ev.seq,
    )
    state.discussions.setdefault(post.element_id, []).append(post)
    _advance_counter(state, "next_post_no", post.id)


def _apply_stale_answer_audited(state: PlatformState, ev: Event) -> None:
    state.stale_answer_count += 1


_HANDLERS = {
    EventType.GOAL_DEFINED: _apply_goal_defined,
    EventType.POLICY_SET: _apply_policy_set,
    EventType.PARTICIPANT_REGISTERED: _apply_participant_registered,
    EventType.INTRO_TEST_SCORED: _apply_intro_test_scored,
    EventType.EI_ISSUED: _apply_ei_issued,
    EventType.ANSWER_SUBMITTED: _apply_answer_submitted,
    EventType.ELEMENT_CREATED: _apply_element_created,
    EventType.VALIDITY_UPDATED: _apply_validity_updated,
    EventType.ELEMENT_VALIDATED: _apply_element_validated,
    EventType.ELEMENT_REMOVED: _apply_element_removed,
    EventType.MERGE_PROPOSED: _apply_merge_proposed,
    EventType.ELEMENTS_MERGED: _apply_elements_merged,
    EventType.PARENT_REASSIGNED: _apply_parent_reassigned,
    EventType.DEFINITION_ADOPTED: _apply_definition_adopted,
    EventType.WEIGHTS_COMPUTED: _apply_weights_computed,
    EventType.MILESTONE_CREATED: _apply_milestone_created,
    EventType.DISCUSSION_POSTED: _apply_discussion_posted,
    EventType.STALE_ANSWER_AUDITED: _apply_stale_answer_audited,
}


def replay(events: Iterable[Event], verify_milestones: bool = True) -> PlatformState:
    """Fold a log back into state, checking seq density and milestone hashes."""
    state = PlatformState()
    expected = 1
    for ev in events:
        if ev.seq != expected:
            raise CorruptLog(f"expected seq {expected}, got {ev.seq}", expected)
        apply_event(state, ev)
        if verify_milestones and ev.type is EventType.MILESTONE_CREATED:
            _, digest = canonical_snapshot(state.tree)
            if digest != ev.payload["snapshotHash"]:
                raise CorruptLog("milestone snapshot hash mismatch", ev.seq)
        expected += 1
    return state


def utc_now() -> datetime:
    return datetime.now(timezone.utc)
