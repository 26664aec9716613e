"""In-memory platform state: the value produced by folding the event log."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from fractions import Fraction

from .ei import Answer, EiInstance, EiSlot
from .model import ElementState, Phase, SooTree, WeightSet
from .participants import IntroTest, Participant
from .policy import AggregationPolicy


def pair_key(a: str, b: str) -> tuple[str, str]:
    """Canonical unordered pair key."""
    return (a, b) if a <= b else (b, a)


@dataclass
class PairStats:
    """Duplicate-check tally for one unordered active sibling pair."""

    yes_weight: Fraction = Fraction(0)
    no_weight: Fraction = Fraction(0)
    dont_know_count: int = 0
    proposed: bool = False
    resolved: bool = False

    def total(self) -> Fraction:
        return self.yes_weight + self.no_weight


@dataclass
class MergeProposal:
    a: str
    b: str
    parent_id: str
    name_candidate_ids: set[str] = field(default_factory=set)
    resolved: bool = False

    @property
    def key(self) -> tuple[str, str]:
        return pair_key(self.a, self.b)


@dataclass
class DiscussionPost:
    id: str
    element_id: str
    participant_id: str
    text: str
    at_seq: int


@dataclass
class PlatformState:
    policy: AggregationPolicy = field(default_factory=AggregationPolicy)
    tree: SooTree = field(default_factory=SooTree)
    goal_meta: dict = field(default_factory=dict)
    intro_test: IntroTest = field(default_factory=IntroTest)

    participants: dict[str, Participant] = field(default_factory=dict)
    instances: dict[str, EiInstance] = field(default_factory=dict)
    instance_by_descriptor: dict[tuple, str] = field(default_factory=dict)
    confirm_instance_for: dict[str, str] = field(default_factory=dict)

    answers: dict[str, dict[str, Answer]] = field(default_factory=dict)
    answered_by: dict[str, set[str]] = field(default_factory=dict)

    pair_stats: dict[tuple[str, str], PairStats] = field(default_factory=dict)
    proposals: dict[tuple[str, str], MergeProposal] = field(default_factory=dict)
    merge_link: dict[str, tuple[str, str]] = field(default_factory=dict)
    # pairwise judgments per unordered pair: (ratio first/second of key, weight)
    judgments: dict[tuple[str, str], list[tuple[float, Fraction]]] = field(
        default_factory=dict
    )
    weights: WeightSet = field(default_factory=WeightSet)

    discussions: dict[str, list[DiscussionPost]] = field(default_factory=dict)

    answer_count: int = 0
    quiet_answers: int = 0  # answers since the last structural change
    stale_answer_count: int = 0
    answer_times: list[datetime] = field(default_factory=list)

    next_participant_no: int = 1
    next_ei_no: int = 1
    next_post_no: int = 1
    next_milestone_no: int = 1

    def mint_participant_id(self) -> str:
        pid = f"p{self.next_participant_no:04d}"
        self.next_participant_no += 1
        return pid

    def mint_ei_id(self) -> str:
        eid = f"q{self.next_ei_no:06d}"
        self.next_ei_no += 1
        return eid

    def mint_post_id(self) -> str:
        pid = f"d{self.next_post_no:05d}"
        self.next_post_no += 1
        return pid

    def mint_milestone_id(self) -> str:
        mid = f"m{self.next_milestone_no:03d}"
        self.next_milestone_no += 1
        return mid

    def answered(self, participant_id: str) -> set[str]:
        return self.answered_by.get(participant_id, set())

    def stats_for_pair(self, a: str, b: str) -> PairStats:
        return self.pair_stats.setdefault(pair_key(a, b), PairStats())


def instance_descriptor(inst: EiInstance) -> tuple:
    """Logical identity of an instance; used to keep generation idempotent."""
    slot = inst.slot
    if slot is EiSlot.CHILD_NAME:
        return ("name", inst.parent_id, inst.child_kind)
    if slot is EiSlot.DEFINITION_NAME:
        return ("defname", inst.targets[0])
    if slot is EiSlot.CONFIRM:
        return ("confirm", inst.targets[0])
    if slot is EiSlot.PAIRWISE:
        return ("pairwise", pair_key(inst.targets[0], inst.targets[1]))
    if slot is EiSlot.SIBLING_CHOICE:
        return ("sibchoice", inst.parent_id, frozenset(inst.option_ids()))
    if slot is EiSlot.DEFINITION_CHOICE:
        return ("defchoice", inst.targets[0], frozenset(o.label for o in inst.options))
    if slot is EiSlot.DUPLICATE:
        return ("dup", pair_key(inst.targets[0], inst.targets[1]))
    if slot is EiSlot.COMMON_NAME:
        return ("common", pair_key(inst.targets[0], inst.targets[1]))
    if slot is EiSlot.PARENT:
        return ("parent", inst.targets[0], frozenset(inst.option_ids()))
    raise ValueError(f"unknown slot {slot}")


def instance_live(state: PlatformState, inst: EiInstance) -> bool:
    """Whether an issued instance can still be answered meaningfully."""
    tree = state.tree
    targets = [tree.get(t) for t in inst.targets]
    if any(t is None for t in targets):
        return False
    slot = inst.slot
    if slot is EiSlot.CHILD_NAME:
        parent = tree.get(inst.parent_id or "")
        return (
            parent is not None
            and parent.active
            and parent.state is ElementState.VALIDATED
        )
    if slot is EiSlot.DEFINITION_NAME:
        el = targets[0]
        return el.active and el.state is ElementState.VALIDATED and el.definition is None
    if slot is EiSlot.CONFIRM:
        return targets[0].active
    if slot is EiSlot.PAIRWISE:
        a, b = targets
        return (
            tree.phase is not Phase.STRUCTURE
            and a.active
            and b.active
            and a.state is ElementState.VALIDATED
            and b.state is ElementState.VALIDATED
            and a.parent_id == b.parent_id
        )
    if slot is EiSlot.SIBLING_CHOICE:
        current = {
            e.id
            for e in tree.elements.values()
            if e.active and e.parent_id == inst.parent_id
        }
        return current == inst.option_ids() and len(current) >= 3
    if slot is EiSlot.DEFINITION_CHOICE:
        el = targets[0]
        if not (
            el.active and el.state is ElementState.VALIDATED and el.definition is None
        ):
            return False
        texts = {c.text for c in el.definition_candidates}
        return {o.label for o in inst.options} == texts and len(texts) >= 2
    if slot is EiSlot.DUPLICATE:
        a, b = targets
        key = pair_key(a.id, b.id)
        stats = state.pair_stats.get(key)
        return (
            a.active
            and b.active
            and a.parent_id == b.parent_id
            and not (stats is not None and stats.resolved)
        )
    if slot is EiSlot.COMMON_NAME:
        a, b = targets
        proposal = state.proposals.get(pair_key(a.id, b.id))
        return (
            proposal is not None
            and not proposal.resolved
            and a.active
            and b.active
        )
    if slot is EiSlot.PARENT:
        el = targets[0]
        if not (el.active and el.state is ElementState.VALIDATED):
            return False
        for oid in inst.option_ids():
            option = tree.get(oid)
            if (
                option is None
                or not option.active
                or option.state is not ElementState.VALIDATED
            ):
                return False
        return True
    return False
