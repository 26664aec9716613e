"""Gap analysis and micro-question stream assembly.

Looks at the current tree for missing information, keeps one open
instance per gap, and samples a personal, non-repeating stream with
priority-proportional probabilities from a seeded generator.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .aggregator import ParentOutcome, resolve_parent
from .ei import (
    CONFIRM_OPTIONS,
    EiInstance,
    EiSlot,
    EiType,
    Option,
    render_question,
)
from .events import Event, EventType, instance_to_json
from .model import (
    CHILD_KIND,
    Element,
    ElementKind,
    ElementState,
    PARENT_KIND,
    Phase,
    sibling_groups,
)
from .participants import Participant
from .state import PlatformState, instance_descriptor, instance_live, pair_key

from typing import Callable

Emit = Callable[[EventType, dict], Event]


@dataclass
class StreamRequest:
    participant_id: str
    count: int
    seed: int


@dataclass
class GapReport:
    missing_children: list[tuple[str, ElementKind]] = field(default_factory=list)
    pending_validations: list[tuple[str, float]] = field(default_factory=list)
    unchecked_pairs: list[tuple[str, str]] = field(default_factory=list)
    pending_merges: list[tuple[str, str]] = field(default_factory=list)
    structure_checks: list[str] = field(default_factory=list)
    pending_pairwise: list[tuple[str, tuple[str, str]]] = field(default_factory=list)
    definition_gaps: list[str] = field(default_factory=list)

    def empty(self) -> bool:
        return not (
            self.missing_children
            or self.pending_validations
            or self.unchecked_pairs
            or self.pending_merges
            or self.structure_checks
            or self.pending_pairwise
            or self.definition_gaps
        )


def _validation_progress(state: PlatformState, element_id: str) -> float:
    policy = state.policy
    record = state.tree.element(element_id).validity
    support = record.effective_confirm(Fraction(policy.naming_unit))
    toward_validate = float(support) / policy.min_confirm_weight
    toward_remove = float(record.reject_weight) / policy.min_reject_weight
    return min(max(toward_validate, toward_remove), 0.99)


def _possible_parents(state: PlatformState, element: Element) -> list[Element]:
    required = PARENT_KIND[element.kind]
    return sorted(
        (
            p
            for p in state.tree.elements.values()
            if p.active
            and p.state is ElementState.VALIDATED
            and p.kind is required
        ),
        key=lambda p: p.id,
    )


def analyze_gaps(state: PlatformState) -> GapReport:
    """Exhaustive gap scan; every list is deterministically ordered."""
    report = GapReport()
    tree = state.tree
    if tree.goal_id is None:
        return report
    policy = state.policy
    for el in sorted(tree.active_elements(), key=lambda e: e.id):
        if el.state is ElementState.VALIDATED:
            child_kind = CHILD_KIND[el.kind]
            if child_kind is not None:
                report.missing_children.append((el.id, child_kind))
            if el.kind is not ElementKind.GOAL:
                if el.definition is None:
                    report.definition_gaps.append(el.id)
                record = el.validity
                outcome, _ = resolve_parent(record, policy)
                if outcome is ParentOutcome.PENDING and len(_possible_parents(state, el)) >= 2:
                    report.structure_checks.append(el.id)
        else:
            report.pending_validations.append((el.id, _validation_progress(state, el.id)))
    groups = sibling_groups(tree)
    for parent_id in sorted(groups):
        kids = groups[parent_id]
        for i, a in enumerate(kids):
            for b in kids[i + 1:]:
                key = pair_key(a.id, b.id)
                stats = state.pair_stats.get(key)
                if stats is not None and stats.resolved:
                    continue
                if stats is not None and stats.proposed:
                    continue
                total = stats.total() if stats is not None else Fraction(0)
                if total < Fraction(policy.min_duplicate_answers):
                    report.unchecked_pairs.append(key)
                if (
                    tree.phase is not Phase.STRUCTURE
                    and a.state is ElementState.VALIDATED
                    and b.state is ElementState.VALIDATED
                ):
                    judged = sum(
                        (w for _, w in state.judgments.get(key, [])), Fraction(0)
                    )
                    if judged < Fraction(policy.pairwise_min_weight):
                        report.pending_pairwise.append((parent_id, key))
    for key in sorted(state.proposals):
        proposal = state.proposals[key]
        a, b = (tree.get(key[0]), tree.get(key[1]))
        if proposal.resolved or a is None or b is None:
            continue
        if a.active and b.active:
            report.pending_merges.append(key)
    return report


def _merge_progress(state: PlatformState, key: tuple[str, str]) -> float:
    proposal = state.proposals.get(key)
    if proposal is None:
        return 0.0
    policy = state.policy
    best = 0.0
    for cid in proposal.name_candidate_ids:
        el = state.tree.get(cid)
        if el is None or not el.active:
            continue
        support = el.validity.effective_confirm(Fraction(policy.naming_unit))
        best = max(best, float(support) / policy.common_name_min_weight)
    return min(best, 0.99)


def _ensure_instance(
    state: PlatformState, emit: Emit, build: Callable[[str], EiInstance]
) -> EiInstance | None:
    """Reuse the live instance for this descriptor or issue a fresh one."""
    probe = build("probe")
    descriptor = instance_descriptor(probe)
    existing_id = state.instance_by_descriptor.get(descriptor)
    if existing_id is not None:
        existing = state.instances[existing_id]
        if instance_live(state, existing):
            return existing
    inst = build(f"q{state.next_ei_no:06d}")
    inst.group_tags = list(
        state.policy.group_tag_rules.get(inst.slot.value, [])
    )
    emit(EventType.EI_ISSUED, instance_to_json(inst))
    return state.instances[inst.id]


def generate_instances(
    state: PlatformState, gaps: GapReport, emit: Emit
) -> list[tuple[EiInstance, float]]:
    """One open instance per gap item, with its current priority."""
    tree = state.tree
    policy = state.policy
    bases = policy.priority_bases
    out: list[tuple[EiInstance, float]] = []

    def add(inst: EiInstance | None, priority: float) -> None:
        if inst is not None:
            out.append((inst, priority))

    for parent_id, child_kind in gaps.missing_children:
        parent = tree.element(parent_id)
        n_children = sum(
            1 for e in tree.active_elements() if e.parent_id == parent_id
        )
        question = render_question(
            EiType.NAME, [], slot=EiSlot.CHILD_NAME, parent=parent, child_kind=child_kind
        )
        add(
            _ensure_instance(
                state,
                emit,
                lambda eid: EiInstance(
                    id=eid, type=EiType.NAME, slot=EiSlot.CHILD_NAME, targets=[parent_id],
                    question_text=question, parent_id=parent_id, child_kind=child_kind,
                ),
            ),
            bases["missing_children"] + min(0.99, 1.0 / (1.0 + n_children)),
        )

    for element_id, progress in gaps.pending_validations:
        el = tree.element(element_id)
        parent = tree.element(el.parent_id) if el.parent_id else None
        if parent is None:
            continue
        question = render_question(EiType.CONFIRM, [el], parent=parent)
        add(
            _ensure_instance(
                state,
                emit,
                lambda eid: EiInstance(
                    id=eid, type=EiType.CONFIRM, slot=EiSlot.CONFIRM, targets=[element_id],
                    question_text=question, options=list(CONFIRM_OPTIONS),
                    parent_id=el.parent_id,
                ),
            ),
            bases["pending_validations"] + progress,
        )

    # ordered set-based choice over groups that still contain candidates
    for parent_id, kids in sorted(sibling_groups(tree).items()):
        if len(kids) < 3 or all(k.state is ElementState.VALIDATED for k in kids):
            continue
        parent = tree.element(parent_id)
        options = [Option(k.id, k.name) for k in kids]
        cap = min(policy.choose_cap, len(kids))
        question = render_question(
            EiType.CHOOSE_SET_BASED, kids, parent=parent, k=cap
        )
        add(
            _ensure_instance(
                state,
                emit,
                lambda eid: EiInstance(
                    id=eid, type=EiType.CHOOSE_SET_BASED, slot=EiSlot.SIBLING_CHOICE,
                    targets=[k.id for k in kids], question_text=question,
                    options=options, parent_id=parent_id, k=cap,
                ),
            ),
            bases["pending_validations"],
        )

    for key in gaps.unchecked_pairs:
        a, b = tree.element(key[0]), tree.element(key[1])
        stats = state.pair_stats.get(key)
        total = float(stats.total()) if stats is not None else 0.0
        question = render_question(EiType.IDENTIFY_DUPLICATES, [a, b])
        add(
            _ensure_instance(
                state,
                emit,
                lambda eid: EiInstance(
                    id=eid, type=EiType.IDENTIFY_DUPLICATES, slot=EiSlot.DUPLICATE,
                    targets=[key[0], key[1]], question_text=question,
                    options=list(CONFIRM_OPTIONS), parent_id=a.parent_id,
                ),
            ),
            bases["unchecked_pairs"]
            + min(0.99, total / policy.min_duplicate_answers),
        )

    for key in gaps.pending_merges:
        a, b = tree.element(key[0]), tree.element(key[1])
        question = render_question(EiType.DETERMINE_COMMON_NAME, [a, b])
        add(
            _ensure_instance(
                state,
                emit,
                lambda eid: EiInstance(
                    id=eid, type=EiType.DETERMINE_COMMON_NAME, slot=EiSlot.COMMON_NAME,
                    targets=[key[0], key[1]], question_text=question,
                    parent_id=a.parent_id,
                ),
            ),
            bases["pending_merges"] + _merge_progress(state, key),
        )

    for element_id in gaps.structure_checks:
        el = tree.element(element_id)
        parents = _possible_parents(state, el)
        options = [Option(p.id, p.name) for p in parents]
        question = render_question(
            EiType.SELECT_PARENT, [el], option_labels=[p.name for p in parents]
        )
        total = float(el.validity.structure_total())
        add(
            _ensure_instance(
                state,
                emit,
                lambda eid: EiInstance(
                    id=eid, type=EiType.SELECT_PARENT, slot=EiSlot.PARENT,
                    targets=[element_id], question_text=question, options=options,
                    parent_id=el.parent_id, allow_free_text=True,
                ),
            ),
            bases["structure_checks"]
            + min(0.99, total / policy.min_structure_weight),
        )

    for element_id in gaps.definition_gaps:
        el = tree.element(element_id)
        question = render_question(EiType.NAME, [el], slot=EiSlot.DEFINITION_NAME)
        add(
            _ensure_instance(
                state,
                emit,
                lambda eid: EiInstance(
                    id=eid, type=EiType.NAME, slot=EiSlot.DEFINITION_NAME,
                    targets=[element_id], question_text=question,
                ),
            ),
            bases["definition_gaps"],
        )
        texts = [c.text for c in el.definition_candidates]
        if len(texts) >= 2:
            options = [Option(f"def{i}", text) for i, text in enumerate(texts)]
            question = render_question(
                EiType.CHOOSE_SET_BASED, [el], slot=EiSlot.DEFINITION_CHOICE
            )
            add(
                _ensure_instance(
                    state,
                    emit,
                    lambda eid: EiInstance(
                        id=eid, type=EiType.CHOOSE_SET_BASED, slot=EiSlot.DEFINITION_CHOICE,
                        targets=[element_id], question_text=question, options=options, k=1,
                    ),
                ),
                bases["definition_gaps"] + 0.5,
            )

    for parent_id, key in gaps.pending_pairwise:
        parent = tree.element(parent_id)
        a, b = tree.element(key[0]), tree.element(key[1])
        judged = float(
            sum((w for _, w in state.judgments.get(key, [])), Fraction(0))
        )
        question = render_question(EiType.PRIORITIZE_PAIRWISE, [a, b], parent=parent)
        add(
            _ensure_instance(
                state,
                emit,
                lambda eid: EiInstance(
                    id=eid, type=EiType.PRIORITIZE_PAIRWISE, slot=EiSlot.PAIRWISE,
                    targets=[key[0], key[1]], question_text=question, parent_id=parent_id,
                ),
            ),
            bases["pending_pairwise"] + min(0.99, judged / policy.pairwise_min_weight),
        )

    out.sort(key=lambda pair: (-pair[1], pair[0].id))
    return out


def select_stream(
    candidates: list[tuple[EiInstance, float]],
    participant: Participant,
    answered: set[str],
    request: StreamRequest,
    naming_competency_min: float,
) -> list[EiInstance]:
    """Personal non-repeating sample, probability proportional to priority."""
    creative = {EiType.NAME, EiType.DETERMINE_COMMON_NAME}
    pool: list[tuple[EiInstance, float]] = []
    for inst, priority in candidates:
        if inst.id in answered:
            continue
        if inst.type in creative and participant.competency < Fraction(
            naming_competency_min
        ):
            continue
        if inst.group_tags and participant.stakeholder_group.value not in inst.group_tags:
            continue
        pool.append((inst, priority))
    pool.sort(key=lambda pair: pair[0].id)
    rng = random.Random(f"{request.seed}:{participant.id}")
    picked: list[EiInstance] = []
    while pool and len(picked) < request.count:
        total = sum(priority for _, priority in pool)
        x = rng.random() * total
        cumulative = 0.0
        index = len(pool) - 1
        for i, (_, priority) in enumerate(pool):
            cumulative += priority
            if x < cumulative:
                index = i
                break
        picked.append(pool.pop(index)[0])
    return picked
