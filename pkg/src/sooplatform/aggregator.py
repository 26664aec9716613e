"""Folds weighted answers into the tree.

Carries the decision rules (validation, removal, duplicate proposals,
merges, relocation, milestones) and the pairwise-comparison kernel
(weighted geometric-mean aggregation, row geometric-mean weight
derivation, consistency ratio). Decisions run on exact rationals; only
the comparison-matrix algebra uses floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .ei import (
    Answer,
    ConfirmChoice,
    DuplicateVerdict,
    EiInstance,
    EiSlot,
    NameText,
    ParentChoice,
    SetSelection,
    YES,
    NO,
    duplicate_says_yes,
)
from .events import Event, EventType
from .model import (
    ElementKind,
    ElementState,
    KindMismatch,
    PARENT_KIND,
    Phase,
    SooTree,
    TransferFunction,
    ValidityRecord,
    WeightSet,
    canonical_snapshot,
    find_active_sibling,
    frac_from_str,
    frac_to_str,
    normalize_name,
)
from .policy import AggregationPolicy, rate_at_least, weight_at_least
from .state import PairStats, PlatformState, pair_key

Emit = Callable[[EventType, dict], Event]


class AggregationError(Exception):
    pass


class NotSiblings(AggregationError):
    pass


class NameNotValidated(AggregationError):
    pass


class MissingIndicatorValue(AggregationError):
    pass


class Resolution(Enum):
    VALIDATED = "validated"
    REMOVED = "removed"
    PENDING = "pending"


class ParentOutcome(Enum):
    KEEP = "keep"
    RELOCATE = "relocate"
    PENDING = "pending"


# --- element-level decision rules ----------------------------------------------


def element_validity(record: ValidityRecord, policy: AggregationPolicy) -> Fraction:
    """Share of weighted support in [0,1]; naming counts as confirmation."""
    return record.rate(Fraction(policy.naming_unit))


def resolve_validation(record: ValidityRecord, policy: AggregationPolicy) -> Resolution:
    """Validate on enough high-rate support, remove on enough high-rate rejection."""
    unit = Fraction(policy.naming_unit)
    support = record.effective_confirm(unit)
    total = support + record.reject_weight
    if weight_at_least(support, policy.min_confirm_weight) and rate_at_least(
        support, total, policy.validate_rate
    ):
        return Resolution.VALIDATED
    if weight_at_least(record.reject_weight, policy.min_reject_weight) and rate_at_least(
        record.reject_weight, total, policy.reject_rate
    ):
        return Resolution.REMOVED
    return Resolution.PENDING


def propose_merge(stats: PairStats, policy: AggregationPolicy) -> bool:
    total = stats.total()
    return weight_at_least(total, policy.min_duplicate_answers) and rate_at_least(
        stats.yes_weight, total, policy.merge_similarity_rate
    )


def resolve_parent(
    record: ValidityRecord, policy: AggregationPolicy
) -> tuple[ParentOutcome, str | None]:
    """Keep, relocate to the dominant alternative, or wait for more evidence."""
    total = record.structure_total()
    if not weight_at_least(total, policy.min_structure_weight):
        return ParentOutcome.PENDING, None
    candidates = sorted(
        record.structure_relocate_weight.items(), key=lambda kv: (-kv[1], kv[0])
    )
    if candidates:
        best_id, best_weight = candidates[0]
        if rate_at_least(best_weight, total, policy.relocate_rate):
            return ParentOutcome.RELOCATE, best_id
    if rate_at_least(record.structure_confirm_weight, total, policy.relocate_rate):
        return ParentOutcome.KEEP, None
    return ParentOutcome.PENDING, None


def borda_scores(chosen: Sequence[str]) -> dict[str, Fraction]:
    """Rank scores (m-p+1)/(1+..+m) for an ordered selection; they sum to 1."""
    m = len(chosen)
    if m == 0:
        return {}
    denom = m * (m + 1) // 2
    return {cid: Fraction(m - pos, denom) for pos, cid in enumerate(chosen)}


# --- pairwise comparison kernel --------------------------------------------------

# Standard random-index values for the consistency ratio.
RANDOM_INDEX = {
    1: 0.0, 2: 0.0, 3: 0.58, 4: 0.90, 5: 1.12, 6: 1.24, 7: 1.32,
    8: 1.41, 9: 1.45, 10: 1.49, 11: 1.51, 12: 1.54, 13: 1.56,
    14: 1.57, 15: 1.58,
}


@dataclass
class PairwiseMatrix:
    order: list[str]
    values: list[list[float]]

    @property
    def n(self) -> int:
        return len(self.order)


def build_pairwise_matrix(
    judgments: Mapping[tuple[str, str], Sequence[tuple[float, Fraction]]],
    siblings: Sequence[str],
) -> PairwiseMatrix:
    """Aggregate per-pair judgments by weighted geometric mean.

    Judgment weights are normalized as exact rationals before any float
    math, so a uniform rescaling of answer weights cannot change the
    resulting matrix. Unjudged pairs default to 1; reciprocity holds by
    construction.
    """
    order = list(siblings)
    n = len(order)
    a = [[1.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            key = pair_key(order[i], order[j])
            entries = judgments.get(key, ())
            if not entries:
                continue
            total = sum((w for _, w in entries), Fraction(0))
            if total <= 0:
                continue
            log_mean = sum(
                float(w / total) * math.log(ratio) for ratio, w in entries
            )
            value = math.exp(log_mean)
            if order[i] != key[0]:
                value = 1.0 / value
            a[i][j] = value
            a[j][i] = 1.0 / value
    return PairwiseMatrix(order=order, values=a)


def derive_weights(matrix: PairwiseMatrix) -> list[float]:
    """Row geometric-mean weights, normalized to sum 1 (exact on consistent input)."""
    n = matrix.n
    if n == 0:
        return []
    raw = [
        math.exp(sum(math.log(matrix.values[i][j]) for j in range(n)) / n)
        for i in range(n)
    ]
    total = sum(raw)
    return [x / total for x in raw]


def principal_eigenvalue(
    values: Sequence[Sequence[float]], tol: float = 1e-10, max_iter: int = 10000
) -> float:
    n = len(values)
    vec = [1.0 / n] * n
    lam_prev = 0.0
    for _ in range(max_iter):
        nxt = [sum(values[i][j] * vec[j] for j in range(n)) for i in range(n)]
        lam = sum(nxt)
        vec = [x / lam for x in nxt]
        if abs(lam - lam_prev) < tol:
            return lam
        lam_prev = lam
    return lam_prev


def consistency_ratio(matrix: PairwiseMatrix) -> float:
    """Saaty consistency ratio; 0 for n <= 2 by definition."""
    n = matrix.n
    if n <= 2:
        return 0.0
    lam = principal_eigenvalue(matrix.values)
    index = (lam - n) / (n - 1)
    ri = RANDOM_INDEX.get(n, RANDOM_INDEX[max(RANDOM_INDEX)])
    return max(index / ri, 0.0)


# --- milestones -------------------------------------------------------------------


def milestone_ready(state: PlatformState) -> bool:
    """All actives validated, mean validity over threshold, quiet window met."""
    tree = state.tree
    if tree.phase is not Phase.STRUCTURE or tree.goal_id is None:
        return False
    actives = [e for e in tree.active_elements() if e.id != tree.goal_id]
    if not actives:
        return False
    if any(e.state is not ElementState.VALIDATED for e in actives):
        return False
    policy = state.policy
    total_validity = sum(
        (element_validity(e.validity, policy) for e in actives), Fraction(0)
    )
    if not rate_at_least(total_validity, Fraction(len(actives)), policy.milestone_avg_validity):
        return False
    return state.quiet_answers >= policy.stability_window


# --- assessment --------------------------------------------------------------------


def global_weights(tree: SooTree, weight_set: WeightSet) -> dict[str, float]:
    """Product of sibling weights along the path from the goal, per element."""
    out: dict[str, float] = {}
    if tree.goal_id is None:
        return out
    out[tree.goal_id] = 1.0
    pending = [tree.goal_id]
    while pending:
        parent_id = pending.pop()
        for el in tree.active_elements():
            if el.parent_id != parent_id or el.id in out:
                continue
            if el.id not in weight_set.weights:
                continue
            out[el.id] = out[parent_id] * weight_set.weights[el.id]
            pending.append(el.id)
    return out


def assess_alternatives(
    indicator_weights: dict[str, float],
    alternatives: Mapping[str, Mapping[str, float]],
    directions: Mapping[str, str] | None = None,
) -> list[tuple[str, float]]:
    """Weighted-sum scores over min-max normalized indicator values, ranked."""
    directions = directions or {}
    transfers: dict[str, TransferFunction] = {}
    for ind in indicator_weights:
        observed = []
        for alt_name, values in alternatives.items():
            if ind not in values:
                raise MissingIndicatorValue(f"{alt_name} lacks a value for {ind}")
            observed.append(values[ind])
        transfers[ind] = TransferFunction(
            direction=directions.get(ind, "benefit"),
            lo=min(observed),
            hi=max(observed),
        )
    ranked = []
    for alt_name, values in alternatives.items():
        score = sum(
            weight * transfers[ind].normalize(values[ind])
            for ind, weight in indicator_weights.items()
        )
        ranked.append((alt_name, score))
    ranked.sort(key=lambda pair: (-pair[1], pair[0]))
    return ranked


# --- answer folding ------------------------------------------------------------------


def apply_answer(
    state: PlatformState, inst: EiInstance, answer: Answer, weight: Fraction, emit: Emit
) -> None:
    """Dispatch one validated, non-stale answer to its aggregation rule."""
    slot = inst.slot
    if slot is EiSlot.CHILD_NAME:
        assert isinstance(answer.payload, NameText)
        _fold_name(
            state, emit, inst.child_kind, answer.payload.text, inst.parent_id,
            answer.participant_id, weight,
        )
    elif slot is EiSlot.DEFINITION_NAME:
        assert isinstance(answer.payload, NameText)
        _fold_definition(state, emit, inst.targets[0], answer.payload.text, weight)
    elif slot is EiSlot.CONFIRM:
        assert isinstance(answer.payload, ConfirmChoice)
        _fold_confirm(state, emit, inst.targets[0], answer.payload.choice, weight)
    elif slot is EiSlot.PAIRWISE:
        # The judgment itself is recorded by the answer fold; refresh weights.
        _emit_group_weights(state, emit, inst.parent_id)
    elif slot is EiSlot.SIBLING_CHOICE:
        assert isinstance(answer.payload, SetSelection)
        _fold_sibling_choice(state, emit, answer.payload.chosen, weight)
    elif slot is EiSlot.DEFINITION_CHOICE:
        assert isinstance(answer.payload, SetSelection)
        _fold_definition_choice(state, emit, inst, answer.payload.chosen, weight)
    elif slot is EiSlot.DUPLICATE:
        assert isinstance(answer.payload, DuplicateVerdict)
        _fold_duplicate(state, emit, inst, answer.payload, weight)
    elif slot is EiSlot.COMMON_NAME:
        assert isinstance(answer.payload, NameText)
        _fold_common_name(state, emit, inst, answer.payload.text, answer.participant_id, weight)
    elif slot is EiSlot.PARENT:
        assert isinstance(answer.payload, ParentChoice)
        _fold_parent_choice(state, emit, inst, answer.payload, answer.participant_id, weight)
    else:  # pragma: no cover - enumeration is total
        raise AggregationError(f"no aggregation rule for slot {slot}")


def _emit_element_record(
    state: PlatformState, emit: Emit, element_id: str, record: ValidityRecord,
    merge_pair: tuple[str, str] | None = None,
) -> None:
    payload = {"scope": "element", "elementId": element_id, "record": record.to_json()}
    if merge_pair is not None:
        payload["mergePair"] = list(merge_pair)
    emit(EventType.VALIDITY_UPDATED, payload)


def _check_resolution(state: PlatformState, emit: Emit, element_id: str) -> None:
    el = state.tree.element(element_id)
    if el.state is not ElementState.CANDIDATE:
        return
    outcome = resolve_validation(el.validity, state.policy)
    if outcome is Resolution.VALIDATED:
        emit(EventType.ELEMENT_VALIDATED, {"elementId": element_id})
        _maybe_execute_linked_merge(state, emit, element_id)
    elif outcome is Resolution.REMOVED:
        emit(EventType.ELEMENT_REMOVED, {"elementId": element_id})


def _fold_name(
    state: PlatformState,
    emit: Emit,
    kind,
    text: str,
    parent_id: str | None,
    creator: str,
    weight: Fraction,
    merge_pair: tuple[str, str] | None = None,
) -> str:
    """Create a candidate or fold the name into an existing active sibling."""
    tree = state.tree
    existing = find_active_sibling(tree, parent_id, text)
    if existing is not None:
        record = existing.validity.copy()
        record.naming_weight += weight
        _emit_element_record(state, emit, existing.id, record, merge_pair)
        _check_resolution(state, emit, existing.id)
        return existing.id
    element_id = f"e{tree.next_element_no:06d}"
    payload = {
        "elementId": element_id,
        "kind": kind.value,
        "name": text.strip(),
        "parentId": parent_id,
        "createdBy": creator,
        "namingWeight": frac_to_str(weight),
    }
    if merge_pair is not None:
        payload["mergePair"] = list(merge_pair)
    emit(EventType.ELEMENT_CREATED, payload)
    _check_resolution(state, emit, element_id)
    return element_id


def _fold_confirm(
    state: PlatformState, emit: Emit, element_id: str, choice: str, weight: Fraction
) -> None:
    el = state.tree.element(element_id)
    record = el.validity.copy()
    if choice == YES:
        record.confirm_weight += weight
    elif choice == NO:
        record.reject_weight += weight
    else:
        record.dont_know_count += 1
    _emit_element_record(state, emit, element_id, record)
    _check_resolution(state, emit, element_id)


def _fold_sibling_choice(
    state: PlatformState, emit: Emit, chosen: Sequence[str], weight: Fraction
) -> None:
    scores = borda_scores(chosen)
    for element_id in chosen:
        el = state.tree.get(element_id)
        if el is None or not el.active:
            continue
        record = el.validity.copy()
        record.confirm_weight += weight * scores[element_id]
        _emit_element_record(state, emit, element_id, record)
        _check_resolution(state, emit, element_id)


def _definition_payload(state: PlatformState, element_id: str) -> list[dict]:
    el = state.tree.element(element_id)
    return [
        {"text": c.text, "support": frac_to_str(c.record.confirm_weight)}
        for c in el.definition_candidates
    ]


def _fold_definition(
    state: PlatformState, emit: Emit, element_id: str, text: str, weight: Fraction
) -> None:
    wanted = normalize_name(text)
    candidates = _definition_payload(state, element_id)
    for entry in candidates:
        if normalize_name(entry["text"]) == wanted:
            entry["support"] = frac_to_str(frac_from_str(entry["support"]) + weight)
            break
    else:
        candidates.append({"text": text.strip(), "support": frac_to_str(weight)})
    emit(
        EventType.VALIDITY_UPDATED,
        {"scope": "definition", "elementId": element_id, "candidates": candidates},
    )
    _check_definition_adoption(state, emit, element_id)


def _fold_definition_choice(
    state: PlatformState, emit: Emit, inst: EiInstance, chosen: Sequence[str], weight: Fraction
) -> None:
    element_id = inst.targets[0]
    labels = {o.id: o.label for o in inst.options}
    scores = borda_scores(list(chosen))
    share_by_text = {normalize_name(labels[cid]): scores[cid] for cid in chosen}
    candidates = _definition_payload(state, element_id)
    for entry in candidates:
        share = share_by_text.get(normalize_name(entry["text"]))
        if share is not None:
            entry["support"] = frac_to_str(frac_from_str(entry["support"]) + weight * share)
    emit(
        EventType.VALIDITY_UPDATED,
        {"scope": "definition", "elementId": element_id, "candidates": candidates},
    )
    _check_definition_adoption(state, emit, element_id)


def _check_definition_adoption(state: PlatformState, emit: Emit, element_id: str) -> None:
    el = state.tree.element(element_id)
    if el.definition is not None:
        return
    policy = state.policy
    total = sum((c.record.confirm_weight for c in el.definition_candidates), Fraction(0))
    for candidate in el.definition_candidates:
        support = candidate.record.confirm_weight
        if weight_at_least(support, policy.min_confirm_weight) and rate_at_least(
            support, total, policy.validate_rate
        ):
            emit(
                EventType.DEFINITION_ADOPTED,
                {"elementId": element_id, "definition": candidate.text},
            )
            return


def _fold_duplicate(
    state: PlatformState, emit: Emit, inst: EiInstance, verdict: DuplicateVerdict,
    weight: Fraction,
) -> None:
    a, b = inst.targets
    key = pair_key(a, b)
    stats = state.stats_for_pair(*key)
    says = duplicate_says_yes(verdict)
    yes, no, dont_know = stats.yes_weight, stats.no_weight, stats.dont_know_count
    if says is True:
        yes += weight
    elif says is False:
        no += weight
    else:
        dont_know += 1
    emit(
        EventType.VALIDITY_UPDATED,
        {
            "scope": "pair",
            "a": key[0],
            "b": key[1],
            "yes": frac_to_str(yes),
            "no": frac_to_str(no),
            "dontKnow": dont_know,
        },
    )
    stats = state.stats_for_pair(*key)
    if not stats.proposed and propose_merge(stats, state.policy):
        parent_id = state.tree.element(a).parent_id
        emit(
            EventType.MERGE_PROPOSED,
            {"a": key[0], "b": key[1], "parentId": parent_id},
        )


def _fold_common_name(
    state: PlatformState, emit: Emit, inst: EiInstance, text: str, creator: str,
    weight: Fraction,
) -> None:
    key = pair_key(inst.targets[0], inst.targets[1])
    proposal = state.proposals.get(key)
    if proposal is None or proposal.resolved:
        return
    kind = state.tree.element(inst.targets[0]).kind
    element_id = _fold_name(
        state, emit, kind, text, proposal.parent_id, creator, weight, merge_pair=key
    )
    _maybe_execute_linked_merge(state, emit, element_id)


def _maybe_execute_linked_merge(state: PlatformState, emit: Emit, element_id: str) -> None:
    """Execute the linked merge once its common-name element qualifies."""
    key = state.merge_link.get(element_id)
    if key is None:
        return
    proposal = state.proposals.get(key)
    if proposal is None or proposal.resolved:
        return
    tree = state.tree
    members = [tree.get(m) for m in key]
    if any(m is None or not m.active for m in members):
        return
    el = tree.element(element_id)
    if el.state is not ElementState.VALIDATED:
        return
    policy = state.policy
    record = el.validity
    support = record.effective_confirm(Fraction(policy.naming_unit))
    total = support + record.reject_weight
    if not (
        weight_at_least(support, policy.common_name_min_weight)
        and rate_at_least(support, total, policy.common_name_validate_rate)
    ):
        return
    execute_merge(state, emit, list(key), element_id)


def execute_merge(
    state: PlatformState, emit: Emit, member_ids: list[str], common_name_id: str
) -> str:
    """Merge the members into the validated common-name element.

    The survivor may be one of the members (when its name won) or a
    fresh sibling created from common-name answers. Children move under
    the survivor; colliding child names fold together so sibling-name
    uniqueness survives the move.
    """
    tree = state.tree
    members = sorted(set(member_ids))
    if len(members) < 2:
        raise NotSiblings("a merge needs at least two members")
    elements = []
    for mid in members:
        el = tree.get(mid)
        if el is None or not el.active:
            raise NotSiblings(f"member {mid} is not active")
        elements.append(el)
    parents = {e.parent_id for e in elements}
    if len(parents) != 1:
        raise NotSiblings("members are not siblings")
    survivor = tree.get(common_name_id)
    if survivor is None or not survivor.active:
        raise NameNotValidated(f"{common_name_id} is not active")
    if survivor.state is not ElementState.VALIDATED:
        raise NameNotValidated(f"{common_name_id} has not been validated")
    if common_name_id not in members and survivor.parent_id not in parents:
        raise NotSiblings("common-name element is not a sibling of the members")
    pair = (members[0], members[1])
    emit(
        EventType.ELEMENTS_MERGED,
        {"survivorId": common_name_id, "memberIds": members, "pair": list(pair)},
    )
    if tree.phase is not Phase.STRUCTURE:
        _emit_group_weights(state, emit, survivor.parent_id)
    return common_name_id


def _fold_parent_choice(
    state: PlatformState, emit: Emit, inst: EiInstance, choice: ParentChoice,
    creator: str, weight: Fraction,
) -> None:
    element_id = inst.targets[0]
    el = state.tree.element(element_id)
    if choice.alternative_name is not None:
        # route the free-text alternative through the ordinary naming path
        target_kind = PARENT_KIND[el.kind]
        if target_kind is ElementKind.GOAL or el.parent_id is None:
            return
        parent = state.tree.element(el.parent_id)
        _fold_name(
            state, emit, target_kind, choice.alternative_name, parent.parent_id,
            creator, weight,
        )
        return
    record = el.validity.copy()
    if choice.parent_id == el.parent_id:
        record.structure_confirm_weight += weight
    else:
        record.structure_relocate_weight[choice.parent_id] = (
            record.structure_relocate_weight.get(choice.parent_id, Fraction(0)) + weight
        )
    _emit_element_record(state, emit, element_id, record)
    outcome, target_id = resolve_parent(state.tree.element(element_id).validity, state.policy)
    if outcome is not ParentOutcome.RELOCATE or target_id == el.parent_id:
        return
    target = state.tree.get(target_id)
    if target is None or not target.active:
        return
    if target.kind is not PARENT_KIND[el.kind]:
        raise KindMismatch(
            f"cannot relocate {el.kind.value} under {target.kind.value}"
        )
    if find_active_sibling(state.tree, target_id, el.name) is not None:
        # a same-named sibling lives there; refuse and restart the tally
        cleared = state.tree.element(element_id).validity.copy()
        cleared.structure_confirm_weight = Fraction(0)
        cleared.structure_relocate_weight = {}
        _emit_element_record(state, emit, element_id, cleared)
        return
    old_parent = el.parent_id
    emit(
        EventType.PARENT_REASSIGNED,
        {"elementId": element_id, "fromParentId": old_parent, "toParentId": target_id},
    )
    if state.tree.phase is not Phase.STRUCTURE:
        _emit_group_weights(state, emit, old_parent)
        _emit_group_weights(state, emit, target_id)


# --- weights and milestones -----------------------------------------------------------


def validated_children(tree: SooTree, parent_id: str | None) -> list[str]:
    return sorted(
        e.id
        for e in tree.elements.values()
        if e.active
        and e.parent_id == parent_id
        and e.state is ElementState.VALIDATED
    )


def _emit_group_weights(state: PlatformState, emit: Emit, parent_id: str | None) -> None:
    if parent_id is None:
        return
    kids = validated_children(state.tree, parent_id)
    if not kids:
        return
    matrix = build_pairwise_matrix(state.judgments, kids)
    weights = derive_weights(matrix)
    emit(
        EventType.WEIGHTS_COMPUTED,
        {
            "parentId": parent_id,
            "weights": {kid: w for kid, w in zip(kids, weights)},
            "consistencyRatio": consistency_ratio(matrix),
        },
    )


def create_milestone(state: PlatformState, emit: Emit, forced: bool = False) -> str:
    """Freeze the current tree and switch to the weighting phase."""
    snapshot, digest = canonical_snapshot(state.tree)
    milestone_id = f"m{state.next_milestone_no:03d}"
    emit(
        EventType.MILESTONE_CREATED,
        {
            "milestoneId": milestone_id,
            "snapshot": snapshot.decode("utf-8"),
            "snapshotHash": digest,
            "forced": forced,
        },
    )
    for parent_id in sorted(
        {
            e.parent_id
            for e in state.tree.active_elements()
            if e.parent_id is not None
        }
    ):
        _emit_group_weights(state, emit, parent_id)
    return milestone_id


def maybe_create_milestone(state: PlatformState, emit: Emit) -> str | None:
    if milestone_ready(state):
        return create_milestone(state, emit, forced=False)
    return None
