"""Catalog of the seven micro-question types.

Each type has a fixed schema entry, a deterministic English question
template, an answer-payload variant and a prerequisite predicate that
says when it may target a given part of the tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .model import (
    CHILD_KIND,
    PARENT_KIND,
    Element,
    ElementKind,
    ElementState,
    Phase,
    SooTree,
    sibling_groups,
)


class PayloadError(Exception):
    pass


class VariantMismatch(PayloadError):
    pass


class UnknownOption(PayloadError):
    pass


class OverCap(PayloadError):
    pass


class EmptyText(PayloadError):
    pass


class ArityMismatch(Exception):
    pass


class EiType(str, Enum):
    NAME = "name"
    CONFIRM = "confirm"
    PRIORITIZE_PAIRWISE = "prioritize_pairwise"
    CHOOSE_SET_BASED = "choose_set_based"
    IDENTIFY_DUPLICATES = "identify_duplicates"
    DETERMINE_COMMON_NAME = "determine_common_name"
    SELECT_PARENT = "select_parent"


EI_TABLE_ID: dict[EiType, int] = {
    EiType.NAME: 1,
    EiType.CONFIRM: 2,
    EiType.PRIORITIZE_PAIRWISE: 3,
    EiType.CHOOSE_SET_BASED: 4,
    EiType.IDENTIFY_DUPLICATES: 5,
    EiType.DETERMINE_COMMON_NAME: 6,
    EiType.SELECT_PARENT: 7,
}


class EiSlot(str, Enum):
    """What an instance is for; one type can serve more than one slot."""

    CHILD_NAME = "child_name"            # Name: collect children of a parent
    DEFINITION_NAME = "definition_name"  # Name: collect definition texts
    CONFIRM = "confirm"
    PAIRWISE = "pairwise"
    SIBLING_CHOICE = "sibling_choice"    # ChooseSetBased over sibling elements
    DEFINITION_CHOICE = "definition_choice"  # ChooseSetBased over definitions
    DUPLICATE = "duplicate"
    COMMON_NAME = "common_name"
    PARENT = "parent"


@dataclass(frozen=True)
class EiSchema:
    id: int
    description: str
    category: frozenset[str]
    elements_affected: frozenset[ElementKind]
    impact: str
    sample_question: str
    interaction: str


_NON_GOAL = frozenset(
    {ElementKind.OBJECTIVE, ElementKind.CRITERION, ElementKind.INDICATOR}
)

EI_SCHEMAS: dict[EiType, EiSchema] = {
    EiType.NAME: EiSchema(
        id=1,
        description="Asks for a new element of a given kind under a parent.",
        category=frozenset({"create"}),
        elements_affected=_NON_GOAL,
        impact="Adds an element candidate or raises naming support of an existing one.",
        sample_question="Please name a criterion, which is important to assess the objective Economy.",
        interaction="Typing in a name",
    ),
    EiType.CONFIRM: EiSchema(
        id=2,
        description="Asks whether a candidate belongs in the model.",
        category=frozenset({"validate"}),
        elements_affected=_NON_GOAL,
        impact="Raises or lowers the element's confirmation tally.",
        sample_question="Is Direct Costs a valid criterion to assess the objective Economy?",
        interaction="Choosing yes, no or 'I don't know'",
    ),
    EiType.PRIORITIZE_PAIRWISE: EiSchema(
        id=3,
        description="Asks which of two siblings matters more for their parent.",
        category=frozenset({"validate", "weigh"}),
        elements_affected=_NON_GOAL,
        impact="Feeds the pairwise comparison matrix of the sibling group.",
        sample_question=(
            "Which criterion is more important to describe the objective"
            " Economic Objective? Direct Costs or Indirect Costs?"
        ),
        interaction="Choosing a side and an intensity on a 9-level scale",
    ),
    EiType.CHOOSE_SET_BASED: EiSchema(
        id=4,
        description="Asks to pick the most relevant entries of an offered set, in order.",
        category=frozenset({"validate", "weigh"}),
        elements_affected=_NON_GOAL,
        impact="Distributes rank-based support over the chosen entries.",
        sample_question=(
            "Which 5 of the following criteria are the most important to assess"
            " the objective Economy? Select in order of importance."
        ),
        interaction="Choosing up to k entries of the offered set",
    ),
    EiType.IDENTIFY_DUPLICATES: EiSchema(
        id=5,
        description="Asks whether two siblings mean the same thing.",
        category=frozenset({"validate", "restructure"}),
        elements_affected=_NON_GOAL,
        impact="Feeds the duplicate tally that can open a merge proposal.",
        sample_question='Do you think, "Indirect Costs" and "Direct Costs" are the same criterion?',
        interaction="Choosing yes, no or 'I don't know'",
    ),
    EiType.DETERMINE_COMMON_NAME: EiSchema(
        id=6,
        description="Asks for one name covering a proposed duplicate pair.",
        category=frozenset({"name"}),
        elements_affected=_NON_GOAL,
        impact="Collects merge-name candidates; a validated one executes the merge.",
        sample_question='What is a common name for the criteria "Direct Costs" and "Indirect Costs"?',
        interaction="Entering a name",
    ),
    EiType.SELECT_PARENT: EiSchema(
        id=7,
        description="Asks for the most appropriate parent of an element.",
        category=frozenset({"validate", "restructure"}),
        elements_affected=frozenset({ElementKind.CRITERION, ElementKind.INDICATOR}),
        impact="Confirms the current position or accumulates relocation support.",
        sample_question=(
            'What is the most appropriate objective for the criterion "Direct Costs":'
            " Economical Objectives, Environmental Objectives or Social Objectives?"
        ),
        interaction="Choosing one of the offered parents or entering an alternative",
    ),
}

# 9-level bidirectional intensity scale mapped onto comparison ratios.
INTENSITY_RATIOS: dict[int, float] = {
    -4: 1 / 9, -3: 1 / 7, -2: 1 / 5, -1: 1 / 3,
    0: 1.0, 1: 3.0, 2: 5.0, 3: 7.0, 4: 9.0,
}

KIND_PLURAL: dict[ElementKind, str] = {
    ElementKind.GOAL: "goals",
    ElementKind.OBJECTIVE: "objectives",
    ElementKind.CRITERION: "criteria",
    ElementKind.INDICATOR: "indicators",
}

YES = "yes"
NO = "no"
DONT_KNOW = "dont_know"


@dataclass(frozen=True)
class Option:
    id: str
    label: str


CONFIRM_OPTIONS = (Option(YES, "Yes"), Option(NO, "No"), Option(DONT_KNOW, "I don't know"))


@dataclass
class EiInstance:
    id: str
    type: EiType
    slot: EiSlot
    targets: list[str]
    question_text: str
    options: list[Option] = field(default_factory=list)
    parent_id: str | None = None
    child_kind: ElementKind | None = None
    k: int | None = None
    allow_free_text: bool = False
    group_tags: list[str] = field(default_factory=list)
    created_at_seq: int = 0

    def option_ids(self) -> set[str]:
        return {o.id for o in self.options}


# --- answer payload variants -------------------------------------------------


@dataclass(frozen=True)
class NameText:
    text: str


@dataclass(frozen=True)
class ConfirmChoice:
    choice: str  # yes | no | dont_know


@dataclass(frozen=True)
class PairwiseJudgment:
    intensity: int  # -4..4, positive favors the first target


@dataclass(frozen=True)
class SetSelection:
    chosen: tuple[str, ...]  # ordered option ids, most important first


@dataclass(frozen=True)
class DuplicateVerdict:
    choice: str | None = None  # yes | no | dont_know
    overlap: int | None = None  # 7-point variant; >= 5 reads as yes


@dataclass(frozen=True)
class ParentChoice:
    parent_id: str | None = None
    alternative_name: str | None = None


AnswerPayload = (
    NameText | ConfirmChoice | PairwiseJudgment | SetSelection | DuplicateVerdict | ParentChoice
)


@dataclass
class Answer:
    ei_id: str
    participant_id: str
    payload: AnswerPayload
    at_seq: int = 0


def duplicate_says_yes(payload: DuplicateVerdict) -> bool | None:
    """Collapse either duplicate variant to yes/no; None for 'I don't know'."""
    if payload.overlap is not None:
        return payload.overlap >= 5
    if payload.choice == DONT_KNOW:
        return None
    return payload.choice == YES


def payload_to_json(payload: AnswerPayload) -> dict:
    if isinstance(payload, NameText):
        return {"kind": "name", "text": payload.text}
    if isinstance(payload, ConfirmChoice):
        return {"kind": "confirm", "choice": payload.choice}
    if isinstance(payload, PairwiseJudgment):
        return {"kind": "pairwise", "intensity": payload.intensity}
    if isinstance(payload, SetSelection):
        return {"kind": "set", "chosen": list(payload.chosen)}
    if isinstance(payload, DuplicateVerdict):
        return {"kind": "duplicate", "choice": payload.choice, "overlap": payload.overlap}
    if isinstance(payload, ParentChoice):
        return {
            "kind": "parent",
            "parentId": payload.parent_id,
            "alternativeName": payload.alternative_name,
        }
    raise VariantMismatch(f"unknown payload type {type(payload).__name__}")


def payload_from_json(data: dict) -> AnswerPayload:
    kind = data.get("kind")
    if kind == "name":
        return NameText(text=str(data["text"]))
    if kind == "confirm":
        return ConfirmChoice(choice=str(data["choice"]))
    if kind == "pairwise":
        return PairwiseJudgment(intensity=int(data["intensity"]))
    if kind == "set":
        return SetSelection(chosen=tuple(str(c) for c in data["chosen"]))
    if kind == "duplicate":
        overlap = data.get("overlap")
        return DuplicateVerdict(
            choice=data.get("choice"),
            overlap=None if overlap is None else int(overlap),
        )
    if kind == "parent":
        return ParentChoice(
            parent_id=data.get("parentId"),
            alternative_name=data.get("alternativeName"),
        )
    raise VariantMismatch(f"unknown payload kind {kind!r}")


# --- question rendering -------------------------------------------------------


def _join_or(labels: list[str]) -> str:
    if len(labels) <= 1:
        return labels[0] if labels else ""
    return ", ".join(labels[:-1]) + " or " + labels[-1]


def _article(word: str) -> str:
    return "an" if word[:1] in "aeiou" else "a"


def render_question(
    ei_type: EiType,
    targets: list[Element],
    slot: EiSlot | None = None,
    parent: Element | None = None,
    child_kind: ElementKind | None = None,
    k: int | None = None,
    option_labels: list[str] | None = None,
) -> str:
    """Deterministic question text with element names substituted verbatim."""
    if ei_type is EiType.NAME:
        if slot is EiSlot.DEFINITION_NAME:
            if len(targets) != 1:
                raise ArityMismatch("definition naming takes one target")
            el = targets[0]
            return f"Please provide a short definition for the {el.kind.value} {el.name}."
        if parent is None or child_kind is None:
            raise ArityMismatch("child naming needs a parent and a child kind")
        return (
            f"Please name {_article(child_kind.value)} {child_kind.value},"
            f" which is important to assess the {parent.kind.value} {parent.name}."
        )
    if ei_type is EiType.CONFIRM:
        if len(targets) != 1 or parent is None:
            raise ArityMismatch("confirm takes one target and its parent")
        el = targets[0]
        return (
            f"Is {el.name} a valid {el.kind.value} to assess"
            f" the {parent.kind.value} {parent.name}?"
        )
    if ei_type is EiType.PRIORITIZE_PAIRWISE:
        if len(targets) != 2 or parent is None:
            raise ArityMismatch("pairwise comparison takes two siblings and their parent")
        a, b = targets
        return (
            f"Which {a.kind.value} is more important to describe"
            f" the {parent.kind.value} {parent.name}? {a.name} or {b.name}?"
        )
    if ei_type is EiType.CHOOSE_SET_BASED:
        if slot is EiSlot.DEFINITION_CHOICE:
            if len(targets) != 1:
                raise ArityMismatch("definition choice takes one target")
            el = targets[0]
            return f"Which definition fits the {el.kind.value} {el.name} best?"
        if parent is None or not targets or k is None:
            raise ArityMismatch("set-based choice needs siblings, their parent and a cap")
        plural = KIND_PLURAL[targets[0].kind]
        return (
            f"Which {k} of the following {plural} are the most important to assess"
            f" the {parent.kind.value} {parent.name}? Select in order of importance."
        )
    if ei_type is EiType.IDENTIFY_DUPLICATES:
        if len(targets) != 2:
            raise ArityMismatch("duplicate check takes two siblings")
        a, b = targets
        return f'Do you think, "{a.name}" and "{b.name}" are the same {a.kind.value}?'
    if ei_type is EiType.DETERMINE_COMMON_NAME:
        if len(targets) < 2:
            raise ArityMismatch("common naming takes at least two elements")
        plural = KIND_PLURAL[targets[0].kind]
        quoted = _join_or([f'"{t.name}"' for t in targets]).replace(" or ", " and ")
        return f"What is a common name for the {plural} {quoted}?"
    if ei_type is EiType.SELECT_PARENT:
        if len(targets) != 1 or not option_labels:
            raise ArityMismatch("parent selection takes one target and offered parents")
        el = targets[0]
        parent_kind = PARENT_KIND[el.kind]
        assert parent_kind is not None
        listed = _join_or(option_labels)
        return (
            f'What is the most appropriate {parent_kind.value} for the'
            f' {el.kind.value} "{el.name}": {listed}?'
            " Provide an alternative, if no suggestion fits."
        )
    raise ArityMismatch(f"unknown type {ei_type}")


# --- payload validation -------------------------------------------------------


def validate_answer_payload(instance: EiInstance, payload: AnswerPayload) -> None:
    """Raise a PayloadError unless the payload fits the instance."""
    t = instance.type
    if t in (EiType.NAME, EiType.DETERMINE_COMMON_NAME):
        if not isinstance(payload, NameText):
            raise VariantMismatch(f"{t.value} expects a text payload")
        if not payload.text.strip():
            raise EmptyText("empty name")
        return
    if t is EiType.CONFIRM:
        if not isinstance(payload, ConfirmChoice):
            raise VariantMismatch("confirm expects a yes/no/dont_know payload")
        if payload.choice not in (YES, NO, DONT_KNOW):
            raise UnknownOption(payload.choice)
        return
    if t is EiType.PRIORITIZE_PAIRWISE:
        if not isinstance(payload, PairwiseJudgment):
            raise VariantMismatch("pairwise expects an intensity payload")
        if payload.intensity not in INTENSITY_RATIOS:
            raise UnknownOption(f"intensity {payload.intensity}")
        return
    if t is EiType.CHOOSE_SET_BASED:
        if not isinstance(payload, SetSelection):
            raise VariantMismatch("set-based choice expects an ordered selection")
        if not payload.chosen:
            raise VariantMismatch("empty selection")
        if instance.k is not None and len(payload.chosen) > instance.k:
            raise OverCap(f"{len(payload.chosen)} > k={instance.k}")
        offered = instance.option_ids()
        if len(set(payload.chosen)) != len(payload.chosen):
            raise UnknownOption("duplicate selection")
        for cid in payload.chosen:
            if cid not in offered:
                raise UnknownOption(cid)
        return
    if t is EiType.IDENTIFY_DUPLICATES:
        if not isinstance(payload, DuplicateVerdict):
            raise VariantMismatch("duplicate check expects a verdict payload")
        if (payload.choice is None) == (payload.overlap is None):
            raise VariantMismatch("exactly one of choice/overlap must be set")
        if payload.choice is not None and payload.choice not in (YES, NO, DONT_KNOW):
            raise UnknownOption(payload.choice)
        if payload.overlap is not None and not 1 <= payload.overlap <= 7:
            raise UnknownOption(f"overlap {payload.overlap}")
        return
    if t is EiType.SELECT_PARENT:
        if not isinstance(payload, ParentChoice):
            raise VariantMismatch("parent selection expects a parent payload")
        if (payload.parent_id is None) == (payload.alternative_name is None):
            raise VariantMismatch("exactly one of parentId/alternativeName must be set")
        if payload.parent_id is not None and payload.parent_id not in instance.option_ids():
            raise UnknownOption(payload.parent_id)
        if payload.alternative_name is not None and not payload.alternative_name.strip():
            raise EmptyText("empty alternative parent name")
        return
    raise VariantMismatch(f"unknown type {t}")


# --- prerequisites ------------------------------------------------------------


def applicable_ei_types(
    tree: SooTree,
    pair_stats: Mapping[tuple[str, str], object],
    phase: Phase,
) -> set[tuple]:
    """All (type, target descriptor) combinations whose prerequisites hold.

    Descriptors are hashable tuples naming the concrete targets, e.g.
    (NAME, parent_id, child_kind) or (IDENTIFY_DUPLICATES, (a, b)).
    """
    out: set[tuple] = set()
    if tree.goal_id is None:
        return out
    validated = [
        e for e in tree.elements.values() if e.active and e.state is ElementState.VALIDATED
    ]
    for el in validated:
        child_kind = CHILD_KIND[el.kind]
        if child_kind is not None:
            out.add((EiType.NAME, el.id, child_kind))
    for el in tree.elements.values():
        if el.active and el.state is ElementState.CANDIDATE:
            out.add((EiType.CONFIRM, el.id))
    groups = sibling_groups(tree)
    for parent_id, kids in groups.items():
        if len(kids) >= 3:
            out.add((EiType.CHOOSE_SET_BASED, parent_id, frozenset(k.id for k in kids)))
        for i, a in enumerate(kids):
            for b in kids[i + 1:]:
                key = (a.id, b.id)
                stats = pair_stats.get(key)
                resolved = bool(getattr(stats, "resolved", False))
                if not resolved:
                    out.add((EiType.IDENTIFY_DUPLICATES, key))
                if stats is not None and getattr(stats, "proposed", False) and not resolved:
                    out.add((EiType.DETERMINE_COMMON_NAME, key))
                if (
                    phase is not Phase.STRUCTURE
                    and a.state is ElementState.VALIDATED
                    and b.state is ElementState.VALIDATED
                ):
                    out.add((EiType.PRIORITIZE_PAIRWISE, parent_id, key))
    for el in validated:
        if el.kind is ElementKind.GOAL:
            continue
        required = PARENT_KIND[el.kind]
        candidates = [
            p
            for p in validated
            if p.kind is required and p.id != el.id
        ]
        if len(candidates) >= 2:
            out.add((EiType.SELECT_PARENT, el.id))
    return out
