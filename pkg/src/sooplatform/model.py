"""Objective-hierarchy model: goal, objectives, criteria and indicators.

Holds the tree of elements with their lifecycle states and validity
tallies, and enforces the structural invariants (kind rules, sibling
name uniqueness, single rooted tree). All validity accounting uses
exact rationals so threshold decisions never depend on float rounding
or on a uniform rescaling of answer weights.
"""

from __future__ import annotations

import hashlib
import json
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction


class ModelError(Exception):
    """Base class for precondition violations on tree operations."""


class KindMismatch(ModelError):
    pass


class MissingParent(ModelError):
    pass


class EmptyName(ModelError):
    pass


class DuplicateGoal(ModelError):
    pass


class ElementKind(str, Enum):
    GOAL = "goal"
    OBJECTIVE = "objective"
    CRITERION = "criterion"
    INDICATOR = "indicator"


# Fixed parent relation: each kind hangs under exactly one other kind.
PARENT_KIND: dict[ElementKind, ElementKind | None] = {
    ElementKind.GOAL: None,
    ElementKind.OBJECTIVE: ElementKind.GOAL,
    ElementKind.CRITERION: ElementKind.OBJECTIVE,
    ElementKind.INDICATOR: ElementKind.CRITERION,
}

CHILD_KIND: dict[ElementKind, ElementKind | None] = {
    ElementKind.GOAL: ElementKind.OBJECTIVE,
    ElementKind.OBJECTIVE: ElementKind.CRITERION,
    ElementKind.CRITERION: ElementKind.INDICATOR,
    ElementKind.INDICATOR: None,
}


class ElementState(str, Enum):
    CANDIDATE = "candidate"
    VALIDATED = "validated"
    REMOVED = "removed"
    MERGED = "merged"  # merged_into holds the surviving element id


class Phase(str, Enum):
    STRUCTURE = "structure"
    WEIGHTING = "weighting"
    ASSESSED = "assessed"


def normalize_name(name: str) -> str:
    """Case-fold, trim and collapse internal whitespace (NFKC first)."""
    folded = unicodedata.normalize("NFKC", name).casefold()
    return " ".join(folded.split())


def frac_to_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def frac_from_str(text: str) -> Fraction:
    num, den = text.split("/")
    return Fraction(int(num), int(den))


@dataclass
class ValidityRecord:
    """Weighted confirmation tallies for one element (or definition/pair).

    Weights are exact rationals; dont_know answers are counted but never
    enter any rate.
    """

    confirm_weight: Fraction = Fraction(0)
    reject_weight: Fraction = Fraction(0)
    dont_know_count: int = 0
    naming_weight: Fraction = Fraction(0)
    structure_confirm_weight: Fraction = Fraction(0)
    structure_relocate_weight: dict[str, Fraction] = field(default_factory=dict)
    last_affecting_seq: int = 0

    def effective_confirm(self, naming_unit: Fraction = Fraction(1)) -> Fraction:
        return self.confirm_weight + self.naming_weight * naming_unit

    def rate(self, naming_unit: Fraction = Fraction(1)) -> Fraction:
        """Confirmation share in [0,1]; 0 when nothing has been tallied."""
        support = self.effective_confirm(naming_unit)
        total = support + self.reject_weight
        if total == 0:
            return Fraction(0)
        return support / total

    def structure_total(self) -> Fraction:
        return self.structure_confirm_weight + sum(
            self.structure_relocate_weight.values(), Fraction(0)
        )

    def copy(self) -> "ValidityRecord":
        return ValidityRecord(
            confirm_weight=self.confirm_weight,
            reject_weight=self.reject_weight,
            dont_know_count=self.dont_know_count,
            naming_weight=self.naming_weight,
            structure_confirm_weight=self.structure_confirm_weight,
            structure_relocate_weight=dict(self.structure_relocate_weight),
            last_affecting_seq=self.last_affecting_seq,
        )

    def to_json(self) -> dict:
        return {
            "confirm": frac_to_str(self.confirm_weight),
            "reject": frac_to_str(self.reject_weight),
            "dontKnow": self.dont_know_count,
            "naming": frac_to_str(self.naming_weight),
            "structureConfirm": frac_to_str(self.structure_confirm_weight),
            "structureRelocate": {
                pid: frac_to_str(w)
                for pid, w in sorted(self.structure_relocate_weight.items())
            },
            "lastAffectingSeq": self.last_affecting_seq,
        }

    @staticmethod
    def from_json(data: dict) -> "ValidityRecord":
        return ValidityRecord(
            confirm_weight=frac_from_str(data["confirm"]),
            reject_weight=frac_from_str(data["reject"]),
            dont_know_count=int(data["dontKnow"]),
            naming_weight=frac_from_str(data["naming"]),
            structure_confirm_weight=frac_from_str(data["structureConfirm"]),
            structure_relocate_weight={
                pid: frac_from_str(w)
                for pid, w in data["structureRelocate"].items()
            },
            last_affecting_seq=int(data["lastAffectingSeq"]),
        )


@dataclass
class DefinitionCandidate:
    text: str
    record: ValidityRecord = field(default_factory=ValidityRecord)


@dataclass
class Element:
    id: str
    kind: ElementKind
    name: str
    parent_id: str | None
    state: ElementState = ElementState.CANDIDATE
    merged_into: str | None = None
    definition: str | None = None
    definition_candidates: list[DefinitionCandidate] = field(default_factory=list)
    validity: ValidityRecord = field(default_factory=ValidityRecord)
    created_by: str = ""
    created_at_seq: int = 0

    @property
    def active(self) -> bool:
        return self.state in (ElementState.CANDIDATE, ElementState.VALIDATED)


@dataclass
class Milestone:
    id: str
    at_seq: int
    snapshot: str  # canonical serialized active tree
    snapshot_hash: str
    forced: bool = False


@dataclass
class WeightSet:
    """Per-element sibling weights plus per-parent consistency ratios."""

    weights: dict[str, float] = field(default_factory=dict)
    consistency_ratios: dict[str, float] = field(default_factory=dict)


@dataclass
class TransferFunction:
    """Min-max normalization of raw indicator values onto [0,1]."""

    direction: str = "benefit"  # benefit: max -> 1; cost: min -> 1
    lo: float = 0.0
    hi: float = 1.0

    def normalize(self, value: float) -> float:
        if self.hi == self.lo:
            return 0.5  # no spread: every alternative looks the same
        scaled = (value - self.lo) / (self.hi - self.lo)
        return scaled if self.direction == "benefit" else 1.0 - scaled


@dataclass
class Violation:
    element_id: str
    rule: str
    detail: str = ""


@dataclass
class SooTree:
    goal_id: str | None = None
    elements: dict[str, Element] = field(default_factory=dict)
    phase: Phase = Phase.STRUCTURE
    milestones: list[Milestone] = field(default_factory=list)
    next_element_no: int = 1

    def element(self, element_id: str) -> Element:
        return self.elements[element_id]

    def get(self, element_id: str) -> Element | None:
        return self.elements.get(element_id)

    def active_elements(self) -> list[Element]:
        return [e for e in self.elements.values() if e.active]

    def mint_element_id(self) -> str:
        eid = f"e{self.next_element_no:06d}"
        self.next_element_no += 1
        return eid


def find_active_sibling(tree: SooTree, parent_id: str | None, name: str) -> Element | None:
    """Active child of parent_id whose normalized name matches, if any."""
    wanted = normalize_name(name)
    for el in tree.elements.values():
        if el.active and el.parent_id == parent_id and normalize_name(el.name) == wanted:
            return el
    return None


def create_element(
    tree: SooTree,
    element_id: str,
    kind: ElementKind,
    name: str,
    parent_id: str | None,
    creator: str,
    naming_weight: Fraction,
    seq: int,
    state: ElementState = ElementState.CANDIDATE,
) -> Element:
    """Low-level insert with a pre-assigned id; preconditions already checked."""
    el = Element(
        id=element_id,
        kind=kind,
        name=name.strip(),
        parent_id=parent_id,
        state=state,
        created_by=creator,
        created_at_seq=seq,
    )
    el.validity.naming_weight = naming_weight
    el.validity.last_affecting_seq = seq
    tree.elements[element_id] = el
    if kind is ElementKind.GOAL:
        tree.goal_id = element_id
    return el


def check_insert_preconditions(
    tree: SooTree, kind: ElementKind, name: str, parent_id: str | None
) -> None:
    if not name.strip():
        raise EmptyName("element name is empty after trimming")
    if kind is ElementKind.GOAL:
        if tree.goal_id is not None:
            raise DuplicateGoal("tree already has a goal")
        if parent_id is not None:
            raise KindMismatch("a goal cannot have a parent")
        return
    required = PARENT_KIND[kind]
    if parent_id is None or parent_id not in tree.elements:
        raise MissingParent(f"parent {parent_id!r} does not exist")
    parent = tree.elements[parent_id]
    if not parent.active:
        raise MissingParent(f"parent {parent_id} is not active")
    if parent.kind is not required:
        raise KindMismatch(
            f"{kind.value} requires a {required.value} parent, got {parent.kind.value}"
        )


def insert_candidate(
    tree: SooTree,
    kind: ElementKind,
    name: str,
    parent_id: str | None,
    creator: str,
    weight: Fraction,
    seq: int = 0,
) -> str:
    """Insert a named candidate, folding repeats into naming support.

    A repeated name among active siblings does not create a second node;
    it raises the existing sibling's naming weight instead.
    """
    check_insert_preconditions(tree, kind, name, parent_id)
    existing = find_active_sibling(tree, parent_id, name)
    if existing is not None:
        existing.validity.naming_weight += weight
        existing.validity.last_affecting_seq = seq
        return existing.id
    el = create_element(
        tree, tree.mint_element_id(), kind, name, parent_id, creator, weight, seq
    )
    return el.id


def active_children(tree: SooTree, parent_id: str) -> list[Element]:
    """Active children, validated first, then by descending support rate, then id."""
    if parent_id not in tree.elements:
        raise MissingParent(f"parent {parent_id!r} does not exist")
    kids = [
        e for e in tree.elements.values() if e.active and e.parent_id == parent_id
    ]
    kids.sort(
        key=lambda e: (
            0 if e.state is ElementState.VALIDATED else 1,
            -e.validity.rate(),
            e.id,
        )
    )
    return kids


def sibling_groups(tree: SooTree) -> dict[str, list[Element]]:
    """Active children grouped by parent id (parents with at least one child)."""
    groups: dict[str, list[Element]] = {}
    for el in tree.elements.values():
        if el.active and el.parent_id is not None:
            groups.setdefault(el.parent_id, []).append(el)
    for kids in groups.values():
        kids.sort(key=lambda e: e.id)
    return groups


def check_structure(tree: SooTree) -> list[Violation]:
    """Validate every structural invariant; violations are data, not errors."""
    out: list[Violation] = []
    goals = [e for e in tree.elements.values() if e.kind is ElementKind.GOAL and e.active]
    if tree.goal_id is not None and len(goals) != 1:
        out.append(Violation(tree.goal_id or "", "goal-count", f"{len(goals)} active goals"))
    for el in tree.elements.values():
        if el.state is ElementState.MERGED and (
            el.merged_into is None or el.merged_into not in tree.elements
        ):
            out.append(Violation(el.id, "merge-target", "missing merged_into target"))
        if not el.active:
            continue
        if el.kind is ElementKind.GOAL:
            if el.parent_id is not None:
                out.append(Violation(el.id, "goal-has-parent"))
            continue
        required = PARENT_KIND[el.kind]
        if el.parent_id is None or el.parent_id not in tree.elements:
            out.append(Violation(el.id, "missing-parent"))
            continue
        parent = tree.elements[el.parent_id]
        if not parent.active:
            out.append(Violation(el.id, "inactive-parent", parent.id))
        if parent.kind is not required:
            out.append(
                Violation(el.id, "kind-mismatch", f"parent kind {parent.kind.value}")
            )
    # cycle detection over active parent links
    seen_ok: set[str] = set()
    for el in tree.elements.values():
        if not el.active or el.id in seen_ok:
            continue
        trail: list[str] = []
        on_trail: set[str] = set()
        cur: Element | None = el
        while cur is not None and cur.active:
            if cur.id in seen_ok:
                break
            if cur.id in on_trail:
                cycle = trail[trail.index(cur.id):]
                out.append(Violation(cur.id, "cycle", ",".join(sorted(cycle))))
                break
            trail.append(cur.id)
            on_trail.add(cur.id)
            cur = tree.elements.get(cur.parent_id) if cur.parent_id else None
        seen_ok.update(trail)
    # sibling name uniqueness among active elements
    by_parent: dict[tuple[str | None, str], list[str]] = {}
    for el in tree.elements.values():
        if el.active:
            by_parent.setdefault((el.parent_id, normalize_name(el.name)), []).append(el.id)
    for (parent_id, _norm), ids in sorted(by_parent.items(), key=lambda kv: kv[1]):
        if len(ids) > 1:
            out.append(Violation(ids[0], "duplicate-name", ",".join(sorted(ids))))
    if tree.phase is not Phase.STRUCTURE and not tree.milestones:
        out.append(Violation("", "phase-before-milestone", tree.phase.value))
    return out


def canonical_snapshot(tree: SooTree) -> tuple[bytes, str]:
    """Canonical bytes plus content hash of the active tree.

    Only structural content enters the snapshot (ids, kinds, names,
    parents, states, adopted definitions), so equal-by-value trees hash
    identically regardless of how much answer weight produced them.
    """
    elements = [
        {
            "id": e.id,
            "kind": e.kind.value,
            "name": e.name,
            "parentId": e.parent_id,
            "state": e.state.value,
            "definition": e.definition,
        }
        for e in sorted(tree.active_elements(), key=lambda e: e.id)
    ]
    doc = {"goal": tree.goal_id, "elements": elements}
    blob = json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    data = blob.encode("utf-8")
    return data, hashlib.sha256(data).hexdigest()
