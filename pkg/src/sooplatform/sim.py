"""Synthetic-crowd harness.

Agents with ground-truth knowledge and tunable noise answer generated
streams end to end; the run report measures convergence, structure
recovery, weight recovery and the no-repeat guarantee. Fully
deterministic for a given scenario and seed (the clock is synthetic).
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from pathlib import Path

from .ei import (
    ConfirmChoice,
    DuplicateVerdict,
    EiInstance,
    EiSlot,
    INTENSITY_RATIOS,
    NameText,
    PairwiseJudgment,
    ParentChoice,
    SetSelection,
    YES,
    NO,
    DONT_KNOW,
)
from .engine import Platform
from .model import ElementKind, ElementState, SooTree, normalize_name
from .participants import IntroQuestion, IntroTest
from .policy import AggregationPolicy


@dataclass(frozen=True)
class Concept:
    name: str
    kind: ElementKind
    parent: str | None  # canonical parent name; None for objectives (goal above)
    synonyms: tuple[str, ...] = ()
    definition: str | None = None


@dataclass
class GroundTruthSoo:
    goal_name: str
    concepts: dict[str, Concept]
    sibling_weights: dict[str, dict[str, float]] = field(default_factory=dict)
    distractors: tuple[str, ...] = ()

    def __post_init__(self):
        self._resolve_map: dict[str, str] = {}
        for concept in self.concepts.values():
            self._resolve_map[normalize_name(concept.name)] = concept.name
            for syn in concept.synonyms:
                self._resolve_map[normalize_name(syn)] = concept.name

    def resolve(self, name: str) -> str | None:
        """Canonical concept name for a (possibly synonym) element name."""
        return self._resolve_map.get(normalize_name(name))

    def children_of(self, parent: str | None) -> list[Concept]:
        return sorted(
            (c for c in self.concepts.values() if c.parent == parent),
            key=lambda c: c.name,
        )

    def weight_of(self, canonical: str) -> float:
        concept = self.concepts[canonical]
        group = self.sibling_weights.get(concept.parent or "")
        if group and canonical in group:
            return group[canonical]
        siblings = self.children_of(concept.parent)
        return 1.0 / len(siblings)

    def definition_of(self, canonical: str) -> str:
        concept = self.concepts[canonical]
        return concept.definition or f"The agreed meaning of {concept.name} here."

    def non_goal_count(self) -> int:
        return len(self.concepts)


@dataclass
class AgentProfile:
    name: str
    reliability: float = 1.0
    competency: float = 1.0
    stakeholder_group: str = "expert"
    self_estimation: str = "expert"
    synonym_bias: float = 0.0
    pairwise_noise_sigma: float = 0.0
    dont_know_rate: float = 0.0
    dropout_after_round: int | None = None


@dataclass
class Schedule:
    mode: str = "rounds"  # rounds | continuous
    rounds: int = 12
    answers_min: int = 8
    answers_max: int = 10


@dataclass
class Scenario:
    truth: GroundTruthSoo
    agents: list[AgentProfile]
    policy: AggregationPolicy = field(default_factory=AggregationPolicy)
    schedule: Schedule = field(default_factory=Schedule)
    seed: int = 1
    max_answers: int = 5000
    intro_questions: int = 10
    weight_scale: float = 1.0


@dataclass
class RunReport:
    total_answers: int = 0
    rounds: int = 0
    milestone_seq: int | None = None
    structure_precision: float = 0.0
    structure_recall: float = 0.0
    structure_f1: float = 0.0
    weight_rmse: float | None = None
    weight_note: str = ""
    repeat_deliveries: int = 0
    stale_answers: int = 0
    event_count: int = 0
    final_snapshot_hash: str = ""
    wall_clock_seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "totalAnswers": self.total_answers,
            "rounds": self.rounds,
            "milestoneSeq": self.milestone_seq,
            "structurePrecision": self.structure_precision,
            "structureRecall": self.structure_recall,
            "structureF1": self.structure_f1,
            "weightRmse": self.weight_rmse,
            "weightNote": self.weight_note,
            "repeatDeliveries": self.repeat_deliveries,
            "staleAnswers": self.stale_answers,
            "eventCount": self.event_count,
            "finalSnapshotHash": self.final_snapshot_hash,
            "wallClockSeconds": self.wall_clock_seconds,
        }


class TickClock:
    """Synthetic one-second ticks so identical runs produce identical logs."""

    def __init__(self, start: datetime | None = None):
        self.now = start or datetime(2026, 1, 1, tzinfo=timezone.utc)

    def __call__(self) -> datetime:
        self.now += timedelta(seconds=1)
        return self.now


# --- agent behavior --------------------------------------------------------------


def _coin(rng: random.Random, p: float) -> bool:
    return rng.random() < p


def _nearest_intensity(ratio: float) -> int:
    target = math.log(ratio)
    return min(
        INTENSITY_RATIOS,
        key=lambda level: (abs(math.log(INTENSITY_RATIOS[level]) - target), level),
    )


def agent_answer(
    agent: AgentProfile,
    inst: EiInstance,
    truth: GroundTruthSoo,
    tree: SooTree,
    rng: random.Random,
):
    """Generate this agent's payload for one instance against ground truth."""
    slot = inst.slot
    if slot is EiSlot.CHILD_NAME:
        return NameText(_name_answer(agent, inst, truth, tree, rng))
    if slot is EiSlot.DEFINITION_NAME:
        el = tree.element(inst.targets[0])
        canonical = truth.resolve(el.name)
        if canonical is not None and _coin(rng, agent.reliability):
            return NameText(truth.definition_of(canonical))
        return NameText(f"Possibly about {rng.choice(truth.distractors)}")
    if slot is EiSlot.CONFIRM:
        if _coin(rng, agent.dont_know_rate):
            return ConfirmChoice(DONT_KNOW)
        el = tree.element(inst.targets[0])
        is_true = truth.resolve(el.name) is not None
        answer_yes = is_true if _coin(rng, agent.reliability) else not is_true
        return ConfirmChoice(YES if answer_yes else NO)
    if slot is EiSlot.DUPLICATE:
        a = truth.resolve(tree.element(inst.targets[0]).name)
        b = truth.resolve(tree.element(inst.targets[1]).name)
        same = a is not None and a == b
        answer_yes = same if _coin(rng, agent.reliability) else not same
        return DuplicateVerdict(choice=YES if answer_yes else NO)
    if slot is EiSlot.COMMON_NAME:
        a = truth.resolve(tree.element(inst.targets[0]).name)
        b = truth.resolve(tree.element(inst.targets[1]).name)
        canonical = a if a is not None else b
        if canonical is not None and _coin(rng, agent.reliability):
            return NameText(canonical)
        return NameText(rng.choice(truth.distractors))
    if slot is EiSlot.PAIRWISE:
        a = truth.resolve(tree.element(inst.targets[0]).name)
        b = truth.resolve(tree.element(inst.targets[1]).name)
        if a is not None and b is not None:
            ratio = truth.weight_of(a) / truth.weight_of(b)
        else:
            ratio = 1.0
        if agent.pairwise_noise_sigma > 0:
            ratio *= math.exp(rng.gauss(0.0, agent.pairwise_noise_sigma))
        return PairwiseJudgment(_nearest_intensity(ratio))
    if slot is EiSlot.SIBLING_CHOICE:
        scored = []
        for option in inst.options:
            canonical = truth.resolve(option.label)
            weight = truth.weight_of(canonical) if canonical is not None else 0.0
            if agent.pairwise_noise_sigma > 0:
                weight *= math.exp(rng.gauss(0.0, agent.pairwise_noise_sigma))
            scored.append((-weight, option.label, option.id))
        scored.sort()
        cap = inst.k or len(scored)
        return SetSelection(tuple(oid for _, _, oid in scored[:cap]))
    if slot is EiSlot.DEFINITION_CHOICE:
        el = tree.element(inst.targets[0])
        canonical = truth.resolve(el.name)
        wanted = truth.definition_of(canonical) if canonical is not None else None
        options = sorted(inst.options, key=lambda o: o.id)
        if wanted is not None and _coin(rng, agent.reliability):
            for option in options:
                if option.label == wanted:
                    return SetSelection((option.id,))
        return SetSelection((rng.choice(options).id,))
    if slot is EiSlot.PARENT:
        el = tree.element(inst.targets[0])
        canonical = truth.resolve(el.name)
        options = sorted(inst.options, key=lambda o: o.id)
        if canonical is not None and _coin(rng, agent.reliability):
            concept = truth.concepts[canonical]
            true_parent = concept.parent or truth.goal_name
            for option in options:
                if truth.resolve(option.label) == truth.resolve(true_parent) or (
                    concept.parent is None
                    and normalize_name(option.label) == normalize_name(truth.goal_name)
                ):
                    return ParentChoice(parent_id=option.id)
            return ParentChoice(alternative_name=true_parent)
        return ParentChoice(parent_id=rng.choice(options).id)
    raise ValueError(f"unhandled slot {slot}")


def _name_answer(
    agent: AgentProfile,
    inst: EiInstance,
    truth: GroundTruthSoo,
    tree: SooTree,
    rng: random.Random,
) -> str:
    parent = tree.element(inst.parent_id)
    parent_canonical = (
        truth.goal_name
        if parent.kind is ElementKind.GOAL
        else truth.resolve(parent.name)
    )
    knows_parent = parent_canonical is not None
    if knows_parent and _coin(rng, agent.reliability):
        key = None if parent.kind is ElementKind.GOAL else parent_canonical
        true_children = truth.children_of(key)
        present = {
            truth.resolve(e.name)
            for e in tree.active_elements()
            if e.parent_id == parent.id
        }
        missing = [c for c in true_children if c.name not in present]
        if missing:
            concept = rng.choice(missing)
        elif true_children:
            # nothing missing: lend naming support to a known child
            concept = rng.choice(true_children)
        else:
            return rng.choice(truth.distractors)
        if concept.synonyms and _coin(rng, agent.synonym_bias):
            return rng.choice(sorted(concept.synonyms))
        return concept.name
    return rng.choice(truth.distractors)


# --- simulation loop ---------------------------------------------------------------


def _intro_test(question_count: int) -> IntroTest:
    return IntroTest(
        tuple(
            IntroQuestion(
                text=f"Background check {i + 1}",
                options=("option 1", "option 2", "option 3", "option 4"),
                answer_index=i % 4,
            )
            for i in range(question_count)
        )
    )


def _intro_choices(agent: AgentProfile, test: IntroTest, rng: random.Random) -> list[int]:
    choices = []
    for question in test.questions:
        if _coin(rng, agent.competency):
            choices.append(question.answer_index)
        else:
            wrong = [
                i for i in range(len(question.options)) if i != question.answer_index
            ]
            choices.append(rng.choice(wrong))
    return choices


@dataclass
class SimulationResult:
    report: RunReport
    platform: Platform


def simulate(scenario: Scenario, log_path: str | Path | None = None) -> SimulationResult:
    """Drive register -> intro test -> stream -> answer until convergence."""
    started = time.perf_counter()
    rng = random.Random(scenario.seed)
    truth = scenario.truth
    scale = scenario.weight_scale
    policy = scenario.policy if scale == 1.0 else scenario.policy.scaled(scale)
    test = _intro_test(scenario.intro_questions)
    platform = Platform(
        policy=policy,
        intro_test=test,
        log_path=log_path,
        clock=TickClock(),
    )
    if scale != 1.0:
        platform.weight_scale = Fraction(scale)
    platform.define_goal(truth.goal_name, "synthetic study", "desk scale")

    pids: list[str] = []
    for agent in scenario.agents:
        pid, _ = platform.register_participant(
            agent.name, agent.stakeholder_group, agent.self_estimation
        )
        platform.submit_intro_test(pid, _intro_choices(agent, test, rng))
        pids.append(pid)

    report = RunReport()
    delivered: dict[str, set[str]] = {pid: set() for pid in pids}

    def run_agent(index: int, round_no: int) -> int:
        agent, pid = scenario.agents[index], pids[index]
        if (
            agent.dropout_after_round is not None
            and round_no > agent.dropout_after_round
        ):
            return 0
        count = rng.randint(scenario.schedule.answers_min, scenario.schedule.answers_max)
        stream = platform.request_stream(pid, count=count, seed=rng.getrandbits(48))
        answered = 0
        for inst in stream:
            if platform.state.answer_count >= scenario.max_answers:
                break
            if inst.id in delivered[pid]:
                report.repeat_deliveries += 1
                continue
            delivered[pid].add(inst.id)
            payload = agent_answer(agent, inst, truth, platform.state.tree, rng)
            platform.submit_answer(pid, inst.id, payload)
            answered += 1
        return answered

    def converged() -> bool:
        return platform.weights_complete() or (
            platform.state.answer_count >= scenario.max_answers
        )

    if scenario.schedule.mode == "rounds":
        for round_no in range(1, scenario.schedule.rounds + 1):
            if converged():
                break
            delivered_this_round = sum(
                run_agent(i, round_no) for i in range(len(pids))
            )
            report.rounds = round_no
            if delivered_this_round == 0 and not platform.state.tree.milestones:
                break  # nothing left to ask; avoid idle spinning
    else:
        idle_cycles = 0
        while not converged() and idle_cycles < 2:
            got = sum(run_agent(i, 1) for i in range(len(pids)))
            idle_cycles = idle_cycles + 1 if got == 0 else 0

    state = platform.state
    report.total_answers = state.answer_count
    report.stale_answers = state.stale_answer_count
    report.event_count = len(platform.log.events)
    milestones = state.tree.milestones
    report.milestone_seq = milestones[0].at_seq if milestones else None
    precision, recall, f1 = evaluate_structure(state.tree, truth)
    report.structure_precision = precision
    report.structure_recall = recall
    report.structure_f1 = f1
    report.weight_rmse, report.weight_note = evaluate_weights(platform, truth)
    report.final_snapshot_hash = platform.snapshot()[1]
    report.wall_clock_seconds = time.perf_counter() - started
    return SimulationResult(report=report, platform=platform)


# --- evaluation -----------------------------------------------------------------------


def _matched_elements(tree: SooTree, truth: GroundTruthSoo) -> dict[str, str]:
    """Validated element id -> canonical concept, for correctly placed elements."""
    matched: dict[str, str] = {}
    for el in tree.active_elements():
        if el.kind is ElementKind.GOAL or el.state is not ElementState.VALIDATED:
            continue
        canonical = truth.resolve(el.name)
        if canonical is None:
            continue
        concept = truth.concepts[canonical]
        if concept.kind is not el.kind:
            continue
        parent = tree.get(el.parent_id) if el.parent_id else None
        if parent is None:
            continue
        if concept.parent is None:
            if parent.kind is not ElementKind.GOAL:
                continue
        elif truth.resolve(parent.name) != concept.parent:
            continue
        matched[el.id] = canonical
    return matched


def evaluate_structure(
    tree: SooTree, truth: GroundTruthSoo
) -> tuple[float, float, float]:
    """Precision/recall/F1 of validated elements against the true concepts."""
    validated = [
        e
        for e in tree.active_elements()
        if e.kind is not ElementKind.GOAL and e.state is ElementState.VALIDATED
    ]
    matched = _matched_elements(tree, truth)
    true_total = truth.non_goal_count()
    precision = len(matched) / len(validated) if validated else 0.0
    recall = len(set(matched.values())) / true_total if true_total else 0.0
    if precision + recall == 0:
        return 0.0, 0.0, 0.0
    f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def evaluate_weights(platform: Platform, truth: GroundTruthSoo) -> tuple[float | None, str]:
    """RMSE between derived and true sibling weights over matched elements."""
    state = platform.state
    if not state.tree.milestones:
        return None, "no milestone"
    matched = _matched_elements(state.tree, truth)
    diffs = []
    for element_id, canonical in sorted(matched.items()):
        got = state.weights.weights.get(element_id)
        if got is None:
            continue
        diffs.append((got - truth.weight_of(canonical)) ** 2)
    if not diffs:
        return None, "no matched weighted elements"
    return math.sqrt(sum(diffs) / len(diffs)), f"{len(diffs)} elements compared"


# --- scenario construction and serialization -------------------------------------------


DISTRACTORS = (
    "Aesthetic Appeal",
    "Brand Image",
    "Cloud Backup",
    "Color Scheme",
    "Parking Spaces",
    "Office Morale",
    "Mascot Quality",
    "Lunch Options",
    "Logo Design",
    "Paper Size",
    "Ring Tone",
    "Desk Height",
)


def grid_weights(n: int) -> dict[int, float]:
    """Sibling weights whose pairwise ratios sit on the 9-level scale grid."""
    if n == 1:
        return {0: 1.0}
    total = n + 2  # first child carries ratio 3 against the rest
    return {i: (3.0 if i == 0 else 1.0) / total for i in range(n)}


def make_truth(
    objectives: int = 3,
    criteria: int = 8,
    indicators: int = 12,
    synonyms: dict[str, tuple[str, ...]] | None = None,
    goal_name: str = "Sustainable infrastructure assessment",
) -> GroundTruthSoo:
    """Synthetic tree of the requested size with grid-ratio sibling weights."""
    synonyms = synonyms or {}
    concepts: dict[str, Concept] = {}
    weights: dict[str, dict[str, float]] = {}
    objective_names = [f"Objective Area {i + 1}" for i in range(objectives)]
    for i, name in enumerate(objective_names):
        concepts[name] = Concept(
            name=name, kind=ElementKind.OBJECTIVE, parent=None,
            synonyms=synonyms.get(name, ()),
        )
    grid = grid_weights(objectives)
    weights[""] = {name: grid[i] for i, name in enumerate(objective_names)}
    criterion_names = [f"Criterion Field {i + 1}" for i in range(criteria)]
    per_objective: dict[str, list[str]] = {name: [] for name in objective_names}
    for i, name in enumerate(criterion_names):
        parent = objective_names[i % objectives]
        per_objective[parent].append(name)
        concepts[name] = Concept(
            name=name, kind=ElementKind.CRITERION, parent=parent,
            synonyms=synonyms.get(name, ()),
        )
    for parent, kids in per_objective.items():
        grid = grid_weights(len(kids))
        weights[parent] = {name: grid[i] for i, name in enumerate(kids)}
    indicator_names = [f"Indicator Metric {i + 1}" for i in range(indicators)]
    per_criterion: dict[str, list[str]] = {name: [] for name in criterion_names}
    for i, name in enumerate(indicator_names):
        parent = criterion_names[i % criteria]
        per_criterion[parent].append(name)
        concepts[name] = Concept(
            name=name, kind=ElementKind.INDICATOR, parent=parent,
            synonyms=synonyms.get(name, ()),
        )
    for parent, kids in per_criterion.items():
        if not kids:
            continue
        grid = grid_weights(len(kids))
        weights[parent] = {name: grid[i] for i, name in enumerate(kids)}
    truth = GroundTruthSoo(
        goal_name=goal_name,
        concepts=concepts,
        sibling_weights=weights,
        distractors=DISTRACTORS,
    )
    return truth


def make_agents(
    count: int,
    reliability: tuple[float, float] = (1.0, 1.0),
    competency: float | None = None,
    synonym_bias: float = 0.0,
    pairwise_noise_sigma: float = 0.0,
    dont_know_rate: float = 0.0,
    active_through_round_six: int | None = None,
    seed: int = 0,
) -> list[AgentProfile]:
    """Agent roster with reliabilities spread evenly across the given range."""
    rng = random.Random(seed)
    groups = ["expert", "planner", "interest_group", "decision_maker"]
    agents = []
    lo, hi = reliability
    for i in range(count):
        r = lo if count == 1 else lo + (hi - lo) * i / (count - 1)
        dropout = None
        if active_through_round_six is not None and i >= active_through_round_six:
            dropout = 6
        agents.append(
            AgentProfile(
                name=f"Agent {i + 1:02d}",
                reliability=r,
                competency=r if competency is None else competency,
                stakeholder_group=groups[i % len(groups)],
                self_estimation="expert" if r >= 0.5 else "knowledgeable",
                synonym_bias=synonym_bias,
                pairwise_noise_sigma=pairwise_noise_sigma,
                dont_know_rate=dont_know_rate,
                dropout_after_round=dropout,
            )
        )
    rng.shuffle(agents)
    return agents


# --- JSON scenario files ------------------------------------------------------------


def truth_to_json(truth: GroundTruthSoo) -> dict:
    return {
        "goalName": truth.goal_name,
        "concepts": [
            {
                "name": c.name,
                "kind": c.kind.value,
                "parent": c.parent,
                "synonyms": list(c.synonyms),
                "definition": c.definition,
            }
            for c in sorted(truth.concepts.values(), key=lambda c: c.name)
        ],
        "siblingWeights": truth.sibling_weights,
        "distractors": list(truth.distractors),
    }


def truth_from_json(data: dict) -> GroundTruthSoo:
    concepts = {
        c["name"]: Concept(
            name=c["name"],
            kind=ElementKind(c["kind"]),
            parent=c.get("parent"),
            synonyms=tuple(c.get("synonyms", ())),
            definition=c.get("definition"),
        )
        for c in data["concepts"]
    }
    return GroundTruthSoo(
        goal_name=data["goalName"],
        concepts=concepts,
        sibling_weights=data.get("siblingWeights", {}),
        distractors=tuple(data.get("distractors", DISTRACTORS)),
    )


def scenario_to_json(scenario: Scenario) -> dict:
    return {
        "truth": truth_to_json(scenario.truth),
        "agents": [
            {
                "name": a.name,
                "reliability": a.reliability,
                "competency": a.competency,
                "stakeholderGroup": a.stakeholder_group,
                "selfEstimation": a.self_estimation,
                "synonymBias": a.synonym_bias,
                "pairwiseNoiseSigma": a.pairwise_noise_sigma,
                "dontKnowRate": a.dont_know_rate,
                "dropoutAfterRound": a.dropout_after_round,
            }
            for a in scenario.agents
        ],
        "policy": scenario.policy.to_json(),
        "schedule": {
            "mode": scenario.schedule.mode,
            "rounds": scenario.schedule.rounds,
            "answersMin": scenario.schedule.answers_min,
            "answersMax": scenario.schedule.answers_max,
        },
        "seed": scenario.seed,
        "maxAnswers": scenario.max_answers,
        "introQuestions": scenario.intro_questions,
        "weightScale": scenario.weight_scale,
    }


def scenario_from_json(data: dict) -> Scenario:
    schedule = data.get("schedule", {})
    return Scenario(
        truth=truth_from_json(data["truth"]),
        agents=[
            AgentProfile(
                name=a["name"],
                reliability=a.get("reliability", 1.0),
                competency=a.get("competency", 1.0),
                stakeholder_group=a.get("stakeholderGroup", "expert"),
                self_estimation=a.get("selfEstimation", "expert"),
                synonym_bias=a.get("synonymBias", 0.0),
                pairwise_noise_sigma=a.get("pairwiseNoiseSigma", 0.0),
                dont_know_rate=a.get("dontKnowRate", 0.0),
                dropout_after_round=a.get("dropoutAfterRound"),
            )
            for a in data["agents"]
        ],
        policy=AggregationPolicy.from_json(data.get("policy", {})),
        schedule=Schedule(
            mode=schedule.get("mode", "rounds"),
            rounds=schedule.get("rounds", 12),
            answers_min=schedule.get("answersMin", 8),
            answers_max=schedule.get("answersMax", 10),
        ),
        seed=data.get("seed", 1),
        max_answers=data.get("maxAnswers", 5000),
        intro_questions=data.get("introQuestions", 10),
        weight_scale=data.get("weightScale", 1.0),
    )


def load_scenario(path: str | Path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_json(json.load(fh))
