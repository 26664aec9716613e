"""Single-writer platform facade over the event log.

Commands validate input, decide via the aggregator, append the
resulting events (durably) and fold them into state. Reads serve from
the current in-memory state.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import datetime, timedelta
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import aggregator, participants as pm, stream as streamgen
from .ei import (
    Answer,
    AnswerPayload,
    EiInstance,
    payload_to_json,
    validate_answer_payload,
)
from .events import (
    Event,
    EventLog,
    EventType,
    apply_event,
    read_log,
    replay,
    utc_now,
)
from .model import (
    ElementKind,
    ElementState,
    Phase,
    canonical_snapshot,
    frac_to_str,
)
from .participants import IntroTest, SelfEstimation, StakeholderGroup
from .policy import AggregationPolicy
from .state import PlatformState, instance_live, pair_key


class PlatformError(Exception):
    pass


class GoalExists(PlatformError):
    pass


class NoGoal(PlatformError):
    pass


class UnknownParticipant(PlatformError):
    pass


class UnknownInstance(PlatformError):
    pass


class UnknownElement(PlatformError):
    pass


class RepeatAnswer(PlatformError):
    pass


class NotInWeighting(PlatformError):
    pass


@dataclass
class StatsReport:
    per_participant_answer_count: dict[str, int]
    platform_answers_last_24h: int
    active_element_counts: dict[str, dict[str, int]]
    phase: str
    milestone_count: int


class Platform:
    """Owns the append/fold path; one logical writer."""

    def __init__(
        self,
        policy: AggregationPolicy | None = None,
        intro_test: IntroTest | None = None,
        log_path: str | Path | None = None,
        fsync: bool = False,
        clock: Callable[[], datetime] | None = None,
    ):
        self.clock = clock or utc_now
        # unit multiplier on every answer weight; pairs with policy.scaled()
        self.weight_scale = Fraction(1)
        self.state = PlatformState()
        existing: list[Event] = []
        if log_path is not None and Path(log_path).exists():
            existing = read_log(log_path)
        self.log = EventLog(log_path, fsync=fsync)
        if existing:
            self.state = replay(existing)
            self.log.events = existing
        else:
            self._emit(
                EventType.POLICY_SET,
                {"policy": (policy or AggregationPolicy()).to_json()},
            )
        self.state.intro_test = intro_test or IntroTest()

    # --- event plumbing ---------------------------------------------------

    def _emit(self, ev_type: EventType, payload: dict) -> Event:
        ev = Event(
            seq=len(self.log.events) + 1,
            ts=self.clock(),
            type=ev_type,
            payload=payload,
        )
        self.log.append(ev)  # durable before the state change is visible
        apply_event(self.state, ev)
        return ev

    @property
    def seq(self) -> int:
        return len(self.log.events)

    # --- commands -----------------------------------------------------------

    def define_goal(
        self, title: str, description: str = "", system_boundaries: str = "",
        creator: str = "initiator",
    ) -> str:
        if self.state.tree.goal_id is not None:
            raise GoalExists("the goal has already been defined")
        if not title.strip():
            raise PlatformError("goal title is empty")
        element_id = f"e{self.state.tree.next_element_no:06d}"
        self._emit(
            EventType.GOAL_DEFINED,
            {
                "elementId": element_id,
                "title": title.strip(),
                "description": description,
                "systemBoundaries": system_boundaries,
                "createdBy": creator,
            },
        )
        return element_id

    def set_policy(self, policy: AggregationPolicy) -> None:
        self._emit(EventType.POLICY_SET, {"policy": policy.to_json()})

    def register_participant(
        self, name: str, stakeholder_group: str, self_estimation: str
    ) -> tuple[str, list[dict]]:
        if not name.strip():
            raise pm.EmptyName("participant name is empty")
        pid = f"p{self.state.next_participant_no:04d}"
        self._emit(
            EventType.PARTICIPANT_REGISTERED,
            {
                "participantId": pid,
                "name": name.strip(),
                "stakeholderGroup": StakeholderGroup(stakeholder_group).value,
                "selfEstimation": SelfEstimation(self_estimation).value,
            },
        )
        return pid, self.state.intro_test.public_view()

    def submit_intro_test(self, participant_id: str, choices: list[int]) -> float:
        participant = self.state.participants.get(participant_id)
        if participant is None:
            raise UnknownParticipant(participant_id)
        score = pm.score_intro_test(choices, self.state.intro_test)
        if participant.self_estimation is SelfEstimation.END_USER:
            score = Fraction(0)  # end-users stay focused on preference questions
        self._emit(
            EventType.INTRO_TEST_SCORED,
            {
                "participantId": participant_id,
                "choices": list(choices),
                "competency": frac_to_str(score),
            },
        )
        return float(score)

    def request_stream(
        self, participant_id: str, count: int | None = None, seed: int = 0
    ) -> list[EiInstance]:
        participant = self.state.participants.get(participant_id)
        if participant is None:
            raise UnknownParticipant(participant_id)
        policy = self.state.policy
        if count is None:
            count = policy.page_default
        count = max(1, min(count, policy.page_max))
        gaps = streamgen.analyze_gaps(self.state)
        candidates = streamgen.generate_instances(self.state, gaps, self._emit)
        request = streamgen.StreamRequest(participant_id, count, seed)
        return streamgen.select_stream(
            candidates,
            participant,
            self.state.answered(participant_id),
            request,
            policy.naming_competency_min,
        )

    def submit_answer(
        self, participant_id: str, ei_id: str, payload: AnswerPayload
    ) -> int:
        participant = self.state.participants.get(participant_id)
        if participant is None:
            raise UnknownParticipant(participant_id)
        inst = self.state.instances.get(ei_id)
        if inst is None:
            raise UnknownInstance(ei_id)
        if ei_id in self.state.answered(participant_id):
            raise RepeatAnswer(f"{participant_id} already answered {ei_id}")
        validate_answer_payload(inst, payload)
        weight = pm.answer_weight(participant) * self.weight_scale
        live = instance_live(self.state, inst)
        ev = self._emit(
            EventType.ANSWER_SUBMITTED,
            {
                "eiId": ei_id,
                "participantId": participant_id,
                "payload": payload_to_json(payload),
                "weight": frac_to_str(weight),
            },
        )
        if live:
            answer = Answer(ei_id, participant_id, payload, ev.seq)
            aggregator.apply_answer(self.state, inst, answer, weight, self._emit)
        else:
            self._emit(
                EventType.STALE_ANSWER_AUDITED,
                {
                    "eiId": ei_id,
                    "participantId": participant_id,
                    "reason": "target no longer answerable",
                },
            )
        aggregator.maybe_create_milestone(self.state, self._emit)
        return ev.seq

    def post_discussion(self, element_id: str, participant_id: str, text: str) -> str:
        if element_id not in self.state.tree.elements:
            raise UnknownElement(element_id)
        if participant_id not in self.state.participants:
            raise UnknownParticipant(participant_id)
        if not text.strip():
            raise PlatformError("empty discussion post")
        post_id = f"d{self.state.next_post_no:05d}"
        self._emit(
            EventType.DISCUSSION_POSTED,
            {
                "postId": post_id,
                "elementId": element_id,
                "participantId": participant_id,
                "text": text.strip(),
            },
        )
        return post_id

    def force_milestone(self) -> str:
        if self.state.tree.goal_id is None:
            raise NoGoal("define the goal first")
        return aggregator.create_milestone(self.state, self._emit, forced=True)

    # --- reads ----------------------------------------------------------------

    def snapshot(self) -> tuple[bytes, str]:
        return canonical_snapshot(self.state.tree)

    def validity_structure_rate(self, element_id: str) -> float:
        record = self.state.tree.element(element_id).validity
        total = record.structure_total()
        if total == 0:
            return 0.0
        return float(record.structure_confirm_weight / total)

    def validity_children(self, element_id: str) -> float | None:
        """Diagnostic stability of the child set; gates nothing."""
        tree = self.state.tree
        kids = [e for e in tree.active_elements() if e.parent_id == element_id]
        if not kids:
            return None
        mean_structure = sum(
            self.validity_structure_rate(k.id) for k in kids
        ) / len(kids)
        pairs = [
            pair_key(a.id, b.id)
            for i, a in enumerate(kids)
            for b in kids[i + 1:]
        ]
        if pairs:
            unresolved = sum(
                1
                for key in pairs
                if (stats := self.state.pair_stats.get(key)) is not None
                and stats.proposed
                and not stats.resolved
            )
            share_unresolved = unresolved / len(pairs)
        else:
            share_unresolved = 0.0
        return mean_structure * (1.0 - share_unresolved)

    def soo_view(self) -> dict:
        tree = self.state.tree
        policy = self.state.policy
        elements = []
        for el in sorted(tree.active_elements(), key=lambda e: e.id):
            elements.append(
                {
                    "id": el.id,
                    "kind": el.kind.value,
                    "name": el.name,
                    "parentId": el.parent_id,
                    "state": el.state.value,
                    "definition": el.definition,
                    "validity": float(aggregator.element_validity(el.validity, policy)),
                    "validityStructure": self.validity_structure_rate(el.id),
                    "validityChildren": self.validity_children(el.id),
                }
            )
        return {
            "goal": tree.goal_id,
            "goalMeta": dict(self.state.goal_meta),
            "phase": tree.phase.value,
            "elements": elements,
        }

    def milestone_view(self, milestone_id: str | None = None) -> list[dict]:
        out = []
        for ms in self.state.tree.milestones:
            if milestone_id is not None and ms.id != milestone_id:
                continue
            out.append(
                {
                    "id": ms.id,
                    "atSeq": ms.at_seq,
                    "snapshotHash": ms.snapshot_hash,
                    "snapshot": ms.snapshot,
                    "forced": ms.forced,
                    "weights": dict(self.state.weights.weights),
                    "consistencyRatios": dict(self.state.weights.consistency_ratios),
                }
            )
        return out

    def stats(self) -> StatsReport:
        tree = self.state.tree
        counts: dict[str, dict[str, int]] = {}
        for el in tree.active_elements():
            counts.setdefault(el.kind.value, {}).setdefault(el.state.value, 0)
            counts[el.kind.value][el.state.value] += 1
        cutoff = self.clock() - timedelta(hours=24)
        recent = sum(1 for ts in self.state.answer_times if ts >= cutoff)
        return StatsReport(
            per_participant_answer_count={
                pid: p.answered_count
                for pid, p in sorted(self.state.participants.items())
            },
            platform_answers_last_24h=recent,
            active_element_counts=counts,
            phase=tree.phase.value,
            milestone_count=len(tree.milestones),
        )

    def participant_stats(self, participant_id: str) -> dict:
        participant = self.state.participants.get(participant_id)
        if participant is None:
            raise UnknownParticipant(participant_id)
        return {
            "participantId": participant_id,
            "displayName": participant.display_name,
            "stakeholderGroup": participant.stakeholder_group.value,
            "answeredCount": participant.answered_count,
            "competency": float(participant.competency),
            "reputation": float(participant.reputation),
        }

    def export_csv(self) -> str:
        return export_soo_csv(self.state)

    def assess(
        self,
        alternatives: dict[str, dict[str, float]],
        directions: dict[str, str] | None = None,
    ) -> list[tuple[str, float]]:
        tree = self.state.tree
        if tree.phase is Phase.STRUCTURE:
            raise NotInWeighting("assessment requires a milestone")
        gw = aggregator.global_weights(tree, self.state.weights)
        indicator_weights = {
            el.id: gw[el.id]
            for el in tree.active_elements()
            if el.kind is ElementKind.INDICATOR
            and el.state is ElementState.VALIDATED
            and el.id in gw
        }
        # assessment is a pure read; no event, no phase change
        return aggregator.assess_alternatives(indicator_weights, alternatives, directions)

    def weights_complete(self) -> bool:
        """Milestone reached and every sibling pair judged to the coverage target."""
        state = self.state
        if not state.tree.milestones:
            return False
        target = Fraction(state.policy.pairwise_min_weight)
        for el in state.tree.active_elements():
            if el.parent_id is None or el.state is not ElementState.VALIDATED:
                continue
            siblings = aggregator.validated_children(state.tree, el.parent_id)
            for i, a in enumerate(siblings):
                for b in siblings[i + 1:]:
                    judged = sum(
                        (w for _, w in state.judgments.get(pair_key(a, b), [])),
                        Fraction(0),
                    )
                    if judged < target:
                        return False
        return True

    def close(self) -> None:
        self.log.close()


def export_soo_csv(state: PlatformState) -> str:
    """Active elements as RFC-4180 CSV; weights appear once weighting has begun."""
    tree = state.tree
    weighting = tree.phase is not Phase.STRUCTURE
    gw = aggregator.global_weights(tree, state.weights) if weighting else {}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["id", "kind", "name", "parent_id", "state", "validity", "global_weight"]
    )
    for el in sorted(tree.active_elements(), key=lambda e: e.id):
        weight = gw.get(el.id)
        writer.writerow(
            [
                el.id,
                el.kind.value,
                el.name,
                el.parent_id or "",
                el.state.value,
                f"{float(aggregator.element_validity(el.validity, state.policy)):.6f}",
                "" if weight is None else f"{weight:.6f}",
            ]
        )
    return buf.getvalue()
