"""Participant registry: stakeholder groups, competency and reputation.

Competency comes from the introductory multiple-choice test, reputation
from agreement with later resolutions. Both feed the per-answer weight.
All values are exact rationals so downstream tallies stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction


class ParticipantError(Exception):
    pass


class EmptyName(ParticipantError):
    pass


class LengthMismatch(ParticipantError):
    pass


class StakeholderGroup(str, Enum):
    DECISION_MAKER = "decision_maker"
    INTEREST_GROUP = "interest_group"
    EXPERT = "expert"
    PLANNER = "planner"
    END_USER = "end_user"
    INITIATOR = "initiator"


class SelfEstimation(str, Enum):
    END_USER = "end_user"
    KNOWLEDGEABLE = "knowledgeable"
    EXPERT = "expert"


# Weight formula constants: nobody is silenced, nobody dominates.
WEIGHT_BASE = Fraction(1, 2)
REPUTATION_FLOOR = Fraction(1, 2)
REPUTATION_CEIL = Fraction(3, 2)
REPUTATION_MIN = Fraction(1, 10)
REPUTATION_MAX = Fraction(3)
AGREED_FACTOR = Fraction(21, 20)    # * 1.05
DISAGREED_FACTOR = Fraction(19, 20)  # * 0.95


@dataclass
class Participant:
    id: str
    display_name: str
    stakeholder_group: StakeholderGroup
    self_estimation: SelfEstimation
    competency: Fraction = Fraction(0)
    reputation: Fraction = Fraction(1)
    answered_count: int = 0
    registered_at_seq: int = 0


@dataclass(frozen=True)
class IntroQuestion:
    text: str
    options: tuple[str, ...]
    answer_index: int

    def __post_init__(self):
        if len(self.options) < 2:
            raise ValueError("an intro question needs at least two options")
        if not 0 <= self.answer_index < len(self.options):
            raise ValueError("keyed answer out of range")


@dataclass(frozen=True)
class IntroTest:
    questions: tuple[IntroQuestion, ...] = ()

    def public_view(self) -> list[dict]:
        """Questions without the keyed answers, for delivery to participants."""
        return [
            {"text": q.text, "options": list(q.options)} for q in self.questions
        ]


def register(
    participant_id: str,
    display_name: str,
    stakeholder_group: StakeholderGroup,
    self_estimation: SelfEstimation,
    seq: int = 0,
) -> Participant:
    if not display_name.strip():
        raise EmptyName("participant name is empty")
    return Participant(
        id=participant_id,
        display_name=display_name.strip(),
        stakeholder_group=stakeholder_group,
        self_estimation=self_estimation,
        registered_at_seq=seq,
    )


def score_intro_test(choices: list[int], test: IntroTest) -> Fraction:
    """Fraction of keyed answers hit; exact rational in [0,1]."""
    if len(choices) != len(test.questions):
        raise LengthMismatch(
            f"{len(choices)} answers for {len(test.questions)} questions"
        )
    if not test.questions:
        return Fraction(0)
    correct = sum(
        1 for choice, q in zip(choices, test.questions) if choice == q.answer_index
    )
    return Fraction(correct, len(test.questions))


def answer_weight(p: Participant) -> Fraction:
    """Per-answer influence in [1/4, 3/2]; competency and reputation both help."""
    rep = min(max(p.reputation, REPUTATION_FLOOR), REPUTATION_CEIL)
    return (WEIGHT_BASE + WEIGHT_BASE * p.competency) * rep


def update_reputation(p: Participant, agreed: bool) -> Fraction:
    """Multiplicative nudge toward/away from 1, clamped to [0.1, 3]."""
    factor = AGREED_FACTOR if agreed else DISAGREED_FACTOR
    p.reputation = min(max(p.reputation * factor, REPUTATION_MIN), REPUTATION_MAX)
    return p.reputation
