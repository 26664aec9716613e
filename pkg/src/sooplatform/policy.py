"""Tunable constants that govern aggregation and stream generation.

Rates are compared against exact rational tallies via Fraction(float),
i.e. the threshold is the exact value of the configured float, so every
decision is reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from fractions import Fraction


DEFAULT_PRIORITY_BASES = {
    "pending_merges": 5.0,
    "pending_validations": 4.0,
    "pending_pairwise": 4.0,
    "missing_children": 3.0,
    "unchecked_pairs": 2.0,
    "structure_checks": 1.0,
    "definition_gaps": 1.0,
}


@dataclass
class AggregationPolicy:
    # validation: confirmation rate of 75 % or more and at least 10 confirmations
    validate_rate: float = 0.75
    min_confirm_weight: float = 10.0
    # symmetric removal rule
    reject_rate: float = 0.75
    min_reject_weight: float = 10.0
    # one independent naming counts like one weighted confirmation
    naming_unit: float = 1.0
    # duplicate handling
    merge_similarity_rate: float = 0.6
    min_duplicate_answers: float = 5.0
    # relocation
    relocate_rate: float = 2.0 / 3.0
    min_structure_weight: float = 10.0
    # milestone
    milestone_avg_validity: float = 0.8
    stability_window: int = 25
    # common-name candidates validate like ordinary candidates
    common_name_validate_rate: float = 0.75
    common_name_min_weight: float = 10.0
    # stream generation
    choose_cap: int = 5
    pairwise_min_weight: float = 3.0
    naming_competency_min: float = 0.5
    page_default: int = 10
    page_max: int = 20
    priority_bases: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_PRIORITY_BASES)
    )
    # stakeholder routing: slot name -> groups the question is meant for;
    # unlisted slots reach everyone
    group_tag_rules: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        for name in (
            "validate_rate",
            "reject_rate",
            "merge_similarity_rate",
            "relocate_rate",
            "milestone_avg_validity",
            "common_name_validate_rate",
        ):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} must be in (0, 1], got {value}")
        for name in (
            "min_confirm_weight",
            "min_reject_weight",
            "min_duplicate_answers",
            "min_structure_weight",
            "common_name_min_weight",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.stability_window < 1:
            raise ValueError("stability_window must be >= 1")

    def scaled(self, factor: float) -> "AggregationPolicy":
        """Re-express weight-denominated minimums after scaling answer weights.

        Scaling every answer weight by c is a change of unit; thresholds
        measured in that unit scale along, rates and counts do not.
        """
        data = self.to_json()
        for key in (
            "minConfirmWeight",
            "minRejectWeight",
            "minDuplicateAnswers",
            "minStructureWeight",
            "commonNameMinWeight",
            "pairwiseMinWeight",
        ):
            data[key] = data[key] * factor
        return AggregationPolicy.from_json(data)

    def to_json(self) -> dict:
        return {
            "validateRate": self.validate_rate,
            "minConfirmWeight": self.min_confirm_weight,
            "rejectRate": self.reject_rate,
            "minRejectWeight": self.min_reject_weight,
            "namingUnit": self.naming_unit,
            "mergeSimilarityRate": self.merge_similarity_rate,
            "minDuplicateAnswers": self.min_duplicate_answers,
            "relocateRate": self.relocate_rate,
            "minStructureWeight": self.min_structure_weight,
            "milestoneAvgValidity": self.milestone_avg_validity,
            "stabilityWindow": self.stability_window,
            "commonNameValidateRate": self.common_name_validate_rate,
            "commonNameMinWeight": self.common_name_min_weight,
            "chooseCap": self.choose_cap,
            "pairwiseMinWeight": self.pairwise_min_weight,
            "namingCompetencyMin": self.naming_competency_min,
            "pageDefault": self.page_default,
            "pageMax": self.page_max,
            "priorityBases": dict(self.priority_bases),
            "groupTagRules": {k: list(v) for k, v in self.group_tag_rules.items()},
        }

    @staticmethod
    def from_json(data: dict) -> "AggregationPolicy":
        key_map = {
            "validateRate": "validate_rate",
            "minConfirmWeight": "min_confirm_weight",
            "rejectRate": "reject_rate",
            "minRejectWeight": "min_reject_weight",
            "namingUnit": "naming_unit",
            "mergeSimilarityRate": "merge_similarity_rate",
            "minDuplicateAnswers": "min_duplicate_answers",
            "relocateRate": "relocate_rate",
            "minStructureWeight": "min_structure_weight",
            "milestoneAvgValidity": "milestone_avg_validity",
            "stabilityWindow": "stability_window",
            "commonNameValidateRate": "common_name_validate_rate",
            "commonNameMinWeight": "common_name_min_weight",
            "chooseCap": "choose_cap",
            "pairwiseMinWeight": "pairwise_min_weight",
            "namingCompetencyMin": "naming_competency_min",
            "pageDefault": "page_default",
            "pageMax": "page_max",
            "priorityBases": "priority_bases",
            "groupTagRules": "group_tag_rules",
        }
        known = {f.name for f in fields(AggregationPolicy)}
        kwargs = {}
        for key, value in data.items():
            attr = key_map.get(key, key)
            if attr not in known:
                raise ValueError(f"unknown policy key {key!r}")
            kwargs[attr] = value
        return AggregationPolicy(**kwargs)


def rate_at_least(part: Fraction, total: Fraction, rate: float) -> bool:
    """Exact `part / total >= rate`; False on an empty total."""
    if total <= 0:
        return False
    return part >= Fraction(rate) * total


def weight_at_least(value: Fraction, minimum: float) -> bool:
    return value >= Fraction(minimum)
