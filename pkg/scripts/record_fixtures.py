"""Record API fixtures for the frontend contract tests.

Drives the engine to a state where every question type is live, onboards
a fixture participant, pulls stream pages until 20 cards covering all
seven types have been delivered and answered, and dumps the exact wire
responses into frontend/test/fixtures/session.json.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from sooplatform.ei import (
    ConfirmChoice,
    DuplicateVerdict,
    EiSlot,
    EiType,
    NameText,
    PairwiseJudgment,
    ParentChoice,
    SetSelection,
)
from sooplatform.engine import Platform
from sooplatform.events import instance_to_json
from sooplatform.participants import IntroQuestion, IntroTest
from sooplatform.policy import AggregationPolicy
from sooplatform.sim import TickClock

FIXTURE_PATH = Path(__file__).resolve().parents[1] / "frontend" / "test" / "fixtures" / "session.json"

INTRO_TEST = IntroTest(
    (
        IntroQuestion(
            "What does an indicator provide?",
            ("a concrete measured value", "a stakeholder group", "a discussion thread"),
            0,
        ),
        IntroQuestion(
            "A criterion always belongs to exactly one ...",
            ("objective", "indicator", "participant"),
            0,
        ),
        IntroQuestion(
            "What happens to elements that get merged?",
            ("they stay retrievable under the surviving element", "they are deleted", "they become goals"),
            0,
        ),
        IntroQuestion(
            "When does weighting start?",
            ("after a milestone freezes the structure", "immediately", "never"),
            0,
        ),
    )
)


def onboard(platform: Platform, name: str) -> str:
    pid, test = platform.register_participant(name, "expert", "expert")
    platform.submit_intro_test(pid, [0] * len(test))
    return pid


def find(platform, pid, slot, target=None, seed=1):
    stream = platform.request_stream(pid, count=40, seed=seed)
    for inst in stream:
        if inst.slot is slot and (target is None or target in inst.targets):
            return inst
    return None


def name_once(platform, pid, parent_id, text) -> str:
    inst = find(platform, pid, EiSlot.CHILD_NAME, parent_id)
    assert inst is not None, f"{pid} has no naming question for {parent_id}"
    platform.submit_answer(pid, inst.id, NameText(text))
    el = next(
        e for e in platform.state.tree.active_elements()
        if e.parent_id == parent_id and e.name == text
    )
    return el.id


def confirm_once(platform, pid, element_id):
    inst = find(platform, pid, EiSlot.CONFIRM, element_id, seed=4)
    assert inst is not None, f"{pid} has no confirm question for {element_id}"
    platform.submit_answer(pid, inst.id, ConfirmChoice("yes"))


def build_platform() -> Platform:
    policy = AggregationPolicy(
        min_confirm_weight=2.0,
        min_reject_weight=2.0,
        min_duplicate_answers=2.0,
        min_structure_weight=4.0,
        common_name_min_weight=4.0,
        stability_window=50,
        pairwise_min_weight=3.0,
        page_max=100,  # the recorder needs full-pool pulls while staging
    )
    platform = Platform(policy=policy, intro_test=INTRO_TEST, clock=TickClock())
    goal_id = platform.define_goal(
        "Sustainable mobility services",
        "Find the objective structure for comparing mobility plans.",
        "City-wide services only",
    )
    helpers = [onboard(platform, f"Helper {i + 1}") for i in range(6)]
    h1, h2, h3, h4, h5, h6 = helpers
    # each helper may answer a given question once, so every element gets
    # one namer plus one confirmer
    economic = name_once(platform, h1, goal_id, "Economic Objectives")
    confirm_once(platform, h2, economic)
    environmental = name_once(platform, h2, goal_id, "Environmental Objectives")
    confirm_once(platform, h1, environmental)
    name_once(platform, h3, goal_id, "Cultural Fit")  # stays a candidate
    named_criteria = {}
    for namer, confirmer, text in [
        (h1, h6, "Direct Costs"),
        (h2, h5, "Indirect Costs"),
        (h3, h4, "Revenue Stability"),
        (h4, h3, "Maintenance Effort"),
        (h5, h2, "Upgrade Flexibility"),
    ]:
        eid = name_once(platform, namer, economic, text)
        confirm_once(platform, confirmer, eid)
        named_criteria[text] = eid
    name_once(platform, h6, economic, "Brand Value")  # candidate
    direct = platform.state.tree.element(named_criteria["Direct Costs"])
    indirect = platform.state.tree.element(named_criteria["Indirect Costs"])
    capex = name_once(platform, h2, direct.id, "Capex per household")
    confirm_once(platform, h3, capex)
    # open a merge proposal on (Direct Costs, Indirect Costs)
    for pid in (h4, h5):
        stream = platform.request_stream(pid, count=60, seed=7)
        dup = next(
            (
                inst
                for inst in stream
                if inst.slot is EiSlot.DUPLICATE
                and set(inst.targets) == {direct.id, indirect.id}
            ),
            None,
        )
        assert dup is not None
        platform.submit_answer(pid, dup.id, DuplicateVerdict(choice="yes"))
    assert platform.state.proposals, "expected a merge proposal"
    # two competing definition texts for Direct Costs
    for pid, text in [
        (h1, "All spending billed directly to the operator."),
        (h2, "Capital and running costs that appear on invoices."),
    ]:
        inst = find(platform, pid, EiSlot.DEFINITION_NAME, direct.id, seed=9)
        platform.submit_answer(pid, inst.id, NameText(text))
    platform.force_milestone()
    return platform


def auto_payload(inst, counter):
    slot = inst.slot
    if slot in (EiSlot.CHILD_NAME,):
        return NameText(f"Fixture naming {counter}")
    if slot is EiSlot.DEFINITION_NAME:
        return NameText(f"Fixture definition {counter}")
    if slot is EiSlot.COMMON_NAME:
        return NameText("Direct Costs")
    if slot is EiSlot.CONFIRM:
        # keep candidates pending so choice/confirm gaps stay open
        return ConfirmChoice("dont_know")
    if slot is EiSlot.DUPLICATE:
        return DuplicateVerdict(choice="no")
    if slot is EiSlot.PAIRWISE:
        return PairwiseJudgment(1)
    if slot in (EiSlot.SIBLING_CHOICE, EiSlot.DEFINITION_CHOICE):
        ids = sorted(inst.option_ids())
        take = min(len(ids), inst.k or len(ids))
        return SetSelection(tuple(ids[:take]))
    if slot is EiSlot.PARENT:
        return ParentChoice(parent_id=sorted(inst.option_ids())[0])
    raise ValueError(slot)


def record() -> dict:
    platform = build_platform()
    pid, intro = platform.register_participant("Jordan", "planner", "expert")
    competency = platform.submit_intro_test(pid, [0] * len(intro))
    pages = []
    delivered: list = []
    seen_types: set = set()
    counter = 0
    seed = 1
    def have_capped_choice() -> bool:
        return any(inst.k == 5 and len(inst.options) > 5 for inst in delivered)

    while (
        len(delivered) < 20 or seen_types != set(EiType) or not have_capped_choice()
    ) and seed <= 25:
        page = platform.request_stream(pid, count=7, seed=seed)
        seed += 1
        if not page:
            break
        pages.append([instance_to_json(inst) for inst in page])
        for inst in page:
            delivered.append(inst)
            seen_types.add(inst.type)
            counter += 1
            platform.submit_answer(pid, inst.id, auto_payload(inst, counter))
    assert len(delivered) >= 20, f"only {len(delivered)} cards delivered"
    missing = set(EiType) - seen_types
    assert not missing, f"fixture pages lack types: {missing}"
    ids = [inst.id for inst in delivered]
    assert len(ids) == len(set(ids)), "duplicate delivery in fixture"
    # one choose card must carry the default cap of five
    assert any(
        inst.k == 5 and len(inst.options) > 5 for inst in delivered
    ), "need a set-based card with k=5 and more than five options"

    stats = platform.stats()
    goal_id = platform.state.tree.goal_id
    post_id = platform.post_discussion(goal_id, pid, "Is commuting in scope?")
    discussion = {
        "posts": [
            {
                "id": post_id,
                "participantId": pid,
                "text": "Is commuting in scope?",
                "atSeq": platform.seq,
            }
        ]
    }
    return {
        "register": {"participantId": pid, "introTest": intro},
        "introTestResult": {"competency": competency},
        "streamPages": pages,
        "soo": platform.soo_view(),
        "stats": {
            "perParticipantAnswerCount": stats.per_participant_answer_count,
            "platformAnswersLast24h": stats.platform_answers_last_24h,
            "activeElementCounts": stats.active_element_counts,
            "phase": stats.phase,
            "milestoneCount": stats.milestone_count,
        },
        "participantStats": platform.participant_stats(pid),
        "discussionElementId": goal_id,
        "discussion": discussion,
    }


def main() -> int:
    fixtures = record()
    FIXTURE_PATH.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE_PATH.write_text(
        json.dumps(fixtures, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    total = sum(len(p) for p in fixtures["streamPages"])
    print(f"wrote {FIXTURE_PATH} ({total} cards in {len(fixtures['streamPages'])} pages)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
