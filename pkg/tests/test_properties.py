"""Cross-cutting invariants exercised through the public engine surface."""

import random

import pytest

from conftest import onboard, perfect_test, small_policy
from sooplatform.ei import (
    ConfirmChoice,
    DuplicateVerdict,
    EiSlot,
    NameText,
    PairwiseJudgment,
    ParentChoice,
    SetSelection,
)
from sooplatform.engine import Platform
from sooplatform.events import EventType
from sooplatform.model import ElementKind, ElementState, check_structure
from sooplatform.sim import Scenario, Schedule, TickClock, make_agents, make_truth, simulate

NAMES = ["Economy", "Ecology", "Robustness", "Fairness", "Simplicity", "Cost"]


def drive_random_commands(seed: int, log_path) -> Platform:
    """A reproducible exercise of every command against random input."""
    rng = random.Random(seed)
    platform = Platform(
        policy=small_policy(),
        intro_test=perfect_test(),
        log_path=log_path,
        clock=TickClock(),
    )
    platform.define_goal("Assess the network")
    pids = [onboard(platform, f"P{i}") for i in range(rng.randint(3, 5))]
    for _ in range(rng.randint(10, 30)):
        pid = rng.choice(pids)
        stream = platform.request_stream(
            pid, count=rng.randint(1, 5), seed=rng.getrandbits(32)
        )
        for inst in stream:
            payload = random_payload(inst, rng)
            if payload is None:
                continue
            platform.submit_answer(pid, inst.id, payload)
    return platform


def random_payload(inst, rng):
    slot = inst.slot
    if slot in (EiSlot.CHILD_NAME, EiSlot.COMMON_NAME):
        return NameText(rng.choice(NAMES))
    if slot is EiSlot.DEFINITION_NAME:
        return NameText(f"About {rng.choice(NAMES)}")
    if slot is EiSlot.CONFIRM:
        return ConfirmChoice(rng.choice(["yes", "yes", "no", "dont_know"]))
    if slot is EiSlot.DUPLICATE:
        return DuplicateVerdict(choice=rng.choice(["yes", "no", "dont_know"]))
    if slot is EiSlot.PAIRWISE:
        return PairwiseJudgment(rng.randint(-4, 4))
    if slot in (EiSlot.SIBLING_CHOICE, EiSlot.DEFINITION_CHOICE):
        ids = sorted(inst.option_ids())
        rng.shuffle(ids)
        take = max(1, min(len(ids), inst.k or len(ids)))
        return SetSelection(tuple(ids[:take]))
    if slot is EiSlot.PARENT:
        options = sorted(inst.option_ids())
        if rng.random() < 0.2:
            return ParentChoice(alternative_name=rng.choice(NAMES))
        return ParentChoice(parent_id=rng.choice(options))
    return None


class TestFoldDeterminism:
    def test_hundred_random_sequences_replay_identically(self, tmp_path):
        # same command sequence twice: byte-identical logs, identical hash
        for seed in range(100):
            a = drive_random_commands(seed, tmp_path / f"a{seed}.ldjson")
            b = drive_random_commands(seed, tmp_path / f"b{seed}.ldjson")
            assert a.snapshot() == b.snapshot(), f"seed {seed}"
            lines_a = (tmp_path / f"a{seed}.ldjson").read_text().splitlines()
            lines_b = (tmp_path / f"b{seed}.ldjson").read_text().splitlines()
            assert lines_a == lines_b, f"seed {seed}"
            a.close()
            b.close()

    def test_random_sequences_keep_structure_valid(self, tmp_path):
        for seed in range(0, 40, 4):
            platform = drive_random_commands(seed, tmp_path / f"c{seed}.ldjson")
            assert check_structure(platform.state.tree) == []
            platform.close()

    def test_active_count_shrinks_only_via_merge_or_removal(self, tmp_path):
        from sooplatform.events import read_log
        from sooplatform.state import PlatformState
        from sooplatform.events import apply_event

        platform = drive_random_commands(17, tmp_path / "d.ldjson")
        platform.close()
        state = PlatformState()
        prev_active = 0
        for ev in read_log(tmp_path / "d.ldjson"):
            apply_event(state, ev)
            active = len(state.tree.active_elements())
            if active < prev_active:
                assert ev.type in (
                    EventType.ELEMENT_REMOVED,
                    EventType.ELEMENTS_MERGED,
                ), ev.type
            # merged and removed elements stay retrievable
            prev_active = active
        for el in state.tree.elements.values():
            if el.state is ElementState.MERGED:
                assert el.merged_into in state.tree.elements


class TestEndToEndCoverage:
    def test_all_nine_slots_flow_through_aggregation(self):
        truth = make_truth(
            objectives=2, criteria=5, indicators=5,
            synonyms={"Criterion Field 1": ("Spend Level",)},
        )
        agents = make_agents(16, reliability=(0.9, 1.0), synonym_bias=0.5, seed=6)
        scenario = Scenario(
            truth=truth, agents=agents,
            schedule=Schedule(mode="rounds", rounds=40), seed=12, max_answers=9000,
        )
        result = simulate(scenario)
        state = result.platform.state
        answered_slots = {
            state.instances[ei_id].slot
            for ei_id, by_partic in state.answers.items()
            if by_partic
        }
        assert answered_slots == set(EiSlot), (
            f"missing: {set(EiSlot) - answered_slots}"
        )

    def test_weight_sets_sum_to_one_per_sibling_group(self):
        truth = make_truth(objectives=2, criteria=4, indicators=4)
        agents = make_agents(12, reliability=(1.0, 1.0))
        scenario = Scenario(
            truth=truth, agents=agents,
            schedule=Schedule(mode="rounds", rounds=40), seed=3, max_answers=6000,
        )
        result = simulate(scenario)
        events = [
            e for e in result.platform.log.events
            if e.type is EventType.WEIGHTS_COMPUTED
        ]
        assert events
        for ev in events:
            weights = ev.payload["weights"].values()
            assert sum(weights) == pytest.approx(1.0, abs=1e-9)
            assert all(w > 0 for w in weights)
            assert ev.payload["consistencyRatio"] >= 0.0

    def test_merge_conserves_descendants(self, tmp_path):
        # collision-free merge: the indicator id set only moves, never changes
        platform = Platform(
            policy=small_policy(),
            intro_test=perfect_test(),
            log_path=tmp_path / "mc.ldjson",
        )
        goal_id = platform.define_goal("Assess the network")
        pids = [onboard(platform, f"P{i}") for i in range(6)]

        def name_under(group, parent_id, text):
            for pid in group:
                stream = platform.request_stream(pid, count=40, seed=8)
                inst = next(
                    (
                        i for i in stream
                        if i.slot is EiSlot.CHILD_NAME and parent_id in i.targets
                    ),
                    None,
                )
                assert inst is not None
                platform.submit_answer(pid, inst.id, NameText(text))

        name_under(pids[:3], goal_id, "Economy")
        obj = next(
            e for e in platform.state.tree.active_elements()
            if e.kind is ElementKind.OBJECTIVE
        )
        name_under(pids[:3], obj.id, "Direct Costs")
        name_under(pids[3:], obj.id, "Cost Outlays")
        crits = [
            e for e in platform.state.tree.active_elements()
            if e.kind is ElementKind.CRITERION
        ]
        a, b = sorted(crits, key=lambda e: e.id)
        name_under(pids[:3], a.id, "Annual spend")
        name_under(pids[3:], b.id, "Quarterly budget")
        before = {
            e.id
            for e in platform.state.tree.active_elements()
            if e.kind is ElementKind.INDICATOR
        }
        for pid in pids[:2]:
            stream = platform.request_stream(pid, count=40, seed=9)
            dup = next(i for i in stream if i.slot is EiSlot.DUPLICATE)
            platform.submit_answer(pid, dup.id, DuplicateVerdict(choice="yes"))
        for pid in pids:
            stream = platform.request_stream(pid, count=40, seed=10)
            common = next(
                (i for i in stream if i.slot is EiSlot.COMMON_NAME), None
            )
            if common is not None:
                platform.submit_answer(pid, common.id, NameText("Direct Costs"))
        tree = platform.state.tree
        survivor = next(
            e for e in tree.active_elements() if e.kind is ElementKind.CRITERION
        )
        after = {
            e.id
            for e in tree.active_elements()
            if e.kind is ElementKind.INDICATOR
        }
        assert after == before  # same ids, nothing lost or invented
        assert all(
            tree.element(eid).parent_id == survivor.id for eid in after
        )
        assert check_structure(tree) == []
        platform.close()
