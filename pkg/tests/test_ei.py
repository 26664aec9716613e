from fractions import Fraction

import pytest

from sooplatform.ei import (
    CONFIRM_OPTIONS,
    ConfirmChoice,
    DuplicateVerdict,
    EI_SCHEMAS,
    EI_TABLE_ID,
    EiInstance,
    EiSlot,
    EiType,
    EmptyText,
    NameText,
    Option,
    OverCap,
    PairwiseJudgment,
    ParentChoice,
    SetSelection,
    UnknownOption,
    VariantMismatch,
    applicable_ei_types,
    duplicate_says_yes,
    payload_from_json,
    payload_to_json,
    render_question,
    validate_answer_payload,
)
from sooplatform.model import ElementKind, ElementState, Phase, SooTree, insert_candidate
from sooplatform.state import PairStats, pair_key


def build_tree():
    tree = SooTree()
    insert_candidate(tree, ElementKind.GOAL, "Water system quality", None, "i", Fraction(0))
    tree.element(tree.goal_id).state = ElementState.VALIDATED
    return tree


def add(tree, kind, name, parent, validated=False):
    eid = insert_candidate(tree, kind, name, parent, "p", Fraction(1))
    if validated:
        tree.element(eid).state = ElementState.VALIDATED
    return eid


class TestSchemas:
    def test_one_schema_per_type_with_table_ids(self):
        assert set(EI_SCHEMAS) == set(EiType)
        assert sorted(s.id for s in EI_SCHEMAS.values()) == [1, 2, 3, 4, 5, 6, 7]
        for ei_type, schema in EI_SCHEMAS.items():
            assert schema.id == EI_TABLE_ID[ei_type]
            assert schema.description and schema.sample_question and schema.interaction

    def test_parent_selection_excludes_objectives(self):
        affected = EI_SCHEMAS[EiType.SELECT_PARENT].elements_affected
        assert affected == {ElementKind.CRITERION, ElementKind.INDICATOR}


class TestRenderQuestion:
    def test_confirm_template(self):
        tree = build_tree()
        obj = add(tree, ElementKind.OBJECTIVE, "Economy", tree.goal_id, validated=True)
        crit = add(tree, ElementKind.CRITERION, "Direct Costs", obj)
        text = render_question(
            EiType.CONFIRM, [tree.element(crit)], parent=tree.element(obj)
        )
        assert text == "Is Direct Costs a valid criterion to assess the objective Economy?"

    def test_pairwise_template(self):
        tree = build_tree()
        obj = add(tree, ElementKind.OBJECTIVE, "Economic Objective", tree.goal_id, validated=True)
        a = add(tree, ElementKind.CRITERION, "Direct Costs", obj, validated=True)
        b = add(tree, ElementKind.CRITERION, "Indirect Costs", obj, validated=True)
        text = render_question(
            EiType.PRIORITIZE_PAIRWISE,
            [tree.element(a), tree.element(b)],
            parent=tree.element(obj),
        )
        assert text == (
            "Which criterion is more important to describe the objective"
            " Economic Objective? Direct Costs or Indirect Costs?"
        )

    def test_common_name_template(self):
        tree = build_tree()
        obj = add(tree, ElementKind.OBJECTIVE, "Economy", tree.goal_id, validated=True)
        a = add(tree, ElementKind.CRITERION, "Direct Costs", obj, validated=True)
        b = add(tree, ElementKind.CRITERION, "Indirect Costs", obj, validated=True)
        text = render_question(
            EiType.DETERMINE_COMMON_NAME, [tree.element(a), tree.element(b)]
        )
        assert text == (
            'What is a common name for the criteria "Direct Costs" and "Indirect Costs"?'
        )

    def test_rendering_is_pure(self):
        tree = build_tree()
        obj = add(tree, ElementKind.OBJECTIVE, "Economy", tree.goal_id, validated=True)
        crit = add(tree, ElementKind.CRITERION, "Direct Costs", obj)
        args = (EiType.CONFIRM, [tree.element(crit)])
        assert render_question(*args, parent=tree.element(obj)) == render_question(
            *args, parent=tree.element(obj)
        )

    def test_name_article(self):
        tree = build_tree()
        text = render_question(
            EiType.NAME,
            [],
            slot=EiSlot.CHILD_NAME,
            parent=tree.element(tree.goal_id),
            child_kind=ElementKind.OBJECTIVE,
        )
        assert text.startswith("Please name an objective, which is important")


def make_instance(ei_type, slot, targets, options=(), k=None):
    return EiInstance(
        id="q000001", type=ei_type, slot=slot, targets=list(targets),
        question_text="q", options=list(options), k=k,
    )


class TestValidatePayload:
    def test_confirm_ok(self):
        inst = make_instance(EiType.CONFIRM, EiSlot.CONFIRM, ["e1"], CONFIRM_OPTIONS)
        validate_answer_payload(inst, ConfirmChoice("yes"))

    def test_over_cap(self):
        options = [Option(f"e{i}", f"E{i}") for i in range(8)]
        inst = make_instance(
            EiType.CHOOSE_SET_BASED, EiSlot.SIBLING_CHOICE,
            [o.id for o in options], options, k=5,
        )
        with pytest.raises(OverCap):
            validate_answer_payload(
                inst, SetSelection(tuple(f"e{i}" for i in range(6)))
            )

    def test_variant_mismatch(self):
        inst = make_instance(EiType.PRIORITIZE_PAIRWISE, EiSlot.PAIRWISE, ["a", "b"])
        with pytest.raises(VariantMismatch):
            validate_answer_payload(inst, NameText("not a judgment"))

    def test_unknown_option(self):
        options = [Option("e1", "E1"), Option("e2", "E2"), Option("e3", "E3")]
        inst = make_instance(
            EiType.CHOOSE_SET_BASED, EiSlot.SIBLING_CHOICE, ["e1", "e2", "e3"],
            options, k=5,
        )
        with pytest.raises(UnknownOption):
            validate_answer_payload(inst, SetSelection(("e9",)))

    def test_duplicate_selection_rejected(self):
        options = [Option("e1", "E1"), Option("e2", "E2"), Option("e3", "E3")]
        inst = make_instance(
            EiType.CHOOSE_SET_BASED, EiSlot.SIBLING_CHOICE, ["e1", "e2", "e3"],
            options, k=5,
        )
        with pytest.raises(UnknownOption):
            validate_answer_payload(inst, SetSelection(("e1", "e1")))

    def test_empty_text(self):
        inst = make_instance(EiType.NAME, EiSlot.CHILD_NAME, ["e1"])
        with pytest.raises(EmptyText):
            validate_answer_payload(inst, NameText("   "))

    def test_intensity_range(self):
        inst = make_instance(EiType.PRIORITIZE_PAIRWISE, EiSlot.PAIRWISE, ["a", "b"])
        validate_answer_payload(inst, PairwiseJudgment(-4))
        with pytest.raises(UnknownOption):
            validate_answer_payload(inst, PairwiseJudgment(5))

    def test_parent_choice_exclusive(self):
        inst = make_instance(
            EiType.SELECT_PARENT, EiSlot.PARENT, ["e1"],
            [Option("e2", "A"), Option("e3", "B")],
        )
        validate_answer_payload(inst, ParentChoice(parent_id="e2"))
        validate_answer_payload(inst, ParentChoice(alternative_name="Another"))
        with pytest.raises(VariantMismatch):
            validate_answer_payload(inst, ParentChoice())
        with pytest.raises(UnknownOption):
            validate_answer_payload(inst, ParentChoice(parent_id="e9"))

    def test_seven_point_overlap_binarized(self):
        assert duplicate_says_yes(DuplicateVerdict(overlap=5)) is True
        assert duplicate_says_yes(DuplicateVerdict(overlap=4)) is False
        assert duplicate_says_yes(DuplicateVerdict(choice="dont_know")) is None


class TestPayloadJson:
    @pytest.mark.parametrize(
        "payload",
        [
            NameText("Economy"),
            ConfirmChoice("dont_know"),
            PairwiseJudgment(-3),
            SetSelection(("e1", "e2")),
            DuplicateVerdict(choice="no"),
            DuplicateVerdict(overlap=6),
            ParentChoice(parent_id="e2"),
            ParentChoice(alternative_name="Social Objectives"),
        ],
    )
    def test_roundtrip(self, payload):
        assert payload_from_json(payload_to_json(payload)) == payload


class TestApplicable:
    def test_goal_only_offers_objective_naming_only(self):
        tree = build_tree()
        result = applicable_ei_types(tree, {}, Phase.STRUCTURE)
        assert result == {(EiType.NAME, tree.goal_id, ElementKind.OBJECTIVE)}

    def test_candidate_gets_confirm_not_children(self):
        tree = build_tree()
        obj = add(tree, ElementKind.OBJECTIVE, "Economy", tree.goal_id, validated=True)
        crit = add(tree, ElementKind.CRITERION, "Direct Costs", obj)
        result = applicable_ei_types(tree, {}, Phase.STRUCTURE)
        assert (EiType.CONFIRM, crit) in result
        assert (EiType.NAME, crit, ElementKind.INDICATOR) not in result

    def test_pairwise_gated_by_phase(self):
        tree = build_tree()
        obj = add(tree, ElementKind.OBJECTIVE, "Economy", tree.goal_id, validated=True)
        a = add(tree, ElementKind.CRITERION, "A", obj, validated=True)
        b = add(tree, ElementKind.CRITERION, "B", obj, validated=True)
        structure = applicable_ei_types(tree, {}, Phase.STRUCTURE)
        assert not any(t[0] is EiType.PRIORITIZE_PAIRWISE for t in structure)
        weighting = applicable_ei_types(tree, {}, Phase.WEIGHTING)
        assert (EiType.PRIORITIZE_PAIRWISE, obj, pair_key(a, b)) in weighting

    def test_common_name_needs_proposed_pair(self):
        tree = build_tree()
        obj = add(tree, ElementKind.OBJECTIVE, "Economy", tree.goal_id, validated=True)
        a = add(tree, ElementKind.CRITERION, "A", obj, validated=True)
        b = add(tree, ElementKind.CRITERION, "B", obj, validated=True)
        key = pair_key(a, b)
        no_proposal = applicable_ei_types(tree, {key: PairStats()}, Phase.STRUCTURE)
        assert (EiType.DETERMINE_COMMON_NAME, key) not in no_proposal
        proposed = applicable_ei_types(
            tree, {key: PairStats(proposed=True)}, Phase.STRUCTURE
        )
        assert (EiType.DETERMINE_COMMON_NAME, key) in proposed

    def test_validation_is_monotone_for_naming(self):
        # validating an element only ever adds naming targets
        tree = build_tree()
        obj = add(tree, ElementKind.OBJECTIVE, "Economy", tree.goal_id)
        before = applicable_ei_types(tree, {}, Phase.STRUCTURE)
        tree.element(obj).state = ElementState.VALIDATED
        after = applicable_ei_types(tree, {}, Phase.STRUCTURE)
        naming_before = {t for t in before if t[0] is EiType.NAME}
        naming_after = {t for t in after if t[0] is EiType.NAME}
        assert naming_before <= naming_after
        # the confirm target disappears only because it was consumed
        assert (EiType.CONFIRM, obj) in before and (EiType.CONFIRM, obj) not in after
