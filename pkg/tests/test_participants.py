from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from sooplatform.participants import (
    EmptyName,
    IntroQuestion,
    IntroTest,
    LengthMismatch,
    SelfEstimation,
    StakeholderGroup,
    answer_weight,
    register,
    score_intro_test,
    update_reputation,
)


def make_participant(competency=Fraction(0), reputation=Fraction(1)):
    p = register("px", "Pat", StakeholderGroup.EXPERT, SelfEstimation.EXPERT)
    p.competency = competency
    p.reputation = reputation
    return p


TEST = IntroTest(
    tuple(IntroQuestion(f"Q{i}", ("a", "b", "c", "d"), i % 4) for i in range(10))
)


class TestRegister:
    def test_initial_state(self):
        p = register("p1", "Expert Erin", StakeholderGroup.EXPERT, SelfEstimation.EXPERT)
        assert p.competency == 0 and p.reputation == 1

    def test_empty_name(self):
        with pytest.raises(EmptyName):
            register("p1", "  ", StakeholderGroup.EXPERT, SelfEstimation.EXPERT)


class TestIntroTest:
    def test_perfect(self):
        choices = [q.answer_index for q in TEST.questions]
        assert score_intro_test(choices, TEST) == 1

    def test_zero(self):
        choices = [(q.answer_index + 1) % 4 for q in TEST.questions]
        assert score_intro_test(choices, TEST) == 0

    def test_fraction(self):
        choices = [
            q.answer_index if i < 7 else (q.answer_index + 1) % 4
            for i, q in enumerate(TEST.questions)
        ]
        assert score_intro_test(choices, TEST) == Fraction(7, 10)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            score_intro_test([0], TEST)

    def test_public_view_hides_key(self):
        view = TEST.public_view()
        assert all("answer_index" not in q and "answerIndex" not in q for q in view)


class TestAnswerWeight:
    def test_novice(self):
        assert answer_weight(make_participant()) == Fraction(1, 2)

    def test_expert(self):
        assert answer_weight(make_participant(competency=Fraction(1))) == 1

    def test_reputation_clamped_high(self):
        p = make_participant(competency=Fraction(1), reputation=Fraction(27, 10))
        assert answer_weight(p) == Fraction(3, 2)

    def test_reputation_clamped_low(self):
        p = make_participant(reputation=Fraction(1, 10))
        assert answer_weight(p) == Fraction(1, 4)

    @given(
        c1=st.fractions(min_value=0, max_value=1),
        c2=st.fractions(min_value=0, max_value=1),
        rep=st.fractions(min_value=Fraction(1, 10), max_value=3),
    )
    def test_monotone_in_competency(self, c1, c2, rep):
        lo, hi = sorted([c1, c2])
        assert answer_weight(make_participant(lo, rep)) <= answer_weight(
            make_participant(hi, rep)
        )


class TestReputation:
    def test_agreed(self):
        p = make_participant()
        assert update_reputation(p, agreed=True) == Fraction(21, 20)

    def test_disagreed(self):
        p = make_participant()
        assert update_reputation(p, agreed=False) == Fraction(19, 20)

    def test_clamped(self):
        p = make_participant(reputation=Fraction(3))
        assert update_reputation(p, agreed=True) == Fraction(3)

    @given(st.lists(st.booleans(), max_size=12))
    def test_order_invariant_below_clamp(self, outcomes):
        p1 = make_participant()
        for outcome in outcomes:
            update_reputation(p1, outcome)
        p2 = make_participant()
        for outcome in reversed(outcomes):
            update_reputation(p2, outcome)
        # products commute as long as no intermediate value hits a clamp;
        # with <= 12 updates from 1.0 the bounds are unreachable
        assert p1.reputation == p2.reputation
