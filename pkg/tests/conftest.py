import pytest

from sooplatform.engine import Platform
from sooplatform.participants import IntroQuestion, IntroTest
from sooplatform.policy import AggregationPolicy


def small_policy(**overrides) -> AggregationPolicy:
    """Desk-sized thresholds so a handful of participants can resolve things."""
    base = dict(
        min_confirm_weight=2.0,
        min_reject_weight=2.0,
        min_duplicate_answers=2.0,
        min_structure_weight=2.0,
        common_name_min_weight=2.0,
        stability_window=3,
        pairwise_min_weight=1.0,
    )
    base.update(overrides)
    return AggregationPolicy(**base)


def perfect_test(n: int = 4) -> IntroTest:
    return IntroTest(
        tuple(
            IntroQuestion(f"Q{i}", ("yes", "no", "maybe"), 0) for i in range(n)
        )
    )


@pytest.fixture
def platform(tmp_path):
    p = Platform(
        policy=small_policy(),
        intro_test=perfect_test(),
        log_path=tmp_path / "events.ldjson",
    )
    yield p
    p.close()


def onboard(platform: Platform, name: str, group: str = "expert") -> str:
    pid, test = platform.register_participant(name, group, "expert")
    platform.submit_intro_test(pid, [0] * len(test))
    return pid
