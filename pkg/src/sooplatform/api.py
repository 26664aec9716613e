"""HTTP/JSON service surface over a single Platform instance.

All mutations funnel through one lock (single logical writer); reads
serve the latest folded state. Bodies are UTF-8 JSON throughout.
"""

from __future__ import annotations

import threading
from typing import Any

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import participants as pm
from .aggregator import MissingIndicatorValue
from .ei import PayloadError, payload_from_json
from .engine import (
    GoalExists,
    NoGoal,
    NotInWeighting,
    Platform,
    PlatformError,
    RepeatAnswer,
    UnknownElement,
    UnknownInstance,
    UnknownParticipant,
)
from .events import instance_to_json
from .policy import AggregationPolicy


class GoalBody(BaseModel):
    title: str
    description: str = ""
    systemBoundaries: str = ""


class ParticipantBody(BaseModel):
    name: str
    stakeholderGroup: str
    selfEstimation: str


class IntroTestBody(BaseModel):
    choices: list[int]


class AnswerBody(BaseModel):
    eiId: str
    participantId: str
    payload: dict[str, Any]


class DiscussionBody(BaseModel):
    participantId: str
    text: str


class AlternativeBody(BaseModel):
    name: str
    indicatorValues: dict[str, float]


class AssessBody(BaseModel):
    alternatives: list[AlternativeBody]
    directions: dict[str, str] = Field(default_factory=dict)


def create_app(platform: Platform) -> FastAPI:
    app = FastAPI(title="soo-platform", version="0.1.0")
    lock = threading.Lock()

    @app.exception_handler(PlatformError)
    async def platform_error(_, exc: PlatformError):
        status = 400
        if isinstance(exc, (UnknownParticipant, UnknownInstance, UnknownElement)):
            status = 404
        elif isinstance(exc, (RepeatAnswer, GoalExists, NotInWeighting, NoGoal)):
            status = 409
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.exception_handler(PayloadError)
    async def payload_error(_, exc: PayloadError):
        return JSONResponse(
            status_code=400,
            content={"error": f"{type(exc).__name__}: {exc}"},
        )

    @app.post("/api/goal", status_code=201)
    def define_goal(body: GoalBody):
        with lock:
            element_id = platform.define_goal(
                body.title, body.description, body.systemBoundaries
            )
        return {"elementId": element_id}

    @app.post("/api/participants", status_code=201)
    def register(body: ParticipantBody):
        with lock:
            try:
                pid, intro = platform.register_participant(
                    body.name, body.stakeholderGroup, body.selfEstimation
                )
            except (ValueError, pm.EmptyName) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        return {"participantId": pid, "introTest": intro}

    @app.post("/api/participants/{participant_id}/intro-test")
    def intro_test(participant_id: str, body: IntroTestBody):
        with lock:
            try:
                competency = platform.submit_intro_test(participant_id, body.choices)
            except pm.LengthMismatch as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        return {"competency": competency}

    @app.get("/api/participants/{participant_id}/stream")
    def stream(
        participant_id: str,
        count: int = Query(default=None, ge=1),
        seed: int = Query(default=0),
    ):
        with lock:
            instances = platform.request_stream(participant_id, count, seed)
        return {"instances": [instance_to_json(inst) for inst in instances]}

    @app.post("/api/answers", status_code=202)
    def submit_answer(body: AnswerBody):
        payload = payload_from_json(body.payload)
        with lock:
            seq = platform.submit_answer(body.participantId, body.eiId, payload)
        return {"seq": seq}

    @app.get("/api/soo")
    def soo():
        with lock:
            return platform.soo_view()

    @app.get("/api/soo/milestones")
    def milestones():
        with lock:
            return {"milestones": platform.milestone_view()}

    @app.get("/api/soo/milestones/{milestone_id}")
    def milestone(milestone_id: str):
        with lock:
            found = platform.milestone_view(milestone_id)
        if not found:
            raise HTTPException(status_code=404, detail=f"no milestone {milestone_id}")
        return found[0]

    @app.get("/api/elements/{element_id}/discussion")
    def discussion(element_id: str):
        with lock:
            if element_id not in platform.state.tree.elements:
                raise HTTPException(status_code=404, detail=f"no element {element_id}")
            posts = platform.state.discussions.get(element_id, [])
            return {
                "posts": [
                    {
                        "id": post.id,
                        "participantId": post.participant_id,
                        "text": post.text,
                        "atSeq": post.at_seq,
                    }
                    for post in posts
                ]
            }

    @app.post("/api/elements/{element_id}/discussion", status_code=201)
    def post_discussion(element_id: str, body: DiscussionBody):
        with lock:
            post_id = platform.post_discussion(element_id, body.participantId, body.text)
        return {"postId": post_id}

    @app.get("/api/stats")
    def stats():
        with lock:
            report = platform.stats()
        return {
            "perParticipantAnswerCount": report.per_participant_answer_count,
            "platformAnswersLast24h": report.platform_answers_last_24h,
            "activeElementCounts": report.active_element_counts,
            "phase": report.phase,
            "milestoneCount": report.milestone_count,
        }

    @app.get("/api/participants/{participant_id}/stats")
    def participant_stats(participant_id: str):
        with lock:
            return platform.participant_stats(participant_id)

    @app.post("/api/assess")
    def assess(body: AssessBody):
        alternatives = {alt.name: alt.indicatorValues for alt in body.alternatives}
        with lock:
            try:
                ranking = platform.assess(alternatives, body.directions or None)
            except MissingIndicatorValue as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        return {"ranking": [{"name": name, "score": score} for name, score in ranking]}

    @app.put("/api/admin/policy")
    def set_policy(body: dict = Body(...)):
        try:
            policy = AggregationPolicy.from_json(body)
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        with lock:
            platform.set_policy(policy)
        return {"policy": policy.to_json()}

    @app.post("/api/admin/milestone", status_code=201)
    def force_milestone():
        with lock:
            milestone_id = platform.force_milestone()
        return {"milestoneId": milestone_id}

    return app
