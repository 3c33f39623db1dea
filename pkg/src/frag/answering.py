"""Multi-image answer requests and response parsing."""

from __future__ import annotations

import re
from dataclasses import dataclass

from frag.backend import ChatBackend, ChatRequest, ImagePart
from frag.media import ImagePayload
from frag.selection import SelectionResult
from frag.tasks import AnswerType, QueryTask

MCQ_INSTRUCTION = "Answer with the option's letter from the given choices directly."
EXTRACTIVE_INSTRUCTION = "Answer the question using a single word or phrase."
MCQ_TEMPLATE = "{question}\n{options}\n" + MCQ_INSTRUCTION
EXTRACTIVE_TEMPLATE = "{question}\n" + EXTRACTIVE_INSTRUCTION
ANSWER_MAX_TOKENS = 64
UNPARSED = "unparsed"


@dataclass(frozen=True)
class Answer:
    raw: str
    parsed: str
    selection: SelectionResult | None = None


def render_answer_text(task: QueryTask, template: str | None = None) -> str:
    template = template or task.prompt_template
    if template is None:
        template = MCQ_TEMPLATE if task.answer_type is AnswerType.MCQ else EXTRACTIVE_TEMPLATE
    return template.replace("{question}", task.question).replace("{options}", task.option_lines())


def build_answer_request(
    task: QueryTask,
    selection: SelectionResult,
    images: list[ImagePayload],
    *,
    model: str = "default",
    detail: str | None = None,
    template: str | None = None,
) -> ChatRequest:
    """Selected frames as image parts in frame order, followed by the question text."""
    if not selection.selected:
        raise ValueError("answer request needs at least one selected frame")
    if len(images) != len(selection.selected):
        raise ValueError(
            f"got {len(images)} images for {len(selection.selected)} selected frames"
        )
    order = [f.frame_index for f in selection.selected]
    if order != sorted(order):
        raise ValueError("selected frames must be in presentation order")
    parts = tuple(
        ImagePart(payload=img, media_id=f.proposal.media_id, frame_index=f.frame_index)
        for f, img in zip(selection.selected, images)
    )
    return ChatRequest(
        model=model,
        images=parts,
        text=render_answer_text(task, template),
        max_tokens=ANSWER_MAX_TOKENS,
        temperature=0.0,
        detail=detail,
    )


def _normalize_extractive(raw: str) -> str:
    text = " ".join(raw.split())
    # repeated so that the result is a fixed point
    while text.endswith("."):
        text = text[:-1].rstrip()
    return text


def parse_answer(raw: str, task: QueryTask) -> str:
    if task.answer_type is AnswerType.EXTRACTIVE:
        return _normalize_extractive(raw)

    letters = "".join(re.escape(l) for l in task.letters)
    pattern = re.compile(rf"(?<![A-Za-z0-9])([{letters}])(?:[.):]|(?![A-Za-z0-9]))")
    match = pattern.search(raw)
    if match:
        return match.group(1)
    stripped = raw.strip().lower()
    for letter, text in task.options:
        if stripped == text.strip().lower():
            return letter
    return UNPARSED


def answer(
    backend: ChatBackend,
    task: QueryTask,
    selection: SelectionResult,
    images: list[ImagePayload],
    **request_kwargs,
) -> Answer:
    result = backend.complete(build_answer_request(task, selection, images, **request_kwargs))
    return Answer(raw=result.content, parsed=parse_answer(result.content, task), selection=selection)
