import math
import random

import httpx
import pytest
from hypothesis import given, strategies as st

from frag.backend import HttpChatBackend, ProtocolError
from frag.media import FrameProposal, ImagePayload
from frag.mock import MockBackend
from frag.scoring import SCORING_TEMPLATE, build_scoring_prompt, extract_score, score_frame
from frag.tasks import AnswerType, QueryTask

SUFFIX = (
    "\nDoes the information within the image provide the necessary details to accurately answer the given question?"
    "\nA. yes\nB. no\nAnswer with the option's letter from the given choices directly."
)
IMG = ImagePayload(b"\x89PNG\r\n\x1a\nx", "png")


def test_prompt_embeds_question_verbatim():
    task = QueryTask("t", "What color is the backpack?")
    prompt = build_scoring_prompt(task)
    assert prompt.rendered_prompt == "Question: What color is the backpack?" + SUFFIX
    assert build_scoring_prompt(task).digest == prompt.digest


def test_prompt_rejects_empty_question():
    with pytest.raises(ValueError):
        build_scoring_prompt(QueryTask("t", "  "))


def test_mcq_options_inside_question_block():
    task = QueryTask("t", "Which bag?", AnswerType.MCQ, options=(("A", "red"), ("B", "blue")))
    prompt = build_scoring_prompt(task)
    assert prompt.rendered_prompt == "Question: Which bag?\nA. red\nB. blue" + SUFFIX


def test_template_braces_in_question_are_safe():
    task = QueryTask("t", "What does {x} mean?")
    assert "{x}" in build_scoring_prompt(task, SCORING_TEMPLATE).rendered_prompt


def test_extract_two_tokens():
    score, degraded = extract_score([("A", math.log(0.6)), ("B", math.log(0.3))])
    assert score == pytest.approx(0.6 / 0.9, abs=1e-12)
    assert not degraded


def test_extract_only_a():
    assert extract_score([("A", 0.0)]) == (1.0, False)


def test_extract_only_b_is_informative():
    assert extract_score([("B", math.log(0.7)), ("C", math.log(0.1))]) == (0.0, False)


def test_extract_neither_is_degraded():
    assert extract_score([("The", math.log(0.9)), ("I", math.log(0.05))]) == (0.0, True)


@pytest.mark.parametrize("tok_a, tok_b", [(" A", " B"), ("A.", "B:"), ("A:", "B.")])
def test_token_normalization(tok_a, tok_b):
    score, _ = extract_score([(tok_a, math.log(0.2)), (tok_b, math.log(0.6))])
    assert score == pytest.approx(0.25)


def test_lowercase_letter_not_matched():
    assert extract_score([("a", 0.0)]) == (0.0, True)


def test_first_matching_entry_wins():
    score, _ = extract_score([("A", math.log(0.5)), (" A", math.log(0.4)), ("B", math.log(0.5))])
    assert score == pytest.approx(0.5)


def test_raw_pa_mode():
    score, _ = extract_score([("A", math.log(0.3)), ("B", math.log(0.3))], raw_pa=True)
    assert score == pytest.approx(0.3)


probs = st.floats(min_value=1e-6, max_value=1.0)


@given(pa=probs, pb=probs, c=st.floats(min_value=1e-3, max_value=1.0))
def test_ratio_scale_invariance(pa, pb, c):
    base, _ = extract_score([("A", math.log(pa)), ("B", math.log(pb))])
    scaled, _ = extract_score([("A", math.log(pa * c)), ("B", math.log(pb * c))])
    assert scaled == pytest.approx(base, abs=1e-9)


@given(pa=st.floats(min_value=1e-4, max_value=0.5), pb=st.floats(min_value=1e-4, max_value=0.5))
def test_monotone_in_pa(pa, pb):
    lo, _ = extract_score([("A", math.log(pa)), ("B", math.log(pb))])
    hi, _ = extract_score([("A", math.log(pa * 1.5)), ("B", math.log(pb))])
    assert hi > lo


@given(st.lists(st.tuples(st.sampled_from(["A", "B", " A", "B.", "x", "yes"]), st.floats(-20, 0)), max_size=6))
def test_score_in_unit_interval(entries):
    score, degraded = extract_score(entries)
    assert 0.0 <= score <= 1.0
    if degraded:
        assert score == 0.0


def test_score_frame_with_mock():
    mock = MockBackend({"scores": {"v": {"7": [["A", math.log(0.8)], ["B", math.log(0.2)]]}}})
    prompt = build_scoring_prompt(QueryTask("t", "q?"))
    frame = score_frame(mock, FrameProposal("v", 7, 0), IMG, prompt)
    assert frame.score == pytest.approx(0.8)
    assert not frame.failed and not frame.degraded


def test_score_frame_retry_exhaustion_marks_failed():
    attempts = []

    def handler(request):
        attempts.append(request)
        return httpx.Response(500, text="overloaded")

    backend = HttpChatBackend(
        "http://backend/v1", retries=2, client=httpx.Client(transport=httpx.MockTransport(handler)), sleep=lambda s: None
    )
    frame = score_frame(backend, FrameProposal("v", 0, 0), IMG, build_scoring_prompt(QueryTask("t", "q?")))
    assert frame.failed and frame.score == 0.0
    assert len(attempts) == 3


def test_score_frame_malformed_response_raises_with_body():
    backend = HttpChatBackend(
        "http://backend/v1",
        client=httpx.Client(transport=httpx.MockTransport(lambda r: httpx.Response(200, text="{\"oops\": 1}"))),
    )
    with pytest.raises(ProtocolError) as err:
        score_frame(backend, FrameProposal("v", 0, 0), IMG, build_scoring_prompt(QueryTask("t", "q?")))
    assert "oops" in err.value.raw


def test_scoring_is_order_independent():
    rng = random.Random(3)
    table = {str(i): [["A", math.log(rng.uniform(0.01, 0.99))], ["B", math.log(rng.uniform(0.01, 0.99))]] for i in range(50)}
    mock = MockBackend({"scores": {"v": table}})
    prompt = build_scoring_prompt(QueryTask("t", "q?"))
    proposals = [FrameProposal("v", i, i) for i in range(50)]
    forward = {p.frame_index: score_frame(mock, p, IMG, prompt).score for p in proposals}
    rng.shuffle(proposals)
    shuffled = {p.frame_index: score_frame(mock, p, IMG, prompt).score for p in proposals}
    assert forward == shuffled
