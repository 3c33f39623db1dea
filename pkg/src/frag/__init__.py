"""Frame selection augmented generation: score frames, keep the Top-K, answer from those."""

from frag.answering import Answer, build_answer_request, parse_answer
from frag.media import FrameProposal, MediaKind, MediaSource, open_media, uniform_sample
from frag.metrics import anls_score, exact_match, levenshtein, mcq_accuracy, word_f1
from frag.scoring import ScoredFrame, build_scoring_prompt, extract_score, score_frame
from frag.selection import DiversityStats, SelectionConfig, SelectionResult, diversity, select_top_k
from frag.tasks import AnswerType, QueryTask

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "AnswerType",
    "DiversityStats",
    "FrameProposal",
    "MediaKind",
    "MediaSource",
    "QueryTask",
    "ScoredFrame",
    "SelectionConfig",
    "SelectionResult",
    "anls_score",
    "build_answer_request",
    "build_scoring_prompt",
    "diversity",
    "exact_match",
    "extract_score",
    "levenshtein",
    "mcq_accuracy",
    "open_media",
    "parse_answer",
    "score_frame",
    "select_top_k",
    "uniform_sample",
    "word_f1",
]
