"""QA metrics: MCQ accuracy, exact match, word F1 and ANLS."""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

from frag.answering import UNPARSED

DEFAULT_ANLS_TAU = 0.5

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize(text: str) -> str:
    return " ".join(text.lower().split())


def tokenize(text: str) -> list[str]:
    return text.lower().translate(_PUNCT_TABLE).split()


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _require_truths(truths: list[str]) -> None:
    if not truths:
        raise ValueError("at least one ground-truth answer is required")


def anls_score(prediction: str, truths: list[str], tau: float = DEFAULT_ANLS_TAU) -> float:
    _require_truths(truths)
    pred = normalize(prediction)
    best = 0.0
    for truth in truths:
        gold = normalize(truth)
        longest = max(len(pred), len(gold))
        nl = levenshtein(pred, gold) / longest if longest else 0.0
        best = max(best, 1.0 - nl if nl < tau else 0.0)
    return best


def word_f1(
    prediction: str, truths: list[str], tokenizer: Callable[[str], list[str]] = tokenize
) -> float:
    _require_truths(truths)
    pred = tokenizer(prediction)
    best = 0.0
    for truth in truths:
        gold = tokenizer(truth)
        if not pred or not gold:
            best = max(best, float(pred == gold))
            continue
        overlap = sum((Counter(pred) & Counter(gold)).values())
        if overlap == 0:
            continue
        p, r = overlap / len(pred), overlap / len(gold)
        best = max(best, 2 * p * r / (p + r))
    return best


def exact_match(prediction: str, truths: list[str]) -> int:
    pred = normalize(prediction)
    return int(any(pred == normalize(t) for t in truths))


def mcq_accuracy(parsed: str, truth_letter: str) -> int:
    if parsed == UNPARSED:
        return 0
    return int(parsed.strip() == truth_letter.strip())


@dataclass
class QuestionMetrics:
    task_id: str
    values: dict[str, float]


@dataclass
class MetricsReport:
    n_questions: int
    accuracy: float | None = None
    em: float | None = None
    f1: float | None = None
    anls: float | None = None
    per_question: list[QuestionMetrics] = field(default_factory=list)

    def to_dict(self) -> dict:
        out: dict = {"n_questions": self.n_questions}
        for name in ("accuracy", "em", "f1", "anls"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        out["per_question"] = [{"task_id": q.task_id, **q.values} for q in self.per_question]
        return out


def question_metrics(
    task_id: str,
    parsed: str,
    truths: list[str],
    *,
    mcq: bool,
    tau: float = DEFAULT_ANLS_TAU,
    tokenizer: Callable[[str], list[str]] = tokenize,
) -> QuestionMetrics:
    if mcq:
        return QuestionMetrics(task_id, {"accuracy": float(max(mcq_accuracy(parsed, t) for t in truths))})
    return QuestionMetrics(
        task_id,
        {
            "em": float(exact_match(parsed, truths)),
            "f1": word_f1(parsed, truths, tokenizer),
            "anls": anls_score(parsed, truths, tau),
        },
    )


def aggregate(per_question: list[QuestionMetrics]) -> MetricsReport:
    """Means over the questions each metric applies to; inapplicable metrics stay ``None``."""
    report = MetricsReport(n_questions=len(per_question), per_question=list(per_question))
    for name in ("accuracy", "em", "f1", "anls"):
        vals = [q.values[name] for q in per_question if name in q.values]
        if vals:
            setattr(report, name, sum(vals) / len(vals))
    return report
