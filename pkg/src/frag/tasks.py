from __future__ import annotations

import string
from dataclasses import dataclass, field
from enum import Enum


class AnswerType(str, Enum):
    MCQ = "mcq"
    EXTRACTIVE = "extractive"


@dataclass(frozen=True)
class QueryTask:
    id: str
    question: str
    answer_type: AnswerType = AnswerType.EXTRACTIVE
    options: tuple[tuple[str, str], ...] = ()
    ground_truths: tuple[str, ...] = ()
    prompt_template: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "answer_type", AnswerType(self.answer_type))
        object.__setattr__(self, "options", tuple((str(l), str(t)) for l, t in self.options))
        object.__setattr__(self, "ground_truths", tuple(self.ground_truths))
        if self.answer_type is AnswerType.MCQ:
            if not self.options:
                raise ValueError(f"task {self.id}: mcq task needs options")
            letters = [letter for letter, _ in self.options]
            expected = list(string.ascii_uppercase[: len(letters)])
            if letters != expected:
                raise ValueError(f"task {self.id}: option letters must be {expected}, got {letters}")
        elif self.options:
            raise ValueError(f"task {self.id}: extractive task must not carry options")

    @property
    def letters(self) -> list[str]:
        return [letter for letter, _ in self.options]

    def option_lines(self) -> str:
        return "\n".join(f"{letter}. {text}" for letter, text in self.options)

    def full_question(self) -> str:
        """Question text plus option lines, as shown to both scorer and answerer."""
        if self.options:
            return f"{self.question}\n{self.option_lines()}"
        return self.question


def options_from_list(texts: list[str]) -> tuple[tuple[str, str], ...]:
    return tuple(zip(string.ascii_uppercase, texts))
