from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

from frag.mock import question_hash

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def write_frames(directory: Path, count: int, *, pattern: str = "{:05d}.png") -> Path:
    """Write ``count`` distinct PNG-signed payloads. Content is opaque to the engine."""
    directory.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        (directory / pattern.format(i)).write_bytes(PNG_MAGIC + f"{directory.name}/frame-{i}".encode())
    return directory


def dist(p_yes: float) -> list[list]:
    if p_yes >= 1.0:
        return [["A", 0.0]]
    if p_yes <= 0.0:
        return [["B", 0.0]]
    return [["A", math.log(p_yes)], ["B", math.log1p(-p_yes)]]


def planted_fixture(tmp_path: Path, *, t_frames: int = 40, planted=((3, 17), (5, 29), (12, 33))):
    """Three MCQ videos, each with relevant frames that must all be shown to answer correctly.

    Returns (manifest_path, fixture_path, tasks-info).
    """
    scores: dict = {}
    answers: dict = {}
    lines = []
    for n, frames in enumerate(planted):
        media_id = f"video{n}"
        write_frames(tmp_path / media_id, t_frames)
        question = f"Question {n}: what happens when the red door opens?"
        scores[media_id] = {
            str(i): dist(0.9 if i in frames else 0.02 + 0.001 * ((i * 37) % 11)) for i in range(t_frames)
        }
        answers[question_hash(question)] = {
            "required_frames": list(frames),
            "correct": "C. a cat walks in",
            "incorrect": "A",
        }
        lines.append(
            {
                "id": f"q{n}",
                "media_path": media_id,
                "media_id": media_id,
                "media_kind": "video",
                "question": question,
                "options": ["nothing", "a dog barks", "a cat walks in", "it rains"],
                "answer_type": "mcq",
                "ground_truths": ["C"],
            }
        )
    fixture = tmp_path / "fixture.json"
    fixture.write_text(json.dumps({"scores": scores, "answers": answers}))
    manifest = tmp_path / "manifest.jsonl"
    manifest.write_text("\n".join(json.dumps(line) for line in lines) + "\n")
    return manifest, fixture, planted


@pytest.fixture
def planted(tmp_path):
    return planted_fixture(tmp_path)


# -- acceptance summary -------------------------------------------------------

_ACCEPTANCE: list[tuple[int, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "PASS" if report.passed else "FAIL"
        _ACCEPTANCE.append((marker.args[0], marker.args[1], status))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
