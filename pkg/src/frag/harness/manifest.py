"""JSONL manifest: one question per line, bound to a video or document."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from frag.media import MediaKind
from frag.tasks import AnswerType, QueryTask, options_from_list

REQUIRED_FIELDS = ("id", "media_path", "media_kind", "question", "answer_type")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    task: QueryTask
    media_path: Path
    media_kind: MediaKind
    media_id: str


def _parse_options(raw, line_no: int) -> tuple[tuple[str, str], ...]:
    if raw is None:
        return ()
    if isinstance(raw, dict):
        return tuple((str(k), str(v)) for k, v in raw.items())
    if isinstance(raw, list):
        if all(isinstance(o, str) for o in raw):
            return options_from_list(raw)
        if all(isinstance(o, list) and len(o) == 2 for o in raw):
            return tuple((str(a), str(b)) for a, b in raw)
    raise ManifestError(f"line {line_no}: options must be a list of strings, [letter, text] pairs, or a mapping")


def parse_entry(obj: dict, line_no: int, base_dir: Path) -> ManifestEntry:
    if not isinstance(obj, dict):
        raise ManifestError(f"line {line_no}: expected a JSON object")
    for name in REQUIRED_FIELDS:
        if name not in obj:
            raise ManifestError(f"line {line_no}: missing field {name}")
    try:
        answer_type = AnswerType(obj["answer_type"])
    except ValueError:
        raise ManifestError(f"line {line_no}: unknown answer_type {obj['answer_type']!r}") from None
    try:
        kind = MediaKind(obj["media_kind"])
    except ValueError:
        raise ManifestError(f"line {line_no}: unknown media_kind {obj['media_kind']!r}") from None

    options = _parse_options(obj.get("options"), line_no)
    truths = obj.get("ground_truths") or []
    if isinstance(truths, str):
        truths = [truths]
    try:
        task = QueryTask(
            id=str(obj["id"]),
            question=str(obj["question"]),
            answer_type=answer_type,
            options=options,
            ground_truths=tuple(str(t) for t in truths),
            prompt_template=obj.get("prompt_template"),
        )
    except ValueError as exc:
        raise ManifestError(f"line {line_no}: {exc}") from None
    if not task.question.strip():
        raise ManifestError(f"line {line_no}: empty question")

    media_path = Path(obj["media_path"])
    if not media_path.is_absolute():
        media_path = base_dir / media_path
    return ManifestEntry(
        task=task,
        media_path=media_path,
        media_kind=kind,
        media_id=str(obj.get("media_id") or obj["media_path"]),
    )


def load_manifest(path: str | Path, *, check_media: bool = True) -> list[ManifestEntry]:
    """Parse and validate a manifest.

    With ``check_media=False`` missing media is left for the pipeline to report
    per task instead of rejecting the whole file.
    """
    path = Path(path)
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"line {line_no}: malformed JSON ({exc.msg})") from None
            entry = parse_entry(obj, line_no, path.parent)
            if entry.task.id in seen:
                raise ManifestError(f"line {line_no}: duplicate task id {entry.task.id!r}")
            if check_media and not entry.media_path.exists():
                raise ManifestError(f"line {line_no}: missing media {entry.media_path}")
            seen.add(entry.task.id)
            entries.append(entry)
    return entries
