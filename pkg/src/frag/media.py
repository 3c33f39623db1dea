"""Videos and documents as indexed frame sequences, plus uniform downsampling."""

from __future__ import annotations

import hashlib
import logging
import re
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png": "png", ".jpg": "jpeg", ".jpeg": "jpeg"}
VIDEO_SUFFIXES = {".mp4", ".mkv", ".avi", ".mov", ".webm", ".m4v"}

DEFAULT_DECODER = "ffmpeg -nostdin -loglevel error -i {input} -vf fps={fps} {outdir}/frame_%06d.png"
DEFAULT_FPS = 1.0

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8\xff"


class MediaError(Exception):
    """Raised when a media path cannot be turned into a frame sequence."""


class DecoderError(MediaError):
    def __init__(self, returncode: int, stderr: str, command: list[str]):
        self.returncode = returncode
        self.stderr = stderr
        self.command = command
        super().__init__(f"decoder exited with code {returncode}: {stderr.strip()}")


class MediaKind(str, Enum):
    VIDEO = "video"
    DOCUMENT = "document"


@dataclass(frozen=True)
class ImagePayload:
    data: bytes
    format: str  # "png" | "jpeg"

    @property
    def mime(self) -> str:
        return f"image/{self.format}"


@dataclass(frozen=True)
class FrameProposal:
    media_id: str
    frame_index: int
    ordinal: int


def natural_key(name: str) -> tuple:
    """Sort key comparing digit runs as integers, so ``2`` sorts before ``10``."""
    parts = re.split(r"(\d+)", name)
    # (is_text, value) pairs keep int/str comparisons well-typed
    return tuple((0, int(p), p) if p.isdigit() else (1, p.lower(), p) for p in parts if p != "")


def _sniff_format(data: bytes) -> str | None:
    if data.startswith(_PNG_MAGIC):
        return "png"
    if data.startswith(_JPEG_MAGIC):
        return "jpeg"
    return None


@dataclass
class MediaSource:
    """An ordered, read-only sequence of frame images.

    Frames are located by path and read lazily, so concurrent workers may call
    :meth:`frame` freely.
    """

    id: str
    kind: MediaKind
    frame_paths: list[Path]
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.frame_paths:
            raise MediaError(f"{self.id}: no frames found")
        self.kind = MediaKind(self.kind)

    @property
    def frame_count(self) -> int:
        return len(self.frame_paths)

    def frame(self, index: int) -> ImagePayload:
        if not 0 <= index < self.frame_count:
            raise IndexError(f"frame index {index} out of range [0, {self.frame_count})")
        path = self.frame_paths[index]
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise MediaError(f"unreadable image file {path}: {exc}") from exc
        fmt = _sniff_format(data)
        if fmt is None:
            raise MediaError(f"unreadable image file {path}: not a PNG or JPEG payload")
        return ImagePayload(data=data, format=fmt)


def discover_frames(directory: Path) -> list[Path]:
    files = [p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES]
    return sorted(files, key=lambda p: natural_key(p.name))


_decode_locks: dict[str, threading.Lock] = {}
_decode_locks_guard = threading.Lock()


def _decode_lock(key: str) -> threading.Lock:
    with _decode_locks_guard:
        return _decode_locks.setdefault(key, threading.Lock())


def decode_video(
    video: Path,
    *,
    work_dir: Path | None = None,
    fps: float = DEFAULT_FPS,
    command: str = DEFAULT_DECODER,
) -> Path:
    """Run the external decoder once per (video, fps, command) and return the frame directory.

    ``command`` is a template with ``{input}``, ``{outdir}`` and ``{fps}``
    placeholders; it is tokenized before substitution so paths may contain spaces.
    """
    video = video.resolve()
    digest = hashlib.sha256(f"{video}|{fps}|{command}".encode()).hexdigest()[:16]
    base = Path(work_dir) if work_dir is not None else Path(tempfile.gettempdir()) / "frag-frames"
    outdir = base / f"{video.stem}-{digest}"
    done_marker = outdir / ".complete"

    with _decode_lock(str(outdir)):
        if done_marker.exists():
            return outdir
        outdir.mkdir(parents=True, exist_ok=True)
        argv = [
            tok.format(input=str(video), outdir=str(outdir), fps=fps)
            for tok in shlex.split(command)
        ]
        logger.info("decoding %s -> %s", video, outdir)
        try:
            proc = subprocess.run(argv, capture_output=True, text=True)
        except FileNotFoundError as exc:
            raise DecoderError(127, str(exc), argv) from exc
        if proc.returncode != 0:
            raise DecoderError(proc.returncode, proc.stderr, argv)
        done_marker.touch()
    return outdir


def open_media(
    path: str | Path,
    kind: MediaKind | str,
    *,
    media_id: str | None = None,
    work_dir: Path | None = None,
    fps: float = DEFAULT_FPS,
    decoder: str = DEFAULT_DECODER,
) -> MediaSource:
    kind = MediaKind(kind)
    path = Path(path)
    if not path.exists():
        raise MediaError(f"missing media path: {path}")
    media_id = media_id or str(path)

    if path.is_dir():
        frames = discover_frames(path)
    elif kind is MediaKind.VIDEO:
        frames = discover_frames(decode_video(path, work_dir=work_dir, fps=fps, command=decoder))
    else:
        raise MediaError(f"document media must be a directory of page images: {path}")

    if not frames:
        raise MediaError(f"{path}: no frames found")
    return MediaSource(id=media_id, kind=kind, frame_paths=frames)


_ODD = 2 * np.arange(4096, dtype=np.int64) + 1


def uniform_indices(total: int, n_target: int) -> list[int]:
    """Center-of-bin indices ``floor((j + 0.5) * T / N)`` with ``N = min(n_target, T)``."""
    if total < 1:
        raise ValueError("total frame count must be >= 1")
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    n = min(n_target, total)
    # consecutive values differ by >= T/N >= 1, so no duplicates can arise
    assert n <= total
    odd = _ODD[:n] if n <= len(_ODD) else 2 * np.arange(n, dtype=np.int64) + 1
    # integer form of floor((2j+1)T / 2N), exact for any T
    return (odd * total // (2 * n)).tolist()


def uniform_sample(source: MediaSource, n_target: int) -> list[FrameProposal]:
    return [
        FrameProposal(media_id=source.id, frame_index=idx, ordinal=j)
        for j, idx in enumerate(uniform_indices(source.frame_count, n_target))
    ]
