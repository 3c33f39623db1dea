import math
import sys
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from frag.media import (
    DecoderError,
    MediaError,
    MediaKind,
    natural_key,
    open_media,
    uniform_indices,
    uniform_sample,
)

from conftest import write_frames


def test_open_directory_counts_frames(tmp_path):
    write_frames(tmp_path / "v", 10, pattern="{:03d}.png")
    source = open_media(tmp_path / "v", "video")
    assert source.frame_count == 10
    assert source.kind is MediaKind.VIDEO
    assert source.frame(3).format == "png"


def test_empty_directory_rejected(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(MediaError, match="no frames found"):
        open_media(tmp_path / "empty", "document")


def test_missing_path_rejected(tmp_path):
    with pytest.raises(MediaError, match="missing"):
        open_media(tmp_path / "nope", "video")


def test_numeric_aware_order(tmp_path):
    d = tmp_path / "pages"
    d.mkdir()
    for name in ["0001.jpg", "0010.jpg", "0002.jpg"]:
        (d / name).write_bytes(b"\xff\xd8\xff" + name.encode())
    source = open_media(d, "document")
    assert [p.name for p in source.frame_paths] == ["0001.jpg", "0002.jpg", "0010.jpg"]
    assert source.frame(0).format == "jpeg"


def test_numeric_aware_order_without_padding():
    names = ["page10.png", "page2.png", "page1.png"]
    assert sorted(names, key=natural_key) == ["page1.png", "page2.png", "page10.png"]


def test_unreadable_image(tmp_path):
    d = tmp_path / "bad"
    d.mkdir()
    (d / "0.png").write_bytes(b"not an image")
    source = open_media(d, "document")
    with pytest.raises(MediaError, match="unreadable"):
        source.frame(0)


def test_real_png_and_jpeg(tmp_path):
    PIL = pytest.importorskip("PIL.Image")
    d = tmp_path / "real"
    d.mkdir()
    PIL.new("RGB", (4, 4), (255, 0, 0)).save(d / "1.png")
    PIL.new("RGB", (4, 4), (0, 0, 255)).save(d / "2.jpg")
    source = open_media(d, "video")
    assert [source.frame(i).format for i in range(2)] == ["png", "jpeg"]


FAKE_DECODER = """
import sys, pathlib
out = pathlib.Path(sys.argv[2])
for i in range(int(float(sys.argv[3])) * 3):
    (out / f"frame_{i + 1:06d}.png").write_bytes(b"\\x89PNG\\r\\n\\x1a\\n" + bytes([i]))
"""


def test_video_decoded_through_subprocess(tmp_path):
    script = tmp_path / "decoder.py"
    script.write_text(FAKE_DECODER)
    video = tmp_path / "clip.mp4"
    video.write_bytes(b"fake video")
    cmd = f"{sys.executable} {script} {{input}} {{outdir}} {{fps}}"
    source = open_media(video, "video", work_dir=tmp_path / "work", fps=2, decoder=cmd)
    assert source.frame_count == 6
    # second open reuses the decoded directory
    again = open_media(video, "video", work_dir=tmp_path / "work", fps=2, decoder=cmd)
    assert again.frame_paths == source.frame_paths


def test_decoder_failure_surfaces_exit_code_and_stderr(tmp_path):
    video = tmp_path / "clip.mp4"
    video.write_bytes(b"fake")
    cmd = f"{sys.executable} -c \"import sys; sys.stderr.write('boom'); sys.exit(3)\" {{input}}"
    with pytest.raises(DecoderError) as err:
        open_media(video, "video", work_dir=tmp_path / "work", decoder=cmd)
    assert err.value.returncode == 3
    assert "boom" in err.value.stderr


def test_document_file_rejected(tmp_path):
    f = tmp_path / "doc.pdf"
    f.write_bytes(b"%PDF")
    with pytest.raises(MediaError):
        open_media(f, "document")


@pytest.mark.parametrize(
    "total, n, expected",
    [
        (10, 5, [1, 3, 5, 7, 9]),
        (256, 256, list(range(256))),
        (20, 256, list(range(20))),
        (1, 1, [0]),
    ],
)
def test_uniform_indices_examples(total, n, expected):
    assert uniform_indices(total, n) == expected


def test_uniform_sample_proposals(tmp_path):
    source = open_media(write_frames(tmp_path / "v", 10), "video", media_id="v")
    proposals = uniform_sample(source, 5)
    assert [p.frame_index for p in proposals] == [1, 3, 5, 7, 9]
    assert [p.ordinal for p in proposals] == list(range(5))
    assert {p.media_id for p in proposals} == {"v"}


def test_uniform_rejects_bad_target():
    with pytest.raises(ValueError):
        uniform_indices(10, 0)


@given(total=st.integers(1, 5000), n=st.integers(1, 600))
def test_uniform_properties(total, n):
    idx = uniform_indices(total, n)
    assert len(idx) == min(total, n)
    assert all(0 <= i < total for i in idx)
    assert all(a < b for a, b in zip(idx, idx[1:]))
    assert idx == uniform_indices(total, n)
    if len(idx) > 1:
        assert max(b - a for a, b in zip(idx, idx[1:])) <= math.ceil(total / len(idx)) + 1


def test_uniform_gap_bound_sweep():
    for total in range(1, 2001, 7):
        for n in range(1, total + 1, max(1, total // 40)):
            idx = uniform_indices(total, n)
            if len(idx) > 1:
                assert max(b - a for a, b in zip(idx, idx[1:])) <= math.ceil(total / n) + 1
