import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from motiongroup.volume import (Frame, FrameError, FrameVolume, build_volume, extract_slices,
                                load_frames, pattern_regex, split_volumes, write_image)


def _frames(n, h=6, w=8, seed=0):
    rng = np.random.default_rng(seed)
    return [Frame(i, rng.integers(0, 256, (h, w, 3), dtype=np.uint8)) for i in range(n)]


def test_load_frames_reads_sequence_in_order(tmp_path):
    frames = _frames(10, 240, 320)
    for f in frames:
        write_image(tmp_path / f"frame_{f.index:04d}.png", f.pixels)
    loaded = load_frames(tmp_path)
    assert [f.index for f in loaded] == list(range(10))
    assert (loaded[0].width, loaded[0].height) == (320, 240)
    for a, b in zip(frames, loaded):
        np.testing.assert_array_equal(a.pixels, b.pixels)


def test_load_frames_ppm_and_custom_pattern(tmp_path):
    frames = _frames(3)
    from PIL import Image
    for f in frames:
        Image.fromarray(f.pixels).save(tmp_path / f"img{f.index}.ppm")
    loaded = load_frames(tmp_path, "img%d.ppm", start=1, count=2)
    assert [f.index for f in loaded] == [1, 2]
    np.testing.assert_array_equal(loaded[1].pixels, frames[2].pixels)


def test_load_frames_empty_range(tmp_path):
    assert load_frames(tmp_path, count=0) == []


def test_load_frames_missing_index_named(tmp_path):
    write_image(tmp_path / "frame_0000.png", _frames(1)[0].pixels)
    with pytest.raises(FrameError, match="missing frame 1"):
        load_frames(tmp_path, count=2)


def test_load_frames_size_mismatch_names_both_sizes(tmp_path):
    write_image(tmp_path / "frame_0000.png", np.zeros((4, 5, 3), np.uint8))
    write_image(tmp_path / "frame_0001.png", np.zeros((6, 7, 3), np.uint8))
    with pytest.raises(FrameError, match=r"7x6.*5x4"):
        load_frames(tmp_path, count=2)


def test_load_frames_missing_directory(tmp_path):
    with pytest.raises(FrameError):
        load_frames(tmp_path / "nope")


def test_build_volume():
    vol = build_volume(_frames(10))
    assert vol.T == 10
    with pytest.raises(FrameError):
        build_volume(_frames(1))


def test_static_volume_has_constant_xt_columns():
    f = _frames(1)[0]
    vol = build_volume([f, Frame(1, f.pixels.copy())])
    for sl in extract_slices(vol, "XT"):
        assert (sl[0] == sl[1]).all()


def test_slice_dimensions():
    vol = FrameVolume(np.zeros((10, 240, 320, 3), np.uint8))
    xt = extract_slices(vol, "XT")
    yt = extract_slices(vol, "YT")
    assert (len(xt), xt.slice_width, xt.slice_height) == (240, 320, 10)
    assert (len(yt), yt.slice_width, yt.slice_height) == (320, 240, 10)
    assert all((s == 0).all() for s in xt)


def test_windowing_non_overlapping():
    frames = _frames(40)
    vols = split_volumes(frames, 10)
    assert [v.start_index for v in vols] == [0, 10, 20, 30]
    assert [v.T for v in split_volumes(_frames(23), 10)] == [10, 10, 3]
    assert [v.T for v in split_volumes(_frames(21), 10)] == [10, 10]


def test_pattern_regex():
    assert pattern_regex("frame_%04d.png").match("frame_0012.png").group(1) == "0012"
    assert pattern_regex("sal_%d.png").match("frame_1.png") is None


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(2, 5), st.integers(1, 6), st.integers(1, 6), st.just(3))))
def test_slice_bijection(data):
    vol = FrameVolume(data)
    xy, xt, yt = (extract_slices(vol, a) for a in ("XY", "XT", "YT"))
    T, H, W, _ = data.shape
    for t in range(T):
        for y in range(H):
            for x in range(W):
                v = data[t, y, x]
                assert (xt[y][t, x] == v).all()
                assert (yt[x][t, y] == v).all()
    np.testing.assert_array_equal(np.stack(list(xy)), data)
