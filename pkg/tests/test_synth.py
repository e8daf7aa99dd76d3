import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from motiongroup.synth import (PALETTE, Background, SceneError, SceneObject, SceneSpec,
                               expected_angle, generate_scene, write_scene)
from motiongroup.volume import load_frames, read_gray


def test_left_edge_position():
    spec = SceneSpec(objects=[SceneObject(x=200, y=100, w=40, h=30, vx=-3)])
    frames, truths = generate_scene(spec)
    row = truths[5].mask[110]
    assert np.flatnonzero(row)[0] == 185
    assert tuple(frames[5].pixels[110, 185]) == PALETTE["red"]
    assert tuple(frames[5].pixels[110, 184]) == PALETTE["black"]


def test_static_scene_frames_identical():
    spec = SceneSpec(background=Background(kind="tiles"), objects=[SceneObject(10, 10, 20, 20)])
    frames, _ = generate_scene(spec)
    assert all(np.array_equal(frames[0].pixels, f.pixels) for f in frames)


def test_ground_truth_is_union_of_boxes():
    objs = [SceneObject(10, 10, 20, 20, vx=2), SceneObject(20, 15, 10, 30, vy=1)]
    spec = SceneSpec(width=80, height=60, frame_count=4, objects=objs)
    _, truths = generate_scene(spec)
    for t, g in enumerate(truths):
        expected = np.zeros((60, 80), bool)
        for o in objs:
            x0, y0, x1, y1 = o.box(t)
            expected[y0:y1, x0:x1] = True
        np.testing.assert_array_equal(g.mask, expected)


def test_two_tone_split():
    o = SceneObject(0, 0, 10, 4, color=PALETTE["red"], second_color=PALETTE["yellow"])
    frames, _ = generate_scene(SceneSpec(width=20, height=10, frame_count=1, objects=[o]))
    assert tuple(frames[0].pixels[0, 4]) == PALETTE["red"]
    assert tuple(frames[0].pixels[0, 5]) == PALETTE["yellow"]


def test_scrolling_background_moves():
    bg = Background(kind="scroll", tile=8, velocity=(2, 0))
    frames, _ = generate_scene(SceneSpec(width=32, height=16, frame_count=2, background=bg))
    np.testing.assert_array_equal(frames[1].pixels[:, 2:], frames[0].pixels[:, :-2])


def test_invalid_scenes():
    with pytest.raises(SceneError):
        generate_scene(SceneSpec(objects=[SceneObject(x=5, y=0, w=10, h=10, vx=-3)]))
    with pytest.raises(SceneError):
        generate_scene(SceneSpec(objects=[SceneObject(x=0, y=0, w=10, h=10, vx=1.5)]))
    with pytest.raises(SceneError):
        generate_scene(SceneSpec(background=Background(kind="plasma")))


def test_expected_angle():
    assert expected_angle(0) == 90.0
    assert expected_angle(-1) == pytest.approx(45.0)
    assert expected_angle(1) == pytest.approx(135.0)
    assert expected_angle(-3) == pytest.approx(18.43494882292201)
    assert expected_angle(3, h=4) == pytest.approx(161.56505117707798)


@settings(max_examples=50, deadline=None)
@given(st.integers(-20, 20), st.integers(1, 30))
def test_expected_angle_symmetry(v, h):
    a = expected_angle(v, h)
    assert 0 < a < 180
    assert a + expected_angle(-v, h) == pytest.approx(180.0)


def test_noise_is_seeded():
    spec = SceneSpec(width=30, height=20, frame_count=2, noise_amplitude=5, rng_seed=4)
    a, _ = generate_scene(spec)
    b, _ = generate_scene(spec)
    assert np.array_equal(a[1].pixels, b[1].pixels)
    assert a[1].pixels.max() <= 5


def test_json_round_trip_and_write(tmp_path):
    spec = SceneSpec(width=40, height=30, frame_count=3, background=Background(kind="tiles", tile=10),
                     objects=[SceneObject(5, 5, 10, 8, vx=2, second_color=PALETTE["blue"])])
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(spec.to_dict()))
    loaded = SceneSpec.load(path)
    a, _ = generate_scene(spec)
    b, _ = generate_scene(loaded)
    assert all(np.array_equal(x.pixels, y.pixels) for x, y in zip(a, b))
    write_scene(loaded, tmp_path / "out")
    frames = load_frames(tmp_path / "out")
    assert len(frames) == 3 and np.array_equal(frames[2].pixels, a[2].pixels)
    gt = read_gray(tmp_path / "out" / "gt" / "frame_0002.png")
    assert gt[5, 9] == 255 and gt[0, 0] == 0
