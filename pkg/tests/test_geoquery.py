import numpy as np
import pytest

from geomod import model
from geomod.geoquery import (PickHit, Ray, collide, locate, locate_bruteforce,
                             pick, pick_bruteforce)
from geomod.scenegraph import BuildOptions, CapabilityError, build, compile_scene

from conftest import random_scene_document

NESTED_XML = """
<detector version="v4" world="world">
  <box name="outer" x="100" y="100" z="100"/>
  <box name="inner" x="20" y="20" z="20"/>
  <tube name="pipe" rmin="0" rmax="5" zhalf="40"/>
  <composition name="world">
    <posXYZ volume="outer" X_Y_Z="0;0;0"/>
    <posXYZ volume="inner" X_Y_Z="0;0;0"/>
    <posXYZ volume="pipe" X_Y_Z="200;0;0"/>
  </composition>
</detector>
"""


def nested_scene(**kw):
    doc, _ = model.parse_document(NESTED_XML)
    opts = BuildOptions(**kw)
    return compile_scene(build(doc, opts), opts)


def scene_from(doc, **kw):
    opts = BuildOptions(**kw)
    return compile_scene(build(model.expand_placements(doc), opts), opts)


# -- locate -------------------------------------------------------------------

def test_locate_prefers_deepest_containment():
    scene = nested_scene()
    assert locate(scene, (0, 0, 0)) == ("world", "inner")
    assert locate(scene, (40, 0, 0)) == ("world", "outer")
    assert locate(scene, (200, 0, 0)) == ("world", "pipe")
    assert locate(scene, (500, 500, 500)) is None


def test_locate_is_boundary_inclusive():
    scene = nested_scene()
    assert locate(scene, (10, 0, 0)) == ("world", "inner")
    assert locate(scene, (10 + 1e-6, 0, 0)) == ("world", "outer")


def test_locate_refused_on_flattened_scene():
    scene = nested_scene(optimization=3)
    with pytest.raises(CapabilityError, match="discards identities"):
        locate(scene, (0, 0, 0))


def test_locate_matches_bruteforce_on_random_scenes():
    rng = np.random.default_rng(1234)
    for trial in range(5):
        scene = scene_from(random_scene_document(rng), optimization=2)
        pts = rng.uniform(-320, 320, size=(400, 3))
        expected = locate_bruteforce(scene, pts)
        for p, want in zip(pts, expected):
            assert locate(scene, p) == want


# -- pick ---------------------------------------------------------------------

def test_pick_hits_nearest_face():
    scene = nested_scene()
    hit = pick(scene, Ray((-500, 0, 0), (1, 0, 0)))
    assert hit is not None
    assert hit.path == ("world", "outer")
    assert hit.t == pytest.approx(450, abs=1e-9)
    assert np.allclose(hit.point, (-50, 0, 0), atol=1e-9)


def test_pick_miss_returns_none():
    scene = nested_scene()
    assert pick(scene, Ray((-500, 500, 0), (1, 0, 0))) is None


def test_pick_skips_hidden_instances():
    scene = nested_scene(interactivity=1)
    scene.toggle_visibility(("world", "outer"), False)
    hit = pick(scene, Ray((-500, 0, 0), (1, 0, 0)))
    assert hit.path == ("world", "inner")
    assert hit.t == pytest.approx(490, abs=1e-9)


def test_pick_rejects_zero_direction():
    scene = nested_scene()
    with pytest.raises(ValueError):
        pick(scene, Ray((0, 0, 0), (0, 0, 0)))


def test_pick_matches_bruteforce_on_random_scenes():
    rng = np.random.default_rng(99)
    for trial in range(4):
        scene = scene_from(random_scene_document(rng), optimization=1)
        for _ in range(50):
            origin = rng.uniform(-400, 400, 3)
            direction = rng.normal(size=3)
            ray = Ray(tuple(origin), tuple(direction))
            fast, slow = pick(scene, ray), pick_bruteforce(scene, ray)
            if slow is None:
                assert fast is None
            else:
                assert fast is not None
                assert abs(fast.t - slow.t) < 1e-9
                assert fast.path == slow.path


def test_pick_consistent_after_calibration():
    scene = nested_scene(interactivity=2)
    delta = np.eye(4)
    delta[:3, 3] = [0, 0, 25]
    scene.set_transform(("world", "pipe"), delta)
    hit = pick(scene, Ray((200, 0, 500), (0, 0, -1)))
    assert hit.path == ("world", "pipe")
    assert hit.t == pytest.approx(500 - 65, abs=1e-9)
    assert locate(scene, (200, 0, 60)) == ("world", "pipe")
    assert locate(scene, (200, 0, -20)) == ("world",) or \
        locate(scene, (200, 0, -20)) is None


# -- collide ------------------------------------------------------------------

def test_disjoint_volumes_do_not_collide():
    scene = nested_scene()
    assert not collide(scene, ("world", "outer"), ("world", "pipe"))


def test_contained_volume_collides():
    scene = nested_scene()
    assert collide(scene, ("world", "outer"), ("world", "inner"))


def test_interpenetrating_volumes_collide():
    doc, _ = model.parse_document("""
    <detector version="v4" world="world">
      <box name="a" x="20" y="20" z="20"/>
      <box name="b" x="20" y="20" z="20"/>
      <composition name="world">
        <posXYZ volume="a" X_Y_Z="0;0;0"/>
        <posXYZ volume="b" X_Y_Z="15;0;0" rot="0;0;30"/>
      </composition>
    </detector>""")
    scene = scene_from(doc)
    assert collide(scene, ("world", "a"), ("world", "b"))


def test_unknown_path_raises():
    scene = nested_scene()
    with pytest.raises(KeyError):
        collide(scene, ("world", "outer"), ("world", "ghost"))
