import math

import numpy as np
import pytest

from geomod.model import (Box, Cone, Helix, Polycone, SphereShell, Trd, Tube)
from geomod.solids import (SolidError, aabb, analytic_volume, check_mesh,
                           check_shape, circumscription_error, contains,
                           contains_many, mesh_volume, nseg, sweep_tube,
                           tessellate, winding_number_inside)

ALL_SHAPES = [
    Box(10, 20, 30),
    Trd(10, 6, 20, 12, 15),
    Tube(0, 50, 40),
    Tube(20, 50, 40),
    Tube(20, 50, 40, phi0=30, dphi=120),
    Cone(0, 30, 0, 10, 25),
    Cone(10, 30, 5, 20, 25, phi0=-45, dphi=200),
    Polycone(0, 360, ((-30, 0, 20), (0, 10, 40), (30, 10, 15))),
    SphereShell(0, 25),
    SphereShell(10, 25, theta0=20, dtheta=100, phi0=0, dphi=270),
    Helix(100, 40, 2.5, 8),
]


def test_segment_count_grows_with_quality():
    assert nseg(0) == 12
    assert nseg(9) == 66
    assert [nseg(q) for q in range(10)] == [12 + 6 * q for q in range(10)]


@pytest.mark.parametrize("shape", ALL_SHAPES, ids=lambda s: type(s).__name__)
@pytest.mark.parametrize("q", [0, 3, 6, 9])
def test_meshes_are_watertight(shape, q):
    mesh = tessellate(shape, q)
    assert check_mesh(mesh) == []
    assert mesh.vertices.dtype == np.float64
    assert len(mesh.normals) == len(mesh.vertices)


@pytest.mark.parametrize("shape", ALL_SHAPES, ids=lambda s: type(s).__name__)
def test_volume_converges_from_below(shape):
    exact = analytic_volume(shape)
    vols = [mesh_volume(tessellate(shape, q)) for q in (0, 3, 6, 9)]
    for v in vols:
        assert v <= exact * (1 + 1e-12)
    flat_faced = isinstance(shape, (Box, Trd))
    for lo, hi in zip(vols, vols[1:]):
        assert hi >= lo
        if not flat_faced:
            assert hi > lo
    assert abs(vols[-1] - exact) / exact < 0.01


def test_box_and_trd_volumes_are_exact():
    assert mesh_volume(tessellate(Box(10, 20, 30), 0)) == pytest.approx(6000)
    trd = Trd(10, 6, 20, 12, 15)
    assert mesh_volume(tessellate(trd, 5)) == pytest.approx(analytic_volume(trd))


def test_analytic_volume_closed_forms():
    assert analytic_volume(Box(2, 3, 4)) == pytest.approx(24)
    assert analytic_volume(Tube(0, 5, 10)) == pytest.approx(math.pi * 25 * 20)
    assert analytic_volume(Tube(3, 5, 10, dphi=180)) == pytest.approx(
        math.pi * (25 - 9) * 20 / 2)
    assert analytic_volume(SphereShell(0, 3)) == pytest.approx(4 / 3 * math.pi * 27)
    assert analytic_volume(Cone(0, 3, 0, 3, 5)) == pytest.approx(math.pi * 9 * 10)
    helix = Helix(100, 40, 2.5, 8)
    arc = 2.5 * math.hypot(2 * math.pi * 100, 40)
    assert analytic_volume(helix) == pytest.approx(math.pi * 64 * arc)


def test_shape_validation():
    with pytest.raises(SolidError):
        check_shape(Box(-1, 2, 3))
    with pytest.raises(SolidError):
        check_shape(Tube(5, 3, 10))
    with pytest.raises(SolidError):
        check_shape(SphereShell(1, 2, theta0=0, dtheta=200))
    with pytest.raises(SolidError):
        check_shape(Helix(10, 5, 2, 20))  # tube thicker than coil radius


def test_contains_box():
    b = Box(10, 20, 30)
    assert contains(b, (0, 0, 0))
    assert contains(b, (5, 10, 15))       # boundary included
    assert contains(b, (5, 10, 15 + 5e-10))
    assert not contains(b, (5.001, 0, 0))


def test_contains_tube_sector():
    t = Tube(20, 50, 40, phi0=0, dphi=90)
    assert contains(t, (30, 30, 0))
    assert contains(t, (30, 0, 0))        # phi boundary
    assert not contains(t, (30, -5, 0))   # outside the sector
    assert not contains(t, (10, 10, 0))   # inside the bore
    assert not contains(t, (30, 30, 41))


def test_contains_cone_and_sphere():
    c = Cone(0, 30, 0, 10, 25)
    assert contains(c, (0, 0, 0))
    assert contains(c, (29, 0, -25))
    assert not contains(c, (29, 0, 25))
    s = SphereShell(10, 25, theta0=20, dtheta=100)
    assert contains(s, (20, 0, 5))
    assert not contains(s, (5, 0, 0))           # inside rmin
    assert not contains(s, (0, 0, 24))          # above the theta cone


def test_contains_many_matches_scalar():
    rng = np.random.default_rng(7)
    shape = Cone(10, 30, 5, 20, 25, phi0=-45, dphi=200)
    pts = rng.uniform(-35, 35, size=(500, 3))
    mask = contains_many(shape, pts)
    for p, m in zip(pts[:50], mask[:50]):
        assert contains(shape, p) == bool(m)


@pytest.mark.parametrize("shape", ALL_SHAPES, ids=lambda s: type(s).__name__)
def test_aabb_bounds_every_mesh_vertex(shape):
    lo, hi = aabb(shape)
    v = tessellate(shape, 9).vertices
    assert np.all(v >= lo - 1e-9)
    assert np.all(v <= hi + 1e-9)


def test_aabb_is_tight_for_full_revolution():
    lo, hi = aabb(Tube(0, 50, 40))
    assert np.allclose(lo, [-50, -50, -40])
    assert np.allclose(hi, [50, 50, 40])


def test_aabb_respects_phi_sector():
    lo, hi = aabb(Tube(20, 50, 40, phi0=0, dphi=90))
    assert np.allclose(lo, [0, 0, -40], atol=1e-12)
    assert np.allclose(hi, [50, 50, 40])


def test_helix_containment_agrees_with_mesh_oracle():
    shape = Helix(100, 40, 2.5, 8)
    mesh = tessellate(shape, 9)
    rng = np.random.default_rng(11)
    lo, hi = aabb(shape)
    pts = rng.uniform(lo, hi, size=(1000, 3))
    analytic = contains_many(shape, pts)
    oracle = winding_number_inside(mesh, pts)
    # Ignore points within the faceting band around the surface, where the
    # inscribed mesh and the exact tube legitimately disagree.
    from geomod.solids import _helix_distance
    band = 2 * circumscription_error(shape, 9)
    clear = np.abs(_helix_distance(shape, pts) - shape.rtube) > band
    assert clear.sum() > 800
    assert np.array_equal(analytic[clear], oracle[clear])


def test_swept_tube_is_watertight_and_sized():
    t = np.linspace(0, 1, 50)
    centers = np.c_[100 * t, 40 * np.sin(3 * t), 200 * t]
    mesh = sweep_tube(centers, 5.0, 24)
    assert check_mesh(mesh) == []
    seg = np.diff(centers, axis=0)
    arc = np.linalg.norm(seg, axis=1).sum()
    assert mesh_volume(mesh) == pytest.approx(math.pi * 25 * arc, rel=0.02)


def test_circumscription_error_shrinks_with_quality():
    shape = Tube(0, 50, 40)
    errs = [circumscription_error(shape, q) for q in range(10)]
    for lo_e, hi_e in zip(errs[1:], errs[:-1]):
        assert lo_e < hi_e
