import numpy as np
import pytest

from geomod import model
from geomod.model import (Box, Composition, Cone, GenericDocument, Single,
                          SolidDef, Tube)

LISTING_FORMULAS_XML = """
<detector version="v6" world="abox">
  <array name="a" values="1;2;3;4;5;6;7;8;9;10"/>
  <table name="t">
    <row values="1;2;3;4;5"/>
    <row values="6;7;8;9;10"/>
  </table>
  <var name="a0" value="1"/>
  <var name="b" value="a0*2"/>
  <var name="c" value="a[2]*a[3]"/>
  <box XYZ="5.5;a[5];t[2,3]" name="abox"/>
</detector>
"""

CONNECTIONS_XML = """
<XSQLConfig>
  <connectiondefs>
    <connection name="demo">
      <dburl>jdbc:mysql://nova.site.org/NOVA</dburl>
    </connection>
  </connectiondefs>
</XSQLConfig>
"""

NESTED_BOXES_XML = """
<detector version="v4" world="world">
  <box name="mother" x="100" y="100" z="100"/>
  <box name="daughter" x="10" y="10" z="10"/>
  <composition name="assembly">
    <posXYZ volume="daughter" X_Y_Z="0;0;0"/>
  </composition>
  <composition name="world">
    <posXYZ volume="mother" X_Y_Z="0;0;0"/>
    <posXYZ volume="assembly" X_Y_Z="0;0;0"/>
  </composition>
</detector>
"""


@pytest.fixture
def listing_formulas_doc():
    doc, warnings = model.parse_document(LISTING_FORMULAS_XML)
    assert not warnings
    return doc


def repeated_box_document(n: int) -> GenericDocument:
    """n placements of one identical box."""
    doc = GenericDocument(version="v4", world="world")
    doc.solids["unit"] = SolidDef("unit", Box(2.0, 2.0, 2.0))
    comp = Composition("world")
    for i in range(n):
        comp.placements.append(Single("unit", (float(5 * i), 0.0, 0.0)))
    doc.compositions["world"] = comp
    return doc


def random_scene_document(rng: np.random.Generator, max_instances: int = 100) -> GenericDocument:
    """Small random document of boxes/tubes/cones in nested compositions.

    Positions are spread out enough that the deepest-containment answer is
    usually unique; overlapping siblings are allowed (tie-break is tested by
    the shared lexicographic rule in both implementations).
    """
    doc = GenericDocument(version="v4", world="world")
    nsolid = int(rng.integers(2, 6))
    for i in range(nsolid):
        kind = rng.integers(0, 3)
        name = f"s{i}"
        if kind == 0:
            shape = Box(*(float(v) for v in rng.uniform(5, 40, 3)))
        elif kind == 1:
            rmax = float(rng.uniform(5, 25))
            rmin = float(rng.uniform(0, rmax * 0.6))
            shape = Tube(rmin, rmax, float(rng.uniform(5, 30)))
        else:
            rmax1 = float(rng.uniform(5, 25))
            rmax2 = float(rng.uniform(1, 25))
            shape = Cone(0.0, rmax1, 0.0, rmax2, float(rng.uniform(5, 30)))
        doc.solids[name] = SolidDef(name, shape)

    # one nested sub-assembly plus a flat world
    sub = Composition("sub")
    for _ in range(int(rng.integers(1, 4))):
        sub.placements.append(_random_placement(rng, f"s{rng.integers(0, nsolid)}", 60))
    doc.compositions["sub"] = sub

    world = Composition("world")
    budget = max_instances - len(sub.placements)
    n_direct = int(rng.integers(2, max(3, budget // 2)))
    for _ in range(min(n_direct, budget)):
        world.placements.append(_random_placement(rng, f"s{rng.integers(0, nsolid)}", 300))
    world.placements.append(_random_placement(rng, "sub", 300))
    world.placements.append(_random_placement(rng, "sub", 300))
    doc.compositions["world"] = world
    return doc


def _random_placement(rng, volume: str, spread: float) -> Single:
    return Single(volume,
                  tuple(float(v) for v in rng.uniform(-spread, spread, 3)),
                  tuple(float(v) for v in rng.uniform(0, 360, 3)))
