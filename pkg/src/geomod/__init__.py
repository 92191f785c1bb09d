"""geomod: modular geometric-modeling toolkit.

Pipeline: parse detector/event XML -> fill external parameters -> expand
formulas -> build an optimized scene graph -> query (locate/pick/collide)
-> export (VRML/X3D/TXT/wire JSON) or serve to the browser viewer.
"""

__version__ = "0.1.0"
