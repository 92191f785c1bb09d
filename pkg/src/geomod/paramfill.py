"""External parameter filling.

v6 documents may reference parameters by connection, e.g.
``<var connection="demo" name="SCT.length"/>``.  A connection config maps
connection names to parameter sources; filling replaces each reference by
``<var name="SCT.length" value="..."/>``.  The reference source is a plain
two-column text file; database-backed sources can implement the same
lookup interface (the location URI is carried opaquely for that purpose).
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol

from .model import GenericDocument, ParseError, VarDef


class FillError(Exception):
    pass


@dataclass
class SourceSpec:
    kind: str       # "file" in the reference implementation
    location: str   # path or URI, carried opaquely


@dataclass
class ConnectionConfig:
    connections: dict[str, SourceSpec] = field(default_factory=dict)


class ParameterSource(Protocol):
    def lookup(self, name: str) -> float: ...


class FileParameterSource:
    """Parameters from a UTF-8 text file: `name value` per line, '#' comments.

    Safe for concurrent lookup (the table is read once, then immutable).
    """

    def __init__(self, path: str | Path):
        self.path = str(path)
        self._values: dict[str, float] = {}
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FillError(f"{path}:{lineno}: expected 'name value', got {raw!r}")
            try:
                self._values[parts[0]] = float(parts[1])
            except ValueError:
                raise FillError(f"{path}:{lineno}: bad number {parts[1]!r}") from None

    def lookup(self, name: str) -> float:
        if name not in self._values:
            raise FillError(f"parameter {name!r} not found in {self.path}")
        return self._values[name]


def parse_connections(xml_text: str) -> ConnectionConfig:
    """Parse a connection-definition XML document.

    Expected shape::

        <XSQLConfig>
          <connectiondefs>
            <connection name="demo">
              <dburl>jdbc:mysql://nova.site.org/NOVA</dburl>
            </connection>
          </connectiondefs>
        </XSQLConfig>

    A ``kind`` attribute on <connection> defaults to "file"; <location>
    is accepted as a synonym of <dburl>.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed connection XML: {exc}") from exc

    config = ConnectionConfig()
    for conn in root.iter("connection"):
        name = conn.get("name")
        if not name:
            raise FillError("<connection> missing name")
        if name in config.connections:
            raise FillError(f"duplicate connection {name!r}")
        loc = conn.findtext("dburl") or conn.findtext("location")
        if not loc or not loc.strip():
            raise FillError(f"connection {name!r}: missing location")
        config.connections[name] = SourceSpec(conn.get("kind", "file"), loc.strip())
    return config


def open_sources(config: ConnectionConfig) -> dict[str, ParameterSource]:
    """Instantiate a source per connection (file-backed kinds only)."""
    sources: dict[str, ParameterSource] = {}
    for name, spec in config.connections.items():
        if spec.kind != "file":
            raise FillError(f"connection {name!r}: unsupported source kind {spec.kind!r}")
        sources[name] = FileParameterSource(spec.location)
    return sources


def fill(doc: GenericDocument, config: ConnectionConfig,
         sources: dict[str, ParameterSource]) -> GenericDocument:
    """Resolve every connection-bearing var against its parameter source.

    Aborts on an unknown connection or a lookup miss; idempotent; touches
    nothing but connection-bearing var definitions.
    """
    definitions = []
    for d in doc.definitions:
        if isinstance(d, VarDef) and d.connection is not None:
            if d.connection not in config.connections:
                raise FillError(f"var {d.name!r}: unknown connection {d.connection!r}")
            if d.connection not in sources:
                raise FillError(f"var {d.name!r}: no source for connection {d.connection!r}")
            definitions.append(VarDef(d.name, sources[d.connection].lookup(d.name)))
        else:
            definitions.append(d)
    return replace(doc, definitions=definitions)
