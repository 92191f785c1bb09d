import pytest

from geomod import model, paramfill
from geomod.paramfill import (ConnectionConfig, FileParameterSource,
                              FillError, SourceSpec, fill, open_sources,
                              parse_connections)

from conftest import CONNECTIONS_XML

DOC_XML = """
<detector version="v6" world="b">
  <var connection="demo" name="SCT.length"/>
  <var name="half" value="SCT.length/2"/>
  <box XYZ="SCT.length;10;10" name="b"/>
</detector>
"""


@pytest.fixture
def params_file(tmp_path):
    p = tmp_path / "nova.params"
    p.write_text("# reference parameter dump\nSCT.length 123.456\nTRT.gap 0.5\n")
    return p


def test_file_source_lookup(params_file):
    src = FileParameterSource(params_file)
    assert src.lookup("SCT.length") == 123.456
    assert src.lookup("TRT.gap") == 0.5


def test_file_source_miss_is_an_error(params_file):
    with pytest.raises(FillError, match="not found"):
        FileParameterSource(params_file).lookup("SCT.width")


def test_file_source_rejects_bad_lines(tmp_path):
    p = tmp_path / "bad.params"
    p.write_text("SCT.length twelve\n")
    with pytest.raises(FillError, match="bad number"):
        FileParameterSource(p)
    p.write_text("just_a_name\n")
    with pytest.raises(FillError, match="expected"):
        FileParameterSource(p)


def test_parse_connections_reference_document():
    config = parse_connections(CONNECTIONS_XML)
    assert set(config.connections) == {"demo"}
    spec = config.connections["demo"]
    assert spec.location == "jdbc:mysql://nova.site.org/NOVA"


def test_parse_connections_errors():
    with pytest.raises(FillError, match="missing name"):
        parse_connections("<c><connection/></c>")
    with pytest.raises(FillError, match="missing location"):
        parse_connections('<c><connection name="x"/></c>')
    with pytest.raises(FillError, match="duplicate"):
        parse_connections('<c><connection name="x"><dburl>a</dburl></connection>'
                          '<connection name="x"><dburl>b</dburl></connection></c>')


def test_open_sources_rejects_unknown_kind():
    config = ConnectionConfig({"x": SourceSpec("mysql", "somewhere")})
    with pytest.raises(FillError, match="unsupported"):
        open_sources(config)


def make_config(params_file):
    return ConnectionConfig({"demo": SourceSpec("file", str(params_file))})


def test_fill_replaces_connection_vars(params_file):
    doc, _ = model.parse_document(DOC_XML)
    assert [p.name for p in doc.unresolved_params] == ["SCT.length"]
    config = make_config(params_file)
    filled = fill(doc, config, open_sources(config))
    assert filled.unresolved_params == []
    var = next(d for d in filled.definitions
               if isinstance(d, model.VarDef) and d.name == "SCT.length")
    assert var.value == 123.456
    assert var.connection is None


def test_fill_is_idempotent(params_file):
    doc, _ = model.parse_document(DOC_XML)
    config = make_config(params_file)
    sources = open_sources(config)
    once = fill(doc, config, sources)
    assert fill(once, config, sources) == once


def test_fill_unknown_connection_aborts(params_file):
    doc, _ = model.parse_document(DOC_XML.replace("demo", "prod"))
    config = make_config(params_file)
    with pytest.raises(FillError, match="unknown connection"):
        fill(doc, config, open_sources(config))


def test_fill_lookup_miss_aborts(tmp_path):
    p = tmp_path / "empty.params"
    p.write_text("# nothing here\n")
    doc, _ = model.parse_document(DOC_XML)
    config = make_config(p)
    with pytest.raises(FillError, match="not found"):
        fill(doc, config, open_sources(config))


def test_filled_document_expands(params_file):
    from geomod import expr
    doc, _ = model.parse_document(DOC_XML)
    config = make_config(params_file)
    out = expr.expand_document(fill(doc, config, open_sources(config)))
    assert out.solids["b"].shape == model.Box(123.456, 10.0, 10.0)
    env = expr.build_environment(out)
    assert env.scalars["half"] == pytest.approx(61.728)
