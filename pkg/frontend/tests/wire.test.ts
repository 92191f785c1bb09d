import { describe, expect, it } from "vitest";

import { applyMatrix, parseWireDocument, WireFormatError } from "../src/wire.js";

const IDENTITY = [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1];

export function sampleDocument(nInstances: number, nGeometries = 1) {
  const geometries = [];
  for (let g = 0; g < nGeometries; g++) {
    geometries.push({
      // one triangle is enough for protocol-level tests
      vertices: [0, 0, 0, 1, 0, 0, 0, 1, 0],
      triangles: [0, 1, 2],
    });
  }
  const instances = [];
  const children = [];
  for (let i = 0; i < nInstances; i++) {
    const matrix = [...IDENTITY];
    matrix[3] = 5 * i; // translate along x
    const path = ["world", nInstances > 1 ? `unit.${i}` : "unit"];
    instances.push({
      geom: i % nGeometries,
      app: 0,
      matrix,
      path,
      visible: true,
    });
    children.push({ name: path[1]!, children: [], instance: i });
  }
  return {
    version: "1",
    geometries,
    appearances: [{ color: [0.8, 0.8, 0.8, 1], transparency: 0, mode: "solid", visible: true }],
    instances,
    tree: { name: "world", children, instance: -1 },
    stats: {
      nodes: nInstances,
      shape_instances: nInstances,
      distinct_geometries: nGeometries,
      shared_groups: 0,
      triangles_stored: nGeometries,
      triangles_rendered: nInstances,
      memory_bytes: 0,
    },
  };
}

describe("wire document parsing", () => {
  it("accepts a valid document", () => {
    const doc = parseWireDocument(sampleDocument(3));
    expect(doc.instances).toHaveLength(3);
    expect(doc.geometries).toHaveLength(1);
    expect(doc.tree.children).toHaveLength(3);
  });

  it("rejects wrong schema versions", () => {
    expect(() => parseWireDocument({ ...sampleDocument(1), version: "2" }))
      .toThrow(WireFormatError);
  });

  it("rejects out-of-range triangle indices", () => {
    const doc = sampleDocument(1);
    doc.geometries[0]!.triangles = [0, 1, 9];
    expect(() => parseWireDocument(doc)).toThrow(/index out of range/);
  });

  it("rejects out-of-range geometry references", () => {
    const doc = sampleDocument(1);
    doc.instances[0]!.geom = 5;
    expect(() => parseWireDocument(doc)).toThrow(/geometry index/);
  });

  it("rejects short matrices", () => {
    const doc = sampleDocument(1);
    doc.instances[0]!.matrix = [1, 0, 0];
    expect(() => parseWireDocument(doc)).toThrow(/16 floats/);
  });

  it("rejects non-object input", () => {
    expect(() => parseWireDocument("nope")).toThrow(WireFormatError);
    expect(() => parseWireDocument(null)).toThrow(WireFormatError);
  });
});

describe("matrix application", () => {
  it("applies row-major affine transforms", () => {
    const m = [...IDENTITY];
    m[3] = 10;
    m[7] = 20;
    expect(applyMatrix(m, [1, 2, 3])).toEqual([11, 22, 3]);
  });
});
