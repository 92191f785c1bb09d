/** Wire JSON scene document (schema version "1") as produced by the server. */

export interface WireGeometry {
  /** Flat xyz triples, mm. */
  vertices: number[];
  /** Flat index triples into the vertex list. */
  triangles: number[];
}

export interface WireAppearance {
  color: [number, number, number, number];
  transparency: number;
  mode: "solid" | "wireframe" | "vertexframe";
  visible: boolean;
}

export interface WireInstance {
  geom: number;
  /** Appearance index, -1 for non-graphical scenes. */
  app: number;
  /** 16 floats, row-major 4x4 affine. */
  matrix: number[];
  path: string[];
  visible: boolean;
}

export interface WireTreeNode {
  name: string;
  children: WireTreeNode[];
  /** Index into instances, -1 for pure grouping nodes. */
  instance: number;
}

export interface WireStats {
  nodes: number;
  shape_instances: number;
  distinct_geometries: number;
  shared_groups: number;
  triangles_stored: number;
  triangles_rendered: number;
  memory_bytes: number;
}

export interface WireDocument {
  version: "1";
  geometries: WireGeometry[];
  appearances: WireAppearance[];
  instances: WireInstance[];
  tree: WireTreeNode;
  stats: WireStats;
}

export class WireFormatError extends Error {}

function fail(msg: string): never {
  throw new WireFormatError(msg);
}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function numberArray(v: unknown, where: string): number[] {
  if (!Array.isArray(v) || v.some((x) => typeof x !== "number")) {
    fail(`${where}: expected an array of numbers`);
  }
  return v as number[];
}

function checkTree(v: unknown, where: string): WireTreeNode {
  if (!isRecord(v) || typeof v.name !== "string" ||
      typeof v.instance !== "number" || !Array.isArray(v.children)) {
    fail(`${where}: malformed tree node`);
  }
  return {
    name: v.name,
    instance: v.instance,
    children: v.children.map((c, i) => checkTree(c, `${where}.children[${i}]`)),
  };
}

/** Validate a parsed JSON value against the schema; throws WireFormatError. */
export function parseWireDocument(data: unknown): WireDocument {
  if (!isRecord(data)) fail("document is not an object");
  if (data.version !== "1") fail(`unsupported schema version ${String(data.version)}`);
  if (!Array.isArray(data.geometries)) fail("missing geometries");
  if (!Array.isArray(data.appearances)) fail("missing appearances");
  if (!Array.isArray(data.instances)) fail("missing instances");

  const geometries = data.geometries.map((g, i) => {
    if (!isRecord(g)) fail(`geometries[${i}] is not an object`);
    const vertices = numberArray(g.vertices, `geometries[${i}].vertices`);
    const triangles = numberArray(g.triangles, `geometries[${i}].triangles`);
    if (vertices.length % 3 !== 0) fail(`geometries[${i}]: vertex count not a multiple of 3`);
    if (triangles.length % 3 !== 0) fail(`geometries[${i}]: index count not a multiple of 3`);
    const nv = vertices.length / 3;
    if (triangles.some((t) => t < 0 || t >= nv || !Number.isInteger(t))) {
      fail(`geometries[${i}]: triangle index out of range`);
    }
    return { vertices, triangles };
  });

  const appearances = data.appearances.map((a, i) => {
    if (!isRecord(a)) fail(`appearances[${i}] is not an object`);
    const color = numberArray(a.color, `appearances[${i}].color`);
    if (color.length !== 4) fail(`appearances[${i}]: color needs 4 components`);
    return {
      color: color as [number, number, number, number],
      transparency: typeof a.transparency === "number" ? a.transparency : 0,
      mode: (a.mode ?? "solid") as WireAppearance["mode"],
      visible: a.visible !== false,
    };
  });

  const instances = data.instances.map((inst, i) => {
    if (!isRecord(inst)) fail(`instances[${i}] is not an object`);
    const matrix = numberArray(inst.matrix, `instances[${i}].matrix`);
    if (matrix.length !== 16) fail(`instances[${i}]: matrix needs 16 floats`);
    if (typeof inst.geom !== "number" || inst.geom < 0 || inst.geom >= geometries.length) {
      fail(`instances[${i}]: geometry index out of range`);
    }
    const app = typeof inst.app === "number" ? inst.app : -1;
    if (app >= appearances.length) fail(`instances[${i}]: appearance index out of range`);
    if (!Array.isArray(inst.path) || inst.path.some((p) => typeof p !== "string")) {
      fail(`instances[${i}]: path must be a string array`);
    }
    return {
      geom: inst.geom,
      app,
      matrix,
      path: inst.path as string[],
      visible: inst.visible !== false,
    };
  });

  const tree = checkTree(data.tree, "tree");
  const stats = data.stats;
  if (!isRecord(stats)) fail("missing stats");

  return {
    version: "1",
    geometries,
    appearances,
    instances,
    tree,
    stats: stats as unknown as WireStats,
  };
}

/** Apply a row-major 4x4 affine matrix to a point. */
export function applyMatrix(m: number[], p: [number, number, number]): [number, number, number] {
  const [x, y, z] = p;
  return [
    m[0]! * x + m[1]! * y + m[2]! * z + m[3]!,
    m[4]! * x + m[5]! * y + m[6]! * z + m[7]!,
    m[8]! * x + m[9]! * y + m[10]! * z + m[11]!,
  ];
}
