/** Client-side scene model: uploads each distinct geometry once, draws one
 * item per instance, and keeps the navigation tree. */

import { GeometryHandle, Renderer } from "./renderer.js";
import { WireDocument, WireTreeNode } from "./wire.js";

export class SceneModel {
  handles: GeometryHandle[] = [];
  tree: WireTreeNode;

  constructor(public doc: WireDocument, public renderer: Renderer) {
    this.tree = doc.tree;
    renderer.clear();
    // one upload per geometry-table entry, regardless of instance count
    for (const g of doc.geometries) {
      this.handles.push(renderer.uploadGeometry(g.vertices, g.triangles));
    }
    for (const inst of doc.instances) {
      renderer.draw({
        handle: this.handles[inst.geom]!,
        matrix: inst.matrix,
        appearance: inst.app >= 0 ? doc.appearances[inst.app]! : null,
        path: inst.path,
        visible: inst.visible,
      });
    }
  }

  instanceIndex(path: string[]): number {
    const want = path.join("/");
    return this.doc.instances.findIndex((i) => i.path.join("/") === want);
  }

  findTreeNode(path: string[]): WireTreeNode | null {
    let node: WireTreeNode | null = this.tree;
    if (!node || node.name !== path[0]) return null;
    for (const part of path.slice(1)) {
      node = node.children.find((c) => c.name === part) ?? null;
      if (!node) return null;
    }
    return node;
  }
}
