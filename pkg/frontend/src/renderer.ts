/** Renderer abstraction: geometry is uploaded once per distinct mesh and
 * drawn once per instance, mirroring the server's deduplication. */

import { WireAppearance } from "./wire.js";

export type GeometryHandle = number;

export interface DrawItem {
  handle: GeometryHandle;
  /** Row-major 4x4 world matrix. */
  matrix: number[];
  appearance: WireAppearance | null;
  path: string[];
  visible: boolean;
}

export interface Renderer {
  uploadGeometry(vertices: number[], triangles: number[]): GeometryHandle;
  draw(item: DrawItem): void;
  setVisible(path: string[], flag: boolean): void;
  setAppearance(path: string[], appearance: WireAppearance): void;
  /** Display-only transform for local manipulation of a selection. */
  setDisplayOffset(path: string[], offset: [number, number, number]): void;
  clear(): void;
  /** PNG bytes of the current framebuffer, when the backend has one. */
  snapshot(): Uint8Array | null;
}

function key(path: string[]): string {
  return path.join("/");
}

/** Headless renderer that records calls; used by tests and as a reference
 * for what a GPU backend must implement. */
export class RecordingRenderer implements Renderer {
  uploads: { vertices: number[]; triangles: number[] }[] = [];
  draws: DrawItem[] = [];
  visibility = new Map<string, boolean>();
  appearanceEdits = new Map<string, WireAppearance>();
  displayOffsets = new Map<string, [number, number, number]>();

  uploadGeometry(vertices: number[], triangles: number[]): GeometryHandle {
    this.uploads.push({ vertices, triangles });
    return this.uploads.length - 1;
  }

  draw(item: DrawItem): void {
    this.draws.push(item);
  }

  setVisible(path: string[], flag: boolean): void {
    const prefix = key(path);
    for (const item of this.draws) {
      const k = key(item.path);
      if (k === prefix || k.startsWith(prefix + "/")) {
        this.visibility.set(k, flag);
      }
    }
  }

  setAppearance(path: string[], appearance: WireAppearance): void {
    const prefix = key(path);
    for (const item of this.draws) {
      const k = key(item.path);
      if (k === prefix || k.startsWith(prefix + "/")) {
        this.appearanceEdits.set(k, appearance);
      }
    }
  }

  setDisplayOffset(path: string[], offset: [number, number, number]): void {
    this.displayOffsets.set(key(path), offset);
  }

  clear(): void {
    this.uploads = [];
    this.draws = [];
    this.visibility.clear();
    this.appearanceEdits.clear();
    this.displayOffsets.clear();
  }

  snapshot(): Uint8Array | null {
    return null;
  }

  /** Draw items currently visible on screen. */
  visibleDraws(): DrawItem[] {
    return this.draws.filter((d) => this.visibility.get(key(d.path)) ?? d.visible);
  }
}
