/** Viewer orchestration: the server owns persistent state; the viewer
 * applies edits optimistically and rolls back on a capability refusal. */

import { Camera, Vec3 } from "./camera.js";
import { RefusedError, SceneClient, VolumeInfo } from "./client.js";
import { Renderer } from "./renderer.js";
import { SceneModel } from "./scene.js";
import { WireAppearance } from "./wire.js";

export interface Selection {
  path: string[];
  info: VolumeInfo;
}

export class Viewer {
  client: SceneClient;
  scene: SceneModel | null = null;
  camera = new Camera();
  selection: Selection | null = null;
  /** Messages for the UI banner (network errors, server refusals). */
  errors: string[] = [];

  constructor(baseUrl: string, public renderer: Renderer) {
    this.client = new SceneClient(baseUrl);
  }

  async load(): Promise<SceneModel> {
    const doc = await this.client.getScene();
    this.scene = new SceneModel(doc, this.renderer);
    this.selection = null;
    return this.scene;
  }

  private requireScene(): SceneModel {
    if (!this.scene) throw new Error("no scene loaded");
    return this.scene;
  }

  /** Cast a pick ray; on a hit, select the path and fetch its details.
   * A miss clears the selection. */
  async pickClick(origin: Vec3, direction: Vec3): Promise<Selection | null> {
    this.requireScene();
    const hit = await this.client.pick(origin, direction);
    if (hit === null) {
      this.selection = null;
      return null;
    }
    const info = await this.client.getInfo(hit.path);
    this.selection = { path: hit.path, info };
    return this.selection;
  }

  /** Toggle a subtree on the server, mirroring it on screen; rolled back
   * if the server refuses. */
  async treeToggle(path: string[], flag: boolean): Promise<void> {
    this.requireScene();
    this.renderer.setVisible(path, flag);
    try {
      await this.client.setVisibility(path, flag);
    } catch (err) {
      this.renderer.setVisible(path, !flag);
      this.reportRefusal(err);
      throw err;
    }
  }

  /** Edit color/transparency on the server, optimistically applied
   * locally first. */
  async appearanceEdit(path: string[], edit: {
    color?: number[];
    transparency?: number;
  }): Promise<void> {
    const scene = this.requireScene();
    const idx = scene.instanceIndex(path);
    const before = idx >= 0 && scene.doc.instances[idx]!.app >= 0
      ? scene.doc.appearances[scene.doc.instances[idx]!.app]!
      : null;
    const optimistic: WireAppearance = {
      color: (edit.color ?? before?.color ?? [0.8, 0.8, 0.8, 1]) as
        [number, number, number, number],
      transparency: edit.transparency ?? before?.transparency ?? 0,
      mode: before?.mode ?? "solid",
      visible: before?.visible ?? true,
    };
    this.renderer.setAppearance(path, optimistic);
    try {
      await this.client.setAppearance(path, edit);
    } catch (err) {
      if (before) this.renderer.setAppearance(path, before);
      this.reportRefusal(err);
      throw err;
    }
  }

  /** Local operation: move the selected instance on screen only.
   * No selection is a no-op with a hint. */
  localTranslate(offset: Vec3): boolean {
    if (!this.selection) {
      this.errors.push("select an object first (local operations need a selection)");
      return false;
    }
    this.renderer.setDisplayOffset(this.selection.path, offset);
    return true;
  }

  /** Animate the camera toward the current selection. */
  goToSelection(): number | null {
    if (!this.selection) {
      this.errors.push("select an object first (go-to needs a selection)");
      return null;
    }
    const { min, max } = this.selection.info.aabb;
    const center: Vec3 = [
      (min[0]! + max[0]!) / 2,
      (min[1]! + max[1]!) / 2,
      (min[2]! + max[2]!) / 2,
    ];
    return this.camera.goTo(center);
  }

  snapshot(): Uint8Array | null {
    return this.renderer.snapshot();
  }

  private reportRefusal(err: unknown): void {
    if (err instanceof RefusedError) {
      this.errors.push(`server refused: ${err.reason}`);
    } else if (err instanceof Error) {
      this.errors.push(err.message);
    }
  }
}
