/** HTTP client for the scene server endpoints. */

import { parseWireDocument, WireDocument, WireTreeNode } from "./wire.js";

/** The server declined an operation the scene's build options forbid. */
export class RefusedError extends Error {
  constructor(public reason: string) {
    super(reason);
  }
}

export class ServerError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export interface PickResult {
  path: string[];
  t: number;
  point: [number, number, number];
}

export interface VolumeInfo {
  path: string[];
  aabb: { min: number[]; max: number[] };
  triangles: number;
  visible: boolean;
  solid: { kind: string; params: Record<string, unknown>; volume_mm3?: number };
  note?: string;
}

async function decode(resp: Response): Promise<unknown> {
  const body: unknown = await resp.json();
  if (resp.status === 409 && typeof body === "object" && body !== null &&
      (body as { refused?: boolean }).refused) {
    throw new RefusedError(String((body as { reason?: unknown }).reason ?? "refused"));
  }
  if (!resp.ok) {
    const msg = typeof body === "object" && body !== null
      ? String((body as { error?: unknown }).error ?? resp.statusText)
      : resp.statusText;
    throw new ServerError(resp.status, msg);
  }
  return body;
}

export class SceneClient {
  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async get(path: string): Promise<unknown> {
    return decode(await fetch(this.baseUrl + path));
  }

  private async post(path: string, payload: unknown): Promise<unknown> {
    return decode(await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    }));
  }

  async getScene(): Promise<WireDocument> {
    return parseWireDocument(await this.get("/scene"));
  }

  async getTree(): Promise<WireTreeNode> {
    return (await this.get("/tree")) as WireTreeNode;
  }

  async getInfo(path: string[]): Promise<VolumeInfo> {
    const q = encodeURIComponent(path.join("/"));
    return (await this.get(`/info?path=${q}`)) as VolumeInfo;
  }

  async pick(origin: [number, number, number],
             direction: [number, number, number]): Promise<PickResult | null> {
    const body = (await this.post("/pick", { origin, direction })) as {
      hit: PickResult | null;
    };
    return body.hit;
  }

  async locate(point: [number, number, number]): Promise<string[] | null> {
    const body = (await this.post("/locate", { point })) as { path: string[] | null };
    return body.path;
  }

  async setAppearance(path: string[], edit: {
    color?: number[];
    transparency?: number;
    mode?: string;
    visible?: boolean;
  }): Promise<void> {
    await this.post("/appearance", { path, ...edit });
  }

  async setVisibility(path: string[], flag: boolean): Promise<void> {
    await this.post("/visibility", { path, flag });
  }
}
