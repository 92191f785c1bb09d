/** Spawns the scene server CLI for integration tests. */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface ServerHandle {
  url: string;
  stop(): void;
}

export function writeBoxFarm(n: number): string {
  const dir = mkdtempSync(join(tmpdir(), "geomod-viewer-"));
  const placements = Array.from({ length: n },
    (_, i) => `    <posXYZ volume="unit" X_Y_Z="${5 * i};0;0"/>`).join("\n");
  const xml = `<detector version="v4" world="world">
  <box name="unit" x="2" y="2" z="2"/>
  <composition name="world">
${placements}
  </composition>
</detector>
`;
  const file = join(dir, "boxes.xml");
  writeFileSync(file, xml);
  return file;
}

export async function startServer(
  file: string, flags: string[] = [],
): Promise<ServerHandle> {
  const child: ChildProcess = spawn(
    "geomod",
    ["serve", file, ...flags, "--serve", "127.0.0.1:0"],
    { stdio: ["ignore", "ignore", "pipe"] },
  );
  const url = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(
      () => reject(new Error(`server did not start: ${buffer}`)), 30_000);
    child.stderr!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const m = buffer.match(/serving on (http:\/\/[\d.]+:\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve(m[1]!);
      }
    });
    child.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`server exited early (code ${code}): ${buffer}`));
    });
  });
  return {
    url,
    stop() {
      child.kill("SIGINT");
    },
  };
}
