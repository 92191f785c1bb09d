/** WebGL renderer backend built on three.js. Each geometry-table entry
 * becomes one BufferGeometry shared by every mesh that draws it. */

import * as THREE from "three";

import { Camera } from "./camera.js";
import { DrawItem, GeometryHandle, Renderer } from "./renderer.js";
import { WireAppearance } from "./wire.js";

function pathKey(path: string[]): string {
  return path.join("/");
}

function toMaterial(app: WireAppearance | null): THREE.Material {
  if (!app) {
    return new THREE.MeshLambertMaterial({ color: 0xcccccc });
  }
  const [r, g, b, a] = app.color;
  const opacity = a * (1 - app.transparency);
  return new THREE.MeshLambertMaterial({
    color: new THREE.Color(r, g, b),
    transparent: opacity < 1,
    opacity,
    wireframe: app.mode === "wireframe",
  });
}

export class ThreeRenderer implements Renderer {
  scene = new THREE.Scene();
  private geometries: THREE.BufferGeometry[] = [];
  private meshes = new Map<string, THREE.Mesh>();
  private webgl: THREE.WebGLRenderer | null = null;
  private canvas: HTMLCanvasElement | null = null;

  constructor(canvas?: HTMLCanvasElement) {
    if (canvas) {
      this.canvas = canvas;
      this.webgl = new THREE.WebGLRenderer({ canvas, preserveDrawingBuffer: true });
    }
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.6));
    const sun = new THREE.DirectionalLight(0xffffff, 0.8);
    sun.position.set(1, 2, 3);
    this.scene.add(sun);
  }

  uploadGeometry(vertices: number[], triangles: number[]): GeometryHandle {
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position",
      new THREE.Float32BufferAttribute(Float32Array.from(vertices), 3));
    geometry.setIndex(triangles);
    geometry.computeVertexNormals();
    this.geometries.push(geometry);
    return this.geometries.length - 1;
  }

  draw(item: DrawItem): void {
    const mesh = new THREE.Mesh(this.geometries[item.handle], toMaterial(item.appearance));
    const m = new THREE.Matrix4();
    m.set(
      item.matrix[0]!, item.matrix[1]!, item.matrix[2]!, item.matrix[3]!,
      item.matrix[4]!, item.matrix[5]!, item.matrix[6]!, item.matrix[7]!,
      item.matrix[8]!, item.matrix[9]!, item.matrix[10]!, item.matrix[11]!,
      item.matrix[12]!, item.matrix[13]!, item.matrix[14]!, item.matrix[15]!,
    );
    mesh.matrixAutoUpdate = false;
    mesh.matrix.copy(m);
    mesh.visible = item.visible;
    mesh.userData.path = item.path;
    mesh.userData.baseMatrix = m.clone();
    this.meshes.set(pathKey(item.path), mesh);
    this.scene.add(mesh);
  }

  private forSubtree(path: string[], fn: (mesh: THREE.Mesh) => void): void {
    const prefix = pathKey(path);
    for (const [key, mesh] of this.meshes) {
      if (key === prefix || key.startsWith(prefix + "/")) fn(mesh);
    }
  }

  setVisible(path: string[], flag: boolean): void {
    this.forSubtree(path, (mesh) => {
      mesh.visible = flag;
    });
  }

  setAppearance(path: string[], appearance: WireAppearance): void {
    this.forSubtree(path, (mesh) => {
      mesh.material = toMaterial(appearance);
    });
  }

  setDisplayOffset(path: string[], offset: [number, number, number]): void {
    this.forSubtree(path, (mesh) => {
      const base = mesh.userData.baseMatrix as THREE.Matrix4;
      mesh.matrix.copy(base);
      mesh.matrix.premultiply(new THREE.Matrix4().makeTranslation(...offset));
    });
  }

  clear(): void {
    for (const mesh of this.meshes.values()) this.scene.remove(mesh);
    for (const g of this.geometries) g.dispose();
    this.meshes.clear();
    this.geometries = [];
  }

  render(camera: Camera): void {
    if (!this.webgl || !this.canvas) return;
    const aspect = this.canvas.width / Math.max(1, this.canvas.height);
    let threeCam: THREE.Camera;
    if (camera.projection === "perspective") {
      threeCam = new THREE.PerspectiveCamera(
        camera.fovDegrees, aspect, camera.frontClip, camera.backClip);
    } else {
      const h = camera.distance() * Math.tan((camera.fovDegrees * Math.PI) / 360);
      threeCam = new THREE.OrthographicCamera(
        -h * aspect, h * aspect, h, -h, camera.frontClip, camera.backClip);
    }
    threeCam.position.set(...camera.position);
    threeCam.up.set(...camera.up);
    threeCam.lookAt(...camera.target);
    const [sx, sy] = camera.shear;
    if (sx !== 0 || sy !== 0) {
      const shear = new THREE.Matrix4().set(
        1, 0, sx, 0,
        0, 1, sy, 0,
        0, 0, 1, 0,
        0, 0, 0, 1);
      threeCam.projectionMatrix.multiply(shear);
    }
    this.webgl.render(this.scene, threeCam);
  }

  snapshot(): Uint8Array | null {
    if (!this.canvas) return null;
    const data = this.canvas.toDataURL("image/png").split(",")[1]!;
    const raw = atob(data);
    const bytes = new Uint8Array(raw.length);
    for (let i = 0; i < raw.length; i++) bytes[i] = raw.charCodeAt(i);
    return bytes;
  }
}
