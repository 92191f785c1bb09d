/** Camera state: orbit/pan/zoom, parallel or perspective projection,
 * front/back clipping, and non-destructive shear modifiers. */

export type Vec3 = [number, number, number];

export type Projection = "parallel" | "perspective";

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function length(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

export class ClipError extends Error {}

export class Camera {
  position: Vec3 = [0, 0, 1000];
  target: Vec3 = [0, 0, 0];
  up: Vec3 = [0, 1, 0];
  projection: Projection = "perspective";
  fovDegrees = 50;
  frontClip = 0.1;
  backClip = 1e6;
  /** Non-destructive view-matrix shear factors (x-per-z, y-per-z). */
  shear: [number, number] = [0, 0];

  distance(): number {
    return length(sub(this.position, this.target));
  }

  /** Switch projection; the target and viewing direction are preserved. */
  setProjection(projection: Projection): void {
    this.projection = projection;
  }

  setClip(front: number, back: number): void {
    if (!(front > 0) || !(front < back)) {
      throw new ClipError(`clip planes must satisfy 0 < front < back, got ${front}..${back}`);
    }
    this.frontClip = front;
    this.backClip = back;
  }

  /** Orbit around the target by azimuth/elevation (radians). */
  orbit(dAzimuth: number, dElevation: number): void {
    const offset = sub(this.position, this.target);
    const r = length(offset);
    let theta = Math.atan2(offset[0], offset[2]);
    let phi = Math.acos(Math.min(1, Math.max(-1, offset[1] / r)));
    theta += dAzimuth;
    phi = Math.min(Math.PI - 1e-6, Math.max(1e-6, phi + dElevation));
    this.position = add(this.target, [
      r * Math.sin(phi) * Math.sin(theta),
      r * Math.cos(phi),
      r * Math.sin(phi) * Math.cos(theta),
    ]);
  }

  /** Translate target and position together (screen-plane panning). */
  pan(delta: Vec3): void {
    this.position = add(this.position, delta);
    this.target = add(this.target, delta);
  }

  /** Move toward (factor < 1) or away from (factor > 1) the target. */
  zoom(factor: number): void {
    if (!(factor > 0)) throw new RangeError("zoom factor must be > 0");
    const offset = scale(sub(this.position, this.target), factor);
    this.position = add(this.target, offset);
  }

  /** Animate toward a point of interest, ending at a fraction of the
   * current distance. Returns the new distance. */
  goTo(point: Vec3, fraction = 0.5): number {
    const dir = sub(this.position, this.target);
    const d = length(dir) || 1;
    const unit = scale(dir, 1 / d);
    this.target = point;
    this.position = add(point, scale(unit, d * fraction));
    return this.distance();
  }
}
