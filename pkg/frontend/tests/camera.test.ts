import { describe, expect, it } from "vitest";

import { Camera, ClipError, length } from "../src/camera.js";

describe("camera", () => {
  it("projection toggle preserves the target and distance", () => {
    const cam = new Camera();
    cam.target = [10, 20, 30];
    cam.position = [10, 20, 530];
    const d = cam.distance();
    cam.setProjection("parallel");
    expect(cam.target).toEqual([10, 20, 30]);
    expect(cam.distance()).toBe(d);
    cam.setProjection("perspective");
    expect(cam.target).toEqual([10, 20, 30]);
  });

  it("clip planes never invert", () => {
    const cam = new Camera();
    cam.setClip(1, 100);
    expect(cam.frontClip).toBe(1);
    expect(cam.backClip).toBe(100);
    expect(() => cam.setClip(100, 1)).toThrow(ClipError);
    expect(() => cam.setClip(5, 5)).toThrow(ClipError);
    expect(() => cam.setClip(-1, 10)).toThrow(ClipError);
    // failed updates leave the previous valid state in place
    expect(cam.frontClip).toBe(1);
    expect(cam.backClip).toBe(100);
  });

  it("orbit keeps the distance to the target", () => {
    const cam = new Camera();
    cam.position = [0, 0, 100];
    const d = cam.distance();
    cam.orbit(0.7, 0.3);
    expect(cam.distance()).toBeCloseTo(d, 9);
    expect(cam.target).toEqual([0, 0, 0]);
  });

  it("pan moves position and target together", () => {
    const cam = new Camera();
    const d = cam.distance();
    cam.pan([5, -3, 2]);
    expect(cam.target).toEqual([5, -3, 2]);
    expect(cam.distance()).toBeCloseTo(d, 9);
  });

  it("zoom scales the distance", () => {
    const cam = new Camera();
    const d = cam.distance();
    cam.zoom(0.5);
    expect(cam.distance()).toBeCloseTo(d / 2, 9);
    expect(() => cam.zoom(0)).toThrow(RangeError);
  });

  it("go-to decreases the distance to the point of interest", () => {
    const cam = new Camera();
    cam.position = [0, 0, 1000];
    const poi: [number, number, number] = [50, 0, 0];
    const before = length([cam.position[0] - poi[0],
                           cam.position[1] - poi[1],
                           cam.position[2] - poi[2]]);
    const after = cam.goTo(poi);
    expect(cam.target).toEqual(poi);
    expect(after).toBeLessThan(before);
  });
});
