export * from "./wire.js";
export * from "./client.js";
export * from "./renderer.js";
export * from "./camera.js";
export * from "./scene.js";
export * from "./viewer.js";
