/** DOM wiring for the exposure studio: load, paint, adjust, compare. */

import { CudiClient } from "./api.js";
import { clamp01 } from "./mapBuffer.js";
import { RequestScheduler, SessionState, loadImage, mapRequest, newSession,
         pushUndo, undo } from "./session.js";

const baseUrl = new URLSearchParams(location.search).get("service")
  ?? "http://127.0.0.1:8080";
const client = new CudiClient(baseUrl);
const state: SessionState = newSession();

const el = {
  file: document.getElementById("file") as HTMLInputElement,
  engine: document.getElementById("engine") as HTMLSelectElement,
  brushValue: document.getElementById("brush-value") as HTMLInputElement,
  brushSize: document.getElementById("brush-size") as HTMLInputElement,
  uniform: document.getElementById("uniform") as HTMLInputElement,
  uniformApply: document.getElementById("uniform-apply") as HTMLButtonElement,
  undoBtn: document.getElementById("undo") as HTMLButtonElement,
  image: document.getElementById("image-canvas") as HTMLCanvasElement,
  map: document.getElementById("map-canvas") as HTMLCanvasElement,
  result: document.getElementById("result-canvas") as HTMLCanvasElement,
  wipe: document.getElementById("wipe") as HTMLInputElement,
  stats: document.getElementById("stats") as HTMLElement,
  banner: document.getElementById("banner") as HTMLElement,
};

let sourceBitmap: ImageBitmap | null = null;
let resultBitmap: ImageBitmap | null = null;

function showBanner(message: string | null): void {
  state.errorBanner = message;
  el.banner.textContent = message ?? "";
  el.banner.style.display = message ? "block" : "none";
}

function encodeMapPng(u8: Uint8Array, w: number, h: number): Uint8Array {
  // grayscale bytes -> canvas -> PNG; pixel values pass through unchanged
  const canvas = document.createElement("canvas");
  canvas.width = w;
  canvas.height = h;
  const ctx = canvas.getContext("2d")!;
  const img = ctx.createImageData(w, h);
  for (let i = 0; i < u8.length; i++) {
    img.data[4 * i] = img.data[4 * i + 1] = img.data[4 * i + 2] = u8[i];
    img.data[4 * i + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
  const dataUrl = canvas.toDataURL("image/png");
  const raw = atob(dataUrl.split(",")[1]);
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}

const scheduler = new RequestScheduler(
  (params) => client.adjust(params),
  {
    onResult: async (res) => {
      state.lastStats = res.stats;
      resultBitmap = await createImageBitmap(new Blob([res.png], { type: "image/png" }));
      drawResult();
      el.stats.textContent =
        `region error ${res.stats.region_mean_error.toFixed(3)} | ` +
        `mean brightness ${res.stats.mean_brightness.toFixed(3)} | ` +
        `${res.stats.elapsed_ms.toFixed(0)} ms`;
      showBanner(null);
    },
    onError: (message) => showBanner(message),
  },
);

function drawMap(): void {
  if (!state.map) return;
  const ctx = el.map.getContext("2d")!;
  const img = ctx.createImageData(state.map.width, state.map.height);
  const u8 = state.map.toU8();
  for (let i = 0; i < u8.length; i++) {
    img.data[4 * i] = img.data[4 * i + 1] = img.data[4 * i + 2] = u8[i];
    img.data[4 * i + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
}

function drawResult(): void {
  const ctx = el.result.getContext("2d")!;
  ctx.clearRect(0, 0, el.result.width, el.result.height);
  if (resultBitmap) ctx.drawImage(resultBitmap, 0, 0);
  if (sourceBitmap) {
    // slider wipe: left side shows the input
    const split = Math.round(clamp01(Number(el.wipe.value) / 100) * el.result.width);
    ctx.drawImage(sourceBitmap, 0, 0, split, el.result.height,
                  0, 0, split, el.result.height);
    ctx.fillStyle = "#e33";
    ctx.fillRect(split - 1, 0, 2, el.result.height);
  }
}

function requestAdjust(): void {
  if (!state.imagePng) return;
  scheduler.schedule(mapRequest(state, encodeMapPng));
}

el.file.addEventListener("change", async () => {
  const file = el.file.files?.[0];
  if (!file) return;
  try {
    const bitmap = await createImageBitmap(file);
    sourceBitmap = bitmap;
    const bytes = new Uint8Array(await file.arrayBuffer());
    loadImage(state, bytes, bitmap.width, bitmap.height);
    for (const canvas of [el.image, el.map, el.result]) {
      canvas.width = bitmap.width;
      canvas.height = bitmap.height;
    }
    el.image.getContext("2d")!.drawImage(bitmap, 0, 0);
    resultBitmap = null;
    drawMap();
    drawResult();
    showBanner(null);
    requestAdjust();
  } catch {
    showBanner("could not decode that file");
  }
});

let painting = false;
let stroke: { x: number; y: number }[] = [];

function canvasPoint(ev: MouseEvent): { x: number; y: number } {
  const rect = el.map.getBoundingClientRect();
  return {
    x: (ev.clientX - rect.left) * (el.map.width / rect.width),
    y: (ev.clientY - rect.top) * (el.map.height / rect.height),
  };
}

el.map.addEventListener("mousedown", (ev) => {
  if (!state.map) return;
  painting = true;
  pushUndo(state);
  stroke = [canvasPoint(ev)];
  state.map.paintStroke(stroke, Number(el.brushSize.value), Number(el.brushValue.value));
  drawMap();
});

el.map.addEventListener("mousemove", (ev) => {
  if (!painting || !state.map) return;
  stroke.push(canvasPoint(ev));
  state.map.paintStroke(stroke.slice(-2), Number(el.brushSize.value),
                        Number(el.brushValue.value));
  drawMap();
});

window.addEventListener("mouseup", () => {
  if (!painting) return;
  painting = false;
  requestAdjust();
});

el.undoBtn.addEventListener("click", () => {
  if (undo(state)) {
    drawMap();
    requestAdjust();
  }
});

el.uniformApply.addEventListener("click", () => {
  if (!state.map) return;
  pushUndo(state);
  state.map.fill(Number(el.uniform.value));
  drawMap();
  requestAdjust();
});

el.engine.addEventListener("change", () => {
  state.engine = el.engine.value as "teacher" | "student";
  requestAdjust();
});

el.wipe.addEventListener("input", drawResult);

void client.health().then((ok) => {
  if (!ok) showBanner(`service unreachable at ${baseUrl}`);
});
