/**
 * Editable grayscale exposure map: a float buffer the brush paints into.
 * Values live in [0,1]; light means a high exposure target.  The buffer is
 * what gets quantized to 8 bits and sent to the server, so quantization
 * here must match the wire format exactly (round half up).
 */

export interface StrokePoint {
  x: number;
  y: number;
}

export class ExposureMapBuffer {
  readonly width: number;
  readonly height: number;
  data: Float32Array;

  constructor(width: number, height: number, fill = 0.5) {
    if (width < 1 || height < 1) {
      throw new Error(`invalid map size ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
    this.data = new Float32Array(width * height).fill(clamp01(fill));
  }

  /** Stamp a circular brush along the stroke path; value clamped to [0,1]. */
  paintStroke(path: StrokePoint[], radius: number, value: number): void {
    const v = clamp01(value);
    const r2 = radius * radius;
    for (const p of path) {
      const x0 = Math.max(0, Math.floor(p.x - radius));
      const x1 = Math.min(this.width - 1, Math.ceil(p.x + radius));
      const y0 = Math.max(0, Math.floor(p.y - radius));
      const y1 = Math.min(this.height - 1, Math.ceil(p.y + radius));
      for (let y = y0; y <= y1; y++) {
        for (let x = x0; x <= x1; x++) {
          const dx = x - p.x;
          const dy = y - p.y;
          if (dx * dx + dy * dy <= r2) {
            this.data[y * this.width + x] = v;
          }
        }
      }
    }
  }

  fill(value: number): void {
    this.data.fill(clamp01(value));
  }

  /** Mean of the buffer values inside a rectangle (for test assertions). */
  regionMean(x0: number, y0: number, x1: number, y1: number): number {
    let sum = 0;
    let count = 0;
    for (let y = y0; y < y1; y++) {
      for (let x = x0; x < x1; x++) {
        sum += this.data[y * this.width + x];
        count++;
      }
    }
    return count ? sum / count : 0;
  }

  snapshot(): Float32Array {
    return this.data.slice();
  }

  restore(snap: Float32Array): void {
    if (snap.length !== this.data.length) {
      throw new Error("snapshot size does not match the canvas");
    }
    this.data = snap.slice();
  }

  /** Wire quantization: identical to the PNG pixel bytes sent to the server. */
  toU8(): Uint8Array {
    const out = new Uint8Array(this.data.length);
    for (let i = 0; i < this.data.length; i++) {
      out[i] = Math.min(255, Math.floor(clamp01(this.data[i]) * 255 + 0.5));
    }
    return out;
  }
}

export function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}
