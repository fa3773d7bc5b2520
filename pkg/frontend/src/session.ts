/**
 * Session state and the debounced request loop.
 *
 * Rules: edits debounce for 150 ms; at most one request is in flight;
 * while one is pending the latest edit wins; responses superseded by a
 * newer edit are discarded.  The UI thread never blocks on the network.
 */

import { AdjustResponse, AdjustRequestParams } from "./api.js";
import { ExposureMapBuffer } from "./mapBuffer.js";

export const DEBOUNCE_MS = 150;

export type AdjustFn = (params: AdjustRequestParams) => Promise<AdjustResponse>;

export interface SchedulerEvents {
  onResult: (res: AdjustResponse) => void;
  onError: (message: string) => void;
}

export class RequestScheduler {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pending: AdjustRequestParams | null = null;
  private inFlight = false;
  private generation = 0;
  requestsSent = 0;

  constructor(
    private readonly adjust: AdjustFn,
    private readonly events: SchedulerEvents,
    private readonly debounceMs: number = DEBOUNCE_MS,
  ) {}

  /** Register the latest edit; restarts the debounce window. */
  schedule(params: AdjustRequestParams): void {
    this.pending = params;
    this.generation++;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => void this.fire(), this.debounceMs);
  }

  get busy(): boolean {
    return this.inFlight;
  }

  private async fire(): Promise<void> {
    this.timer = null;
    if (this.inFlight || this.pending === null) return;
    const gen = this.generation;
    const params = this.pending;
    this.pending = null;
    this.inFlight = true;
    this.requestsSent++;
    try {
      const res = await this.adjust(params);
      if (gen === this.generation) {
        this.events.onResult(res);
      } // otherwise a newer edit superseded this response: discard
    } catch (err) {
      if (gen === this.generation) {
        this.events.onError(err instanceof Error ? err.message : String(err));
      }
    } finally {
      this.inFlight = false;
      if (this.pending !== null) {
        // an edit arrived mid-flight; send it after its own debounce window
        this.timer = setTimeout(() => void this.fire(), this.debounceMs);
      }
    }
  }
}

export interface SessionState {
  imagePng: Uint8Array | null;
  imageWidth: number;
  imageHeight: number;
  map: ExposureMapBuffer | null;
  engine: "teacher" | "student";
  brushValue: number;
  lastStats: AdjustResponse["stats"] | null;
  errorBanner: string | null;
  undoStack: Float32Array[];
}

export function newSession(): SessionState {
  return {
    imagePng: null,
    imageWidth: 0,
    imageHeight: 0,
    map: null,
    engine: "student",
    brushValue: 0.65,
    lastStats: null,
    errorBanner: null,
    undoStack: [],
  };
}

/** Install a decoded image; the map canvas always matches its dimensions. */
export function loadImage(state: SessionState, png: Uint8Array,
                          width: number, height: number): void {
  state.imagePng = png;
  state.imageWidth = width;
  state.imageHeight = height;
  state.map = new ExposureMapBuffer(width, height, 0.5);
  state.undoStack = [];
  state.lastStats = null;
  state.errorBanner = null;
}

export function pushUndo(state: SessionState): void {
  if (state.map) state.undoStack.push(state.map.snapshot());
}

export function undo(state: SessionState): boolean {
  const snap = state.undoStack.pop();
  if (!snap || !state.map) return false;
  state.map.restore(snap);
  return true;
}

/** The request body for the current session state (painted-map mode). */
export function mapRequest(state: SessionState,
                           encodePng: (u8: Uint8Array, w: number, h: number) => Uint8Array,
                           ): AdjustRequestParams {
  if (!state.imagePng || !state.map) throw new Error("no image loaded");
  return {
    imagePng: state.imagePng,
    engine: state.engine,
    exposureMode: "map",
    mapPng: encodePng(state.map.toU8(), state.map.width, state.map.height),
  };
}
