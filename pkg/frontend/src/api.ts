/** Thin client for the local adjustment service. */

export interface AdjustStats {
  region_mean_error: number;
  mean_brightness: number;
  elapsed_ms: number;
}

export interface AdjustRequestParams {
  imagePng: Blob | Uint8Array;
  engine: "teacher" | "student";
  exposureMode: "uniform" | "auto-under" | "auto-over" | "map";
  exposureValue?: number;
  mapPng?: Blob | Uint8Array;
}

export interface AdjustResponse {
  png: ArrayBuffer;
  stats: AdjustStats;
}

export class ServiceError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

const STATS_HEADER = "X-CuDi-Stats";

function asBlob(data: Blob | Uint8Array, type: string): Blob {
  return data instanceof Blob ? data : new Blob([data.buffer as ArrayBuffer], { type });
}

export class CudiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  async health(): Promise<boolean> {
    try {
      const res = await this.fetchFn(`${this.baseUrl}/v1/health`);
      return res.ok;
    } catch {
      return false;
    }
  }

  async adjust(params: AdjustRequestParams): Promise<AdjustResponse> {
    const form = new FormData();
    form.append("image", asBlob(params.imagePng, "image/png"), "image.png");
    form.append("engine", params.engine);
    form.append("exposure_mode", params.exposureMode);
    if (params.exposureValue !== undefined) {
      form.append("exposure_value", String(params.exposureValue));
    }
    if (params.mapPng !== undefined) {
      form.append("map", asBlob(params.mapPng, "image/png"), "map.png");
    }
    const res = await this.fetchFn(`${this.baseUrl}/v1/adjust`, {
      method: "POST",
      body: form,
    });
    if (!res.ok) {
      let message = `adjust failed with status ${res.status}`;
      try {
        const body = await res.json();
        if (body && typeof body.error === "string") message = body.error;
      } catch {
        // non-JSON error body; keep the generic message
      }
      throw new ServiceError(res.status, message);
    }
    const statsRaw = res.headers.get(STATS_HEADER);
    if (!statsRaw) {
      throw new ServiceError(res.status, "response is missing the stats header");
    }
    return {
      png: await res.arrayBuffer(),
      stats: JSON.parse(statsRaw) as AdjustStats,
    };
  }
}
