/** Typed client for the coverforge HTTP API. */

export interface GenerationParams {
  guidance_scale?: number;
  conditioning_scale?: number;
  strength?: number;
  seed?: number;
  steps?: number;
}

export type JobState = "queued" | "running" | "succeeded" | "failed" | "canceled";

export interface JobError {
  stage: string;
  code: string;
  message: string;
}

export interface JobView {
  job_id: string;
  state: JobState;
  kind: "cover" | "qr";
  seed: number;
  params: Required<GenerationParams>;
  timings: Record<string, number>;
  warnings: string[];
  error: JobError | null;
  created_at: number;
  artifacts: Record<string, string>;
}

export interface QrAttempt {
  params: Required<GenerationParams>;
  decoded_ok: boolean;
}

export interface Manifest {
  schema_version: number;
  job_id: string;
  kind: string;
  input_hashes: Record<string, string>;
  prompt: string;
  seed: number;
  params: Required<GenerationParams>;
  artifacts: { name: string; hash: string; size: number; content_type: string }[];
  warnings: string[];
  qr: {
    payload: string;
    decoded_ok: boolean;
    decoded_payload: string | null;
    attempts: QrAttempt[];
  } | null;
}

export interface SubmitResponse {
  job_id: string;
  status_url: string;
}

/** API-level failure carrying the server's machine-readable body. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly field?: string;

  constructor(status: number, code: string, message: string, field?: string) {
    super(message);
    this.status = status;
    this.code = code;
    this.field = field;
  }
}

async function throwApiError(resp: Response): Promise<never> {
  let code = "HttpError";
  let message = `request failed with status ${resp.status}`;
  let field: string | undefined;
  try {
    const body = await resp.json();
    if (body && typeof body.code === "string") {
      code = body.code;
      message = body.message ?? message;
      field = body.field;
    }
  } catch {
    // non-JSON error body; keep defaults
  }
  throw new ApiError(resp.status, code, message, field);
}

export interface CoverSubmission {
  audio: File;
  image: File;
  style: string;
  params?: GenerationParams;
  qrPayload?: string;
}

export interface QrSubmission {
  image: File;
  payload: string;
  style: string;
  params?: GenerationParams;
  autoTune?: boolean;
}

export class CoverForgeClient {
  constructor(private readonly baseUrl: string = "",
              private readonly fetchFn: typeof fetch = fetch) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      await throwApiError(resp);
    }
    return resp;
  }

  async submitCoverJob(sub: CoverSubmission): Promise<SubmitResponse> {
    const form = new FormData();
    form.append("audio", sub.audio);
    form.append("image", sub.image);
    form.append("style", sub.style);
    if (sub.params && Object.keys(sub.params).length) {
      form.append("params", JSON.stringify(sub.params));
    }
    if (sub.qrPayload) {
      form.append("qr_payload", sub.qrPayload);
    }
    const resp = await this.request("/api/jobs", { method: "POST", body: form });
    return resp.json();
  }

  async submitQrJob(sub: QrSubmission): Promise<SubmitResponse> {
    const form = new FormData();
    form.append("image", sub.image);
    form.append("payload", sub.payload);
    form.append("style", sub.style);
    if (sub.params && Object.keys(sub.params).length) {
      form.append("params", JSON.stringify(sub.params));
    }
    if (sub.autoTune) {
      form.append("auto_tune", "true");
    }
    const resp = await this.request("/api/qr", { method: "POST", body: form });
    return resp.json();
  }

  async getJob(jobId: string): Promise<JobView> {
    const resp = await this.request(`/api/jobs/${jobId}`);
    return resp.json();
  }

  async listJobs(state?: string, limit = 50): Promise<JobView[]> {
    const query = state ? `?state=${state}&limit=${limit}` : `?limit=${limit}`;
    const resp = await this.request(`/api/jobs${query}`);
    const body = await resp.json();
    return body.jobs;
  }

  async cancelJob(jobId: string): Promise<JobView> {
    const resp = await this.request(`/api/jobs/${jobId}/cancel`, { method: "POST" });
    return resp.json();
  }

  async getManifest(jobId: string): Promise<Manifest> {
    const resp = await this.request(`/api/jobs/${jobId}/artifacts/manifest.json`);
    return resp.json();
  }

  artifactUrl(jobId: string, name: string): string {
    return `${this.baseUrl}/api/jobs/${jobId}/artifacts/${name}`;
  }

  async health(): Promise<{ status: string; backend_mode: string; backend_reachable: boolean }> {
    const resp = await this.request("/api/health");
    return resp.json();
  }
}
