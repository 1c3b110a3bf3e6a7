/** View-model derivation: stage checklist, error rendering, session gallery.
 * Every rendered field traces to an API response field; nothing is invented
 * client-side. */

import type { JobError, JobState, JobView } from "./api.js";

export type StageStatus = "done" | "active" | "failed" | "pending" | "skipped";

export interface StageItem {
  stage: string;
  label: string;
  status: StageStatus;
}

/** Display stages in pipeline order, mapped from the per-stage timing keys
 * the server records. */
const STAGE_MAP: { stage: string; label: string; timingKeys: string[] }[] = [
  { stage: "ingest", label: "Ingest", timingKeys: ["ingest"] },
  { stage: "captions", label: "Captions", timingKeys: ["caption_image", "caption_audio"] },
  { stage: "summary", label: "Summary", timingKeys: ["summarize"] },
  { stage: "edges", label: "Edges", timingKeys: ["edges", "segmentation"] },
  { stage: "generate", label: "Generate", timingKeys: ["generate"] },
  { stage: "qr", label: "QR", timingKeys: ["qr"] },
];

const QR_ONLY_STAGES = new Set(["ingest", "qr"]);

function stageOfTimingKey(key: string): string {
  for (const entry of STAGE_MAP) {
    if (entry.timingKeys.includes(key)) {
      return entry.stage;
    }
  }
  return key;
}

export function stageChecklist(job: JobView): StageItem[] {
  const relevant = job.kind === "qr"
    ? STAGE_MAP.filter((s) => QR_ONLY_STAGES.has(s.stage))
    : STAGE_MAP.filter((s) => s.stage !== "qr" || "qr" in job.timings
                              || job.state !== "succeeded");
  const failedStage = job.error ? stageOfTimingKey(job.error.stage) : null;

  const items: StageItem[] = [];
  let sawIncomplete = false;
  for (const entry of relevant) {
    const done = entry.timingKeys.some((key) => key in job.timings);
    let status: StageStatus;
    if (failedStage === entry.stage && job.state === "failed") {
      status = "failed";
      sawIncomplete = true;
    } else if (done) {
      status = "done";
    } else if (job.state === "running" && !sawIncomplete) {
      status = "active";
      sawIncomplete = true;
    } else if (job.state === "succeeded") {
      status = "skipped";
    } else {
      status = "pending";
      sawIncomplete = true;
    }
    items.push({ stage: entry.stage, label: entry.label, status });
  }
  return items;
}

/** Human rendering per machine error code; each code gets distinct text. */
const ERROR_TEXT: Record<string, string> = {
  ValidationFailed: "The request was rejected: ",
  InvalidParams: "A generation parameter is out of range: ",
  UnsupportedFormat: "That file format is not supported: ",
  CorruptAudio: "The audio file could not be decoded: ",
  EmptyAudio: "The audio clip is too short: ",
  CorruptImage: "The image file could not be decoded: ",
  TooSmall: "The image is too small: ",
  PayloadTooLarge: "An upload exceeds the size limit: ",
  QueueFull: "The job queue is full right now: ",
  NotFound: "Not found: ",
  BackendUnavailable: "The generation backend is unreachable: ",
  BackendBusy: "The generation backend is busy: ",
  GenerationTimeout: "Generation timed out: ",
  ProtocolError: "The remote backend answered with something unexpected: ",
  PartialFailure: "Too many audio segments failed to caption: ",
  InternalError: "Internal error: ",
};

export function describeError(error: JobError | { code: string; message: string }): string {
  const prefix = ERROR_TEXT[error.code] ?? `Error (${error.code}): `;
  const stage = "stage" in error && error.stage ? ` [stage: ${error.stage}]` : "";
  return `${prefix}${error.message}${stage}`;
}

export function isTerminal(state: JobState): boolean {
  return state === "succeeded" || state === "failed" || state === "canceled";
}

/** Session-local gallery: job ids plus regenerate lineage, in storage that
 * behaves like window.localStorage. */
export interface GalleryEntry {
  jobId: string;
  parentId: string | null;
  createdAt: number;
  seq: number;
}

interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const GALLERY_KEY = "coverforge.gallery.v1";

export class GalleryStore {
  constructor(private readonly storage: StorageLike) {}

  private read(): GalleryEntry[] {
    const raw = this.storage.getItem(GALLERY_KEY);
    if (!raw) {
      return [];
    }
    try {
      const parsed = JSON.parse(raw);
      return Array.isArray(parsed) ? parsed : [];
    } catch {
      return [];
    }
  }

  private write(entries: GalleryEntry[]): void {
    this.storage.setItem(GALLERY_KEY, JSON.stringify(entries));
  }

  add(jobId: string, parentId: string | null = null): void {
    const all = this.read();
    const seq = all.length ? Math.max(...all.map((e) => e.seq ?? 0)) + 1 : 0;
    const entries = all.filter((e) => e.jobId !== jobId);
    entries.push({ jobId, parentId, createdAt: Date.now(), seq });
    this.write(entries);
  }

  /** Newest first; insertion order breaks timestamp ties. */
  list(): GalleryEntry[] {
    return this.read().sort((a, b) => (b.seq ?? 0) - (a.seq ?? 0));
  }

  lineageOf(jobId: string): string[] {
    const byId = new Map(this.read().map((e) => [e.jobId, e]));
    const chain: string[] = [];
    let cursor: string | null = jobId;
    while (cursor && byId.has(cursor) && !chain.includes(cursor)) {
      chain.push(cursor);
      cursor = byId.get(cursor)!.parentId;
    }
    return chain;
  }
}
