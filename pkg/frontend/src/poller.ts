/** 1-second job polling with overlap coalescing: if a request is still in
 * flight when the next tick fires, the tick is dropped rather than stacked. */

import type { JobView } from "./api.js";
import { isTerminal } from "./state.js";

export interface PollerOptions {
  intervalMs?: number;
  setIntervalFn?: typeof setInterval;
  clearIntervalFn?: typeof clearInterval;
}

export class JobPoller {
  private readonly intervalMs: number;
  private readonly setIntervalFn: typeof setInterval;
  private readonly clearIntervalFn: typeof clearInterval;
  private handle: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;
  /** ticks skipped because a poll was still in flight; exposed for tests */
  coalesced = 0;

  constructor(private readonly fetchJob: () => Promise<JobView>,
              private readonly onUpdate: (job: JobView) => void,
              private readonly onError: (err: unknown) => void = () => undefined,
              options: PollerOptions = {}) {
    this.intervalMs = options.intervalMs ?? 1000;
    this.setIntervalFn = options.setIntervalFn ?? setInterval;
    this.clearIntervalFn = options.clearIntervalFn ?? clearInterval;
  }

  start(): void {
    if (this.handle !== null) {
      return;
    }
    this.handle = this.setIntervalFn(() => {
      void this.tick();
    }, this.intervalMs);
    void this.tick();
  }

  stop(): void {
    if (this.handle !== null) {
      this.clearIntervalFn(this.handle);
      this.handle = null;
    }
  }

  get running(): boolean {
    return this.handle !== null;
  }

  private async tick(): Promise<void> {
    if (this.inFlight) {
      this.coalesced += 1;
      return;
    }
    this.inFlight = true;
    try {
      const job = await this.fetchJob();
      this.onUpdate(job);
      if (isTerminal(job.state)) {
        this.stop();
      }
    } catch (err) {
      this.onError(err);
    } finally {
      this.inFlight = false;
    }
  }
}
