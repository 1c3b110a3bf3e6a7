/** DOM wiring for the single-page UI: upload forms, live job cards with a
 * stage checklist, a session gallery with tweak-and-rerun lineage, and the
 * QR tool tab. */

import { ApiError, CoverForgeClient } from "./api.js";
import type { GenerationParams, JobView, Manifest } from "./api.js";
import { JobPoller } from "./poller.js";
import { GalleryStore, describeError, isTerminal, stageChecklist } from "./state.js";
import {
  CONDITIONING_SCALE_MAX,
  CONDITIONING_SCALE_MIN,
  STRENGTH_MAX,
  STRENGTH_MIN,
  clampConditioningScale,
  clampStrength,
  validateCoverForm,
  validateQrForm,
} from "./validation.js";

interface RememberedInputs {
  audio: File | null;
  image: File;
  style: string;
  params: GenerationParams;
  qrPayload?: string;
  kind: "cover" | "qr";
  autoTune?: boolean;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className = "", text = ""): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function fieldError(form: HTMLElement, field: string, message: string | null): void {
  const slot = form.querySelector<HTMLElement>(`[data-error-for="${field}"]`);
  if (slot) {
    slot.textContent = message ?? "";
    slot.hidden = !message;
  }
}

function clearFieldErrors(form: HTMLElement): void {
  form.querySelectorAll<HTMLElement>("[data-error-for]").forEach((slot) => {
    slot.textContent = "";
    slot.hidden = true;
  });
}

interface SliderSpec {
  name: string;
  label: string;
  min: number;
  max: number;
  step: number;
  value: number;
  clamp: (v: number) => number;
}

export class CoverForgeApp {
  private readonly pollers = new Map<string, JobPoller>();
  private readonly files = new Map<string, RememberedInputs>();
  private readonly jobViews = new Map<string, JobView>();
  private gallery: GalleryStore;
  private galleryList!: HTMLElement;
  private detail!: HTMLElement;

  constructor(private readonly root: HTMLElement,
              private readonly client: CoverForgeClient,
              storage: Storage = window.localStorage,
              private readonly pollIntervalMs = 1000) {
    this.gallery = new GalleryStore(storage);
  }

  mount(): void {
    this.root.innerHTML = "";
    this.root.append(this.buildHeader(), this.buildTabs());
    this.renderGallery();
    void this.refreshHealth();
    for (const entry of this.gallery.list()) {
      void this.watchJob(entry.jobId);
    }
  }

  // --- layout ---

  private buildHeader(): HTMLElement {
    const header = el("header", "topbar");
    header.append(el("h1", "", "coverforge"));
    const health = el("span", "health", "checking backend…");
    health.dataset.role = "health";
    header.append(health);
    return header;
  }

  private buildTabs(): HTMLElement {
    const wrap = el("div", "layout");
    const nav = el("nav", "tabs");
    const coverBtn = el("button", "tab active", "Create cover");
    const qrBtn = el("button", "tab", "QR tool");
    coverBtn.dataset.tab = "cover";
    qrBtn.dataset.tab = "qr";
    nav.append(coverBtn, qrBtn);

    const coverPane = this.buildCoverForm();
    coverPane.dataset.pane = "cover";
    const qrPane = this.buildQrForm();
    qrPane.dataset.pane = "qr";
    qrPane.hidden = true;

    for (const btn of [coverBtn, qrBtn]) {
      btn.addEventListener("click", () => {
        coverBtn.classList.toggle("active", btn === coverBtn);
        qrBtn.classList.toggle("active", btn === qrBtn);
        coverPane.hidden = btn !== coverBtn;
        qrPane.hidden = btn !== qrBtn;
      });
    }

    const side = el("aside", "side");
    this.galleryList = el("div", "gallery");
    this.galleryList.dataset.role = "gallery";
    side.append(el("h2", "", "Session gallery"), this.galleryList);

    this.detail = el("section", "detail");
    this.detail.dataset.role = "detail";

    const main = el("main", "main");
    main.append(nav, coverPane, qrPane, this.detail);
    wrap.append(main, side);
    return wrap;
  }

  // --- forms ---

  private buildDropZone(name: string, label: string, accept: string): HTMLElement {
    const zone = el("div", "dropzone");
    zone.dataset.drop = name;
    const input = el("input");
    input.type = "file";
    input.accept = accept;
    input.name = name;
    input.id = `file-${name}-${Math.random().toString(36).slice(2, 8)}`;
    const caption = el("label", "drop-label", label);
    caption.htmlFor = input.id;
    const chosen = el("span", "chosen");
    chosen.dataset.chosenFor = name;
    zone.append(caption, input, chosen);

    input.addEventListener("change", () => {
      chosen.textContent = input.files?.[0]?.name ?? "";
    });
    zone.addEventListener("dragover", (ev) => {
      ev.preventDefault();
      zone.classList.add("hover");
    });
    zone.addEventListener("dragleave", () => zone.classList.remove("hover"));
    zone.addEventListener("drop", (ev) => {
      ev.preventDefault();
      zone.classList.remove("hover");
      const file = ev.dataTransfer?.files?.[0];
      if (file) {
        const list = new DataTransfer();
        list.items.add(file);
        input.files = list.files;
        chosen.textContent = file.name;
      }
    });
    const error = el("p", "field-error");
    error.dataset.errorFor = name;
    error.hidden = true;
    zone.append(error);
    return zone;
  }

  private buildAdvancedPanel(form: HTMLElement): HTMLElement {
    const panel = el("details", "advanced");
    panel.append(el("summary", "", "Advanced parameters"));
    const sliders: SliderSpec[] = [
      { name: "guidance_scale", label: "Guidance scale", min: 0.5, max: 20,
        step: 0.5, value: 7.5, clamp: (v) => Math.min(20, Math.max(0.5, v)) },
      { name: "conditioning_scale", label: "Conditioning scale",
        min: CONDITIONING_SCALE_MIN, max: CONDITIONING_SCALE_MAX, step: 0.1,
        value: 1.5, clamp: clampConditioningScale },
      { name: "strength", label: "Strength", min: STRENGTH_MIN, max: STRENGTH_MAX,
        step: 0.05, value: 0.9, clamp: clampStrength },
    ];
    for (const spec of sliders) {
      const row = el("div", "param-row");
      const label = el("label", "", `${spec.label}: `);
      const value = el("output", "", String(spec.value));
      const input = el("input");
      input.type = "range";
      input.name = spec.name;
      input.min = String(spec.min);
      input.max = String(spec.max);
      input.step = String(spec.step);
      input.value = String(spec.value);
      input.addEventListener("input", () => {
        const clamped = spec.clamp(Number(input.value));
        input.value = String(clamped);
        value.textContent = String(clamped);
      });
      label.append(input, value);
      row.append(label);
      const error = el("p", "field-error");
      error.dataset.errorFor = spec.name;
      error.hidden = true;
      row.append(error);
      panel.append(row);
    }

    const seedRow = el("div", "param-row");
    const seedLabel = el("label", "", "Seed (blank = derived from inputs): ");
    const seedInput = el("input");
    seedInput.type = "number";
    seedInput.name = "seed";
    seedInput.min = "0";
    seedInput.step = "1";
    seedLabel.append(seedInput);
    seedRow.append(seedLabel);
    const seedError = el("p", "field-error");
    seedError.dataset.errorFor = "seed";
    seedError.hidden = true;
    seedRow.append(seedError);
    panel.append(seedRow);
    form.append(panel);
    return panel;
  }

  private readParams(form: HTMLElement): GenerationParams {
    const params: GenerationParams = {};
    for (const name of ["guidance_scale", "conditioning_scale", "strength"] as const) {
      const input = form.querySelector<HTMLInputElement>(`input[name="${name}"]`);
      if (input && input.value !== "") {
        params[name] = Number(input.value);
      }
    }
    const seed = form.querySelector<HTMLInputElement>('input[name="seed"]');
    if (seed && seed.value !== "") {
      params.seed = Number(seed.value);
    }
    return params;
  }

  private buildCoverForm(): HTMLElement {
    const form = el("form", "panel");
    form.dataset.form = "cover";
    form.append(this.buildDropZone("audio", "Drop an audio track (mp3/wav)", ".mp3,.wav"));
    form.append(this.buildDropZone("image", "Drop a reference image (png/jpeg)",
                                   ".png,.jpg,.jpeg"));

    const styleLabel = el("label", "style-label", "Style text");
    const style = el("textarea");
    style.name = "style";
    style.placeholder = "e.g. realistic, 8K";
    styleLabel.append(style);
    form.append(styleLabel);
    const styleError = el("p", "field-error");
    styleError.dataset.errorFor = "style";
    styleError.hidden = true;
    form.append(styleError);

    const qrToggleRow = el("label", "qr-toggle", "Also stylize a QR code ");
    const qrToggle = el("input");
    qrToggle.type = "checkbox";
    qrToggle.name = "make_qr";
    const qrPayload = el("input");
    qrPayload.type = "text";
    qrPayload.name = "qr_payload";
    qrPayload.placeholder = "https://link-to-encode";
    qrPayload.hidden = true;
    qrToggle.addEventListener("change", () => {
      qrPayload.hidden = !qrToggle.checked;
    });
    qrToggleRow.append(qrToggle, qrPayload);
    form.append(qrToggleRow);
    const payloadError = el("p", "field-error");
    payloadError.dataset.errorFor = "qr_payload";
    payloadError.hidden = true;
    form.append(payloadError);

    this.buildAdvancedPanel(form);

    const submit = el("button", "submit", "Generate cover");
    submit.type = "submit";
    form.append(submit);
    const formError = el("p", "field-error form-error");
    formError.dataset.errorFor = "_form";
    formError.hidden = true;
    form.append(formError);

    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submitCover(form, submit);
    });
    return form;
  }

  private buildQrForm(): HTMLElement {
    const form = el("form", "panel");
    form.dataset.form = "qr";
    form.append(this.buildDropZone("image", "Drop a base image (png/jpeg)",
                                   ".png,.jpg,.jpeg"));

    const payloadLabel = el("label", "", "Payload (URL or text)");
    const payload = el("input");
    payload.type = "text";
    payload.name = "payload";
    payloadLabel.append(payload);
    form.append(payloadLabel);
    const payloadError = el("p", "field-error");
    payloadError.dataset.errorFor = "payload";
    payloadError.hidden = true;
    form.append(payloadError);

    const styleLabel = el("label", "style-label", "Style text");
    const style = el("textarea");
    style.name = "style";
    styleLabel.append(style);
    form.append(styleLabel);

    const autoRow = el("label", "", "Auto-tune until scannable ");
    const auto = el("input");
    auto.type = "checkbox";
    auto.name = "auto_tune";
    auto.checked = true;
    autoRow.append(auto);
    form.append(autoRow);

    this.buildAdvancedPanel(form);

    const submit = el("button", "submit", "Stylize QR");
    submit.type = "submit";
    form.append(submit);
    const formError = el("p", "field-error form-error");
    formError.dataset.errorFor = "_form";
    formError.hidden = true;
    form.append(formError);

    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submitQr(form, submit);
    });
    return form;
  }

  // --- submission ---

  private fileOf(form: HTMLElement, name: string): File | null {
    const input = form.querySelector<HTMLInputElement>(`input[name="${name}"]`);
    return input?.files?.[0] ?? null;
  }

  private async submitCover(form: HTMLElement, submit: HTMLButtonElement): Promise<void> {
    clearFieldErrors(form);
    const audio = this.fileOf(form, "audio");
    const image = this.fileOf(form, "image");
    const style = form.querySelector<HTMLTextAreaElement>("textarea[name=style]")!.value;
    const makeQr = form.querySelector<HTMLInputElement>("input[name=make_qr]")!.checked;
    const qrPayload = form.querySelector<HTMLInputElement>("input[name=qr_payload]")!.value;
    const params = this.readParams(form);

    const errors = validateCoverForm({ audio, image, style, params, makeQr, qrPayload });
    if (Object.keys(errors).length) {
      for (const [field, message] of Object.entries(errors)) {
        fieldError(form, field, message);
      }
      return;
    }

    submit.disabled = true;               // uploads sequentialized per form
    try {
      const resp = await this.client.submitCoverJob({
        audio: audio!, image: image!, style, params,
        qrPayload: makeQr ? qrPayload : undefined,
      });
      this.files.set(resp.job_id, {
        audio, image: image!, style, params, kind: "cover",
        qrPayload: makeQr ? qrPayload : undefined,
      });
      this.gallery.add(resp.job_id);
      this.renderGallery();
      void this.watchJob(resp.job_id);
    } catch (err) {
      this.renderSubmitError(form, err);
    } finally {
      submit.disabled = false;
    }
  }

  private async submitQr(form: HTMLElement, submit: HTMLButtonElement): Promise<void> {
    clearFieldErrors(form);
    const image = this.fileOf(form, "image");
    const payload = form.querySelector<HTMLInputElement>("input[name=payload]")!.value;
    const style = form.querySelector<HTMLTextAreaElement>("textarea[name=style]")!.value;
    const autoTune = form.querySelector<HTMLInputElement>("input[name=auto_tune]")!.checked;
    const params = this.readParams(form);

    const errors = validateQrForm({ image, payload, style, params });
    if (Object.keys(errors).length) {
      for (const [field, message] of Object.entries(errors)) {
        fieldError(form, field, message);
      }
      return;
    }

    submit.disabled = true;
    try {
      const resp = await this.client.submitQrJob({
        image: image!, payload, style, params, autoTune,
      });
      this.files.set(resp.job_id, {
        audio: null, image: image!, style, params, kind: "qr",
        qrPayload: payload, autoTune,
      });
      this.gallery.add(resp.job_id);
      this.renderGallery();
      void this.watchJob(resp.job_id);
    } catch (err) {
      this.renderSubmitError(form, err);
    } finally {
      submit.disabled = false;
    }
  }

  private renderSubmitError(form: HTMLElement, err: unknown): void {
    if (err instanceof ApiError) {
      if (err.field) {
        fieldError(form, err.field, describeError({ code: err.code, message: err.message }));
        // also surface on the form slot when the field has no inline slot
        if (!form.querySelector(`[data-error-for="${err.field}"]`)) {
          fieldError(form, "_form", describeError({ code: err.code, message: err.message }));
        }
      } else {
        fieldError(form, "_form", describeError({ code: err.code, message: err.message }));
      }
    } else {
      fieldError(form, "_form", `Could not reach the server: ${String(err)}`);
    }
  }

  // --- regenerate ---

  async regenerate(jobId: string, overrides: { style?: string; seed?: number;
                   params?: GenerationParams } = {}): Promise<string | null> {
    const remembered = this.files.get(jobId);
    if (!remembered) {
      return null;                        // inputs gone (e.g. page reload)
    }
    const params = { ...remembered.params, ...overrides.params };
    if (overrides.seed !== undefined) {
      params.seed = overrides.seed;
    }
    const style = overrides.style ?? remembered.style;
    let resp;
    if (remembered.kind === "qr") {
      resp = await this.client.submitQrJob({
        image: remembered.image, payload: remembered.qrPayload ?? "", style,
        params, autoTune: remembered.autoTune,
      });
    } else {
      resp = await this.client.submitCoverJob({
        audio: remembered.audio!, image: remembered.image, style, params,
        qrPayload: remembered.qrPayload,
      });
    }
    this.files.set(resp.job_id, { ...remembered, style, params });
    this.gallery.add(resp.job_id, jobId);
    this.renderGallery();
    void this.watchJob(resp.job_id);
    return resp.job_id;
  }

  // --- polling & rendering ---

  private async watchJob(jobId: string): Promise<void> {
    if (this.pollers.has(jobId)) {
      return;
    }
    const poller = new JobPoller(
      () => this.client.getJob(jobId),
      (job) => {
        this.jobViews.set(jobId, job);
        this.renderGallery();
        this.renderDetailIfCurrent(jobId);
      },
      () => {
        const card = this.galleryList.querySelector(`[data-job="${jobId}"]`);
        card?.classList.add("stale");     // stale view flagged, never invented
      },
      { intervalMs: this.pollIntervalMs },
    );
    this.pollers.set(jobId, poller);
    poller.start();
  }

  private renderGallery(): void {
    if (!this.galleryList) {
      return;
    }
    this.galleryList.innerHTML = "";
    for (const entry of this.gallery.list()) {
      const job = this.jobViews.get(entry.jobId);
      const card = el("div", "card");
      card.dataset.job = entry.jobId;
      const state = job?.state ?? "…";
      card.classList.toggle("canceled", state === "canceled");
      card.append(el("div", `badge state-${state}`, state));
      card.append(el("div", "card-id", entry.jobId.slice(0, 8)));
      if (entry.parentId) {
        card.append(el("div", "lineage", `↻ from ${entry.parentId.slice(0, 8)}`));
      }
      if (job?.state === "succeeded" && job.artifacts["cover.png"]) {
        const img = el("img", "thumb") as HTMLImageElement;
        img.src = job.artifacts["cover.png"];
        img.alt = "cover";
        card.append(img);
      }
      card.addEventListener("click", () => this.renderDetail(entry.jobId));
      this.galleryList.append(card);
    }
  }

  private renderDetailIfCurrent(jobId: string): void {
    if (this.detail.dataset.currentJob === jobId) {
      this.renderDetail(jobId);
    }
  }

  renderDetail(jobId: string): void {
    const job = this.jobViews.get(jobId);
    this.detail.dataset.currentJob = jobId;
    this.detail.innerHTML = "";
    if (!job) {
      this.detail.append(el("p", "", "loading…"));
      return;
    }

    this.detail.append(el("h2", "", `Job ${jobId.slice(0, 8)} — ${job.state}`));

    const list = el("ul", "stages");
    for (const item of stageChecklist(job)) {
      const li = el("li", `stage-${item.status}`, `${item.label}: ${item.status}`);
      li.dataset.stage = item.stage;
      list.append(li);
    }
    this.detail.append(list);

    for (const warning of job.warnings) {
      this.detail.append(el("p", "warning", warning));
    }
    if (job.error) {
      this.detail.append(el("p", "error", describeError(job.error)));
    }

    if (job.state === "succeeded") {
      const img = el("img", "cover") as HTMLImageElement;
      img.src = job.artifacts["cover.png"];
      img.alt = "generated cover";
      this.detail.append(img);

      const provenance = el("div", "provenance");
      provenance.append(el("h3", "", "Provenance"));
      provenance.append(el("pre", "params", JSON.stringify(job.params, null, 2)));
      const manifestLink = el("a", "", "manifest.json") as HTMLAnchorElement;
      manifestLink.href = job.artifacts["manifest.json"];
      provenance.append(manifestLink);
      this.detail.append(provenance);
      void this.renderManifestExtras(jobId, provenance);

      const rerun = el("button", "rerun", "Tweak & rerun (new seed)");
      rerun.addEventListener("click", () => {
        void this.regenerate(jobId, { seed: Math.floor(Math.random() * 2 ** 31) });
      });
      if (!this.files.has(jobId)) {
        rerun.disabled = true;
        rerun.title = "original inputs are no longer in this session";
      }
      this.detail.append(rerun);
    }

    if (isTerminal(job.state) && job.state !== "succeeded") {
      this.detail.append(el("p", `terminal-${job.state}`,
                            job.state === "canceled" ? "canceled" : "failed"));
    }
  }

  private async renderManifestExtras(jobId: string, host: HTMLElement): Promise<void> {
    try {
      const manifest: Manifest = await this.client.getManifest(jobId);
      const prompt = el("p", "prompt");
      prompt.textContent = manifest.prompt;
      host.append(prompt);
      if (manifest.qr) {
        const verdict = el("p",
          manifest.qr.decoded_ok ? "qr-verdict ok" : "qr-verdict bad warning-banner",
          manifest.qr.decoded_ok
            ? `QR scannable ✓ (decodes to ${manifest.qr.decoded_payload})`
            : "QR not scannable — raise conditioning scale or strength");
        verdict.dataset.role = "qr-verdict";
        host.append(verdict);
        const attempts = el("table", "attempts");
        attempts.dataset.role = "qr-attempts";
        const head = el("tr");
        head.append(el("th", "", "conditioning"), el("th", "", "strength"),
                    el("th", "", "scannable"));
        attempts.append(head);
        for (const attempt of manifest.qr.attempts) {
          const row = el("tr");
          row.append(el("td", "", attempt.params.conditioning_scale.toFixed(2)),
                     el("td", "", attempt.params.strength.toFixed(2)),
                     el("td", "", attempt.decoded_ok ? "yes" : "no"));
          attempts.append(row);
        }
        host.append(attempts);
      }
    } catch {
      // manifest fetch is best-effort decoration; the job view stays accurate
    }
  }

  private async refreshHealth(): Promise<void> {
    const slot = this.root.querySelector<HTMLElement>('[data-role="health"]');
    if (!slot) {
      return;
    }
    try {
      const health = await this.client.health();
      slot.textContent = `backend: ${health.backend_mode} ` +
        (health.backend_reachable ? "✓" : "✗ unreachable");
      slot.classList.toggle("bad", !health.backend_reachable);
    } catch {
      slot.textContent = "backend: unreachable";
      slot.classList.add("bad");
    }
  }
}
