/** Client-side validation mirroring the server's admission limits, so bad
 * uploads fail inline before any bytes leave the browser. */

export const MAX_AUDIO_BYTES = 30 * 1024 * 1024;
export const MAX_IMAGE_BYTES = 10 * 1024 * 1024;
export const MAX_STYLE_CHARS = 2000;
export const AUDIO_EXTENSIONS = [".mp3", ".wav"];
export const IMAGE_EXTENSIONS = [".png", ".jpg", ".jpeg"];

export const CONDITIONING_SCALE_MIN = 0;
export const CONDITIONING_SCALE_MAX = 5;
export const STRENGTH_MIN = 0;
export const STRENGTH_MAX = 1;

export type FieldErrors = Record<string, string>;

function hasExtension(name: string, allowed: string[]): boolean {
  const lower = name.toLowerCase();
  return allowed.some((ext) => lower.endsWith(ext));
}

export function validateAudioFile(file: File | null): string | null {
  if (!file) {
    return "an audio file is required";
  }
  if (!hasExtension(file.name, AUDIO_EXTENSIONS)) {
    return `unsupported audio type; accepted: ${AUDIO_EXTENSIONS.join(", ")}`;
  }
  if (file.size > MAX_AUDIO_BYTES) {
    return `audio exceeds the ${MAX_AUDIO_BYTES / (1024 * 1024)} MB limit`;
  }
  return null;
}

export function validateImageFile(file: File | null): string | null {
  if (!file) {
    return "an image file is required";
  }
  if (!hasExtension(file.name, IMAGE_EXTENSIONS)) {
    return `unsupported image type; accepted: ${IMAGE_EXTENSIONS.join(", ")}`;
  }
  if (file.size > MAX_IMAGE_BYTES) {
    return `image exceeds the ${MAX_IMAGE_BYTES / (1024 * 1024)} MB limit`;
  }
  return null;
}

export function validateStyle(style: string): string | null {
  if (style.length > MAX_STYLE_CHARS) {
    return `style text exceeds ${MAX_STYLE_CHARS} characters`;
  }
  return null;
}

export interface ParamsInput {
  guidance_scale?: number;
  conditioning_scale?: number;
  strength?: number;
  seed?: number;
  steps?: number;
}

export function validateParams(params: ParamsInput): FieldErrors {
  const errors: FieldErrors = {};
  if (params.conditioning_scale !== undefined &&
      (params.conditioning_scale < CONDITIONING_SCALE_MIN ||
       params.conditioning_scale > CONDITIONING_SCALE_MAX)) {
    errors.conditioning_scale =
      `conditioning scale must be between ${CONDITIONING_SCALE_MIN} and ${CONDITIONING_SCALE_MAX}`;
  }
  if (params.strength !== undefined &&
      (params.strength < STRENGTH_MIN || params.strength > STRENGTH_MAX)) {
    errors.strength = `strength must be between ${STRENGTH_MIN} and ${STRENGTH_MAX}`;
  }
  if (params.guidance_scale !== undefined && params.guidance_scale <= 0) {
    errors.guidance_scale = "guidance scale must be positive";
  }
  if (params.steps !== undefined && (!Number.isInteger(params.steps) || params.steps < 1)) {
    errors.steps = "steps must be a whole number of at least 1";
  }
  if (params.seed !== undefined && (!Number.isInteger(params.seed) || params.seed < 0)) {
    errors.seed = "seed must be a non-negative whole number";
  }
  return errors;
}

export function clampConditioningScale(value: number): number {
  return Math.min(CONDITIONING_SCALE_MAX, Math.max(CONDITIONING_SCALE_MIN, value));
}

export function clampStrength(value: number): number {
  return Math.min(STRENGTH_MAX, Math.max(STRENGTH_MIN, value));
}

export interface CoverFormInput {
  audio: File | null;
  image: File | null;
  style: string;
  params: ParamsInput;
  qrPayload?: string;
  makeQr?: boolean;
}

export function validateCoverForm(input: CoverFormInput): FieldErrors {
  const errors: FieldErrors = { ...validateParams(input.params) };
  const audioError = validateAudioFile(input.audio);
  if (audioError) {
    errors.audio = audioError;
  }
  const imageError = validateImageFile(input.image);
  if (imageError) {
    errors.image = imageError;
  }
  const styleError = validateStyle(input.style);
  if (styleError) {
    errors.style = styleError;
  }
  if (input.makeQr && !input.qrPayload?.trim()) {
    errors.qr_payload = "a payload is required to add a QR code";
  }
  return errors;
}

export interface QrFormInput {
  image: File | null;
  payload: string;
  style: string;
  params: ParamsInput;
}

export function validateQrForm(input: QrFormInput): FieldErrors {
  const errors: FieldErrors = { ...validateParams(input.params) };
  const imageError = validateImageFile(input.image);
  if (imageError) {
    errors.image = imageError;
  }
  if (!input.payload.trim()) {
    errors.payload = "payload must not be empty";
  }
  const styleError = validateStyle(input.style);
  if (styleError) {
    errors.style = styleError;
  }
  return errors;
}
