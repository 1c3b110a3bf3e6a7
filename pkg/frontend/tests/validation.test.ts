import { describe, expect, it } from "vitest";

import {
  CONDITIONING_SCALE_MAX,
  CONDITIONING_SCALE_MIN,
  MAX_AUDIO_BYTES,
  MAX_IMAGE_BYTES,
  MAX_STYLE_CHARS,
  clampConditioningScale,
  clampStrength,
  validateCoverForm,
  validateParams,
  validateQrForm,
} from "../src/validation.js";

function fakeFile(name: string, size: number): File {
  const file = new File([new Uint8Array(1)], name);
  Object.defineProperty(file, "size", { value: size });
  return file;
}

describe("file validation", () => {
  it("accepts a normal mp3 + png pair", () => {
    const errors = validateCoverForm({
      audio: fakeFile("song.mp3", 1024),
      image: fakeFile("art.png", 1024),
      style: "neon",
      params: {},
    });
    expect(errors).toEqual({});
  });

  it("rejects oversize audio before any upload", () => {
    const errors = validateCoverForm({
      audio: fakeFile("song.wav", MAX_AUDIO_BYTES + 1),
      image: fakeFile("art.png", 1024),
      style: "",
      params: {},
    });
    expect(errors.audio).toMatch(/30 MB/);
  });

  it("rejects oversize image", () => {
    const errors = validateCoverForm({
      audio: fakeFile("song.wav", 10),
      image: fakeFile("art.jpg", MAX_IMAGE_BYTES + 1),
      style: "",
      params: {},
    });
    expect(errors.image).toMatch(/10 MB/);
  });

  it("rejects unknown extensions", () => {
    const errors = validateCoverForm({
      audio: fakeFile("song.flac", 10),
      image: fakeFile("art.webp", 10),
      style: "",
      params: {},
    });
    expect(errors.audio).toMatch(/unsupported/);
    expect(errors.image).toMatch(/unsupported/);
  });

  it("requires both files", () => {
    const errors = validateCoverForm({ audio: null, image: null, style: "", params: {} });
    expect(errors.audio).toMatch(/required/);
    expect(errors.image).toMatch(/required/);
  });

  it("caps style text at the server limit", () => {
    const errors = validateCoverForm({
      audio: fakeFile("a.wav", 10),
      image: fakeFile("i.png", 10),
      style: "x".repeat(MAX_STYLE_CHARS + 1),
      params: {},
    });
    expect(errors.style).toMatch(/2000/);
  });

  it("requires a payload when the QR option is on", () => {
    const errors = validateCoverForm({
      audio: fakeFile("a.wav", 10),
      image: fakeFile("i.png", 10),
      style: "",
      params: {},
      makeQr: true,
      qrPayload: "  ",
    });
    expect(errors.qr_payload).toMatch(/payload/);
  });
});

describe("parameter validation", () => {
  it("bounds conditioning scale to [0, 5]", () => {
    expect(validateParams({ conditioning_scale: 5.01 }).conditioning_scale).toBeTruthy();
    expect(validateParams({ conditioning_scale: -0.01 }).conditioning_scale).toBeTruthy();
    expect(validateParams({ conditioning_scale: 0 })).toEqual({});
    expect(validateParams({ conditioning_scale: 5 })).toEqual({});
  });

  it("bounds strength to [0, 1]", () => {
    expect(validateParams({ strength: 1.01 }).strength).toBeTruthy();
    expect(validateParams({ strength: -0.5 }).strength).toBeTruthy();
    expect(validateParams({ strength: 1 })).toEqual({});
  });

  it("rejects non-positive guidance and fractional steps", () => {
    expect(validateParams({ guidance_scale: 0 }).guidance_scale).toBeTruthy();
    expect(validateParams({ steps: 0 }).steps).toBeTruthy();
    expect(validateParams({ steps: 2.5 }).steps).toBeTruthy();
    expect(validateParams({ seed: -1 }).seed).toBeTruthy();
  });

  it("clamps slider values to the allowed ranges", () => {
    expect(clampConditioningScale(99)).toBe(CONDITIONING_SCALE_MAX);
    expect(clampConditioningScale(-3)).toBe(CONDITIONING_SCALE_MIN);
    expect(clampConditioningScale(2.5)).toBe(2.5);
    expect(clampStrength(7)).toBe(1);
    expect(clampStrength(-1)).toBe(0);
  });
});

describe("qr form validation", () => {
  it("requires payload and image", () => {
    const errors = validateQrForm({ image: null, payload: "", style: "", params: {} });
    expect(errors.image).toBeTruthy();
    expect(errors.payload).toMatch(/empty/);
  });

  it("passes a complete form", () => {
    const errors = validateQrForm({
      image: fakeFile("i.png", 10),
      payload: "https://example.com",
      style: "neon",
      params: { conditioning_scale: 5 },
    });
    expect(errors).toEqual({});
  });
});
