"""Command-line interface: generate covers, stylize QR codes, serve, toy-fit.

Exit codes: 0 success, 1 job failure, 2 validation/usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import ServiceConfig, load_config
from .errors import CoverForgeError, InvalidParams, ValidationFailed
from .generation.types import GenerationParams
from .ingest import ModalityBundle, decode_audio, normalize_image
from .orchestrator.engine import JobEngine
from .service.app import build_engine
from .vision.toyfit import toy_lora_fit


def _params_from_flags(seed, guidance_scale, conditioning_scale, strength, steps):
    data = {}
    if seed is not None:
        data["seed"] = seed
    if guidance_scale is not None:
        data["guidance_scale"] = guidance_scale
    if conditioning_scale is not None:
        data["conditioning_scale"] = conditioning_scale
    if strength is not None:
        data["strength"] = strength
    if steps is not None:
        data["steps"] = steps
    return GenerationParams.from_dict(data)


def _engine_for(backend: str, backend_url: str | None, data_dir: str) -> JobEngine:
    config = ServiceConfig(data_dir=Path(data_dir), backend_mode=backend,
                           backend_url=backend_url)
    return build_engine(config)


def _write_artifacts(engine: JobEngine, job, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, rel in job.artifacts.items():
        if name == "manifest.json":
            data = engine.store.canonical_manifest_bytes(job.id)
        else:
            data = engine.store.get_blob(rel.split("/")[-1])
        (out_dir / name).write_bytes(data)


def _run_to_completion(engine: JobEngine, job_id: str, out: str | None) -> int:
    job = engine.run_job(job_id)
    if job.state == "succeeded":
        if out:
            _write_artifacts(engine, job, Path(out))
            click.echo(f"artifacts written to {out}")
        click.echo(f"job {job.id} succeeded")
        return 0
    click.echo(f"job {job.id} {job.state}: {job.error}", err=True)
    return 1


_common_gen_options = [
    click.option("--seed", type=int, default=None, help="Generation seed."),
    click.option("--guidance-scale", type=float, default=None),
    click.option("--conditioning-scale", type=float, default=None,
                 help="Structural-map weight, 0 to 5."),
    click.option("--strength", type=float, default=None, help="Overlay visibility, 0 to 1."),
    click.option("--steps", type=int, default=None),
    click.option("--backend", type=click.Choice(["stub", "remote"]), default="stub"),
    click.option("--backend-url", default=None, help="Remote runtime base URL."),
    click.option("--data-dir", default="./coverforge-data"),
    click.option("--out", default=None, help="Directory for result artifacts."),
]


def _apply(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@click.group()
def main():
    """Album cover and stylized QR generation."""


@main.command()
@click.option("--audio", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--image", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--style", default="", help="Desired tone or style text.")
@click.option("--qr-payload", default=None, help="Also stylize a QR with this payload.")
@click.option("--auto-tune", is_flag=True, default=False)
@click.option("--use-segmentation", is_flag=True, default=False)
@_apply(_common_gen_options)
def generate(audio, image, style, qr_payload, auto_tune, use_segmentation, seed,
             guidance_scale, conditioning_scale, strength, steps, backend,
             backend_url, data_dir, out):
    """Generate an album cover from an audio track, reference image, and style text."""
    try:
        params = _params_from_flags(seed, guidance_scale, conditioning_scale,
                                    strength, steps)
        clip = decode_audio(Path(audio).read_bytes(), Path(audio).suffix.lstrip("."))
        img = normalize_image(Path(image).read_bytes())
        bundle = ModalityBundle(audio=clip, image=img, style_text=style)
        engine = _engine_for(backend, backend_url, data_dir)
        options = {"use_segmentation": use_segmentation}
        if qr_payload:
            options.update({"make_qr": True, "qr_payload": qr_payload,
                            "auto_tune": auto_tune})
        job_id = engine.submit_job(bundle, params, options)
    except (ValidationFailed, InvalidParams, ValueError) as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(2)
    except CoverForgeError as exc:
        click.echo(f"error [{exc.code}]: {exc.message}", err=True)
        sys.exit(2)
    sys.exit(_run_to_completion(engine, job_id, out))


@main.command()
@click.option("--image", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--payload", required=True, help="Text/URL to encode.")
@click.option("--style", default="")
@click.option("--auto-tune", is_flag=True, default=False,
              help="Raise conditioning until the code scans.")
@_apply(_common_gen_options)
def qr(image, payload, style, auto_tune, seed, guidance_scale, conditioning_scale,
       strength, steps, backend, backend_url, data_dir, out):
    """Stylize a scannable QR code over a base image."""
    try:
        params = _params_from_flags(seed, guidance_scale, conditioning_scale,
                                    strength, steps)
        img = normalize_image(Path(image).read_bytes())
        engine = _engine_for(backend, backend_url, data_dir)
        job_id = engine.submit_qr_job(img, payload, style, params, auto_tune)
    except (ValidationFailed, InvalidParams, ValueError) as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(2)
    except CoverForgeError as exc:
        click.echo(f"error [{exc.code}]: {exc.message}", err=True)
        sys.exit(2)
    rc = _run_to_completion(engine, job_id, out)
    if rc == 0:
        manifest = engine.store.read_manifest(job_id)
        click.echo(f"scannable: {manifest['qr']['decoded_ok']}")
    sys.exit(rc)


@main.command()
@click.option("--port", type=int, default=None)
@click.option("--data-dir", default=None)
@click.option("--backend", type=click.Choice(["stub", "remote"]), default=None)
@click.option("--backend-url", default=None)
@click.option("--workers", type=int, default=None)
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
def serve(port, data_dir, backend, backend_url, workers, config_path):
    """Run the HTTP service (config file < env vars < flags)."""
    import uvicorn

    from .service.app import build_app

    config = load_config(config_path)
    if port is not None:
        config.listen_port = port
    if data_dir is not None:
        config.data_dir = Path(data_dir)
    if backend is not None:
        config.backend_mode = backend
    if backend_url is not None:
        config.backend_url = backend_url
        config.backend_mode = "remote"
    if workers is not None:
        config.worker_count = workers
    if config.backend_mode == "remote" and not config.backend_url:
        click.echo("remote backend requires --backend-url or COVERFORGE_BACKEND_URL",
                   err=True)
        sys.exit(2)

    app = build_app(config, start_workers=True)
    uvicorn.run(app, host="0.0.0.0", port=config.listen_port)


@main.command("serve-mock")
@click.option("--port", type=int, default=990)
@click.option("--max-concurrency", type=int, default=1)
def serve_mock_cmd(port, max_concurrency):
    """Run the mock GPU runtime (stub-backed wire-protocol server)."""
    from .service.mock_runtime import serve_mock

    serve_mock(port, max_concurrency)


@main.command()
@click.option("--d", "d", type=int, required=True)
@click.option("--k", "k", type=int, required=True)
@click.option("--r-true", type=int, required=True)
@click.option("--r-adapter", type=int, required=True)
@click.option("--epochs", type=int, default=4000)
@click.option("--seed", type=int, default=0)
def toyfit(d, k, r_true, r_adapter, epochs, seed):
    """Run the low-rank vs dense fine-tuning comparison harness."""
    try:
        report = toy_lora_fit(d, k, r_true, r_adapter, epochs=epochs, seed=seed)
    except ValueError as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(2)
    click.echo(json.dumps(report.to_dict(), indent=2))


if __name__ == "__main__":
    main()
