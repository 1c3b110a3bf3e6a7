"""Acceptance suite: one test per release criterion, with pinned tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion. Paper-scale generative quality is out of desk-scale reach; these
are the property-based and quantitative gates the build must clear.
"""

import json
import random
import string
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from coverforge.captioning import StubCaptioner
from coverforge.config import ServiceConfig
from coverforge.errors import InvalidParams, TransitionError
from coverforge.generation import (
    GenerationParams,
    RemoteEndpoint,
    RemoteGenerator,
    StubGenerator,
    stub_generate,
)
from coverforge.captioning.remote import RemoteCaptioner
from coverforge.ingest import AudioClip, window_audio
from coverforge.ingest.image import SourceImage
from coverforge.orchestrator import JobEngine, JobStore, TRANSITIONS, validate_manifest
from coverforge.qrstyle import (
    QrStyleRequest,
    encode_qr,
    render_qr,
    stylize_qr,
    validate_scan,
)
from coverforge.service.app import build_app
from coverforge.service.mock_runtime import MockRuntimeServer
from coverforge.vision import (
    LoraAdapter,
    apply_lora,
    canny_edges,
    init_adapter,
    loss_and_grads,
    merge_lora,
    toy_lora_fit,
)
from coverforge.vision.segmentation import KMeansStubSegmenter


def report(line: str):
    print(f"\nPASS {line}")


class TestLoraAlgebra:
    def test_criterion_lora_algebra(self):
        """apply == dense oracle (1e-10 rel), zero-init exact, merge == apply;
        >= 100 instances with d,k <= 64, r <= 8; runtime < 5 s."""
        start = time.perf_counter()
        rng = np.random.default_rng(2024)
        for i in range(100):
            d = int(rng.integers(2, 65))
            k = int(rng.integers(2, 65))
            r = int(rng.integers(1, min(d, k, 9)))
            W0 = rng.normal(size=(d, k))
            x = rng.normal(size=k)

            fresh = init_adapter(d, k, r, seed=i)
            assert np.array_equal(apply_lora(fresh, W0, x), W0 @ x)

            adapter = LoraAdapter(B=rng.normal(size=(d, r)), A=rng.normal(size=(r, k)),
                                  r=r, scale=float(rng.uniform(0.25, 2.0)))
            got = apply_lora(adapter, W0, x)
            dense = (W0 + adapter.scale * (adapter.B @ adapter.A)) @ x
            denom = max(np.linalg.norm(dense), 1e-12)
            assert np.linalg.norm(got - dense) / denom < 1e-10

            merged = merge_lora(adapter, W0) @ x
            assert np.linalg.norm(merged - got) / max(np.linalg.norm(got), 1e-12) < 1e-10

        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"runtime {elapsed:.2f}s exceeds 5s"
        report(f"LoRA algebra: 100 instances, zero-init identity, merge==apply, "
               f"1e-10 rel tolerance ({elapsed:.2f}s)")


class TestLoraEconomyAndToyFit:
    def test_criterion_lora_economy_toy_fit(self):
        """Exact r*(d+k) parameter counts; 32-dim fit reaches <= 1e-3 within
        10x of the dense route; 64-dim counts give the 512-vs-4096 (12.5%)
        economy. Runtime < 60 s."""
        start = time.perf_counter()

        fit32 = toy_lora_fit(32, 32, r_true=2, r_adapter=4, epochs=20000, seed=0)
        assert fit32.trained_params_lora == 4 * (32 + 32) == 256
        assert fit32.trained_params_full == 32 * 32 == 1024
        assert fit32.trained_params_lora < fit32.trained_params_full
        assert fit32.final_loss_lora <= 1e-3
        assert fit32.final_loss_lora <= 10 * fit32.final_loss_full

        fit64 = toy_lora_fit(64, 64, r_true=2, r_adapter=4, epochs=20000, seed=0)
        assert fit64.trained_params_lora == 4 * (64 + 64) == 512
        assert fit64.trained_params_full == 64 * 64 == 4096
        assert fit64.trained_params_lora / fit64.trained_params_full == 0.125

        elapsed = time.perf_counter() - start
        assert elapsed < 60.0
        report(f"LoRA economy & toy fit: loss_lora={fit32.final_loss_lora:.2e} "
               f"(<=1e-3, within 10x of full {fit32.final_loss_full:.2e}); "
               f"params 256/1024 and 512/4096=12.5% ({elapsed:.2f}s)")


class TestGradientCheck:
    def test_criterion_gradient_check(self):
        """Analytic grads vs central differences < 1e-4 relative, 20 instances."""
        rng = np.random.default_rng(77)
        eps = 1e-6
        worst = 0.0
        for _ in range(20):
            d, k = int(rng.integers(2, 8)), int(rng.integers(2, 8))
            r = int(rng.integers(1, min(d, k)))
            B = rng.normal(size=(d, r))
            A = rng.normal(size=(r, k))
            delta = rng.normal(size=(d, k))
            X = rng.normal(size=(k, 16))
            _, dB, dA = loss_and_grads(B, A, 1.0, delta, X)

            for mat, grad, setter in ((B, dB, "B"), (A, dA, "A")):
                num = np.zeros_like(mat)
                for idx in np.ndindex(mat.shape):
                    up = mat.copy(); up[idx] += eps
                    dn = mat.copy(); dn[idx] -= eps
                    if setter == "B":
                        lu = loss_and_grads(up, A, 1.0, delta, X)[0]
                        ld = loss_and_grads(dn, A, 1.0, delta, X)[0]
                    else:
                        lu = loss_and_grads(B, up, 1.0, delta, X)[0]
                        ld = loss_and_grads(B, dn, 1.0, delta, X)[0]
                    num[idx] = (lu - ld) / (2 * eps)
                rel = np.linalg.norm(grad - num) / max(np.linalg.norm(num), 1e-12)
                worst = max(worst, rel)
                assert rel < 1e-4
        report(f"Gradient check: 20 instances, worst relative error {worst:.2e} < 1e-4")


class TestWindowing:
    def test_criterion_windowing(self, song_60s_clip):
        """60 s fixture -> exactly six 10 s windows; partition + merge rule
        over 1000 randomized durations."""
        windows = window_audio(song_60s_clip)
        assert len(windows) == 6
        assert [w.span for w in windows] == [(float(i * 10), float(i * 10 + 10))
                                             for i in range(6)]

        rng = np.random.default_rng(31)
        sr = 100
        for _ in range(1000):
            n = int(rng.integers(sr, sr * 700))
            clip = AudioClip(samples=np.zeros(n), sample_rate=sr)
            ws = float(rng.uniform(2.0, 30.0))
            wins = window_audio(clip, window_s=ws)

            assert wins[0].start_s == 0.0
            assert wins[-1].end_s == clip.duration_s
            for prev, cur in zip(wins, wins[1:]):
                assert prev.end_s == cur.start_s
            assert sum(len(w.samples) for w in wins) == n
            step = int(round(ws * sr))
            for w in wins[:-1]:
                assert len(w.samples) == step
            if clip.duration_s >= 2.0:
                last = wins[-1].end_s - wins[-1].start_s
                assert 2.0 - 1e-9 <= last < ws + 2.0
            else:
                assert len(wins) == 1
        report("Windowing: 60s fixture == 6 ten-second windows; partition & "
               "merge rule over 1000 randomized durations")


class TestQrCriteria:
    def test_criterion_qr_round_trip_and_scannability(self):
        """100/100 random payload round-trips; stylize at scale 5 decodes for
        >= 95/100 seeds; monotone scannability over {0..5} for >= 95/100
        seeds. Runtime < 60 s."""
        start = time.perf_counter()

        rng = random.Random(2024)
        chars = string.ascii_letters + string.digits + " .:/-_?=&#+"
        recovered = 0
        for _ in range(100):
            payload = "".join(rng.choice(chars) for _ in range(rng.randint(1, 100)))
            ok, text = validate_scan(render_qr(encode_qr(payload)), payload)
            recovered += int(ok and text == payload)
        assert recovered == 100, f"only {recovered}/100 round-trips recovered"

        base_rng = np.random.default_rng(9)
        gen = StubGenerator()
        scan_ok = 0
        monotone_ok = 0
        for seed in range(100):
            base = SourceImage(pixels=base_rng.integers(
                0, 255, size=(512, 512, 3), dtype=np.int64).astype(np.uint8))

            req = QrStyleRequest(payload=f"https://e.com/s/{seed}", base_image=base,
                                 style_text="s", params=GenerationParams(
                                     conditioning_scale=5.0, strength=0.9, seed=seed))
            res = stylize_qr(req, gen)
            if res.decoded_ok and res.decoded_payload == req.payload:
                scan_ok += 1

            verdicts = []
            for cs in range(6):
                req_cs = QrStyleRequest(payload=f"https://e.com/m/{seed}", base_image=base,
                                        style_text="s", params=GenerationParams(
                                            conditioning_scale=float(cs), strength=0.9,
                                            seed=seed))
                verdicts.append(stylize_qr(req_cs, gen).decoded_ok)
            if verdicts == sorted(verdicts):
                monotone_ok += 1

        assert scan_ok >= 95, f"scale-5 scannability {scan_ok}/100"
        assert monotone_ok >= 95, f"monotone scannability {monotone_ok}/100"
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"runtime {elapsed:.1f}s exceeds 60s"
        report(f"QR: 100/100 round-trips, scale-5 decode {scan_ok}/100, "
               f"monotone {monotone_ok}/100 ({elapsed:.1f}s)")


class TestCannyCriteria:
    def test_criterion_canny(self):
        """Constant image -> zero edges; square ring within 1 px of the ideal
        contour (>= 95% recall, <= 5% spurious); translation covariance on
        20 random shifts."""
        from scipy import ndimage

        img = SourceImage(pixels=np.full((64, 64, 3), 77, dtype=np.uint8))
        assert canny_edges(img).pixels.sum() == 0

        px = np.zeros((32, 32, 3), dtype=np.uint8)
        px[8:24, 8:24] = 255
        edges = canny_edges(SourceImage(pixels=px)).pixels.astype(bool)
        ring = np.zeros((32, 32), dtype=bool)
        ring[8, 8:24] = ring[23, 8:24] = True
        ring[8:24, 8] = ring[8:24, 23] = True
        kernel = np.ones((3, 3), dtype=bool)
        recall = (ring & ndimage.binary_dilation(edges, kernel)).sum() / ring.sum()
        spurious = (edges & ~ndimage.binary_dilation(ring, kernel)).sum() / edges.sum()
        assert recall >= 0.95, f"boundary recall {recall:.2%}"
        assert spurious <= 0.05, f"spurious fraction {spurious:.2%}"

        rng = np.random.default_rng(5)
        size, square = 96, 20
        base = np.zeros((size, size, 3), dtype=np.uint8)
        base[30:30 + square, 30:30 + square] = 255
        base_edges = canny_edges(SourceImage(pixels=base)).pixels
        for _ in range(20):
            dy, dx = int(rng.integers(-12, 13)), int(rng.integers(-12, 13))
            shifted = np.roll(np.roll(base, dy, axis=0), dx, axis=1)
            shifted_edges = canny_edges(SourceImage(pixels=shifted)).pixels
            assert np.array_equal(
                shifted_edges, np.roll(np.roll(base_edges, dy, axis=0), dx, axis=1))

        report(f"Canny: zero edges on constant; square recall {recall:.0%} "
               f"spurious {spurious:.0%} within 1px; covariance on 20 shifts")


class TestEndToEndDeterminism:
    def test_criterion_e2e_determinism(self, tmp_path, fixture_bundle):
        """Two stub runs at seed 42 produce identical artifact hashes; the
        manifest validates; each run < 5 s wall clock."""
        manifests = []
        for run in range(2):
            engine = JobEngine(JobStore(tmp_path / f"det{run}"), StubCaptioner(),
                               StubGenerator(), KMeansStubSegmenter())
            job_id = engine.submit_job(
                fixture_bundle, GenerationParams(seed=42),
                {"make_qr": True, "qr_payload": "https://e.com/det"})
            start = time.perf_counter()
            job = engine.run_job(job_id)
            elapsed = time.perf_counter() - start
            assert job.state == "succeeded", job.error
            assert elapsed < 5.0, f"run took {elapsed:.2f}s"
            manifest = engine.store.read_manifest(job_id)
            validate_manifest(manifest)
            assert engine.store.verify_artifacts(job_id)
            manifests.append(manifest)

        hashes = [{e["name"]: e["hash"] for e in m["artifacts"]} for m in manifests]
        assert hashes[0] == hashes[1]
        report(f"End-to-end determinism: {len(hashes[0])} artifacts byte-identical "
               "across runs; manifest schema valid; < 5s per run")


class TestStateMachineCriteria:
    def test_criterion_state_machine_and_recovery(self, tmp_path, fixture_bundle):
        """>= 1000 randomized ops observe zero illegal transitions; a
        simulated kill re-queues and reproduces identical artifacts."""
        engine = JobEngine(JobStore(tmp_path / "storm"), StubCaptioner(),
                           StubGenerator(), KMeansStubSegmenter(),
                           queue_bound=10 ** 6, canvas=64)
        observed = []
        lock = threading.Lock()
        original = JobStore.transition

        def recording(self, job_id, to_state, **kwargs):
            with self._lock:
                before = self.get_job(job_id).state
                job = original(self, job_id, to_state, **kwargs)
            with lock:
                observed.append((job_id, before, job.state))
            return job

        def small_image(seed):
            rng = np.random.default_rng(seed)
            return SourceImage(pixels=rng.integers(0, 255, size=(64, 64, 3),
                                                   dtype=np.int64).astype(np.uint8))

        ops = 0
        JobStore.transition = recording
        try:
            ids = []

            def actor(seed):
                nonlocal ops
                local = random.Random(seed)
                for _ in range(250):
                    try:
                        roll = local.random()
                        if roll < 0.45 or not ids:
                            ids.append(engine.submit_qr_job(
                                small_image(local.randrange(4)), "p", "",
                                GenerationParams(seed=1)))
                        elif roll < 0.65:
                            engine.cancel_job(local.choice(ids))
                        elif roll < 0.8:
                            engine.run_job(local.choice(ids))
                        else:
                            engine.store.transition(
                                local.choice(ids),
                                local.choice(["running", "succeeded",
                                              "failed", "canceled"]))
                    except Exception:
                        pass
                    ops += 1

            threads = [threading.Thread(target=actor, args=(seed,))
                       for seed in (11, 22, 33, 44)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        finally:
            JobStore.transition = original

        assert ops >= 1000
        legal = {(a, b) for a, targets in TRANSITIONS.items() for b in targets}
        for job_id, before, after in observed:
            assert (before, after) in legal, (job_id, before, after)

        # crash recovery: claim, abandon, recover, re-run -> identical bytes
        clean = JobEngine(JobStore(tmp_path / "clean"), StubCaptioner(),
                          StubGenerator(), KMeansStubSegmenter())
        clean_id = clean.submit_job(fixture_bundle, GenerationParams(seed=42), {})
        clean.run_job(clean_id)
        clean_hashes = {e["name"]: e["hash"]
                        for e in clean.store.read_manifest(clean_id)["artifacts"]}

        crashed = JobEngine(JobStore(tmp_path / "crashed"), StubCaptioner(),
                            StubGenerator(), KMeansStubSegmenter())
        crash_id = crashed.submit_job(fixture_bundle, GenerationParams(seed=42), {})
        crashed.store.transition(crash_id, "running")
        assert crashed.store.recover_incomplete() == [crash_id]
        assert crashed.get_job(crash_id).state == "queued"
        job = crashed.run_job(crash_id)
        assert job.state == "succeeded"
        crash_hashes = {e["name"]: e["hash"]
                        for e in crashed.store.read_manifest(crash_id)["artifacts"]}
        assert crash_hashes == clean_hashes

        report(f"State machine: {ops} randomized ops, {len(observed)} transitions, "
               "zero illegal; crash recovery reproduces identical artifacts")


class TestApiContractCriteria:
    def test_criterion_api_contract(self, tmp_path, song_3s_bytes, fruit_png,
                                    fixture_bundle):
        """Every documented route exercised; 202/200/400/404/409/413/429 each
        covered; remote client via mock runtime matches in-process stub
        artifacts byte-for-byte."""
        engine = JobEngine(JobStore(tmp_path / "api"), StubCaptioner(),
                           StubGenerator(), KMeansStubSegmenter(), queue_bound=2)
        client = TestClient(build_app(ServiceConfig(data_dir=tmp_path / "api"),
                                      engine=engine), raise_server_exceptions=False)
        covered = set()

        def post_job(**extra):
            return client.post(
                "/api/jobs",
                files={"audio": ("s.wav", song_3s_bytes, "audio/wav"),
                       "image": ("i.png", fruit_png, "image/png")},
                data={"style": "x", **extra})

        resp = post_job(params=json.dumps({"seed": 5}))
        assert resp.status_code == 202
        covered.add(202)
        job_id = resp.json()["job_id"]

        assert client.get(f"/api/jobs/{job_id}/artifacts/cover.png").status_code == 409
        covered.add(409)

        engine.run_job(job_id)
        assert client.get(f"/api/jobs/{job_id}").status_code == 200
        assert client.get(f"/api/jobs/{job_id}/artifacts/cover.png").status_code == 200
        assert client.get(f"/api/jobs/{job_id}/artifacts/manifest.json").status_code == 200
        assert client.get("/api/health").status_code == 200
        assert client.get("/api/jobs").status_code == 200
        covered.add(200)

        resp = client.post("/api/jobs",
                           files={"audio": ("s.wav", song_3s_bytes, "audio/wav")},
                           data={"style": "x"})
        assert resp.status_code == 400 and resp.json()["field"] == "image"
        covered.add(400)

        assert client.get("/api/jobs/unknown-id").status_code == 404
        covered.add(404)

        big = b"\x00" * (30 * 1024 * 1024 + 1)
        resp = client.post("/api/jobs",
                           files={"audio": ("s.wav", big, "audio/wav"),
                                  "image": ("i.png", fruit_png, "image/png")},
                           data={"style": "x"})
        assert resp.status_code == 413
        covered.add(413)

        qr_resp = client.post("/api/qr",
                              files={"image": ("i.png", fruit_png, "image/png")},
                              data={"payload": "https://e.com/q", "style": "",
                                    "params": json.dumps({"conditioning_scale": 5.0,
                                                          "strength": 1.0})})
        assert qr_resp.status_code == 202

        # fill the bounded queue (one job already pending from the QR POST)
        resp = post_job()
        if resp.status_code == 202:
            resp = post_job()
        assert resp.status_code == 429
        covered.add(429)

        assert covered == {200, 202, 400, 404, 409, 413, 429}

        # remote client through the mock runtime == in-process stubs, byte for byte
        server = MockRuntimeServer(port=0, max_concurrency=2).start()
        try:
            remote_engine = JobEngine(
                JobStore(tmp_path / "remote"), RemoteCaptioner(server.base_url),
                RemoteGenerator(RemoteEndpoint(base_url=server.base_url,
                                               max_concurrency=2)),
                KMeansStubSegmenter())
            stub_engine = JobEngine(JobStore(tmp_path / "stub"), StubCaptioner(),
                                    StubGenerator(), KMeansStubSegmenter())
            params = GenerationParams(seed=42)
            rid = remote_engine.submit_job(fixture_bundle, params, {})
            sid = stub_engine.submit_job(fixture_bundle, params, {})
            rjob = remote_engine.run_job(rid)
            sjob = stub_engine.run_job(sid)
            assert rjob.state == sjob.state == "succeeded"
            rhash = {e["name"]: e["hash"]
                     for e in remote_engine.store.read_manifest(rid)["artifacts"]}
            shash = {e["name"]: e["hash"]
                     for e in stub_engine.store.read_manifest(sid)["artifacts"]}
            del rhash["manifest.json"], shash["manifest.json"]
            assert rhash == shash
        finally:
            server.stop()

        report("API contract: routes and status codes 202/200/400/404/409/413/429 "
               "covered; remote-vs-stub artifacts byte-identical")


class TestHyperparameterValidation:
    def test_criterion_hyperparameter_validation(self, tmp_path, song_3s_bytes,
                                                 fruit_png, assets_dir):
        """conditioning_scale outside [0,5] and strength outside [0,1] are
        rejected at the API, the CLI, and the params schema."""
        # schema (UI-facing parameter validation)
        for bad in ({"conditioning_scale": 5.01}, {"conditioning_scale": -0.01},
                    {"strength": 1.01}, {"strength": -0.01}):
            with pytest.raises(InvalidParams):
                GenerationParams.from_dict(bad)
        GenerationParams.from_dict({"conditioning_scale": 0.0, "strength": 0.0})
        GenerationParams.from_dict({"conditioning_scale": 5.0, "strength": 1.0})

        # API
        engine = JobEngine(JobStore(tmp_path / "hv"), StubCaptioner(),
                           StubGenerator(), KMeansStubSegmenter())
        client = TestClient(build_app(ServiceConfig(data_dir=tmp_path / "hv"),
                                      engine=engine), raise_server_exceptions=False)
        for bad, field in (({"conditioning_scale": 6}, "conditioning_scale"),
                           ({"strength": -1}, "strength")):
            resp = client.post(
                "/api/jobs",
                files={"audio": ("s.wav", song_3s_bytes, "audio/wav"),
                       "image": ("i.png", fruit_png, "image/png")},
                data={"style": "x", "params": json.dumps(bad)})
            assert resp.status_code == 400
            assert resp.json()["field"] == field
            resp = client.post(
                "/api/qr",
                files={"image": ("i.png", fruit_png, "image/png")},
                data={"payload": "p", "style": "", "params": json.dumps(bad)})
            assert resp.status_code == 400

        # CLI
        from click.testing import CliRunner

        from coverforge.cli import main as cli_main

        runner = CliRunner()
        for flags in (["--conditioning-scale", "6"], ["--strength", "2"],
                      ["--conditioning-scale", "-1"], ["--strength", "-0.5"]):
            result = runner.invoke(cli_main, [
                "generate", "--audio", str(assets_dir / "song_3s.wav"),
                "--image", str(assets_dir / "fruit_bowl.png"),
                "--data-dir", str(tmp_path / "cli"), *flags])
            assert result.exit_code == 2, flags

        report("Hyperparameter validation: conditioning_scale [0,5] and "
               "strength [0,1] enforced at API, CLI, and schema")
