"""Low-rank adapter algebra against a dense oracle, plus the toy fit harness."""

import numpy as np
import pytest

from coverforge.errors import ShapeMismatch
from coverforge.vision import (
    LoraAdapter,
    apply_lora,
    full_loss_and_grad,
    init_adapter,
    loss_and_grads,
    merge_lora,
    toy_lora_fit,
)


def dense_oracle(adapter, W0, x):
    """Materialize the full update; the implementation must never do this."""
    return (W0 + adapter.scale * (adapter.B @ adapter.A)) @ x


class TestApplyLora:
    def test_fresh_adapter_is_exact_identity(self):
        rng = np.random.default_rng(0)
        W0 = rng.normal(size=(6, 5))
        adapter = init_adapter(6, 5, 2, seed=1)
        x = rng.normal(size=5)
        assert np.array_equal(apply_lora(adapter, W0, x), W0 @ x)

    def test_rank_one_worked_example(self):
        # d=k=4, r=1, W0=I, B=e1 column, A=e2^T row, x=(0,1,0,0) -> h=(1,1,0,0)
        W0 = np.eye(4)
        B = np.zeros((4, 1))
        B[0, 0] = 1.0
        A = np.zeros((1, 4))
        A[0, 1] = 1.0
        adapter = LoraAdapter(B=B, A=A, r=1, scale=1.0)
        x = np.array([0.0, 1.0, 0.0, 0.0])
        h = apply_lora(adapter, W0, x)
        assert np.array_equal(h, np.array([1.0, 1.0, 0.0, 0.0]))
        assert np.array_equal(h, dense_oracle(adapter, W0, x))

    def test_matches_dense_oracle_on_random_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            d = int(rng.integers(2, 65))
            k = int(rng.integers(2, 65))
            r = int(rng.integers(1, min(d, k, 9)))
            adapter = LoraAdapter(B=rng.normal(size=(d, r)), A=rng.normal(size=(r, k)),
                                  r=r, scale=float(rng.uniform(0.1, 2.0)))
            W0 = rng.normal(size=(d, k))
            x = rng.normal(size=k)
            got = apply_lora(adapter, W0, x)
            want = dense_oracle(adapter, W0, x)
            denom = max(np.linalg.norm(want), 1e-12)
            assert np.linalg.norm(got - want) / denom < 1e-10

    def test_shape_mismatch(self):
        adapter = init_adapter(4, 4, 2)
        with pytest.raises(ShapeMismatch):
            apply_lora(adapter, np.eye(5), np.zeros(5))
        with pytest.raises(ShapeMismatch):
            apply_lora(adapter, np.eye(4), np.zeros(3))


class TestMergeLora:
    def test_zero_adapter_leaves_base_unchanged(self):
        W0 = np.arange(12.0).reshape(3, 4)
        adapter = init_adapter(3, 4, 1, seed=3)
        assert np.array_equal(merge_lora(adapter, W0), W0)

    def test_rank_one_update_hits_single_entry(self):
        B = np.zeros((4, 1))
        B[0, 0] = 1.0
        A = np.zeros((1, 4))
        A[0, 1] = 1.0
        adapter = LoraAdapter(B=B, A=A, r=1)
        delta = merge_lora(adapter, np.zeros((4, 4)))
        assert delta[0, 1] == 1.0
        assert np.count_nonzero(delta) == 1

    def test_merge_then_apply_equals_apply(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            d, k = int(rng.integers(2, 33)), int(rng.integers(2, 33))
            r = int(rng.integers(1, min(d, k, 9)))
            adapter = LoraAdapter(B=rng.normal(size=(d, r)), A=rng.normal(size=(r, k)),
                                  r=r, scale=float(rng.uniform(0.1, 2.0)))
            W0 = rng.normal(size=(d, k))
            x = rng.normal(size=k)
            via_merge = merge_lora(adapter, W0) @ x
            direct = apply_lora(adapter, W0, x)
            denom = max(np.linalg.norm(direct), 1e-12)
            assert np.linalg.norm(via_merge - direct) / denom < 1e-10


class TestAdapterInvariants:
    def test_param_count(self):
        adapter = init_adapter(64, 64, 4)
        assert adapter.param_count == 4 * (64 + 64) == 512

    def test_parameter_economy(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            d, k = int(rng.integers(4, 64)), int(rng.integers(4, 64))
            r = int(rng.integers(1, min(d, k)))
            adapter = init_adapter(d, k, r)
            if r < d * k / (d + k):
                assert adapter.param_count < d * k

    def test_rank_bounds(self):
        with pytest.raises(ValueError):
            init_adapter(4, 4, 0)
        with pytest.raises(ValueError):
            init_adapter(4, 4, 4)

    def test_zero_init_neutrality_everything(self):
        # fresh adapter changes values, argmax, everything
        rng = np.random.default_rng(2)
        W0 = rng.normal(size=(10, 8))
        adapter = init_adapter(10, 8, 3, seed=9)
        for _ in range(20):
            x = rng.normal(size=8)
            base = W0 @ x
            adapted = apply_lora(adapter, W0, x)
            assert np.array_equal(base, adapted)
            assert base.argmax() == adapted.argmax()


class TestGradients:
    def test_analytic_matches_central_differences(self):
        rng = np.random.default_rng(123)
        eps = 1e-6
        for _ in range(20):
            d, k = int(rng.integers(2, 7)), int(rng.integers(2, 7))
            r = int(rng.integers(1, min(d, k)))
            B = rng.normal(size=(d, r))
            A = rng.normal(size=(r, k))
            scale = 1.0
            delta = rng.normal(size=(d, k))
            X = rng.normal(size=(k, 16))

            _, dB, dA = loss_and_grads(B, A, scale, delta, X)

            num_dB = np.zeros_like(B)
            for i in range(d):
                for j in range(r):
                    up = B.copy(); up[i, j] += eps
                    dn = B.copy(); dn[i, j] -= eps
                    lu, _, _ = loss_and_grads(up, A, scale, delta, X)
                    ld, _, _ = loss_and_grads(dn, A, scale, delta, X)
                    num_dB[i, j] = (lu - ld) / (2 * eps)
            num_dA = np.zeros_like(A)
            for i in range(r):
                for j in range(k):
                    up = A.copy(); up[i, j] += eps
                    dn = A.copy(); dn[i, j] -= eps
                    lu, _, _ = loss_and_grads(B, up, scale, delta, X)
                    ld, _, _ = loss_and_grads(B, dn, scale, delta, X)
                    num_dA[i, j] = (lu - ld) / (2 * eps)

            rel_b = np.linalg.norm(dB - num_dB) / max(np.linalg.norm(num_dB), 1e-12)
            rel_a = np.linalg.norm(dA - num_dA) / max(np.linalg.norm(num_dA), 1e-12)
            assert rel_b < 1e-4
            assert rel_a < 1e-4

    def test_full_route_gradient(self):
        rng = np.random.default_rng(321)
        eps = 1e-6
        d, k = 4, 5
        U = rng.normal(size=(d, k))
        delta = rng.normal(size=(d, k))
        X = rng.normal(size=(k, 12))
        _, dU = full_loss_and_grad(U, delta, X)
        num = np.zeros_like(U)
        for i in range(d):
            for j in range(k):
                up = U.copy(); up[i, j] += eps
                dn = U.copy(); dn[i, j] -= eps
                num[i, j] = (full_loss_and_grad(up, delta, X)[0]
                             - full_loss_and_grad(dn, delta, X)[0]) / (2 * eps)
        assert np.linalg.norm(dU - num) / np.linalg.norm(num) < 1e-4


class TestToyFit:
    def test_acceptance_configuration_converges(self):
        report = toy_lora_fit(32, 32, r_true=2, r_adapter=4, epochs=20000, seed=0)
        assert report.final_loss_lora <= 1e-3
        assert report.final_loss_lora <= 10 * report.final_loss_full
        assert report.trained_params_lora == 4 * (32 + 32) == 256
        assert report.trained_params_full == 1024

    def test_param_counts_64(self):
        report = toy_lora_fit(64, 64, r_true=2, r_adapter=4, epochs=2000, seed=1)
        assert report.trained_params_lora == 512
        assert report.trained_params_full == 4096

    def test_zero_rank_rejected(self):
        with pytest.raises(ValueError):
            toy_lora_fit(16, 16, r_true=1, r_adapter=0)

    def test_desk_scale_cap(self):
        with pytest.raises(ValueError):
            toy_lora_fit(200, 200, r_true=2, r_adapter=4)

    def test_deterministic_given_seed(self):
        a = toy_lora_fit(16, 16, 1, 2, epochs=500, seed=5)
        b = toy_lora_fit(16, 16, 1, 2, epochs=500, seed=5)
        assert a.to_dict() == b.to_dict()
