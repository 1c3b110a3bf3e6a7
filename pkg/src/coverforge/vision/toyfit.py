"""Desk-scale regression harness contrasting low-rank vs dense fine-tuning.

A frozen random base map W0 is perturbed by a synthetic low-rank target
update; both a rank-r adapter and a full dense update are trained by plain
gradient descent on the same squared loss, demonstrating that the adapter
matches the dense fit with a fraction of the trainable parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from ..config import TOYFIT_BATCH, TOYFIT_LOSS_FLOOR, TOYFIT_LR_FULL, TOYFIT_LR_LORA
from .lora import LoraAdapter, init_adapter


@dataclass
class ToyFitReport:
    final_loss_lora: float
    final_loss_full: float
    trained_params_lora: int
    trained_params_full: int
    epochs: int
    epochs_run_lora: int
    epochs_run_full: int

    def to_dict(self) -> dict:
        return asdict(self)


def loss_and_grads(B: np.ndarray, A: np.ndarray, scale: float,
                   delta_target: np.ndarray, X: np.ndarray
                   ) -> tuple[float, np.ndarray, np.ndarray]:
    """Squared regression loss of the factored update against the target.

    loss = 1/(2n) * ||(scale·B@A - delta_target) @ X||_F^2 over n columns of X.
    Returns (loss, dL/dB, dL/dA). The frozen W0 term cancels out of the
    residual, so the loss is expressed directly in update space.
    """
    n = X.shape[1]
    P = scale * (B @ A) - delta_target
    E = P @ X
    loss = float(np.sum(E * E)) / (2 * n)
    G = (E @ X.T) / n              # dL/dP
    dB = scale * (G @ A.T)
    dA = scale * (B.T @ G)
    return loss, dB, dA


def full_loss_and_grad(U: np.ndarray, delta_target: np.ndarray, X: np.ndarray
                       ) -> tuple[float, np.ndarray]:
    """Same loss for the dense update route."""
    n = X.shape[1]
    E = (U - delta_target) @ X
    loss = float(np.sum(E * E)) / (2 * n)
    return loss, (E @ X.T) / n


def toy_lora_fit(d: int, k: int, r_true: int, r_adapter: int, epochs: int = 4000,
                 seed: int = 0, lr_lora: float = TOYFIT_LR_LORA,
                 lr_full: float = TOYFIT_LR_FULL, batch: int = TOYFIT_BATCH,
                 loss_floor: float = TOYFIT_LOSS_FLOOR) -> ToyFitReport:
    """Train both routes to fit a synthetic rank-``r_true`` weight update.

    Both routes gradient-descend on the same fixed design matrix and stop
    early once the loss drops below ``loss_floor``, so their final losses
    stay comparable rather than racing to machine epsilon.
    """
    if r_adapter < 1:
        raise ValueError("r_adapter must be >= 1")
    if r_true < 1:
        raise ValueError("r_true must be >= 1")
    if d * k > 10_000:
        raise ValueError("toy harness is capped at d*k <= 10000")

    rng = np.random.default_rng(seed)
    # synthetic low-rank target update, unit-ish scale
    Bt = rng.normal(size=(d, r_true)) / np.sqrt(r_true)
    At = rng.normal(size=(r_true, k)) / np.sqrt(k)
    delta_target = Bt @ At
    X = rng.normal(size=(k, batch))

    adapter = init_adapter(d, k, r_adapter, seed=seed + 1)
    B, A = adapter.B.copy(), adapter.A.copy()
    loss_lora = np.inf
    epochs_run_lora = 0
    for epoch in range(epochs):
        loss_lora, dB, dA = loss_and_grads(B, A, adapter.scale, delta_target, X)
        epochs_run_lora = epoch + 1
        if loss_lora <= loss_floor:
            break
        B -= lr_lora * dB
        A -= lr_lora * dA
    else:
        loss_lora, _, _ = loss_and_grads(B, A, adapter.scale, delta_target, X)

    U = np.zeros((d, k))
    loss_full = np.inf
    epochs_run_full = 0
    for epoch in range(epochs):
        loss_full, dU = full_loss_and_grad(U, delta_target, X)
        epochs_run_full = epoch + 1
        if loss_full <= loss_floor:
            break
        U -= lr_full * dU
    else:
        loss_full, _ = full_loss_and_grad(U, delta_target, X)

    trained = LoraAdapter(B=B, A=A, r=r_adapter, scale=adapter.scale)
    return ToyFitReport(
        final_loss_lora=float(loss_lora),
        final_loss_full=float(loss_full),
        trained_params_lora=trained.param_count,
        trained_params_full=d * k,
        epochs=epochs,
        epochs_run_lora=epochs_run_lora,
        epochs_run_full=epochs_run_full,
    )
