"""Finite-difference verification of the analytic gradients.

The model is copied to float64 and every parameter entry is perturbed by
+-h for a central difference of the full training loss (including the L2
term for classifiers). Keep models and batches small; the scan is
O(parameters x forward cost).
"""

import copy

import numpy as np

from .layers import cross_entropy_loss, mse_loss
from .models import Model, _l2_penalty


def _loss_and_grads(model: Model, batch: np.ndarray, labels: np.ndarray,
                    with_grads: bool) -> float:
    if with_grads:
        model.zero_grads()
    out = model.forward(batch, train=True)
    if model.kind == "tcnn":
        loss, dout = mse_loss(out, labels)
    else:
        loss, dout = cross_entropy_loss(out, labels)
    l2 = getattr(model.config, "l2_strength", 0.0)
    loss += _l2_penalty(model, l2, add_grads=with_grads)
    if with_grads:
        model.backward(dout)
    return loss


def gradient_check(
    model: Model,
    batch: np.ndarray,
    labels: np.ndarray,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    m = copy.deepcopy(model).astype(np.float64)
    batch = np.asarray(batch, dtype=np.float64)
    if m.kind == "tcnn":
        labels = np.asarray(labels, dtype=np.float64)

    _loss_and_grads(m, batch, labels, with_grads=True)
    analytic = [p.grad.copy() for p in m.trainable_params()]

    worst = 0.0
    for p, grad in zip(m.trainable_params(), analytic):
        flat = p.value.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = _loss_and_grads(m, batch, labels, with_grads=False)
            flat[i] = orig - step
            lo = _loss_and_grads(m, batch, labels, with_grads=False)
            flat[i] = orig
            fd = (hi - lo) / (2 * step)
            diff = abs(gflat[i] - fd)
            if abs(gflat[i]) < 1e-6 and abs(fd) < 1e-6:
                # both negligible: report the absolute gap so dead parameters
                # (zero inputs sitting on an activation kink) cannot divide
                # a vanishing numerator by a vanishing denominator
                worst = max(worst, diff)
            else:
                worst = max(worst, diff / (abs(gflat[i]) + abs(fd)))
    return worst
