"""Squashed-logit squared error for targets in [0, 1].

``F(x) = logit(0.98 x + 0.01)`` stretches errors near 0 and 1; the second
term is a small penalty that breaks the symmetry of ``F`` about 1/2.
"""

from __future__ import annotations

import numpy as np

LAMBDA = 0.001
_EPS = 1e-7


def squash_logit(x):
    z = 0.98 * np.asarray(x, dtype=float) + 0.01
    return np.log(z / (1.0 - z))


def _squash_logit_grad(x):
    z = 0.98 * x + 0.01
    return 0.98 / (z * (1.0 - z))


def ogan_loss(predicted, target) -> float:
    """Mean of ``L(y_hat, y)`` over a batch."""
    return loss_and_grad(predicted, target)[0]


def loss_and_grad(predicted, target):
    """Batch-mean loss and its gradient with respect to ``predicted``."""
    y_hat = np.clip(np.asarray(predicted, dtype=float), _EPS, 1.0 - _EPS)
    y = np.broadcast_to(np.asarray(target, dtype=float), y_hat.shape)
    d_main = squash_logit(y_hat) - squash_logit(y)
    half = 0.5 - (y_hat - y) / 2.0
    # F(1/2) = 0
    d_sym = squash_logit(half)
    loss = d_main ** 2 + LAMBDA * d_sym ** 2
    grad = 2.0 * d_main * _squash_logit_grad(y_hat) - LAMBDA * d_sym * _squash_logit_grad(half)
    n = y_hat.size
    return float(loss.mean()), grad / n
