"""Binary cross-entropy and mean squared error with analytic gradients."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch

BCE_EPS = 1e-7


def loss_bce(probs: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean of -[y ln p + (1-y) ln(1-p)] with probs clamped to [eps, 1-eps].

    The gradient is zero where the clamp is active (the clamp has zero
    derivative there), so it matches finite differences everywhere.
    """
    probs = np.asarray(probs)
    targets = np.asarray(targets)
    if probs.shape != targets.shape:
        raise ShapeMismatch(f"probs {probs.shape} vs targets {targets.shape}")
    p = np.clip(probs, BCE_EPS, 1.0 - BCE_EPS)
    value = float(np.mean(-(targets * np.log(p) + (1.0 - targets) * np.log1p(-p))))
    inside = (probs > BCE_EPS) & (probs < 1.0 - BCE_EPS)
    grad = np.where(inside, (p - targets) / (p * (1.0 - p)), 0.0) / p.size
    return value, grad.astype(probs.dtype)


def loss_mse(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error; grad = 2 (pred - target) / N."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    value = float(np.mean(diff * diff))
    grad = (2.0 * diff / pred.size).astype(pred.dtype)
    return value, grad
