"""Training objective for boundary-signal networks, as pure math.

The objective combines a binary cross entropy over per-column corner
probabilities with squared-error terms over the two boundary curves,

    L = w1 * BCE(y_p, y'_p) + w2 * (L2(y_c, y'_c) + L2(y_f, y'_f)),

with the weights swapped between the two training phases so corners dominate
early and boundaries late. All reductions are means over columns, making the
loss comparable across panorama widths. Analytic gradients are provided for
every term so external trainers can be checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

EPS = 1e-7


@dataclass(frozen=True)
class LossWeights:
    """Term weights plus the per-step learning rate used alongside them."""

    w1: float
    w2: float
    learning_rate: float = 3e-4

    def __post_init__(self):
        if not (self.w1 > 0 and self.w2 > 0):
            raise InputError(f"weights must be > 0, got w1={self.w1}, w2={self.w2}")


@dataclass(frozen=True)
class LossReport:
    """Per-term values; ``total`` is their weighted sum."""

    bce_corner: float
    l2_ceiling: float
    l2_floor: float
    total: float


def _check_lengths(pred, target) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=float)
    t = np.asarray(target, dtype=float)
    if p.shape != t.shape:
        raise InputError(f"length mismatch: pred {p.shape} vs target {t.shape}")
    return p, t


def bce_mean(pred, target) -> float:
    """Mean binary cross entropy in nats; probabilities clamped to [eps, 1-eps]."""
    p, t = _check_lengths(pred, target)
    p = np.clip(p, EPS, 1.0 - EPS)
    return float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log1p(-p))))


def bce_mean_grad(pred, target) -> np.ndarray:
    """d bce_mean / d pred, elementwise; zero inside clamped regions."""
    p, t = _check_lengths(pred, target)
    clamped = np.clip(p, EPS, 1.0 - EPS)
    g = (clamped - t) / (clamped * (1.0 - clamped)) / p.size
    g[(p < EPS) | (p > 1.0 - EPS)] = 0.0
    return g


def l2_mean(pred, target) -> float:
    """Mean squared error."""
    p, t = _check_lengths(pred, target)
    return float(np.mean((p - t) ** 2))


def l2_mean_grad(pred, target) -> np.ndarray:
    """d l2_mean / d pred, elementwise."""
    p, t = _check_lengths(pred, target)
    return 2.0 * (p - t) / p.size


def total_loss(pred, truth, weights: LossWeights) -> LossReport:
    """Weighted objective over a (prediction, ground truth) signal pair.

    Both arguments provide ``y_p``, ``y_c``, ``y_f`` attributes (BoundarySignal
    works) or are (y_p, y_c, y_f) triples of equal-width arrays.
    """
    pp, pc, pf = _components(pred)
    tp, tc, tf = _components(truth)
    if len(pp) != len(tp):
        raise InputError(f"width mismatch: pred {len(pp)} vs truth {len(tp)}")
    bce = bce_mean(pp, tp)
    l2c = l2_mean(pc, tc)
    l2f = l2_mean(pf, tf)
    total = weights.w1 * bce + weights.w2 * (l2c + l2f)
    return LossReport(bce, l2c, l2f, total)


def total_loss_grads(pred, truth, weights: LossWeights):
    """Analytic gradients of the total w.r.t. each prediction array.

    Returns (d/d y_p, d/d y_c, d/d y_f).
    """
    pp, pc, pf = _components(pred)
    tp, tc, tf = _components(truth)
    return (
        weights.w1 * bce_mean_grad(pp, tp),
        weights.w2 * l2_mean_grad(pc, tc),
        weights.w2 * l2_mean_grad(pf, tf),
    )


def _components(signal):
    if hasattr(signal, "y_p"):
        return signal.y_p, signal.y_c, signal.y_f
    y_p, y_c, y_f = signal
    return np.asarray(y_p, float), np.asarray(y_c, float), np.asarray(y_f, float)


def weight_schedule(epoch: int, epochs_per_half: int = 250) -> LossWeights:
    """Two-phase schedule: corner-heavy first half, boundary-heavy second.

    Epochs 0 .. epochs_per_half-1 use (w1=3, w2=1) at learning rate 3e-4;
    every later epoch uses (w1=1, w2=3) at 1e-4.
    """
    if epoch < 0:
        raise InputError(f"epoch must be >= 0, got {epoch}")
    if epoch < epochs_per_half:
        return LossWeights(3.0, 1.0, 3e-4)
    return LossWeights(1.0, 3.0, 1e-4)
